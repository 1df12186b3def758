#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lcgf/brw.hpp"

namespace lcgf {

// One field realization. Model tags: dgff, psi, ibrw, mibrw, threefield, surrogate.
struct FieldSample {
    std::string model;
    int N = 0;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    std::vector<double> values;                          // BoxSpec::index order
    Trajectories trajectories;                           // optional
    std::map<std::string, std::vector<double>> components;  // optional, e.g. coarse/middle/bottom/phi

    [[nodiscard]] std::size_t argmax() const;
    [[nodiscard]] double max() const;
};

// Binary layout (little endian): "LCGFSMP1", uint32 tag length, tag bytes,
// int32 N, uint64 seed, uint64 replica, uint32 trajectory levels,
// uint32 component count, N*N float64 values, levels*N*N float64 partial
// sums, then per component: uint32 name length, name, N*N float64.
// A JSON sidecar at path + ".json" records the header and summary statistics.
void write_sample(const std::string& path, const FieldSample& s);
FieldSample read_sample(const std::string& path);

}  // namespace lcgf
