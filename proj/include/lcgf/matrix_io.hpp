#pragma once

#include <string>

#include "lcgf/green.hpp"

namespace lcgf {

// Binary layout (little endian): "LCGFMAT1", uint64 dim, dim x (int32 x, int32 y),
// dim*dim float64 row-major.
void write_matrix_binary(const std::string& path, const CovarianceMatrix& c);
CovarianceMatrix read_matrix_binary(const std::string& path);
// "x,y" header column pairs followed by one row per vertex.
void write_matrix_csv(const std::string& path, const CovarianceMatrix& c);

}  // namespace lcgf
