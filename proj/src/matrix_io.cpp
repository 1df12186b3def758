#include "lcgf/matrix_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "lcgf/errors.hpp"

namespace lcgf {

namespace {
constexpr char kMagic[8] = {'L', 'C', 'G', 'F', 'M', 'A', 'T', '1'};
}

void write_matrix_binary(const std::string& path, const CovarianceMatrix& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out.write(kMagic, 8);
    const std::uint64_t dim = c.index.size();
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    for (const Vertex& v : c.index) {
        const std::int32_t xy[2] = {v.x, v.y};
        out.write(reinterpret_cast<const char*>(xy), sizeof xy);
    }
    for (std::uint64_t i = 0; i < dim; ++i) {
        for (std::uint64_t j = 0; j < dim; ++j) {
            const double d = c.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out.write(reinterpret_cast<const char*>(&d), sizeof d);
        }
    }
    if (!out) throw NumericError("short write to " + path);
}

CovarianceMatrix read_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError(path + ": not a matrix file");
    std::uint64_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    CovarianceMatrix c;
    c.index.resize(dim);
    for (auto& v : c.index) {
        std::int32_t xy[2];
        in.read(reinterpret_cast<char*>(xy), sizeof xy);
        v = {xy[0], xy[1]};
    }
    c.m.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::uint64_t i = 0; i < dim; ++i) {
        for (std::uint64_t j = 0; j < dim; ++j) {
            double d;
            in.read(reinterpret_cast<char*>(&d), sizeof d);
            c.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        }
    }
    if (!in) throw ConfigError(path + ": truncated matrix file");
    return c;
}

void write_matrix_csv(const std::string& path, const CovarianceMatrix& c) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << std::setprecision(17);
    out << "x,y";
    for (const Vertex& v : c.index) out << ",c_" << v.x << '_' << v.y;
    out << '\n';
    for (std::size_t i = 0; i < c.index.size(); ++i) {
        out << c.index[i].x << ',' << c.index[i].y;
        for (std::size_t j = 0; j < c.index.size(); ++j) {
            out << ',' << c.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        out << '\n';
    }
}

}  // namespace lcgf
