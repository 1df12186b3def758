#include "lcgf/sample_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lcgf/errors.hpp"

namespace lcgf {

namespace {
constexpr char kMagic[8] = {'L', 'C', 'G', 'F', 'S', 'M', 'P', '1'};

template <class T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
void put_string(std::ofstream& out, const std::string& s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string get_string(std::ifstream& in) {
    const auto len = get<std::uint32_t>(in);
    if (!in || len > 4096) throw ConfigError("sample file: bad string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}
void put_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void get_doubles(std::ifstream& in, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}
}  // namespace

std::size_t FieldSample::argmax() const {
    if (values.empty()) throw DomainError("argmax of an empty sample");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double FieldSample::max() const { return values[argmax()]; }

void write_sample(const std::string& path, const FieldSample& s) {
    const std::size_t vol = static_cast<std::size_t>(s.N) * s.N;
    if (s.values.size() != vol) throw DomainError("write_sample: value count does not match N");
    if (!s.trajectories.empty() && s.trajectories.data.size() != vol * s.trajectories.levels) {
        throw DomainError("write_sample: trajectory store has the wrong size");
    }
    for (const auto& [name, c] : s.components) {
        if (c.size() != vol) throw DomainError("write_sample: component " + name + " has the wrong size");
    }
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path);
        out.write(kMagic, 8);
        put_string(out, s.model);
        put(out, static_cast<std::int32_t>(s.N));
        put(out, s.seed);
        put(out, s.replica);
        put(out, static_cast<std::uint32_t>(s.trajectories.levels));
        put(out, static_cast<std::uint32_t>(s.components.size()));
        put_doubles(out, s.values);
        if (!s.trajectories.empty()) put_doubles(out, s.trajectories.data);
        for (const auto& [name, c] : s.components) {
            put_string(out, name);
            put_doubles(out, c);
        }
        if (!out) throw NumericError("short write to " + path);
    }

    nlohmann::json j;
    j["format"] = "LCGFSMP1";
    j["model"] = s.model;
    j["N"] = s.N;
    j["seed"] = s.seed;
    j["replica"] = s.replica;
    j["trajectory_levels"] = s.trajectories.levels;
    j["components"] = nlohmann::json::array();
    for (const auto& [name, c] : s.components) j["components"].push_back(name);
    const std::size_t am = s.argmax();
    j["max"] = s.values[am];
    j["argmax"] = {static_cast<int>(am % s.N), static_cast<int>(am / s.N)};
    std::ofstream side(path + ".json");
    if (!side) throw ConfigError("cannot write " + path + ".json");
    side << j.dump(2) << '\n';
}

FieldSample read_sample(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError(path + ": not a sample file");
    FieldSample s;
    s.model = get_string(in);
    s.N = get<std::int32_t>(in);
    s.seed = get<std::uint64_t>(in);
    s.replica = get<std::uint64_t>(in);
    const auto levels = get<std::uint32_t>(in);
    const auto ncomp = get<std::uint32_t>(in);
    if (!in || s.N < 1 || s.N > (1 << 14) || levels > 64 || ncomp > 64) throw ConfigError(path + ": bad header");
    const std::size_t vol = static_cast<std::size_t>(s.N) * s.N;
    get_doubles(in, s.values, vol);
    s.trajectories.levels = static_cast<int>(levels);
    if (levels > 0) get_doubles(in, s.trajectories.data, vol * levels);
    for (std::uint32_t i = 0; i < ncomp; ++i) {
        std::string name = get_string(in);
        get_doubles(in, s.components[name], vol);
    }
    if (!in) throw ConfigError(path + ": truncated sample file");
    return s;
}

}  // namespace lcgf
