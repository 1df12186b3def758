#pragma once

#include <cstdint>
#include <random>

#include <boost/random/mersenne_twister.hpp>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace lcgf {

// Stream components. New components get new ids so existing streams never shift.
enum class Component : std::uint32_t {
    Field = 1,
    Coarse = 2,
    Intermediate = 3,
    Bottom = 4,
    Phi = 5,
    Bernoulli = 6,
    Peak = 7,
    Background = 8,
    Perturbation = 9,
    TailNoise = 10,
    Instance = 11,
    Paired = 12,
};

// mt19937_64 keyed by (seed, replica, component) through seed_seq; the same
// key always reproduces the same draws, regardless of which worker runs it.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t replica, Component component);
    RngStream(std::uint64_t seed, std::uint64_t replica, std::uint32_t component);
    ~RngStream();
    RngStream(const RngStream&) = delete;
    RngStream& operator=(const RngStream&) = delete;

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double exponential(double rate) { return exp_(engine_) / rate; }
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t bits() { return engine_(); }

    // Engine outputs consumed so far.
    [[nodiscard]] std::uint64_t draws() const { return engine_.count; }

    struct Engine {
        using result_type = std::uint64_t;
        static constexpr result_type min() { return 0; }
        static constexpr result_type max() { return ~result_type{0}; }
        result_type operator()() {
            ++count;
            return mt();
        }
        boost::random::mt19937_64 mt;
        std::uint64_t count = 0;
    };
    Engine& engine() { return engine_; }

private:
    Engine engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
    boost::random::exponential_distribution<double> exp_;
};

// Process-wide totals of streams closed and engine outputs they consumed.
// Sums are commutative, so the totals do not depend on the worker count.
struct RngAccounting {
    std::uint64_t streams = 0;
    std::uint64_t draws = 0;
};
RngAccounting rng_accounting();
void reset_rng_accounting();

}  // namespace lcgf
