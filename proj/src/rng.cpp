#include "lcgf/rng.hpp"

#include <atomic>

namespace lcgf {

namespace {
std::atomic<std::uint64_t> g_streams{0}, g_draws{0};
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t replica, std::uint32_t component) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                      component};
    engine_.mt.seed(seq);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t replica, Component component)
    : RngStream(seed, replica, static_cast<std::uint32_t>(component)) {}

RngStream::~RngStream() {
    g_streams.fetch_add(1, std::memory_order_relaxed);
    g_draws.fetch_add(engine_.count, std::memory_order_relaxed);
}

RngAccounting rng_accounting() { return {g_streams.load(), g_draws.load()}; }

void reset_rng_accounting() {
    g_streams = 0;
    g_draws = 0;
}

}  // namespace lcgf
