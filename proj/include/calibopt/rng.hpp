#pragma once

#include <cstdint>

namespace calib {

// Purpose tags that split one seed into independent streams.
enum class StreamId : std::uint64_t {
    abilities = 1,
    responses = 2,
    random_allocation = 3,
    pre_abilities = 4,
    pre_responses = 5,
    operational_bank = 6,
    bootstrap = 7,
};

std::uint64_t mix64(std::uint64_t x);

// Seed of replicate `index` under `master`; depends on nothing else, so
// replicates can run in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Counter-based generator: draw k is a pure function of (seed, stream, k).
class CounterStream {
public:
    CounterStream(std::uint64_t seed, StreamId stream);
    CounterStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t bits(std::uint64_t counter) const;
    // Uniform on the open interval (0, 1).
    double uniform(std::uint64_t counter) const;
    // Standard normal from draws 2k and 2k+1 (Box-Muller).
    double normal(std::uint64_t counter) const;

private:
    std::uint64_t key_;
};

// Sequential view over a CounterStream for variable-length draws such as
// rejection sampling.
class StreamCursor {
public:
    explicit StreamCursor(CounterStream stream) : stream_(stream) {}

    double uniform() { return stream_.uniform(next_++); }
    // Box-Muller on the next two uniforms.
    double normal();
    double gamma(double shape);
    double beta(double alpha, double beta);

private:
    CounterStream stream_;
    std::uint64_t next_ = 0;
};

}  // namespace calib
