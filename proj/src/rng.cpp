#include "calibopt/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace calib {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64((index + 1) * kGolden));
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL))) {}

CounterStream::CounterStream(std::uint64_t seed, StreamId stream)
    : CounterStream(seed, static_cast<std::uint64_t>(stream)) {}

std::uint64_t CounterStream::bits(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGolden);
}

double CounterStream::uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double StreamCursor::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia-Tsang; shapes below one are raised by one and scaled by u^(1/shape).
double StreamCursor::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
    if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double StreamCursor::beta(double alpha, double beta_) {
    const double x = gamma(alpha);
    const double y = gamma(beta_);
    return x / (x + y);
}

}  // namespace calib
