#pragma once

#include <cstddef>
#include <vector>

namespace calib {

struct GridOptions {
    double lo = -4.0;
    double hi = 4.0;
    std::size_t points = 1601;

    bool operator==(const GridOptions&) const = default;
};

// Discretized ability axis carrying standard-normal probability mass.
class AbilityGrid {
public:
    // Equally spaced points on [lo, hi], weights proportional to the N(0,1)
    // density and renormalized to sum to one.
    static AbilityGrid standard_normal(const GridOptions& opts = {});

    // Arbitrary ascending points with nonnegative weights; weights are used as given.
    AbilityGrid(std::vector<double> points, std::vector<double> weights);

    std::size_t size() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    double point(std::size_t q) const { return points_[q]; }
    double weight(std::size_t q) const { return weights_[q]; }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
};

}  // namespace calib
