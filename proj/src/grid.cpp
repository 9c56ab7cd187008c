#include "calibopt/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace calib {

AbilityGrid AbilityGrid::standard_normal(const GridOptions& opts) {
    if (opts.points < 2 || !(opts.hi > opts.lo))
        throw std::invalid_argument("grid needs at least two points and hi > lo");
    const std::size_t n = opts.points;
    std::vector<double> points(n), weights(n);
    const double step = (opts.hi - opts.lo) / static_cast<double>(n - 1);
    double total = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        points[q] = q + 1 == n ? opts.hi : opts.lo + step * static_cast<double>(q);
        weights[q] = std::exp(-0.5 * points[q] * points[q]);
        total += weights[q];
    }
    for (double& w : weights) w /= total;
    return AbilityGrid(std::move(points), std::move(weights));
}

AbilityGrid::AbilityGrid(std::vector<double> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty() || points_.size() != weights_.size())
        throw std::invalid_argument("grid points and weights must be non-empty and aligned");
    for (std::size_t q = 0; q < points_.size(); ++q) {
        if (!std::isfinite(points_[q]) || !(weights_[q] >= 0.0))
            throw std::invalid_argument("grid points must be finite and weights nonnegative");
        if (q > 0 && !(points_[q] > points_[q - 1]))
            throw std::invalid_argument("grid points must be strictly increasing");
    }
}

}  // namespace calib
