#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calibopt/irt.hpp"

namespace calib {

using ErrorMatrix = Eigen::Matrix3d;

// (1/S) sum_s (est_s - truth)(est_s - truth)^T
ErrorMatrix error_matrix(std::span<const ItemParams> estimates, const ItemParams& truth);

// det of the error matrix; zero for fewer than three distinct deviations.
double emp_d_criterion(const ErrorMatrix& q);

struct MseSummary {
    ParamVector mse = ParamVector::Zero();
    double amse = 0.0;
};

MseSummary mse_amse(std::span<const ItemParams> estimates, const ItemParams& truth);

// sum_j (1/S) sum_s (p(theta_j | est_s) - p(theta_j | truth))^2
double cc_total(std::span<const ItemParams> estimates, const ItemParams& truth,
                std::span<const double> thetas);

// Empirical precision of one design arm for one item.
struct ArmStats {
    double d = 0.0;
    double amse = 0.0;
    double cc = 0.0;
};

ArmStats arm_stats(std::span<const ItemParams> estimates, const ItemParams& truth,
                   std::span<const double> thetas);

struct ItemEfficiency {
    int item_id = 0;
    int block = 0;     // 1-based
    int position = 0;  // 1-based
    double re_d = 1.0;
    double re_cc = 1.0;
    double re_a = 1.0;
};

// RE_A = AMSE(R)/AMSE(O), RE_D = (D(R)/D(O))^(1/3), RE_CC = CC(R)/CC(O).
// Throws DegenerateDenominator when an optimal-arm measure is zero.
ItemEfficiency relative_efficiencies(const ArmStats& random, const ArmStats& optimal);

struct OverallEfficiency {
    double re_d = 1.0;
    double re_cc = 1.0;
    double re_a = 1.0;
};

// exp(mean(log x)); throws NonPositiveEfficiency on non-positive input.
double geometric_mean(std::span<const double> values);

OverallEfficiency overall_summary(std::span<const ItemEfficiency> per_item);

// Paired estimate series of one item: element s of both arms comes from the
// same replicate.
struct PairedSeries {
    int item_id = 0;
    ItemParams truth;
    std::vector<ItemParams> optimal;
    std::vector<ItemParams> random;
};

struct BootstrapInterval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Percentile bootstrap of the overall geometric-mean RE_D, resampling
// replicate indices jointly across items and arms. All series must have the
// same length.
BootstrapInterval bootstrap_overall_re_d(std::span<const PairedSeries> items, std::size_t resamples,
                                         std::uint64_t seed, double level = 0.95);

}  // namespace calib
