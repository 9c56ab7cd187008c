#include "calibopt/metrics.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "calibopt/errors.hpp"
#include "calibopt/rng.hpp"

namespace calib {

ErrorMatrix error_matrix(std::span<const ItemParams> estimates, const ItemParams& truth) {
    if (estimates.empty()) throw std::invalid_argument("error matrix needs at least one estimate");
    const ParamVector beta = to_vector(truth);
    ErrorMatrix q = ErrorMatrix::Zero();
    for (const auto& est : estimates) {
        const ParamVector dev = to_vector(est) - beta;
        q.noalias() += dev * dev.transpose();
    }
    return q / static_cast<double>(estimates.size());
}

double emp_d_criterion(const ErrorMatrix& q) {
    // det / prod(diag) is the determinant of the correlation matrix. Below
    // 1e-12 the series is rank deficient up to rounding (S < 3 or collinear
    // deviations), so the criterion is reported as exactly zero.
    const double diag = q(0, 0) * q(1, 1) * q(2, 2);
    const double det = q.determinant();
    if (!(diag > 0.0) || det <= 1e-12 * diag) return 0.0;
    return det;
}

MseSummary mse_amse(std::span<const ItemParams> estimates, const ItemParams& truth) {
    MseSummary s;
    s.mse = error_matrix(estimates, truth).diagonal();
    s.amse = s.mse.sum() / 3.0;
    return s;
}

double cc_total(std::span<const ItemParams> estimates, const ItemParams& truth,
                std::span<const double> thetas) {
    if (estimates.empty() || thetas.empty())
        throw std::invalid_argument("CC criterion needs estimates and abilities");
    double total = 0.0;
    for (const double theta : thetas) {
        const double p_true = prob_3pl(theta, truth);
        double sum = 0.0;
        for (const auto& est : estimates) {
            const double diff = prob_3pl(theta, est) - p_true;
            sum += diff * diff;
        }
        total += sum / static_cast<double>(estimates.size());
    }
    return total;
}

ArmStats arm_stats(std::span<const ItemParams> estimates, const ItemParams& truth,
                   std::span<const double> thetas) {
    const ErrorMatrix q = error_matrix(estimates, truth);
    return {emp_d_criterion(q), q.diagonal().sum() / 3.0, cc_total(estimates, truth, thetas)};
}

ItemEfficiency relative_efficiencies(const ArmStats& random, const ArmStats& optimal) {
    if (!(optimal.d > 0.0) || !(optimal.amse > 0.0) || !(optimal.cc > 0.0))
        throw DegenerateDenominator("optimal-design measure is zero");
    ItemEfficiency e;
    e.re_a = random.amse / optimal.amse;
    e.re_d = std::cbrt(random.d / optimal.d);
    e.re_cc = random.cc / optimal.cc;
    return e;
}

double geometric_mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("geometric mean of an empty set");
    double sum = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) throw NonPositiveEfficiency("efficiencies must be positive");
        sum += std::log(v);
    }
    return std::exp(sum / static_cast<double>(values.size()));
}

OverallEfficiency overall_summary(std::span<const ItemEfficiency> per_item) {
    std::vector<double> d, cc, a;
    for (const auto& e : per_item) {
        d.push_back(e.re_d);
        cc.push_back(e.re_cc);
        a.push_back(e.re_a);
    }
    return {geometric_mean(d), geometric_mean(cc), geometric_mean(a)};
}

namespace {

// Outer products of deviations per replicate, so resampled error matrices are sums.
std::vector<ErrorMatrix> outer_products(const std::vector<ItemParams>& series, const ItemParams& truth) {
    std::vector<ErrorMatrix> out;
    out.reserve(series.size());
    const ParamVector beta = to_vector(truth);
    for (const auto& est : series) {
        const ParamVector dev = to_vector(est) - beta;
        out.push_back(dev * dev.transpose());
    }
    return out;
}

double overall_re_d_for(const std::vector<std::vector<ErrorMatrix>>& opt,
                        const std::vector<std::vector<ErrorMatrix>>& rnd,
                        const std::vector<std::size_t>& draw) {
    double log_sum = 0.0;
    for (std::size_t i = 0; i < opt.size(); ++i) {
        ErrorMatrix qo = ErrorMatrix::Zero(), qr = ErrorMatrix::Zero();
        for (std::size_t s : draw) {
            qo += opt[i][s];
            qr += rnd[i][s];
        }
        const double d_opt = emp_d_criterion(qo), d_rnd = emp_d_criterion(qr);
        if (!(d_opt > 0.0) || !(d_rnd > 0.0)) throw DegenerateDenominator("bootstrap resample is rank deficient");
        log_sum += std::log(d_rnd / d_opt) / 3.0;
    }
    return std::exp(log_sum / static_cast<double>(opt.size()));
}

}  // namespace

BootstrapInterval bootstrap_overall_re_d(std::span<const PairedSeries> items, std::size_t resamples,
                                         std::uint64_t seed, double level) {
    if (items.empty() || resamples == 0) throw std::invalid_argument("bootstrap needs items and resamples");
    const std::size_t s_count = items.front().optimal.size();
    std::vector<std::vector<ErrorMatrix>> opt, rnd;
    for (const auto& it : items) {
        if (it.optimal.size() != s_count || it.random.size() != s_count)
            throw std::invalid_argument("bootstrap series must share one replicate count");
        opt.push_back(outer_products(it.optimal, it.truth));
        rnd.push_back(outer_products(it.random, it.truth));
    }
    std::vector<std::size_t> identity(s_count);
    for (std::size_t s = 0; s < s_count; ++s) identity[s] = s;

    BootstrapInterval out;
    out.estimate = overall_re_d_for(opt, rnd, identity);

    const CounterStream stream(seed, StreamId::bootstrap);
    std::vector<double> stats;
    stats.reserve(resamples);
    std::vector<std::size_t> draw(s_count);
    for (std::size_t b = 0; b < resamples; ++b) {
        for (std::size_t s = 0; s < s_count; ++s) {
            const auto k = static_cast<std::size_t>(stream.uniform(b * s_count + s) * static_cast<double>(s_count));
            draw[s] = std::min(k, s_count - 1);
        }
        stats.push_back(overall_re_d_for(opt, rnd, draw));
    }
    std::sort(stats.begin(), stats.end());
    const double tail = 0.5 * (1.0 - level);
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(stats.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, stats.size() - 1);
        return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
    };
    out.lower = quantile(tail);
    out.upper = quantile(1.0 - tail);
    return out;
}

}  // namespace calib
