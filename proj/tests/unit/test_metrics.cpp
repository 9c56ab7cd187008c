#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "calibopt/errors.hpp"
#include "calibopt/metrics.hpp"

using namespace calib;

namespace {

std::vector<ItemParams> noisy_series(const ItemParams& truth, std::size_t s, double sd, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, sd);
    std::vector<ItemParams> out;
    for (std::size_t k = 0; k < s; ++k) out.push_back({truth.a + z(gen), truth.b + z(gen), std::clamp(truth.c + 0.3 * z(gen), 0.0, 0.9)});
    return out;
}

double oracle_prob(double t, const ItemParams& p) { return p.c + (1.0 - p.c) / (1.0 + std::exp(-p.a * (t - p.b))); }

}  // namespace

TEST_CASE("error matrix") {
    const ItemParams truth{1.0, 0.0, 0.2};
    const std::vector<ItemParams> exact(5, truth);
    CHECK(error_matrix(exact, truth).isZero());

    const std::vector<ItemParams> one{{1.1, 0.0, 0.2}};
    const ErrorMatrix q = error_matrix(one, truth);
    CHECK(q(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK((q.array().abs() > 0.0).count() == 1);

    // Direct two-pass computation: deviations first, then averaged products.
    const auto series = noisy_series(truth, 257, 0.2, 3);
    std::vector<std::array<double, 3>> dev;
    for (const auto& e : series) dev.push_back({e.a - truth.a, e.b - truth.b, e.c - truth.c});
    const ErrorMatrix m = error_matrix(series, truth);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (const auto& d : dev) acc += d[static_cast<std::size_t>(r)] * d[static_cast<std::size_t>(c)];
            CHECK(std::abs(m(r, c) - acc / 257.0) <= 1e-12);
        }
}

TEST_CASE("error matrix is positive semidefinite") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto series = noisy_series({1.3, -0.5, 0.2}, 1 + seed % 7, 0.3, seed);
        const Eigen::SelfAdjointEigenSolver<ErrorMatrix> es(error_matrix(series, {1.3, -0.5, 0.2}));
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("empirical D criterion") {
    CHECK(emp_d_criterion(ErrorMatrix::Zero()) == 0.0);
    CHECK(emp_d_criterion(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix()) == doctest::Approx(6.0).epsilon(1e-14));
    const ItemParams truth{1.0, 0.0, 0.2};
    for (std::size_t s : {1u, 2u}) CHECK(emp_d_criterion(error_matrix(noisy_series(truth, s, 0.1, s), truth)) == 0.0);
}

TEST_CASE("MSE and AMSE") {
    const ItemParams truth{1.0, 0.0, 0.2};
    const MseSummary zero = mse_amse(std::vector<ItemParams>(4, truth), truth);
    CHECK(zero.mse.isZero());
    CHECK(zero.amse == 0.0);

    for (std::size_t s : {1u, 5u, 80u}) {
        const std::vector<ItemParams> biased(s, ItemParams{1.1, 0.1, 0.3});
        CHECK(mse_amse(biased, truth).amse == doctest::Approx(0.01).epsilon(1e-12));
    }

    const auto series = noisy_series(truth, 311, 0.15, 8);
    const MseSummary m = mse_amse(series, truth);
    const ErrorMatrix q = error_matrix(series, truth);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(m.mse[k] - q(k, k)) <= 1e-12);
    CHECK(m.amse == doctest::Approx(m.mse.mean()).epsilon(1e-12));
}

TEST_CASE("characteristic curve criterion") {
    const ItemParams truth{1.0, 0.0, 0.0};
    const double thetas[] = {-1.0, 0.3, 2.0};
    CHECK(cc_total(std::vector<ItemParams>(3, truth), truth, thetas) == 0.0);

    // p(0 | c = 0.2) = 0.6 against 0.5 at the truth.
    const double zero[] = {0.0};
    const std::vector<ItemParams> shifted{{1.0, 0.0, 0.2}};
    CHECK(cc_total(shifted, truth, zero) == doctest::Approx(0.01).epsilon(1e-12));

    std::mt19937_64 gen(12);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        const ItemParams t{1.2, -0.3, 0.15};
        const auto series = noisy_series(t, 13 + static_cast<std::size_t>(trial), 0.2, static_cast<std::uint64_t>(trial));
        std::vector<double> cohort(97);
        for (double& c : cohort) c = z(gen);
        double brute = 0.0;
        for (double th : cohort) {
            double inner = 0.0;
            for (const auto& e : series) {
                const double d = oracle_prob(th, e) - oracle_prob(th, t);
                inner += d * d;
            }
            brute += inner / static_cast<double>(series.size());
        }
        CHECK(std::abs(cc_total(series, t, cohort) - brute) <= 1e-10 * std::max(1.0, brute));
    }
}

TEST_CASE("relative efficiencies") {
    const ArmStats arm{0.5, 0.2, 3.0};
    const ItemEfficiency same = relative_efficiencies(arm, arm);
    CHECK(same.re_d == 1.0);
    CHECK(same.re_cc == 1.0);
    CHECK(same.re_a == 1.0);

    const ItemEfficiency e = relative_efficiencies({8.0, 0.3, 2.0}, {1.0, 0.1, 1.0});
    CHECK(e.re_d == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(e.re_a == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.re_cc == doctest::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(relative_efficiencies(arm, {0.0, 0.1, 1.0}), DegenerateDenominator);
    CHECK_THROWS_AS(relative_efficiencies(arm, {1.0, 0.0, 1.0}), DegenerateDenominator);
    CHECK_THROWS_AS(relative_efficiencies(arm, {1.0, 0.1, 0.0}), DegenerateDenominator);
}

TEST_CASE("RE_D does not depend on a common scale of the deviations") {
    const ItemParams truth{1.0, 0.0, 0.2};
    const auto opt = noisy_series(truth, 50, 0.1, 1), rnd = noisy_series(truth, 50, 0.15, 2);
    const std::vector<double> cohort{-1.0, 0.0, 1.0};
    const double base = relative_efficiencies(arm_stats(rnd, truth, cohort), arm_stats(opt, truth, cohort)).re_d;
    auto scaled = [&](const std::vector<ItemParams>& s, double k) {
        std::vector<ItemParams> out;
        for (const auto& e : s) out.push_back({truth.a + k * (e.a - truth.a), truth.b + k * (e.b - truth.b), truth.c + k * (e.c - truth.c)});
        return out;
    };
    for (double k : {0.1, 0.5, 3.0}) {
        const double re = relative_efficiencies(arm_stats(scaled(rnd, k), truth, cohort),
                                                arm_stats(scaled(opt, k), truth, cohort)).re_d;
        CHECK(re == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("geometric mean summaries") {
    const double pair[] = {0.5, 2.0};
    CHECK(geometric_mean(pair) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(geometric_mean(pair) < (0.5 + 2.0) / 2.0);
    const std::vector<double> flat(9, 1.37);
    CHECK(geometric_mean(flat) == doctest::Approx(1.37).epsilon(1e-14));
    const double bad[] = {1.0, 0.0};
    CHECK_THROWS_AS(geometric_mean(bad), NonPositiveEfficiency);
    const double negative[] = {1.0, -2.0};
    CHECK_THROWS_AS(geometric_mean(negative), NonPositiveEfficiency);

    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.6, 1.8);
    std::vector<ItemEfficiency> items(40);
    for (auto& e : items) e = {0, 1, 1, u(gen), u(gen), u(gen)};
    const OverallEfficiency all = overall_summary(items);

    std::vector<ItemEfficiency> shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(overall_summary(shuffled).re_d == doctest::Approx(all.re_d).epsilon(1e-12));

    const std::span<const ItemEfficiency> head(items.data(), 15), tail(items.data() + 15, 25);
    const OverallEfficiency g1 = overall_summary(head), g2 = overall_summary(tail);
    CHECK(std::abs(std::pow(g1.re_d, 15.0 / 40.0) * std::pow(g2.re_d, 25.0 / 40.0) - all.re_d) <= 1e-12);
    CHECK(std::abs(std::pow(g1.re_cc, 15.0 / 40.0) * std::pow(g2.re_cc, 25.0 / 40.0) - all.re_cc) <= 1e-12);
    CHECK(std::abs(std::pow(g1.re_a, 15.0 / 40.0) * std::pow(g2.re_a, 25.0 / 40.0) - all.re_a) <= 1e-12);
}

TEST_CASE("bootstrap interval of the overall RE_D") {
    std::vector<PairedSeries> items;
    for (int i = 0; i < 6; ++i) {
        const ItemParams truth{1.0 + 0.1 * i, -1.0 + 0.4 * i, 0.2};
        items.push_back({i + 1, truth, noisy_series(truth, 60, 0.1, 10 + static_cast<std::uint64_t>(i)),
                         noisy_series(truth, 60, 0.13, 100 + static_cast<std::uint64_t>(i))});
    }
    const BootstrapInterval a = bootstrap_overall_re_d(items, 400, 9);
    const BootstrapInterval b = bootstrap_overall_re_d(items, 400, 9);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.lower <= a.estimate);
    CHECK(a.estimate <= a.upper);
    // Random arm noise is 1.3 times larger in every coordinate.
    CHECK(a.lower > 1.0);

    items[2].random.pop_back();
    CHECK_THROWS(bootstrap_overall_re_d(items, 100, 9));
}
