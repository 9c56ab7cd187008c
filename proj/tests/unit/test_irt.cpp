#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "calibopt/irt.hpp"

using namespace calib;

namespace {

ItemParams random_item(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> ua(0.3, 3.0), ub(-3.0, 3.0), uc(0.0, 0.45);
    return {ua(gen), ub(gen), uc(gen)};
}

ParamVector central_difference(double theta, const ItemParams& p, double h = 1e-6) {
    ParamVector g;
    for (int k = 0; k < 3; ++k) {
        ParamVector up = to_vector(p), dn = to_vector(p);
        up[k] += h;
        dn[k] -= h;
        g[k] = (prob_3pl(theta, from_vector(up)) - prob_3pl(theta, from_vector(dn))) / (2.0 * h);
    }
    return g;
}

bool fd_close(double analytic, double numeric) {
    // Relative error with an absolute floor for components that vanish.
    return std::abs(analytic - numeric) <= 1e-6 * std::max(std::abs(analytic), 1e-3);
}

}  // namespace

TEST_CASE("prob_3pl at the difficulty is the midpoint between c and one") {
    CHECK(prob_3pl(-0.549, {1.320, -0.549, 0.195}) == doctest::Approx(0.5975).epsilon(1e-12));
    CHECK(prob_3pl(0.0, {1.0, 0.0, 0.0}) == 0.5);
    CHECK(prob_3pl(-10.0, {2.173, 0.454, 0.107}) == doctest::Approx(0.107).epsilon(1e-6));
}

TEST_CASE("asymptotes are reached within 1e-9 at plus and minus 30") {
    // The distance to the asymptote is (1-c)/(1+exp(a(30+b))), below 1e-9 once
    // a(30 - |b|) >= 21; flat items with a < 0.8 are still visibly short of it.
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ua(0.8, 3.0), ub(-3.0, 3.0), uc(0.0, 0.45);
    for (int n = 0; n < 1000; ++n) {
        const ItemParams p{ua(gen), ub(gen), uc(gen)};
        CHECK(std::abs(prob_3pl(-30.0, p) - p.c) <= 1e-9);
        CHECK(std::abs(prob_3pl(30.0, p) - 1.0) <= 1e-9);
    }
    for (int n = 0; n < 1000; ++n) {
        const ItemParams p = random_item(gen);
        const double lower_gap = (1.0 - p.c) / (1.0 + std::exp(p.a * (30.0 + p.b)));
        const double upper_gap = (1.0 - p.c) / (1.0 + std::exp(p.a * (30.0 - p.b)));
        CHECK(prob_3pl(-30.0, p) - p.c == doctest::Approx(lower_gap).epsilon(1e-9));
        CHECK(1.0 - prob_3pl(30.0, p) == doctest::Approx(upper_gap).epsilon(1e-6));
    }
}

TEST_CASE("extreme arguments do not overflow") {
    const ItemParams p{5.0, 0.0, 0.2};
    CHECK(prob_3pl(1e6, p) == 1.0);
    CHECK(prob_3pl(-1e6, p) == doctest::Approx(0.2));
    const Logistic l = logistic(-800.0);
    CHECK(std::isfinite(l.q));
    CHECK(l.one_minus_q == 1.0);
}

TEST_CASE("prob_3pl increases strictly in theta") {
    std::mt19937_64 gen(11);
    std::vector<double> thetas;
    for (int k = 0; k <= 200; ++k) thetas.push_back(-6.0 + 0.06 * k);
    for (int n = 0; n < 1000; ++n) {
        const ItemParams p = random_item(gen);
        double prev = prob_3pl(thetas.front(), p);
        for (std::size_t k = 1; k < thetas.size(); ++k) {
            const double cur = prob_3pl(thetas[k], p);
            REQUIRE(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("logit link") {
    CHECK(logit_link(-0.549, {1.0, -0.549, 0.0}) == 0.0);
    CHECK(logit_link(2.0, {1.0, 0.0, 0.0}) == 2.0);
    CHECK(logit_link(0.0, {1.0, 0.0, 0.2}) == doctest::Approx(std::log(0.6 / 0.4)).epsilon(1e-12));
    CHECK(logit_link(0.0, {1.0, 0.0, 0.2}) == doctest::Approx(0.405465).epsilon(1e-6));

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ut(-4.0, 4.0);
    for (int n = 0; n < 1000; ++n) {
        ItemParams p = random_item(gen);
        p.c = 0.0;
        const double t = ut(gen);
        CHECK(logit_link(t, p) == p.a * (t - p.b));
    }
}

TEST_CASE("gradient special cases") {
    const ItemParams p{1.320, -0.549, 0.195};
    CHECK(grad_prob(p.b, p)[0] == 0.0);
    CHECK(std::abs(grad_prob(40.0, p)[2]) < 1e-12);

    const ItemParams q{0.862, -1.063, 0.203};
    const ParamVector g = grad_prob(0.5, q), fd = central_difference(0.5, q);
    for (int k = 0; k < 3; ++k) CHECK(fd_close(g[k], fd[k]));
}

TEST_CASE("gradient matches central differences at 1000 random points") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> ut(-4.0, 4.0);
    int failures = 0;
    for (int n = 0; n < 1000; ++n) {
        const ItemParams p = random_item(gen);
        const double t = ut(gen);
        const ParamVector g = grad_prob(t, p), fd = central_difference(t, p);
        for (int k = 0; k < 3; ++k)
            if (!fd_close(g[k], fd[k])) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("fisher information") {
    const InfoMatrix m = fisher_info(0.0, {1.0, 0.0, 0.0});
    const double expected[3][3] = {{0, 0, 0}, {0, 0.25, -0.5}, {0, -0.5, 1.0}};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(m(r, c) == doctest::Approx(expected[r][c]).epsilon(1e-14));

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ut(-4.0, 4.0);
    for (int n = 0; n < 1000; ++n) {
        const ItemParams p = random_item(gen);
        const double t = ut(gen);
        const InfoMatrix f = fisher_info(t, p);
        CHECK((f - f.transpose()).norm() == 0.0);
        CHECK(std::abs(f.determinant()) <= 1e-12 * std::max(1.0, f.norm() * f.norm() * f.norm()));
        const Eigen::SelfAdjointEigenSolver<InfoMatrix> es(f);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, f.norm()));
        const ParamVector u = info_root(t, p);
        CHECK((u * u.transpose() - f).norm() <= 1e-12 * std::max(1.0, f.norm()));
    }
}

TEST_CASE("information vanishes where the response is certain") {
    const ItemParams p{3.0, 0.0, 0.0};
    CHECK(fisher_info(40.0, p).isZero());
    CHECK(info_root(-40.0, p).isZero());
}

TEST_CASE("parameter validity") {
    CHECK(ItemParams{1.0, 0.0, 0.2}.valid());
    CHECK_FALSE(ItemParams{0.0, 0.0, 0.2}.valid());
    CHECK_FALSE(ItemParams{1.0, 0.0, 1.0}.valid());
    CHECK_FALSE(ItemParams{1.0, std::nan(""), 0.0}.valid());
}
