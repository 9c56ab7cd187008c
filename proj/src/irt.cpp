#include "calibopt/irt.hpp"

#include <cmath>

namespace calib {

namespace {
constexpr double kMinBernoulliVariance = 1e-12;
}

bool ItemParams::valid() const {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && a > 0.0 && c >= 0.0 &&
           c < 1.0;
}

ParamVector to_vector(const ItemParams& p) { return ParamVector(p.a, p.b, p.c); }

ItemParams from_vector(const ParamVector& v) { return {v[0], v[1], v[2]}; }

Logistic logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return {1.0 / (1.0 + e), e / (1.0 + e)};
    }
    const double e = std::exp(x);
    return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

double prob_3pl(double theta, const ItemParams& p) {
    const Logistic l = logistic(p.a * (theta - p.b));
    return p.c + (1.0 - p.c) * l.q;
}

double logit_link(double theta, const ItemParams& p) {
    const double x = p.a * (theta - p.b);
    if (p.c == 0.0) return x;
    const Logistic l = logistic(x);
    const double prob = p.c + (1.0 - p.c) * l.q;
    const double complement = (1.0 - p.c) * l.one_minus_q;
    return std::log(prob) - std::log(complement);
}

ParamVector grad_prob(double theta, const ItemParams& p) {
    const Logistic l = logistic(p.a * (theta - p.b));
    const double slope = (1.0 - p.c) * l.q * l.one_minus_q;
    return ParamVector(slope * (theta - p.b), -p.a * slope, l.one_minus_q);
}

ParamVector info_root(double theta, const ItemParams& p) {
    const Logistic l = logistic(p.a * (theta - p.b));
    const double prob = p.c + (1.0 - p.c) * l.q;
    const double complement = (1.0 - p.c) * l.one_minus_q;
    const double variance = prob * complement;
    if (variance < kMinBernoulliVariance) return ParamVector::Zero();
    const double slope = (1.0 - p.c) * l.q * l.one_minus_q;
    const ParamVector g(slope * (theta - p.b), -p.a * slope, l.one_minus_q);
    return g / std::sqrt(variance);
}

InfoMatrix fisher_info(double theta, const ItemParams& p) {
    const ParamVector u = info_root(theta, p);
    return u * u.transpose();
}

}  // namespace calib
