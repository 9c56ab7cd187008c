#pragma once

#include <Eigen/Core>

namespace calib {

// 3PL item parameters. Every vector and matrix derived from an item is
// ordered (a, b, c).
struct ItemParams {
    double a = 1.0;  // discrimination, > 0
    double b = 0.0;  // difficulty
    double c = 0.0;  // lower asymptote, in [0, 1)

    bool valid() const;
    bool operator==(const ItemParams&) const = default;
};

using ParamVector = Eigen::Vector3d;
using InfoMatrix = Eigen::Matrix3d;

ParamVector to_vector(const ItemParams& p);
ItemParams from_vector(const ParamVector& v);

// Logistic kernel q = 1/(1+exp(-x)) together with 1-q, both computed without
// cancellation or overflow.
struct Logistic {
    double q;
    double one_minus_q;
};
Logistic logistic(double x);

double prob_3pl(double theta, const ItemParams& p);

// log(p / (1 - p)); exactly a(theta - b) when c == 0.
double logit_link(double theta, const ItemParams& p);

// (dp/da, dp/db, dp/dc)
ParamVector grad_prob(double theta, const ItemParams& p);

// Pointwise Fisher information g g^T / (p(1-p)), zero where p(1-p) < 1e-12.
InfoMatrix fisher_info(double theta, const ItemParams& p);

// Square root factor u of the pointwise information, fisher_info = u u^T.
ParamVector info_root(double theta, const ItemParams& p);

}  // namespace calib
