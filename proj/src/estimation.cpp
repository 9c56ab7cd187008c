#include "calibopt/estimation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <array>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace calib {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_prob_correct(double x, double c) {
    if (c == 0.0) return -softplus(-x);
    return std::log(c + (1.0 - c) * logistic(x).q);
}

double log_prob_incorrect(double x, double c) { return std::log1p(-c) - softplus(x); }

}  // namespace

EapScorer::EapScorer(std::span<const ItemParams> items, const AbilityGrid& grid)
    : n_items_(items.size()), points_(grid.points()) {
    const std::size_t n = grid.size();
    log_weights_.resize(n);
    for (std::size_t q = 0; q < n; ++q)
        log_weights_[q] = grid.weight(q) > 0.0 ? std::log(grid.weight(q)) : kNegInf;
    log_p_.resize(n_items_ * n);
    log_q_.resize(n_items_ * n);
    for (std::size_t i = 0; i < n_items_; ++i) {
        for (std::size_t q = 0; q < n; ++q) {
            const double x = items[i].a * (points_[q] - items[i].b);
            log_p_[i * n + q] = log_prob_correct(x, items[i].c);
            log_q_[i * n + q] = log_prob_incorrect(x, items[i].c);
        }
    }
}

double EapScorer::operator()(std::span<const std::int8_t> responses) const {
    if (responses.size() != n_items_) throw std::invalid_argument("response vector does not match items");
    const std::size_t n = points_.size();
    std::vector<double> log_post(log_weights_);
    for (std::size_t i = 0; i < n_items_; ++i) {
        const std::int8_t y = responses[i];
        if (y == kNotAdministered) continue;
        const double* table = (y == kCorrect ? log_p_.data() : log_q_.data()) + i * n;
        for (std::size_t q = 0; q < n; ++q) log_post[q] += table[q];
    }
    const double peak = *std::max_element(log_post.begin(), log_post.end());
    double mass = 0.0, moment = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        const double w = std::exp(log_post[q] - peak);
        mass += w;
        moment += w * points_[q];
    }
    return moment / mass;
}

double eap_ability(std::span<const std::int8_t> responses, std::span<const ItemParams> items,
                   const AbilityGrid& grid) {
    return EapScorer(items, grid)(responses);
}

std::vector<double> percentile_transform(std::span<const double> raw) {
    const std::size_t n = raw.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return raw[x] < raw[y]; });
    const boost::math::normal_distribution<double> standard;
    std::vector<double> out(n);
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi + 1 < n && raw[order[hi + 1]] == raw[order[lo]]) ++hi;
        // ranks lo+1 .. hi+1 share their average
        const double rank = 0.5 * static_cast<double>(lo + hi) + 1.0;
        const double z = boost::math::quantile(standard, (rank - 0.5) / static_cast<double>(n));
        for (std::size_t k = lo; k <= hi; ++k) out[order[k]] = z;
        lo = hi + 1;
    }
    return out;
}

bool ParamBox::contains(const ItemParams& p) const {
    return p.a >= lower.a && p.a <= upper.a && p.b >= lower.b && p.b <= upper.b && p.c >= lower.c &&
           p.c <= upper.c;
}

bool ParamBox::on_boundary(const ItemParams& p, double tol) const {
    return p.a - lower.a <= tol || upper.a - p.a <= tol || p.b - lower.b <= tol ||
           upper.b - p.b <= tol || p.c - lower.c <= tol || upper.c - p.c <= tol;
}

const char* to_string(FitStatus status) {
    switch (status) {
        case FitStatus::converged: return "converged";
        case FitStatus::not_converged: return "not_converged";
        case FitStatus::degenerate_data: return "degenerate_data";
    }
    return "unknown";
}

double ItemPrior::log_density(const ItemParams& p) const {
    if (!(p.a > 0.0) || !(p.c > 0.0) || !(p.c < 1.0)) return kNegInf;
    const double la = std::log(p.a) / log_a_sd;
    const double zb = (p.b - b_mean) / b_sd;
    return -0.5 * la * la - 0.5 * zb * zb + (c_alpha - 1.0) * std::log(p.c) +
           (c_beta - 1.0) * std::log1p(-p.c);
}

double log_likelihood(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
                      const ItemParams& p) {
    if (outcomes.size() != thetas.size()) throw std::invalid_argument("outcomes and thetas differ in length");
    double ll = 0.0;
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
        if (outcomes[j] == kNotAdministered) continue;
        const double x = p.a * (thetas[j] - p.b);
        ll += outcomes[j] == kCorrect ? log_prob_correct(x, p.c) : log_prob_incorrect(x, p.c);
    }
    return ll;
}

namespace {

struct Derivatives {
    double value = 0.0;
    ParamVector gradient = ParamVector::Zero();
    InfoMatrix curvature = InfoMatrix::Zero();  // expected information, positive semidefinite
    InfoMatrix observed = InfoMatrix::Zero();   // negative Hessian of the objective
};

class FitProblem {
public:
    FitProblem(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
               const ItemPrior* prior)
        : prior_(prior) {
        if (outcomes.size() != thetas.size())
            throw std::invalid_argument("outcomes and thetas differ in length");
        for (std::size_t j = 0; j < outcomes.size(); ++j) {
            if (outcomes[j] == kNotAdministered) continue;
            if (outcomes[j] != kCorrect && outcomes[j] != kIncorrect)
                throw std::invalid_argument("outcomes must be 0, 1 or not administered");
            y_.push_back(outcomes[j]);
            theta_.push_back(thetas[j]);
        }
    }

    std::size_t size() const { return y_.size(); }

    bool degenerate() const {
        return y_.empty() || std::all_of(y_.begin(), y_.end(), [&](auto y) { return y == y_.front(); });
    }

    double log_likelihood(const ItemParams& p) const { return calib::log_likelihood(y_, theta_, p); }

    double objective(const ItemParams& p) const {
        double v = log_likelihood(p);
        if (prior_) v += prior_->log_density(p);
        return v;
    }

    Derivatives derivatives(const ItemParams& p) const {
        Derivatives d;
        for (std::size_t j = 0; j < y_.size(); ++j) {
            const double x = p.a * (theta_[j] - p.b);
            const Logistic l = logistic(x);
            const double prob = p.c + (1.0 - p.c) * l.q;
            const double comp = (1.0 - p.c) * l.one_minus_q;
            const double slope = (1.0 - p.c) * l.q * l.one_minus_q;
            const double dt = theta_[j] - p.b;
            const ParamVector g(slope * dt, -p.a * slope, l.one_minus_q);
            double r = 0.0, r2 = 0.0;  // d loglik / dP and its square
            if (y_[j] == kCorrect) {
                d.value += p.c == 0.0 ? -softplus(-x) : std::log(prob);
                r = 1.0 / prob;
                r2 = r * r;
            } else {
                d.value += std::log1p(-p.c) - softplus(x);
                r = -1.0 / comp;
                r2 = r * r;
            }
            d.gradient += r * g;
            const double variance = prob * comp;
            if (variance > 1e-300) d.curvature.noalias() += (g * g.transpose()) / variance;

            // Second derivatives of P.
            const double s = l.q * l.one_minus_q;
            const double bend = s * (1.0 - 2.0 * l.q);
            InfoMatrix h;
            h(0, 0) = (1.0 - p.c) * bend * dt * dt;
            h(0, 1) = -(1.0 - p.c) * (bend * p.a * dt + s);
            h(1, 1) = (1.0 - p.c) * bend * p.a * p.a;
            h(0, 2) = -s * dt;
            h(1, 2) = s * p.a;
            h(2, 2) = 0.0;
            h(1, 0) = h(0, 1);
            h(2, 0) = h(0, 2);
            h(2, 1) = h(1, 2);
            d.observed.noalias() += r2 * (g * g.transpose()) - r * h;
        }
        if (prior_) add_prior(p, d);
        return d;
    }

private:
    void add_prior(const ItemParams& p, Derivatives& d) const {
        const ItemPrior& pr = *prior_;
        d.value += pr.log_density(p);
        const double s2 = pr.log_a_sd * pr.log_a_sd;
        const double la = std::log(p.a);
        d.gradient[0] += -la / (s2 * p.a);
        const double info_a = (1.0 - la) / (s2 * p.a * p.a);
        d.curvature(0, 0) += std::max(0.0, info_a);
        d.observed(0, 0) += info_a;
        d.gradient[1] += -(p.b - pr.b_mean) / (pr.b_sd * pr.b_sd);
        d.curvature(1, 1) += 1.0 / (pr.b_sd * pr.b_sd);
        d.observed(1, 1) += 1.0 / (pr.b_sd * pr.b_sd);
        d.gradient[2] += (pr.c_alpha - 1.0) / p.c - (pr.c_beta - 1.0) / (1.0 - p.c);
        const double info_c = (pr.c_alpha - 1.0) / (p.c * p.c) + (pr.c_beta - 1.0) / ((1.0 - p.c) * (1.0 - p.c));
        d.curvature(2, 2) += info_c;
        d.observed(2, 2) += info_c;
    }

    std::vector<std::int8_t> y_;
    std::vector<double> theta_;
    const ItemPrior* prior_;
};

ParamVector clamp_to(const ParamBox& box, const ParamVector& v) {
    const ParamVector lo = to_vector(box.lower), hi = to_vector(box.upper);
    return v.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components zeroed where a bound blocks ascent.
ParamVector projected_gradient(const ParamBox& box, const ParamVector& x, const ParamVector& g,
                               std::array<bool, 3>& active) {
    const ParamVector lo = to_vector(box.lower), hi = to_vector(box.upper);
    ParamVector pg = g;
    for (int k = 0; k < 3; ++k) {
        active[k] = (x[k] <= lo[k] && g[k] < 0.0) || (x[k] >= hi[k] && g[k] > 0.0);
        if (active[k]) pg[k] = 0.0;
    }
    return pg;
}

// Solves metric_FF d_F = g_F on the free coordinates. Empty when the metric
// is not positive definite there.
std::optional<ParamVector> solve_free(const InfoMatrix& metric, const ParamVector& gradient,
                                      const std::array<bool, 3>& active) {
    std::vector<int> free;
    for (int k = 0; k < 3; ++k)
        if (!active[k]) free.push_back(k);
    ParamVector dir = ParamVector::Zero();
    if (free.empty()) return dir;
    const auto n = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd h(n, n);
    Eigen::VectorXd g(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        g[r] = gradient[free[r]];
        for (Eigen::Index c = 0; c < n; ++c) h(r, c) = metric(free[r], free[c]);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd step = llt.solve(g);
    if (!step.allFinite() || step.dot(g) <= 0.0) return std::nullopt;
    for (Eigen::Index r = 0; r < n; ++r) dir[free[r]] = step[r];
    return dir;
}

// Newton step where the observed information is positive definite, Fisher
// scoring otherwise, and a scaled gradient as the last resort.
ParamVector ascent_direction(const Derivatives& d, const std::array<bool, 3>& active) {
    if (auto dir = solve_free(d.observed, d.gradient, active)) return *dir;
    InfoMatrix expected = d.curvature;
    const double scale = std::max(1e-8, expected.diagonal().cwiseAbs().maxCoeff());
    expected.diagonal().array() += 1e-10 * scale;
    if (auto dir = solve_free(expected, d.gradient, active)) return *dir;
    ParamVector g = d.gradient;
    for (int k = 0; k < 3; ++k)
        if (active[k]) g[k] = 0.0;
    return g / scale;
}

ItemFit maximize(const FitProblem& problem, const FitOptions& opts) {
    const ParamBox& box = opts.box;
    ParamVector x = clamp_to(box, to_vector(opts.start));
    Derivatives d = problem.derivatives(from_vector(x));
    if (!std::isfinite(d.value)) throw std::invalid_argument("fit start has zero likelihood");

    ItemFit fit;
    fit.n_responses = problem.size();
    std::array<bool, 3> active{};
    int iter = 0;
    for (; iter <= opts.max_iters; ++iter) {
        const ParamVector pg = projected_gradient(box, x, d.gradient, active);
        if (pg.cwiseAbs().maxCoeff() <= opts.grad_tol) {
            fit.converged = true;
            break;
        }
        if (iter == opts.max_iters) break;

        const ParamVector dir = ascent_direction(d, active);
        std::optional<ParamVector> accepted;
        const ParamVector full = clamp_to(box, x + dir);
        if (d.gradient.dot(full - x) < 1e-10 * (1.0 + std::abs(d.value))) {
            // The objective cannot resolve a gain this small, so take the step
            // and let the gradient test decide.
            if (full != x && std::isfinite(problem.objective(from_vector(full)))) accepted = full;
        } else {
            double t = 1.0;
            for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
                const ParamVector trial = clamp_to(box, x + t * dir);
                if (trial == x) break;
                const double value = problem.objective(from_vector(trial));
                if (std::isfinite(value) && value >= d.value + 1e-4 * d.gradient.dot(trial - x)) {
                    accepted = trial;
                    break;
                }
            }
        }
        if (!accepted) break;
        x = *accepted;
        d = problem.derivatives(from_vector(x));
    }

    fit.estimate = from_vector(x);
    fit.iterations = iter;
    fit.objective = d.value;
    fit.log_likelihood = problem.log_likelihood(fit.estimate);
    fit.at_boundary = box.on_boundary(fit.estimate);
    fit.status = fit.converged ? FitStatus::converged : FitStatus::not_converged;
    return fit;
}

}  // namespace

ItemFit fit_item_fixed_theta(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
                             const FitOptions& opts) {
    const FitProblem problem(outcomes, thetas, nullptr);
    if (problem.size() == 0) {
        ItemFit fit;
        fit.estimate = opts.start;
        fit.status = FitStatus::degenerate_data;
        fit.at_boundary = false;
        return fit;
    }
    ItemFit fit = maximize(problem, opts);
    if (problem.degenerate()) {
        fit.status = FitStatus::degenerate_data;
        fit.converged = false;
        fit.at_boundary = true;
    }
    return fit;
}

ItemFit map_preestimate(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
                        const ItemPrior& prior, const FitOptions& opts) {
    const FitProblem problem(outcomes, thetas, &prior);
    return maximize(problem, opts);
}

}  // namespace calib
