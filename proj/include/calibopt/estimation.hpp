#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calibopt/grid.hpp"
#include "calibopt/irt.hpp"

namespace calib {

// Dichotomous outcome coding shared by every response container.
inline constexpr std::int8_t kIncorrect = 0;
inline constexpr std::int8_t kCorrect = 1;
inline constexpr std::int8_t kNotAdministered = -1;

// EAP scoring against fixed item parameters with a standard-normal prior held
// on the grid. Log-probability tables are built once per item set.
class EapScorer {
public:
    EapScorer(std::span<const ItemParams> items, const AbilityGrid& grid);

    // `responses` is aligned with the items; kNotAdministered entries are skipped.
    double operator()(std::span<const std::int8_t> responses) const;

    std::size_t items() const { return n_items_; }

private:
    std::size_t n_items_;
    std::vector<double> points_;
    std::vector<double> log_weights_;
    std::vector<double> log_p_;  // item-major, n_items x Q
    std::vector<double> log_q_;
};

double eap_ability(std::span<const std::int8_t> responses, std::span<const ItemParams> items,
                   const AbilityGrid& grid);

// Phi^{-1}((rank - 0.5) / N) with average ranks for ties.
std::vector<double> percentile_transform(std::span<const double> raw);

struct ParamBox {
    ItemParams lower{0.2, -5.0, 0.0};
    ItemParams upper{5.0, 5.0, 0.5};

    bool contains(const ItemParams& p) const;
    bool on_boundary(const ItemParams& p, double tol = 1e-8) const;
};

struct FitOptions {
    ParamBox box;
    ItemParams start{1.0, 0.0, 0.2};
    double grad_tol = 1e-6;
    int max_iters = 500;
};

enum class FitStatus { converged, not_converged, degenerate_data };

const char* to_string(FitStatus status);

struct ItemFit {
    ItemParams estimate;
    bool converged = false;
    FitStatus status = FitStatus::not_converged;
    bool at_boundary = false;
    double log_likelihood = 0.0;
    double objective = 0.0;  // log-likelihood plus log-prior for MAP fits
    std::size_t n_responses = 0;
    int iterations = 0;
};

// Independent priors used by the small-sample pre-estimation:
// log a ~ N(0, 0.5^2), b ~ N(0, 2^2), c ~ Beta(5, 17). The prior on a is a
// density in log a, so its mode sits at a = 1.
struct ItemPrior {
    double log_a_sd = 0.5;
    double b_mean = 0.0;
    double b_sd = 2.0;
    double c_alpha = 5.0;
    double c_beta = 17.0;

    double log_density(const ItemParams& p) const;
};

// Bernoulli log-likelihood of the observed (non-missing) outcomes.
double log_likelihood(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
                      const ItemParams& p);

// Method A: maximum likelihood with abilities held fixed, by projected
// Newton steps inside the parameter box, falling back to Fisher scoring
// where the observed information is not positive definite.
ItemFit fit_item_fixed_theta(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
                             const FitOptions& opts = {});

// Posterior mode under `prior` with abilities held fixed.
ItemFit map_preestimate(std::span<const std::int8_t> outcomes, std::span<const double> thetas,
                        const ItemPrior& prior = {}, const FitOptions& opts = {});

}  // namespace calib
