#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "calibopt/grid.hpp"
#include "calibopt/irt.hpp"

namespace calib {

struct CalibrationItem {
    int id = 0;
    ItemParams params;

    bool operator==(const CalibrationItem&) const = default;
};

// Items of one calibration block, ordered by ascending difficulty (ties: higher id first).
// Position i (0-based) in the block is the item's rank within it.
class Block {
public:
    explicit Block(std::vector<CalibrationItem> items, int block_id = 1);

    int id() const { return id_; }
    std::size_t size() const { return items_.size(); }
    const CalibrationItem& operator[](std::size_t i) const { return items_[i]; }
    const std::vector<CalibrationItem>& items() const { return items_; }

private:
    std::vector<CalibrationItem> items_;
    int id_;
};

// Per-grid-point split of the examinee mass over the items of a block.
// share(q, i) is the fraction of the mass at grid point q routed to item i;
// every row sums to one.
class RestrictedDesign {
public:
    // `shares` is row-major Q x m. Throws std::invalid_argument when a row
    // does not sum to one within 1e-10 or a share lies outside [0, 1].
    RestrictedDesign(AbilityGrid grid, std::size_t items, std::vector<double> shares);

    const AbilityGrid& grid() const { return grid_; }
    std::size_t points() const { return grid_.size(); }
    std::size_t items() const { return items_; }
    double share(std::size_t q, std::size_t i) const { return shares_[q * items_ + i]; }
    std::span<const double> row(std::size_t q) const {
        return {shares_.data() + q * items_, items_};
    }
    const std::vector<double>& shares() const { return shares_; }

private:
    AbilityGrid grid_;
    std::size_t items_;
    std::vector<double> shares_;
};

// info_root(theta_q, item_i) for every grid point and block item.
class InformationTable {
public:
    InformationTable(const Block& block, const AbilityGrid& grid);

    const ParamVector& root(std::size_t q, std::size_t i) const { return roots_[q * items_ + i]; }
    std::size_t items() const { return items_; }
    std::size_t points() const { return points_; }

private:
    std::size_t items_;
    std::size_t points_;
    std::vector<ParamVector> roots_;
};

inline constexpr double kSingularDeterminant = 1e-300;

// Quadrature form of the standardized information matrix of one item.
InfoMatrix elemental_info(const ItemParams& item, const RestrictedDesign& design,
                          std::size_t item_index);

// -sum_i log det M_i. Throws SingularInformation when some det M_i <= 1e-300.
double d_criterion(const RestrictedDesign& design, const Block& block);
double d_criterion(std::span<const InfoMatrix> infos, const Block& block);

// trace(M_i^{-1} I_i(theta_q)): rate of decrease of the criterion when mass at
// grid point q is given to item i.
double sensitivity(std::size_t q, std::size_t item_index, const RestrictedDesign& design,
                   const Block& block);

struct ExchangeOptions {
    double tol = 1e-4;
    int max_iters = 500;
    double damping = 1.0;
};

struct DesignSummary {
    double criterion = 0.0;
    std::vector<InfoMatrix> per_item_info;
    double equivalence_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    int reinitializations = 0;
    std::vector<double> criterion_history;  // one value per evaluated iterate
};

struct OptimizedDesign {
    RestrictedDesign design;
    DesignSummary summary;
};

// Locally D-optimal restricted design for one block by the exchange algorithm.
// A gap above tol after max_iters is reported through summary.converged.
OptimizedDesign optimize_block(const Block& block, const AbilityGrid& grid,
                               const ExchangeOptions& opts = {});

// max over grid points of max_j d(q, j) - sum_i share(q, i) d(q, i).
double equivalence_gap(const RestrictedDesign& design, const Block& block);

// Every item receives 1/m of the mass at every grid point.
RestrictedDesign random_design(const Block& block, const AbilityGrid& grid);

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double theta) const { return lo <= theta && theta <= hi; }
    bool operator==(const Interval&) const = default;
};

struct ItemIntervals {
    int item_id = 0;
    std::vector<Interval> intervals;

    bool operator==(const ItemIntervals&) const = default;
};

// Ability intervals routing examinees to the items of one block. Gaps between
// consecutive intervals (one grid step after extraction) and shared endpoints
// belong to the interval with the smaller lower endpoint.
struct AllocationRules {
    int block_id = 1;
    std::vector<ItemIntervals> items;

    // Throws std::invalid_argument unless intervals are ordered, disjoint and
    // span (-inf, +inf).
    void validate() const;
    bool operator==(const AllocationRules&) const = default;
};

// Sorted segment view of AllocationRules for repeated lookups.
class IntervalLookup {
public:
    explicit IntervalLookup(const AllocationRules& rules);

    // Index into rules.items of the item allocated to `theta`.
    std::size_t item_for(double theta) const;

private:
    struct Segment {
        double lo;
        double hi;
        std::size_t item;
    };
    std::vector<Segment> segments_;
};

// Rounds every row to its argmax item (ties to the lower index) and turns
// maximal runs into closed intervals; the outermost ends become -inf/+inf.
AllocationRules extract_intervals(const RestrictedDesign& design, const Block& block);

// (det M_i(optimal) / det M_i(reference))^(1/3) per item.
std::vector<double> item_d_efficiency(const RestrictedDesign& optimal,
                                      const RestrictedDesign& reference, const Block& block);

// Geometric mean of the per-item ratios, (prod_i det ratio)^(1/(3m)).
double block_d_efficiency(const RestrictedDesign& optimal, const RestrictedDesign& reference,
                          const Block& block);

// Asymptotic counterparts of the empirical efficiencies, treating M^{-1} as
// the covariance of the estimator: RE_D from determinants, RE_A from traces,
// RE_CC from the N(0,1)-averaged delta-method variance of the ICC.
struct TheoreticalEfficiency {
    double re_d = 1.0;
    double re_cc = 1.0;
    double re_a = 1.0;
};

std::vector<TheoreticalEfficiency> theoretical_efficiencies(const RestrictedDesign& optimal,
                                                            const RestrictedDesign& reference,
                                                            const Block& block);

}  // namespace calib
