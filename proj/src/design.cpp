#include "calibopt/design.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "calibopt/errors.hpp"

namespace calib {

namespace {

constexpr double kPartitionTol = 1e-10;
constexpr double kMaxExtrapolation = 32.0;

std::size_t argmax_lower(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

// Information matrices of all block items for a row-major share matrix.
std::vector<InfoMatrix> infos_for(const InformationTable& table, const AbilityGrid& grid,
                                  const std::vector<double>& shares) {
    const std::size_t m = table.items();
    std::vector<InfoMatrix> infos(m, InfoMatrix::Zero());
    for (std::size_t q = 0; q < table.points(); ++q) {
        const double w = grid.weight(q);
        for (std::size_t i = 0; i < m; ++i) {
            const double mass = shares[q * m + i] * w;
            if (mass == 0.0) continue;
            const ParamVector& u = table.root(q, i);
            infos[i].noalias() += mass * (u * u.transpose());
        }
    }
    return infos;
}

std::size_t first_singular(const std::vector<InfoMatrix>& infos) {
    for (std::size_t i = 0; i < infos.size(); ++i)
        if (!(infos[i].determinant() > kSingularDeterminant)) return i;
    return infos.size();
}

double criterion_of(const std::vector<InfoMatrix>& infos) {
    double total = 0.0;
    for (const auto& m : infos) total -= std::log(m.determinant());
    return total;
}

// Euclidean projection of v[0..m) onto the probability simplex.
void project_simplex(double* v, std::size_t m) {
    std::vector<double> u(v, v + m);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    for (std::size_t k = 0; k < m; ++k) v[k] = std::max(0.0, v[k] - theta);
}

double quad_form(const ParamVector& u, const InfoMatrix& inv) { return u.dot(inv * u); }

// Gives item i a uniform 1/m share everywhere, rescaling the other items.
void reinitialize_item(std::vector<double>& shares, std::size_t m, std::size_t item) {
    const double target = 1.0 / static_cast<double>(m);
    for (std::size_t q = 0; q < shares.size() / m; ++q) {
        double* row = shares.data() + q * m;
        double rest = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (j != item) rest += row[j];
        for (std::size_t j = 0; j < m; ++j) {
            if (j == item)
                row[j] = target;
            else
                row[j] = rest > 0.0 ? row[j] * (1.0 - target) / rest
                                    : (1.0 - target) / static_cast<double>(m - 1);
        }
    }
}

// Sherman-Morrison update of inv for M + t u u^T.
void rank_one_update(InfoMatrix& inv, const ParamVector& u, double t) {
    const ParamVector v = inv * u;
    inv.noalias() -= (t / (1.0 + t * u.dot(v))) * (v * v.transpose());
}

// One Gauss-Seidel pass over the grid. At each point, mass moves from the
// least sensitive loaded item j to the most sensitive item k by the step that
// minimizes -log det M_k - log det M_j along the rank-one path,
// delta = (d_k - d_j) / (2 w d_j d_k), clipped to the available mass.
void exchange_sweep(const InformationTable& table, const AbilityGrid& grid,
                    std::vector<double>& shares, std::vector<InfoMatrix>& inverses) {
    const std::size_t m = table.items();
    std::vector<double> d(m);
    for (std::size_t q = 0; q < table.points(); ++q) {
        const double w = grid.weight(q);
        if (w <= 0.0) continue;
        double* row = shares.data() + q * m;
        for (std::size_t step = 0; step < 2 * m; ++step) {
            for (std::size_t i = 0; i < m; ++i) d[i] = quad_form(table.root(q, i), inverses[i]);
            const std::size_t k = argmax_lower(d);
            std::size_t j = m;
            for (std::size_t i = 0; i < m; ++i) {
                if (i == k || row[i] <= 0.0 || !(d[i] < d[k])) continue;
                if (j == m || d[i] < d[j]) j = i;
            }
            if (j == m) break;
            if (d[k] - d[j] <= 1e-14 * d[k]) break;
            double delta = row[j];
            if (d[j] > 0.0) delta = std::min(delta, (d[k] - d[j]) / (2.0 * w * d[j] * d[k]));
            if (!(delta > 0.0)) break;
            const double t = delta * w;
            rank_one_update(inverses[k], table.root(q, k), t);
            rank_one_update(inverses[j], table.root(q, j), -t);
            if (delta >= row[j]) {
                row[k] += row[j];
                row[j] = 0.0;
            } else {
                row[j] -= delta;
                row[k] += delta;
            }
        }
    }
}

struct Evaluation {
    std::vector<InfoMatrix> infos;
    std::vector<InfoMatrix> inverses;
    double criterion = 0.0;
    double gap = 0.0;
};

Evaluation evaluate(const InformationTable& table, const AbilityGrid& grid,
                    const std::vector<double>& shares) {
    Evaluation e;
    e.infos = infos_for(table, grid, shares);
    e.criterion = criterion_of(e.infos);
    e.inverses.reserve(e.infos.size());
    for (const auto& m : e.infos) e.inverses.push_back(m.inverse());
    const std::size_t m = table.items();
    std::vector<double> d(m);
    for (std::size_t q = 0; q < table.points(); ++q) {
        double assigned = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            d[i] = quad_form(table.root(q, i), e.inverses[i]);
            assigned += shares[q * m + i] * d[i];
        }
        e.gap = std::max(e.gap, *std::max_element(d.begin(), d.end()) - assigned);
    }
    return e;
}

}  // namespace

Block::Block(std::vector<CalibrationItem> items, int block_id)
    : items_(std::move(items)), id_(block_id) {
    if (items_.empty()) throw std::invalid_argument("a block needs at least one item");
    std::unordered_set<int> ids;
    for (const auto& it : items_) {
        if (!it.params.valid())
            throw std::invalid_argument("invalid parameters for item " + std::to_string(it.id));
        if (!ids.insert(it.id).second)
            throw std::invalid_argument("duplicate item id " + std::to_string(it.id));
    }
    std::stable_sort(items_.begin(), items_.end(), [](const auto& x, const auto& y) {
        return x.params.b != y.params.b ? x.params.b < y.params.b : x.id > y.id;
    });
}

RestrictedDesign::RestrictedDesign(AbilityGrid grid, std::size_t items, std::vector<double> shares)
    : grid_(std::move(grid)), items_(items), shares_(std::move(shares)) {
    if (items_ == 0 || shares_.size() != grid_.size() * items_)
        throw std::invalid_argument("design shares must be a points x items matrix");
    for (std::size_t q = 0; q < grid_.size(); ++q) {
        double total = 0.0;
        for (double s : row(q)) {
            if (!(s >= 0.0 && s <= 1.0 + kPartitionTol))
                throw std::invalid_argument("design share outside [0, 1]");
            total += s;
        }
        if (std::abs(total - 1.0) > kPartitionTol)
            throw std::invalid_argument("design shares at a grid point do not sum to one");
    }
}

InformationTable::InformationTable(const Block& block, const AbilityGrid& grid)
    : items_(block.size()), points_(grid.size()), roots_(block.size() * grid.size()) {
    for (std::size_t q = 0; q < points_; ++q)
        for (std::size_t i = 0; i < items_; ++i)
            roots_[q * items_ + i] = info_root(grid.point(q), block[i].params);
}

InfoMatrix elemental_info(const ItemParams& item, const RestrictedDesign& design,
                          std::size_t item_index) {
    if (item_index >= design.items()) throw std::out_of_range("item index outside the design");
    InfoMatrix m = InfoMatrix::Zero();
    const AbilityGrid& grid = design.grid();
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const double mass = design.share(q, item_index) * grid.weight(q);
        if (mass == 0.0) continue;
        const ParamVector u = info_root(grid.point(q), item);
        m.noalias() += mass * (u * u.transpose());
    }
    return m;
}

double d_criterion(std::span<const InfoMatrix> infos, const Block& block) {
    double total = 0.0;
    for (std::size_t i = 0; i < infos.size(); ++i) {
        const double det = infos[i].determinant();
        if (!(det > kSingularDeterminant)) throw SingularInformation(i, block[i].id);
        total -= std::log(det);
    }
    return total;
}

double d_criterion(const RestrictedDesign& design, const Block& block) {
    if (design.items() != block.size()) throw std::invalid_argument("design/block size mismatch");
    std::vector<InfoMatrix> infos;
    for (std::size_t i = 0; i < block.size(); ++i)
        infos.push_back(elemental_info(block[i].params, design, i));
    return d_criterion(infos, block);
}

double sensitivity(std::size_t q, std::size_t item_index, const RestrictedDesign& design,
                   const Block& block) {
    const InfoMatrix m = elemental_info(block[item_index].params, design, item_index);
    if (!(m.determinant() > kSingularDeterminant))
        throw SingularInformation(item_index, block[item_index].id);
    const ParamVector u = info_root(design.grid().point(q), block[item_index].params);
    return quad_form(u, m.inverse());
}

double equivalence_gap(const RestrictedDesign& design, const Block& block) {
    const InformationTable table(block, design.grid());
    const auto infos = infos_for(table, design.grid(), design.shares());
    if (auto i = first_singular(infos); i < infos.size()) throw SingularInformation(i, block[i].id);
    return evaluate(table, design.grid(), design.shares()).gap;
}

OptimizedDesign optimize_block(const Block& block, const AbilityGrid& grid,
                               const ExchangeOptions& opts) {
    const std::size_t m = block.size();
    const std::size_t n = grid.size();
    const InformationTable table(block, grid);

    // Round-robin stripes give every item support across the whole axis.
    std::vector<double> shares(n * m, 0.0);
    for (std::size_t q = 0; q < n; ++q) shares[q * m + q % m] = 1.0;

    DesignSummary summary;
    bool argmax_phase = true;
    Evaluation current;
    for (int iter = 0;; ++iter) {
        auto infos = infos_for(table, grid, shares);
        for (std::size_t i = first_singular(infos); i < m; i = first_singular(infos)) {
            if (summary.reinitializations >= static_cast<int>(m)) throw SingularInformation(i, block[i].id);
            reinitialize_item(shares, m, i);
            ++summary.reinitializations;
            infos = infos_for(table, grid, shares);
        }
        current = evaluate(table, grid, shares);
        summary.criterion_history.push_back(current.criterion);
        summary.iterations = iter;
        if (current.gap <= opts.tol) {
            summary.converged = true;
            break;
        }
        if (iter >= opts.max_iters) break;

        if (argmax_phase) {
            std::vector<double> target(n * m, 0.0);
            for (std::size_t q = 0; q < n; ++q) {
                std::vector<double> d(m);
                for (std::size_t i = 0; i < m; ++i)
                    d[i] = quad_form(table.root(q, i), current.inverses[i]);
                target[q * m + argmax_lower(d)] = 1.0;
            }
            bool accepted = false;
            for (double rho : {opts.damping, 0.5}) {
                if (rho <= 0.0 || rho > 1.0) continue;
                std::vector<double> trial(n * m);
                for (std::size_t k = 0; k < trial.size(); ++k)
                    trial[k] = (1.0 - rho) * shares[k] + rho * target[k];
                const auto trial_infos = infos_for(table, grid, trial);
                if (first_singular(trial_infos) < m) continue;
                if (criterion_of(trial_infos) < current.criterion) {
                    shares = std::move(trial);
                    accepted = true;
                    break;
                }
                if (rho <= 0.5) break;
            }
            if (accepted) continue;
            // Full reassignment no longer descends; polish with pairwise exchanges.
            argmax_phase = false;
        }
        const std::vector<double> before = shares;
        exchange_sweep(table, grid, shares, current.inverses);
        // Interval boundaries drift slowly and in a steady direction under
        // the sweeps, so stretch the sweep's displacement while that helps.
        const double swept = criterion_of(infos_for(table, grid, shares));
        for (double t = kMaxExtrapolation; t >= 2.0; t /= 2.0) {
            std::vector<double> trial(shares.size());
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = before[k] + t * (shares[k] - before[k]);
            for (std::size_t q = 0; q < n; ++q) project_simplex(trial.data() + q * m, m);
            const auto trial_infos = infos_for(table, grid, trial);
            if (first_singular(trial_infos) < m || !(criterion_of(trial_infos) < swept)) continue;
            shares = std::move(trial);
            break;
        }
    }

    summary.criterion = current.criterion;
    summary.per_item_info = current.infos;
    summary.equivalence_gap = current.gap;

    // Exchange steps keep rows on the simplex up to rounding; renormalize.
    for (std::size_t q = 0; q < n; ++q) {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) total += shares[q * m + i];
        for (std::size_t i = 0; i < m; ++i) shares[q * m + i] /= total;
    }
    return {RestrictedDesign(grid, m, std::move(shares)), std::move(summary)};
}

RestrictedDesign random_design(const Block& block, const AbilityGrid& grid) {
    const std::size_t m = block.size();
    return RestrictedDesign(grid, m, std::vector<double>(grid.size() * m, 1.0 / static_cast<double>(m)));
}

void AllocationRules::validate() const {
    if (items.empty()) throw std::invalid_argument("allocation rules without items");
    std::vector<Interval> all;
    for (const auto& item : items)
        for (const auto& iv : item.intervals) {
            if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi)
                throw std::invalid_argument("malformed interval for item " + std::to_string(item.item_id));
            all.push_back(iv);
        }
    if (all.empty()) throw std::invalid_argument("allocation rules without intervals");
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.lo < y.lo; });
    if (all.front().lo != -std::numeric_limits<double>::infinity() ||
        all.back().hi != std::numeric_limits<double>::infinity())
        throw std::invalid_argument("allocation intervals must extend to -inf and +inf");
    for (std::size_t k = 1; k < all.size(); ++k)
        if (all[k].lo < all[k - 1].hi || all[k].lo == all[k - 1].lo)
            throw std::invalid_argument("allocation intervals overlap");
}

IntervalLookup::IntervalLookup(const AllocationRules& rules) {
    rules.validate();
    for (std::size_t i = 0; i < rules.items.size(); ++i)
        for (const auto& iv : rules.items[i].intervals) segments_.push_back({iv.lo, iv.hi, i});
    std::sort(segments_.begin(), segments_.end(),
              [](const auto& x, const auto& y) { return x.lo < y.lo; });
}

std::size_t IntervalLookup::item_for(double theta) const {
    // First segment whose closed range or following gap reaches theta.
    auto next_start = std::upper_bound(segments_.begin(), segments_.end(), theta,
                                       [](double t, const Segment& s) { return t < s.lo; });
    // next_start is the first segment with lo > theta; the candidate is the one before it.
    auto it = next_start == segments_.begin() ? segments_.begin() : std::prev(next_start);
    if (it != segments_.begin()) {
        auto prev = std::prev(it);
        if (theta <= prev->hi) it = prev;  // shared endpoint goes to the lower interval
    }
    return it->item;
}

AllocationRules extract_intervals(const RestrictedDesign& design, const Block& block) {
    const std::size_t m = design.items();
    if (block.size() != m) throw std::invalid_argument("design/block size mismatch");
    AllocationRules rules;
    rules.block_id = block.id();
    for (std::size_t i = 0; i < m; ++i) rules.items.push_back({block[i].id, {}});

    const AbilityGrid& grid = design.grid();
    const std::size_t n = grid.size();
    std::vector<std::size_t> owner(n);
    for (std::size_t q = 0; q < n; ++q) owner[q] = argmax_lower(design.row(q));

    std::size_t start = 0;
    for (std::size_t q = 1; q <= n; ++q) {
        if (q < n && owner[q] == owner[start]) continue;
        Interval iv{grid.point(start), grid.point(q - 1)};
        if (start == 0) iv.lo = -std::numeric_limits<double>::infinity();
        if (q == n) iv.hi = std::numeric_limits<double>::infinity();
        rules.items[owner[start]].intervals.push_back(iv);
        start = q;
    }
    return rules;
}

namespace {

std::vector<InfoMatrix> design_infos(const RestrictedDesign& design, const Block& block) {
    if (design.items() != block.size()) throw std::invalid_argument("design/block size mismatch");
    std::vector<InfoMatrix> infos;
    for (std::size_t i = 0; i < block.size(); ++i) {
        infos.push_back(elemental_info(block[i].params, design, i));
        if (!(infos.back().determinant() > kSingularDeterminant)) throw SingularInformation(i, block[i].id);
    }
    return infos;
}

}  // namespace

std::vector<double> item_d_efficiency(const RestrictedDesign& optimal,
                                      const RestrictedDesign& reference, const Block& block) {
    const auto num = design_infos(optimal, block);
    const auto den = design_infos(reference, block);
    std::vector<double> out;
    for (std::size_t i = 0; i < num.size(); ++i)
        out.push_back(std::cbrt(num[i].determinant() / den[i].determinant()));
    return out;
}

double block_d_efficiency(const RestrictedDesign& optimal, const RestrictedDesign& reference,
                          const Block& block) {
    const auto num = design_infos(optimal, block);
    const auto den = design_infos(reference, block);
    double log_ratio = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i)
        log_ratio += std::log(num[i].determinant()) - std::log(den[i].determinant());
    return std::exp(log_ratio / (3.0 * static_cast<double>(num.size())));
}

std::vector<TheoreticalEfficiency> theoretical_efficiencies(const RestrictedDesign& optimal,
                                                            const RestrictedDesign& reference,
                                                            const Block& block) {
    const auto num = design_infos(optimal, block);
    const auto den = design_infos(reference, block);
    const AbilityGrid& grid = optimal.grid();
    std::vector<TheoreticalEfficiency> out;
    for (std::size_t i = 0; i < num.size(); ++i) {
        const InfoMatrix opt_cov = num[i].inverse();
        const InfoMatrix ref_cov = den[i].inverse();
        double cc_opt = 0.0, cc_ref = 0.0;
        for (std::size_t q = 0; q < grid.size(); ++q) {
            const ParamVector g = grad_prob(grid.point(q), block[i].params);
            cc_opt += grid.weight(q) * quad_form(g, opt_cov);
            cc_ref += grid.weight(q) * quad_form(g, ref_cov);
        }
        TheoreticalEfficiency e;
        e.re_d = std::cbrt(num[i].determinant() / den[i].determinant());
        e.re_a = ref_cov.trace() / opt_cov.trace();
        e.re_cc = cc_ref / cc_opt;
        out.push_back(e);
    }
    return out;
}

}  // namespace calib
