#include "calibopt/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "calibopt/errors.hpp"

namespace calib {

const char* to_string(SimCase c) {
    switch (c) {
        case SimCase::I: return "I";
        case SimCase::II: return "II";
        case SimCase::III: return "III";
        case SimCase::IV: return "IV";
    }
    return "?";
}

const char* to_string(DesignArm d) {
    switch (d) {
        case DesignArm::optimal: return "optimal";
        case DesignArm::random: return "random";
        case DesignArm::both: return "both";
    }
    return "?";
}

SimCase parse_case(const std::string& s) {
    if (s == "I") return SimCase::I;
    if (s == "II") return SimCase::II;
    if (s == "III") return SimCase::III;
    if (s == "IV") return SimCase::IV;
    throw InputError("unknown case '" + s + "' (expected I, II, III or IV)");
}

DesignArm parse_arm(const std::string& s) {
    if (s == "optimal") return DesignArm::optimal;
    if (s == "random") return DesignArm::random;
    if (s == "both") return DesignArm::both;
    throw InputError("unknown design '" + s + "' (expected optimal, random or both)");
}

void SimConfig::validate(std::size_t calibration_items) const {
    if (examinees < 1) throw InputError("N must be at least 1");
    if (replicates < 1) throw InputError("S must be at least 1");
    if (blocks < 1 || block_size < 1) throw InputError("l and m must be at least 1");
    if (blocks * block_size != calibration_items)
        throw InputError("l * m = " + std::to_string(blocks * block_size) + " but the bank has " +
                         std::to_string(calibration_items) + " calibration items");
    if (sim_case == SimCase::IV && n_pre < 1) throw InputError("case IV requires n_pre >= 1");
    if (grid.points < 2 || !(grid.hi > grid.lo)) throw InputError("invalid grid options");
    if (!(exchange.tol > 0.0) || exchange.max_iters < 0 || !(exchange.damping > 0.0 && exchange.damping <= 1.0))
        throw InputError("invalid exchange options");
    if (!(fit.grad_tol > 0.0) || fit.max_iters < 0) throw InputError("invalid estimation options");
}

ResponseMatrix::ResponseMatrix(std::size_t examinees, std::size_t items)
    : examinees_(examinees), items_(items), cells_(examinees * items, kNotAdministered) {}

std::vector<double> simulate_abilities(std::size_t n, std::uint64_t seed, StreamId stream) {
    const CounterStream rng(seed, stream);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = rng.normal(j);
    return out;
}

ResponseMatrix generate_responses(std::span<const double> thetas, std::span<const ItemParams> items,
                                  std::uint64_t seed, StreamId stream) {
    const CounterStream rng(seed, stream);
    ResponseMatrix m(thetas.size(), items.size());
    for (std::size_t j = 0; j < thetas.size(); ++j)
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double p = prob_3pl(thetas[j], items[i]);
            m.at(j, i) = rng.uniform(j * items.size() + i) < p ? kCorrect : kIncorrect;
        }
    return m;
}

BlockAssignment allocate_optimal(std::span<const double> abilities, std::span<const AllocationRules> rules) {
    std::vector<IntervalLookup> lookups;
    lookups.reserve(rules.size());
    for (const auto& r : rules) lookups.emplace_back(r);
    BlockAssignment out(abilities.size(), rules.size());
    for (std::size_t j = 0; j < abilities.size(); ++j)
        for (std::size_t k = 0; k < rules.size(); ++k)
            out.at(j, k) = static_cast<std::uint32_t>(lookups[k].item_for(abilities[j]));
    return out;
}

BlockAssignment allocate_random(std::size_t examinees, const BlockSet& blocks, std::uint64_t seed) {
    const CounterStream rng(seed, StreamId::random_allocation);
    const std::size_t l = blocks.blocks.size();
    BlockAssignment out(examinees, l);
    for (std::size_t j = 0; j < examinees; ++j)
        for (std::size_t k = 0; k < l; ++k) {
            const std::size_t m = blocks.blocks[k].size();
            const auto pos = static_cast<std::size_t>(rng.uniform(j * l + k) * static_cast<double>(m));
            out.at(j, k) = static_cast<std::uint32_t>(std::min(pos, m - 1));
        }
    return out;
}

bool CaseDesign::all_converged() const {
    return std::all_of(summaries.begin(), summaries.end(), [](const auto& s) { return s.converged; });
}

CaseDesign design_blocks(const BlockSet& blocks, const GridOptions& grid_opts, const ExchangeOptions& opts) {
    const AbilityGrid grid = AbilityGrid::standard_normal(grid_opts);
    CaseDesign out;
    out.blocks = blocks;
    for (const Block& block : blocks.blocks) {
        OptimizedDesign opt = optimize_block(block, grid, opts);
        const RestrictedDesign reference = random_design(block, grid);
        out.rules.push_back(extract_intervals(opt.design, block));
        out.theoretical.push_back(theoretical_efficiencies(opt.design, reference, block));
        out.block_efficiency.push_back(block_d_efficiency(opt.design, reference, block));
        out.summaries.push_back(std::move(opt.summary));
    }
    return out;
}

std::vector<ItemEfficiency> theoretical_table(const CaseDesign& design) {
    std::vector<ItemEfficiency> out;
    for (std::size_t k = 0; k < design.blocks.blocks.size(); ++k) {
        const Block& block = design.blocks.blocks[k];
        for (std::size_t i = 0; i < block.size(); ++i) {
            const auto& t = design.theoretical[k][i];
            out.push_back({block[i].id, static_cast<int>(k + 1), static_cast<int>(i + 1), t.re_d, t.re_cc, t.re_a});
        }
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct RunContext {
    const SimConfig& config;
    const CaseDesign& design;
    std::span<const double> cohort;
    std::vector<ItemParams> columns;            // operational first, then calibration
    std::size_t n_operational = 0;
    std::map<int, std::size_t> calibration_column;  // item id -> column
    const EapScorer* scorer = nullptr;
};

struct ArmData {
    std::vector<double> thetas;
    std::vector<std::int8_t> outcomes;
};

void fit_arm(const RunContext& ctx, const ResponseMatrix& responses, const BlockAssignment& assignment,
             std::span<const double> fit_thetas, DesignArm arm, std::vector<ItemEstimate>& out) {
    const BlockSet& blocks = ctx.design.blocks;
    for (std::size_t k = 0; k < blocks.blocks.size(); ++k) {
        const Block& block = blocks.blocks[k];
        std::vector<ArmData> data(block.size());
        for (std::size_t j = 0; j < responses.examinees(); ++j) {
            const std::size_t pos = assignment.at(j, k);
            const std::size_t col = ctx.calibration_column.at(block[pos].id);
            data[pos].thetas.push_back(fit_thetas[j]);
            data[pos].outcomes.push_back(responses.at(j, col));
        }
        for (std::size_t i = 0; i < block.size(); ++i) {
            ItemEstimate e;
            e.item_id = block[i].id;
            e.block = k;
            e.position = i;
            e.design = arm;
            e.fit = data[i].outcomes.empty()
                        ? fit_item_fixed_theta({}, {}, ctx.config.fit)
                        : fit_item_fixed_theta(data[i].outcomes, data[i].thetas, ctx.config.fit);
            out.push_back(e);
        }
    }
}

std::vector<double> eap_all(const RunContext& ctx, const ResponseMatrix& responses, std::vector<double>* raw_out) {
    std::vector<double> raw(responses.examinees());
    for (std::size_t j = 0; j < responses.examinees(); ++j)
        raw[j] = (*ctx.scorer)(responses.row(j).subspan(0, ctx.n_operational));
    std::vector<double> normalized = percentile_transform(raw);
    if (raw_out) *raw_out = std::move(raw);
    return normalized;
}

ReplicateResult run_replicate(const RunContext& ctx, std::size_t s, AbilitySnapshot* snapshot) {
    const SimConfig& cfg = ctx.config;
    ReplicateResult result;
    result.replicate = s;
    result.seed = derive_seed(cfg.seed, s);

    const ResponseMatrix responses = generate_responses(ctx.cohort, ctx.columns, result.seed);

    std::vector<double> estimated;
    std::span<const double> abilities = ctx.cohort;
    if (cfg.sim_case == SimCase::III || cfg.sim_case == SimCase::IV) {
        std::vector<double> raw;
        estimated = eap_all(ctx, responses, snapshot ? &raw : nullptr);
        abilities = estimated;
        if (snapshot) {
            snapshot->truth.assign(ctx.cohort.begin(), ctx.cohort.end());
            snapshot->raw = std::move(raw);
            snapshot->normalized = estimated;
        }
    }

    if (cfg.design != DesignArm::random) {
        const BlockAssignment assignment = allocate_optimal(abilities, ctx.design.rules);
        fit_arm(ctx, responses, assignment, abilities, DesignArm::optimal, result.estimates);
    }
    if (cfg.design != DesignArm::optimal) {
        const BlockAssignment assignment = allocate_random(responses.examinees(), ctx.design.blocks, result.seed);
        fit_arm(ctx, responses, assignment, abilities, DesignArm::random, result.estimates);
    }
    std::stable_sort(result.estimates.begin(), result.estimates.end(), [](const auto& x, const auto& y) {
        if (x.block != y.block) return x.block < y.block;
        if (x.position != y.position) return x.position < y.position;
        return x.design == DesignArm::optimal && y.design != DesignArm::optimal;
    });
    return result;
}

PreEstimation pre_estimate(const SimConfig& cfg, const std::vector<BankItem>& operational,
                           const std::vector<BankItem>& calibration, const BlockSet& truth_blocks) {
    std::vector<ItemParams> columns;
    for (const auto& it : operational) columns.push_back(it.params);
    for (const auto& it : calibration) columns.push_back(it.params);
    const auto thetas = simulate_abilities(cfg.n_pre, cfg.seed, StreamId::pre_abilities);
    const ResponseMatrix responses = generate_responses(thetas, columns, cfg.seed, StreamId::pre_responses);

    const AbilityGrid grid = AbilityGrid::standard_normal(cfg.grid);
    std::vector<ItemParams> op_params(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(operational.size()));
    const EapScorer scorer(op_params, grid);
    std::vector<double> raw(cfg.n_pre);
    for (std::size_t j = 0; j < cfg.n_pre; ++j) raw[j] = scorer(responses.row(j).subspan(0, operational.size()));
    const std::vector<double> fixed = percentile_transform(raw);

    PreEstimation pre;
    for (std::size_t i = 0; i < calibration.size(); ++i) {
        std::vector<std::int8_t> y(cfg.n_pre);
        for (std::size_t j = 0; j < cfg.n_pre; ++j) y[j] = responses.at(j, operational.size() + i);
        ItemFit fit = map_preestimate(y, fixed, cfg.prior, cfg.fit);
        pre.estimates.push_back({calibration[i].id, fit.estimate});
        pre.fits.push_back(fit);
    }

    const BlockSet blocks = build_blocks(pre.estimates, cfg.blocks);
    for (const auto& it : calibration) {
        const auto truth = truth_blocks.locate(it.id);
        const auto est = blocks.locate(it.id);
        if (truth && est && *truth != *est)
            pre.block_changes.push_back({it.id, truth->first, truth->second, est->first, est->second});
    }
    return pre;
}

}  // namespace

RunResult run_case(const SimConfig& config, const ItemBank& bank) {
    const auto operational = bank.with_role(ItemRole::operational);
    const auto calibration = bank.with_role(ItemRole::calibration);
    config.validate(calibration.size());
    if (config.sim_case == SimCase::III || config.sim_case == SimCase::IV) {
        if (operational.empty()) throw InputError("cases III and IV need operational items");
    }

    RunResult run;
    run.config = config;
    auto start = Clock::now();

    const BlockSet truth_blocks = build_blocks(bank, config.blocks);
    if (config.sim_case == SimCase::IV) {
        run.pre_estimation = pre_estimate(config, operational, calibration, truth_blocks);
        run.timings.push_back({"pre_estimation", seconds_since(start)});
        start = Clock::now();
        run.design = design_blocks(build_blocks(run.pre_estimation->estimates, config.blocks), config.grid,
                                   config.exchange);
    } else {
        run.design = design_blocks(truth_blocks, config.grid, config.exchange);
    }
    run.timings.push_back({"design", seconds_since(start)});
    if (config.sim_case == SimCase::I) return run;

    start = Clock::now();
    run.cohort = simulate_abilities(config.examinees, config.seed);

    RunContext ctx{config, run.design, run.cohort, {}, operational.size(), {}, nullptr};
    for (const auto& it : operational) ctx.columns.push_back(it.params);
    for (const auto& it : calibration) {
        ctx.calibration_column[it.id] = ctx.columns.size();
        ctx.columns.push_back(it.params);
    }
    const AbilityGrid grid = AbilityGrid::standard_normal(config.grid);
    std::vector<ItemParams> op_params(ctx.columns.begin(), ctx.columns.begin() + static_cast<std::ptrdiff_t>(ctx.n_operational));
    const EapScorer scorer(op_params, grid);
    ctx.scorer = &scorer;

    run.replicates.resize(config.replicates);
    AbilitySnapshot snapshot;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t s = next++; s < config.replicates; s = next++) {
            try {
                run.replicates[s] = run_replicate(ctx, s, s == 0 ? &snapshot : nullptr);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = config.replicates;
            }
        }
    };
    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.replicates));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    if (!snapshot.truth.empty()) run.first_replicate_abilities = std::move(snapshot);
    run.timings.push_back({"replicates", seconds_since(start)});
    return run;
}

PairedCollection collect_paired_series(std::span<const ReplicateResult> replicates, const ItemBank& truth) {
    // item id -> (series index)
    std::map<int, std::size_t> index;
    PairedCollection out;
    for (const auto& rep : replicates) {
        std::map<int, std::pair<const ItemEstimate*, const ItemEstimate*>> arms;
        for (const auto& e : rep.estimates) {
            auto& slot = arms[e.item_id];
            (e.design == DesignArm::optimal ? slot.first : slot.second) = &e;
        }
        for (const auto& [id, pair] : arms) {
            auto [it, inserted] = index.try_emplace(id, out.series.size());
            if (inserted) {
                const auto item = truth.find(id);
                if (!item) throw InputError("estimate for item " + std::to_string(id) + " missing from the truth bank");
                out.series.push_back({id, item->params, {}, {}});
                out.excluded.push_back(0);
                const ItemEstimate* any = pair.first ? pair.first : pair.second;
                out.labels.emplace_back(static_cast<int>(any->block + 1), static_cast<int>(any->position + 1));
            }
            const std::size_t k = it->second;
            if (pair.first && pair.second && pair.first->fit.converged && pair.second->fit.converged) {
                out.series[k].optimal.push_back(pair.first->fit.estimate);
                out.series[k].random.push_back(pair.second->fit.estimate);
            } else {
                ++out.excluded[k];
            }
        }
    }
    return out;
}

std::vector<ItemEfficiency> empirical_efficiencies(const PairedCollection& paired,
                                                   std::span<const double> cohort) {
    std::vector<ItemEfficiency> out;
    for (std::size_t k = 0; k < paired.series.size(); ++k) {
        const PairedSeries& s = paired.series[k];
        if (s.optimal.empty()) throw DegenerateDenominator("no converged paired replicates for item " + std::to_string(s.item_id));
        ItemEfficiency e = relative_efficiencies(arm_stats(s.random, s.truth, cohort),
                                                 arm_stats(s.optimal, s.truth, cohort));
        e.item_id = s.item_id;
        std::tie(e.block, e.position) = paired.labels[k];
        out.push_back(e);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return x.block != y.block ? x.block < y.block : x.position < y.position;
    });
    return out;
}

ItemBank synthesize_operational_bank(std::size_t count, int first_id, std::uint64_t seed) {
    StreamCursor rng(CounterStream(seed, StreamId::operational_bank));
    auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
    std::vector<BankItem> items;
    for (std::size_t i = 0; i < count; ++i) {
        ItemParams p;
        p.a = round3(std::exp(0.3 * rng.normal()));
        p.b = round3(rng.normal());
        p.c = round3(rng.beta(5.0, 17.0));
        items.push_back({first_id + static_cast<int>(i), p, ItemRole::operational});
    }
    return ItemBank(std::move(items));
}

}  // namespace calib
