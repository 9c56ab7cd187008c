#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calibopt/blocks.hpp"
#include "calibopt/design.hpp"
#include "calibopt/estimation.hpp"
#include "calibopt/metrics.hpp"
#include "calibopt/rng.hpp"

namespace calib {

// I: theoretical only. II: allocation by true abilities. III: allocation by
// EAP + percentile abilities. IV: as III with blocks and rules built from
// small-sample pre-estimates.
enum class SimCase { I, II, III, IV };
enum class DesignArm { optimal, random, both };

const char* to_string(SimCase c);
const char* to_string(DesignArm d);
SimCase parse_case(const std::string& s);
DesignArm parse_arm(const std::string& s);

struct SimConfig {
    SimCase sim_case = SimCase::II;
    DesignArm design = DesignArm::both;
    std::size_t examinees = 39321;  // N
    std::size_t replicates = 2000;  // S
    std::size_t blocks = 10;        // l
    std::size_t block_size = 4;     // m
    std::uint64_t seed = 20180402;
    std::size_t n_pre = 200;
    GridOptions grid;
    ExchangeOptions exchange;
    FitOptions fit;
    ItemPrior prior;
    unsigned threads = 0;  // 0: hardware concurrency

    // Throws InputError on inconsistent settings.
    void validate(std::size_t calibration_items) const;
};

// Examinee x item outcomes; kNotAdministered marks unassigned cells.
class ResponseMatrix {
public:
    ResponseMatrix(std::size_t examinees, std::size_t items);

    std::size_t examinees() const { return examinees_; }
    std::size_t items() const { return items_; }
    std::int8_t at(std::size_t j, std::size_t i) const { return cells_[j * items_ + i]; }
    std::int8_t& at(std::size_t j, std::size_t i) { return cells_[j * items_ + i]; }
    std::span<const std::int8_t> row(std::size_t j) const { return {cells_.data() + j * items_, items_}; }

    bool operator==(const ResponseMatrix&) const = default;

private:
    std::size_t examinees_;
    std::size_t items_;
    std::vector<std::int8_t> cells_;
};

std::vector<double> simulate_abilities(std::size_t n, std::uint64_t seed,
                                       StreamId stream = StreamId::abilities);

// Cell (j, i) ~ Bernoulli(prob_3pl(theta_j, items[i])).
ResponseMatrix generate_responses(std::span<const double> thetas, std::span<const ItemParams> items,
                                  std::uint64_t seed, StreamId stream = StreamId::responses);

// Position (0-based, within its block) of the item each examinee calibrates in
// each block.
class BlockAssignment {
public:
    BlockAssignment(std::size_t examinees, std::size_t blocks)
        : examinees_(examinees), blocks_(blocks), positions_(examinees * blocks, 0) {}

    std::size_t examinees() const { return examinees_; }
    std::size_t blocks() const { return blocks_; }
    std::uint32_t at(std::size_t j, std::size_t k) const { return positions_[j * blocks_ + k]; }
    std::uint32_t& at(std::size_t j, std::size_t k) { return positions_[j * blocks_ + k]; }

    bool operator==(const BlockAssignment&) const = default;

private:
    std::size_t examinees_;
    std::size_t blocks_;
    std::vector<std::uint32_t> positions_;
};

BlockAssignment allocate_optimal(std::span<const double> abilities, std::span<const AllocationRules> rules);

BlockAssignment allocate_random(std::size_t examinees, const BlockSet& blocks, std::uint64_t seed);

// Optimized designs of every block of a block set.
struct CaseDesign {
    BlockSet blocks;
    std::vector<AllocationRules> rules;
    std::vector<DesignSummary> summaries;
    std::vector<std::vector<TheoreticalEfficiency>> theoretical;  // [block][position]
    std::vector<double> block_efficiency;

    bool all_converged() const;
};

CaseDesign design_blocks(const BlockSet& blocks, const GridOptions& grid, const ExchangeOptions& opts);

// Theoretical per-item efficiencies in block/position order.
std::vector<ItemEfficiency> theoretical_table(const CaseDesign& design);

struct ItemEstimate {
    int item_id = 0;
    std::size_t block = 0;     // 0-based
    std::size_t position = 0;  // 0-based
    DesignArm design = DesignArm::optimal;
    ItemFit fit;
};

struct ReplicateResult {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::vector<ItemEstimate> estimates;  // block, position, then optimal before random
};

struct BlockChange {
    int item_id = 0;
    std::size_t true_block = 0;
    std::size_t true_position = 0;
    std::size_t block = 0;
    std::size_t position = 0;
};

struct PreEstimation {
    std::vector<CalibrationItem> estimates;
    std::vector<ItemFit> fits;
    std::vector<BlockChange> block_changes;  // against the truth-based deal
};

struct AbilitySnapshot {
    std::vector<double> truth;
    std::vector<double> raw;         // EAP
    std::vector<double> normalized;  // percentile transformed
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunResult {
    SimConfig config;
    CaseDesign design;
    std::optional<PreEstimation> pre_estimation;
    std::vector<double> cohort;  // true abilities shared by all replicates
    std::vector<ReplicateResult> replicates;
    std::optional<AbilitySnapshot> first_replicate_abilities;
    std::vector<StageTiming> timings;
};

// Runs one case on a bank holding operational and calibration items. Fit
// failures are recorded per estimate; only configuration errors throw.
RunResult run_case(const SimConfig& config, const ItemBank& bank);

// Converged paired series per calibration item. A replicate contributes to an
// item only when both arms converged for that item.
struct PairedCollection {
    std::vector<PairedSeries> series;
    std::vector<std::size_t> excluded;                 // per series
    std::vector<std::pair<int, int>> labels;           // per series, 1-based (block, position)
};

PairedCollection collect_paired_series(std::span<const ReplicateResult> replicates,
                                       const ItemBank& truth);

// Per-item empirical efficiencies in block/position order.
std::vector<ItemEfficiency> empirical_efficiencies(const PairedCollection& paired,
                                                   std::span<const double> cohort);

// Operational bank generator: a = exp(0.3 z), b ~ N(0, 1), c ~ Beta(5, 17),
// each rounded to three decimals.
ItemBank synthesize_operational_bank(std::size_t count, int first_id, std::uint64_t seed);

}  // namespace calib
