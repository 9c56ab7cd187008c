#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "calibopt/blocks.hpp"
#include "calibopt/metrics.hpp"
#include "calibopt/simulation.hpp"

namespace calib {

struct ReportInput {
    SimConfig config;
    ItemBank truth;                            // calibration items
    std::vector<ReplicateResult> replicates;   // empty for case I
    std::vector<double> cohort;                // CC abilities; empty for case I
    std::vector<AllocationRules> rules;        // optional, for the interval plot
    std::optional<AbilitySnapshot> abilities;  // optional, for the ability histogram
    std::size_t bootstrap_resamples = 1000;
};

struct Report {
    SimCase sim_case = SimCase::I;
    bool theoretical = true;
    std::vector<ItemEfficiency> per_item;  // block/position order
    OverallEfficiency overall;
    std::optional<BootstrapInterval> re_d_interval;
    std::size_t excluded = 0;  // replicate-item pairs dropped for non-convergence
    std::size_t replicates = 0;
    std::vector<AllocationRules> rules;
    BlockSet blocks;
};

// Case I: theoretical efficiencies of the optimized blocks. Other cases:
// empirical efficiencies from the paired replicate estimates.
Report build_report(const ReportInput& input);

std::string overall_csv(const Report& report);

// item_table.csv, overall.csv and the SVG plots with CSV sidecars. Returns
// the written file names, relative to `out_dir`.
std::vector<std::string> write_report(const Report& report, const ReportInput& input,
                                      const std::filesystem::path& out_dir);

}  // namespace calib
