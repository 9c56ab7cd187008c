#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "calibopt/blocks.hpp"
#include "calibopt/design.hpp"
#include "calibopt/metrics.hpp"
#include "calibopt/simulation.hpp"

namespace calib::io {

inline constexpr const char* kVersion = "0.1.0";

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Whole-field parse; throws InputError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

std::string read_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);

// Comma-separated rows; no quoting is used by any format here.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// item_id,a,b,c
ItemBank parse_bank_csv(std::string_view text, ItemRole role);
ItemBank read_bank_csv(const std::filesystem::path& path, ItemRole role);
std::string bank_csv(const ItemBank& bank);

std::string rules_json(std::span<const AllocationRules> rules);
std::vector<AllocationRules> parse_rules_json(std::string_view text);

std::string blocks_json(const BlockSet& blocks);
BlockSet parse_blocks_json(std::string_view text);

// Simulation settings plus optional bank paths, resolved against the
// directory holding the config file.
struct ConfigFile {
    SimConfig sim;
    std::optional<std::filesystem::path> bank;
    std::optional<std::filesystem::path> operational_bank;
};

ConfigFile parse_config_json(std::string_view text, const std::filesystem::path& base_dir = {});
ConfigFile read_config(const std::filesystem::path& path);
std::string config_json(const SimConfig& config);

// One row per (replicate, item, design arm).
std::string estimates_csv(std::span<const ReplicateResult> replicates);
std::vector<ReplicateResult> parse_estimates_csv(std::string_view text);

// Block,Pos,RE_D,RE_CC,RE_A,a,b,c,Item
std::string efficiency_table_csv(std::span<const ItemEfficiency> rows, const ItemBank& truth);

// Per-item exchange diagnostics and theoretical efficiencies.
std::string design_summary_csv(const CaseDesign& design);

std::string abilities_csv(const AbilitySnapshot& snapshot);
AbilitySnapshot parse_abilities_csv(std::string_view text);

struct FileDigest {
    std::string name;
    std::string sha256;
};

struct RunManifest {
    SimConfig config;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::vector<StageTiming> timings;
    std::string version = kVersion;
};

std::string manifest_json(const RunManifest& manifest);
RunManifest parse_manifest_json(std::string_view text);

}  // namespace calib::io
