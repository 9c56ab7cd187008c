#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "calibopt/blocks.hpp"
#include "calibopt/errors.hpp"
#include "calibopt/io.hpp"
#include "calibopt/report.hpp"
#include "calibopt/simulation.hpp"

namespace fs = std::filesystem;
using namespace calib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitWarnings = 3;

const fs::path kDataDir = CALIBOPT_DATA_DIR;

fs::path default_calibration_bank() { return kDataDir / "calibration_true.csv"; }
fs::path default_operational_bank() { return kDataDir / "operational_synthetic.csv"; }

struct DesignArgs {
    std::optional<fs::path> config;
    std::optional<fs::path> bank;
    std::optional<std::size_t> blocks;
    fs::path out;
    std::optional<double> grid_lo, grid_hi, tol;
    std::optional<std::size_t> grid_points;
    std::optional<int> max_iters;
};

struct SimulateArgs {
    fs::path config;
    std::optional<fs::path> bank;
    std::optional<fs::path> operational;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    fs::path out = "results";
};

struct ReportArgs {
    fs::path results;
    std::optional<fs::path> bank;
    std::optional<fs::path> config;
    fs::path out;
    std::size_t bootstrap = 1000;
};

struct SynthArgs {
    std::size_t count = 40;
    int first_id = 41;
    std::uint64_t seed = 0;
    fs::path out;
};

int report_convergence(const CaseDesign& design) {
    if (design.all_converged()) return kExitOk;
    for (std::size_t k = 0; k < design.summaries.size(); ++k)
        if (!design.summaries[k].converged)
            std::cerr << "warning: block " << k + 1 << " stopped with equivalence gap "
                      << design.summaries[k].equivalence_gap << "\n";
    return kExitWarnings;
}

int run_design(const DesignArgs& args) {
    SimConfig cfg;
    std::optional<fs::path> bank_path;
    if (args.config) {
        const io::ConfigFile file = io::read_config(*args.config);
        cfg = file.sim;
        bank_path = file.bank;
    }
    if (args.bank) bank_path = args.bank;
    if (args.blocks) cfg.blocks = *args.blocks;
    if (args.grid_lo) cfg.grid.lo = *args.grid_lo;
    if (args.grid_hi) cfg.grid.hi = *args.grid_hi;
    if (args.grid_points) cfg.grid.points = *args.grid_points;
    if (args.tol) cfg.exchange.tol = *args.tol;
    if (args.max_iters) cfg.exchange.max_iters = *args.max_iters;

    const ItemBank bank = io::read_bank_csv(bank_path.value_or(default_calibration_bank()), ItemRole::calibration);
    cfg.block_size = bank.size() / std::max<std::size_t>(cfg.blocks, 1);
    cfg.validate(bank.size());

    const CaseDesign design = design_blocks(build_blocks(bank, cfg.blocks), cfg.grid, cfg.exchange);
    io::write_file(args.out, io::rules_json(design.rules));
    fs::path summary = args.out;
    summary.replace_extension(".summary.csv");
    io::write_file(summary, io::design_summary_csv(design));
    return report_convergence(design);
}

std::vector<io::FileDigest> digest_files(const fs::path& dir, const std::vector<std::string>& names) {
    std::vector<io::FileDigest> out;
    for (const auto& n : names) out.push_back({n, io::sha256_hex(io::read_file(dir / n))});
    return out;
}

std::string pre_estimates_csv(const PreEstimation& pre, const BlockSet& blocks, const BlockSet& truth_blocks) {
    std::string out = "item_id,a,b,c,converged,status,true_block,true_position,block,position\n";
    for (std::size_t i = 0; i < pre.estimates.size(); ++i) {
        const auto& e = pre.estimates[i];
        const auto est = blocks.locate(e.id);
        const auto tru = truth_blocks.locate(e.id);
        out += std::to_string(e.id) + "," + io::format_double(e.params.a) + "," + io::format_double(e.params.b) + "," +
               io::format_double(e.params.c) + "," + (pre.fits[i].converged ? "1" : "0") + "," +
               to_string(pre.fits[i].status) + "," + std::to_string(tru->first + 1) + "," +
               std::to_string(tru->second + 1) + "," + std::to_string(est->first + 1) + "," +
               std::to_string(est->second + 1) + "\n";
    }
    return out;
}

int run_simulate(const SimulateArgs& args) {
    const io::ConfigFile file = io::read_config(args.config);
    SimConfig cfg = file.sim;
    if (args.seed) cfg.seed = *args.seed;
    if (args.threads) cfg.threads = *args.threads;
    const fs::path cal_path = args.bank ? *args.bank : file.bank.value_or(default_calibration_bank());
    const fs::path op_path = args.operational ? *args.operational : file.operational_bank.value_or(default_operational_bank());

    const ItemBank calibration = io::read_bank_csv(cal_path, ItemRole::calibration);
    const ItemBank operational = io::read_bank_csv(op_path, ItemRole::operational);
    const ItemBank bank = operational.merged(calibration);

    const RunResult run = run_case(cfg, bank);

    const fs::path& dir = args.out;
    std::vector<std::string> names;
    auto emit = [&](const std::string& name, const std::string& bytes) {
        io::write_file(dir / name, bytes);
        names.push_back(name);
    };
    emit("estimates.csv", io::estimates_csv(run.replicates));
    emit("theoretical.csv", io::efficiency_table_csv(theoretical_table(run.design), calibration));
    emit("design_summary.csv", io::design_summary_csv(run.design));
    emit("rules.json", io::rules_json(run.design.rules));
    emit("blocks.json", io::blocks_json(run.design.blocks));
    if (run.pre_estimation)
        emit("pre_estimates.csv",
             pre_estimates_csv(*run.pre_estimation, run.design.blocks, build_blocks(bank, cfg.blocks)));
    if (run.first_replicate_abilities) emit("abilities_rep0.csv", io::abilities_csv(*run.first_replicate_abilities));

    io::RunManifest manifest;
    manifest.config = cfg;
    manifest.inputs = {{"config", io::sha256_hex(io::read_file(args.config))},
                       {"calibration_bank", io::sha256_hex(io::read_file(cal_path))},
                       {"operational_bank", io::sha256_hex(io::read_file(op_path))}};
    manifest.outputs = digest_files(dir, names);
    manifest.timings = run.timings;
    io::write_file(dir / "manifest.json", io::manifest_json(manifest));
    return report_convergence(run.design);
}

int run_report(const ReportArgs& args) {
    fs::path results = args.results;
    if (fs::is_directory(results)) results /= "estimates.csv";
    const fs::path dir = results.parent_path();

    ReportInput input;
    if (fs::exists(dir / "manifest.json")) {
        input.config = io::parse_manifest_json(io::read_file(dir / "manifest.json")).config;
    } else if (args.config) {
        input.config = io::read_config(*args.config).sim;
    } else {
        throw InputError("no manifest.json next to " + results.string() + "; pass --config");
    }
    if (args.config && fs::exists(dir / "manifest.json"))
        std::cerr << "note: using the settings recorded in " << (dir / "manifest.json").string() << "\n";

    input.truth = io::read_bank_csv(args.bank.value_or(default_calibration_bank()), ItemRole::calibration);
    input.replicates = io::parse_estimates_csv(io::read_file(results));
    input.bootstrap_resamples = args.bootstrap;
    if (input.config.sim_case != SimCase::I)
        input.cohort = simulate_abilities(input.config.examinees, input.config.seed);
    if (fs::exists(dir / "rules.json")) input.rules = io::parse_rules_json(io::read_file(dir / "rules.json"));
    if (fs::exists(dir / "abilities_rep0.csv"))
        input.abilities = io::parse_abilities_csv(io::read_file(dir / "abilities_rep0.csv"));
    if (input.config.sim_case == SimCase::I && !input.replicates.empty())
        throw InputError("case I results must not contain replicate estimates");

    const Report report = build_report(input);
    write_report(report, input, args.out);
    std::cout << overall_csv(report);
    return kExitOk;
}

int run_synth(const SynthArgs& args) {
    io::write_file(args.out, io::bank_csv(synthesize_operational_bank(args.count, args.first_id, args.seed)));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal restricted calibration designs for 3PL items"};
    app.set_version_flag("--version", std::string(io::kVersion));
    app.require_subcommand(1);

    DesignArgs design_args;
    auto* design = app.add_subcommand("design", "Optimize every block of a calibration bank and write allocation rules");
    design->add_option("--config", design_args.config, "JSON config supplying l, grid and exchange settings");
    design->add_option("--bank", design_args.bank, "Calibration bank CSV (item_id,a,b,c)");
    design->add_option("-l,--blocks", design_args.blocks, "Number of blocks");
    design->add_option("--out", design_args.out, "Rules JSON path; the summary goes next to it")->required();
    design->add_option("--grid-lo", design_args.grid_lo, "Lower grid bound");
    design->add_option("--grid-hi", design_args.grid_hi, "Upper grid bound");
    design->add_option("--grid-points", design_args.grid_points, "Number of grid points");
    design->add_option("--tol", design_args.tol, "Equivalence-gap tolerance");
    design->add_option("--max-iters", design_args.max_iters, "Exchange iteration limit");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Run one simulation case");
    simulate->add_option("--config", sim_args.config, "JSON config")->required();
    simulate->add_option("--bank", sim_args.bank, "Calibration bank CSV with true parameters");
    simulate->add_option("--operational", sim_args.operational, "Operational bank CSV");
    simulate->add_option("--seed", sim_args.seed, "Master seed (overrides the config)");
    simulate->add_option("--threads", sim_args.threads, "Worker threads (0: all cores)");
    simulate->add_option("--out", sim_args.out, "Output directory")->capture_default_str();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Efficiency tables and plots from simulation output");
    report->add_option("--results", report_args.results, "estimates.csv or the simulate output directory")->required();
    report->add_option("--bank", report_args.bank, "Calibration bank CSV with true parameters");
    report->add_option("--config", report_args.config, "JSON config, used when no manifest is present");
    report->add_option("--out", report_args.out, "Output directory")->required();
    report->add_option("--bootstrap", report_args.bootstrap, "Bootstrap resamples for the RE_D interval")
        ->capture_default_str();

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth-bank", "Generate a synthetic operational bank");
    synth->group("");
    synth->add_option("--count", synth_args.count)->capture_default_str();
    synth->add_option("--first-id", synth_args.first_id)->capture_default_str();
    synth->add_option("--seed", synth_args.seed)->required();
    synth->add_option("--out", synth_args.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*design) return run_design(design_args);
        if (*simulate) return run_simulate(sim_args);
        if (*report) return run_report(report_args);
        if (*synth) return run_synth(synth_args);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const IndivisibleBank& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DegenerateDenominator& e) {
        std::cerr << "error: the results are too sparse to compare the designs: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
