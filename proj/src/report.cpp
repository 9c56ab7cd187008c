#include "calibopt/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "calibopt/errors.hpp"
#include "calibopt/io.hpp"
#include "calibopt/svg.hpp"

namespace calib {

namespace {

using io::format_double;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return out;
}

// Blocks as labelled in the estimates; items inside a block keep their
// recorded positions.
BlockSet blocks_from_estimates(const std::vector<ReplicateResult>& replicates, const ItemBank& truth) {
    std::map<std::size_t, std::map<std::size_t, int>> layout;
    for (const auto& rep : replicates)
        for (const auto& e : rep.estimates) layout[e.block][e.position] = e.item_id;
    BlockSet out;
    for (const auto& [block, positions] : layout) {
        std::vector<CalibrationItem> items;
        for (const auto& [pos, id] : positions) {
            const auto it = truth.find(id);
            if (!it) throw InputError("item " + std::to_string(id) + " missing from the truth bank");
            items.push_back({id, it->params});
        }
        out.blocks.emplace_back(std::move(items), static_cast<int>(block + 1));
    }
    return out;
}

std::string icc_plot(const Block& block, std::string& sidecar) {
    const auto thetas = linspace(-4.0, 4.0, 161);
    svg::Plot plot("Item characteristic curves, block " + std::to_string(block.id()), "ability", "P(correct)", -4.0,
                   4.0, 0.0, 1.0);
    sidecar = "theta";
    std::vector<std::vector<double>> curves;
    for (std::size_t i = 0; i < block.size(); ++i) {
        sidecar += ",item_" + std::to_string(block[i].id);
        std::vector<double> p;
        for (double t : thetas) p.push_back(prob_3pl(t, block[i].params));
        plot.polyline(thetas, p, svg::palette(i), 2.0);
        plot.legend("item " + std::to_string(block[i].id), svg::palette(i));
        curves.push_back(std::move(p));
    }
    sidecar += "\n";
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        sidecar += format_double(thetas[k]);
        for (const auto& c : curves) sidecar += "," + format_double(c[k]);
        sidecar += "\n";
    }
    return plot.str();
}

std::string intervals_plot(const std::vector<AllocationRules>& rules, std::string& sidecar) {
    sidecar = "block_id,item_id,lo,hi\n";
    for (const auto& r : rules)
        for (const auto& it : r.items)
            for (const auto& iv : it.intervals)
                sidecar += std::to_string(r.block_id) + "," + std::to_string(it.item_id) + "," + format_double(iv.lo) +
                           "," + format_double(iv.hi) + "\n";

    const AllocationRules& first = rules.front();
    svg::Plot plot("Ability intervals over the N(0,1) density, block " + std::to_string(first.block_id), "ability",
                   "density", -4.0, 4.0, 0.0, 0.45);
    const IntervalLookup lookup(first);
    // Shade each maximal run of a fine axis assigned to one item.
    const auto xs = linspace(-4.0, 4.0, 1601);
    std::size_t start = 0;
    for (std::size_t k = 1; k <= xs.size(); ++k) {
        if (k < xs.size() && lookup.item_for(xs[k]) == lookup.item_for(xs[start])) continue;
        const std::size_t item = lookup.item_for(xs[start]);
        const std::size_t end = std::min(k, xs.size() - 1);
        std::vector<double> px(xs.begin() + static_cast<std::ptrdiff_t>(start), xs.begin() + static_cast<std::ptrdiff_t>(end) + 1);
        std::vector<double> py;
        for (double x : px) py.push_back(normal_pdf(x));
        plot.area(px, py, svg::palette(item), 0.6);
        start = k;
    }
    std::vector<double> dens;
    for (double x : xs) dens.push_back(normal_pdf(x));
    plot.polyline(xs, dens, "#222", 1.5);
    for (std::size_t i = 0; i < first.items.size(); ++i)
        plot.legend("item " + std::to_string(first.items[i].item_id), svg::palette(i));
    return plot.str();
}

std::string abilities_plot(const std::vector<double>& primary, const std::string& label,
                           const std::vector<double>* secondary, std::string& sidecar) {
    constexpr double lo = -4.0, hi = 4.0, width = 0.25;
    constexpr std::size_t bins = 32;
    auto histogram = [&](const std::vector<double>& v) {
        std::vector<double> h(bins, 0.0);
        for (double x : v) {
            const double k = std::floor((std::clamp(x, lo, hi - 1e-12) - lo) / width);
            h[static_cast<std::size_t>(k)] += 1.0;
        }
        for (double& c : h) c /= static_cast<double>(v.size()) * width;
        return h;
    };
    const auto h1 = histogram(primary);
    const std::vector<double> h2 = secondary ? histogram(*secondary) : std::vector<double>{};
    double top = 0.45;
    for (double c : h1) top = std::max(top, c * 1.05);

    svg::Plot plot("Ability estimates against the N(0,1) density", "ability", "density", lo, hi, 0.0, top);
    sidecar = std::string("bin_lo,bin_hi,") + label + (secondary ? ",normalized" : "") + ",normal\n";
    for (std::size_t k = 0; k < bins; ++k) {
        const double x0 = lo + width * static_cast<double>(k), x1 = x0 + width;
        plot.bar(x0, x1, h1[k], svg::palette(0), 0.6);
        sidecar += format_double(x0) + "," + format_double(x1) + "," + format_double(h1[k]);
        if (secondary) sidecar += "," + format_double(h2[k]);
        sidecar += "," + format_double(normal_pdf(0.5 * (x0 + x1))) + "\n";
    }
    const auto xs = linspace(lo, hi, 321);
    std::vector<double> dens;
    for (double x : xs) dens.push_back(normal_pdf(x));
    plot.polyline(xs, dens, svg::palette(1), 2.0);
    plot.legend(label, svg::palette(0));
    plot.legend("N(0,1)", svg::palette(1));
    return plot.str();
}

std::string scatter_plot(const Report& report, const ItemBank& truth, std::string& sidecar) {
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_position;
    double y_lo = 1.0, y_hi = 1.0;
    sidecar = "item_id,block,position,a,b,c,RE_D\n";
    for (const auto& e : report.per_item) {
        const ItemParams p = truth.find(e.item_id)->params;
        by_position[e.position].first.push_back(p.b);
        by_position[e.position].second.push_back(e.re_d);
        y_lo = std::min(y_lo, e.re_d);
        y_hi = std::max(y_hi, e.re_d);
        sidecar += std::to_string(e.item_id) + "," + std::to_string(e.block) + "," + std::to_string(e.position) + "," +
                   format_double(p.a) + "," + format_double(p.b) + "," + format_double(p.c) + "," +
                   format_double(e.re_d) + "\n";
    }
    const double pad = 0.05 * std::max(0.1, y_hi - y_lo);
    svg::Plot plot(std::string(report.theoretical ? "Theoretical" : "Empirical") + " RE_D by difficulty",
                   "difficulty b", "RE_D", -3.0, 3.0, y_lo - pad, y_hi + pad);
    const double xs[] = {-3.0, 3.0}, ones[] = {1.0, 1.0};
    plot.polyline(xs, ones, "#999", 1.0, true);
    for (const auto& [pos, pts] : by_position) {
        plot.markers(pts.first, pts.second, svg::palette(static_cast<std::size_t>(pos - 1)));
        plot.legend("position " + std::to_string(pos), svg::palette(static_cast<std::size_t>(pos - 1)));
    }
    return plot.str();
}

}  // namespace

Report build_report(const ReportInput& input) {
    Report r;
    r.sim_case = input.config.sim_case;
    if (input.config.sim_case == SimCase::I) {
        const CaseDesign design =
            design_blocks(build_blocks(input.truth, input.config.blocks), input.config.grid, input.config.exchange);
        r.theoretical = true;
        r.per_item = theoretical_table(design);
        r.blocks = design.blocks;
        r.rules = design.rules;
        r.overall = overall_summary(r.per_item);
        return r;
    }
    if (input.replicates.empty()) throw InputError("no replicate estimates to report");
    if (input.cohort.empty()) throw InputError("the characteristic-curve cohort is empty");
    r.theoretical = false;
    r.replicates = input.replicates.size();
    const PairedCollection paired = collect_paired_series(input.replicates, input.truth);
    for (std::size_t x : paired.excluded) r.excluded += x;
    r.per_item = empirical_efficiencies(paired, input.cohort);
    r.overall = overall_summary(r.per_item);
    r.blocks = blocks_from_estimates(input.replicates, input.truth);
    r.rules = input.rules;

    const std::size_t s = paired.series.front().optimal.size();
    const bool balanced = std::all_of(paired.series.begin(), paired.series.end(),
                                      [&](const PairedSeries& p) { return p.optimal.size() == s; });
    if (balanced && s >= 3 && input.bootstrap_resamples > 0) {
        try {
            r.re_d_interval = bootstrap_overall_re_d(paired.series, input.bootstrap_resamples, input.config.seed);
        } catch (const DegenerateDenominator&) {
            r.re_d_interval.reset();
        }
    }
    return r;
}

std::string overall_csv(const Report& report) {
    std::string out = "Case,Source,RE_D,RE_CC,RE_A,RE_D_lower,RE_D_upper,Items,Replicates,Excluded\n";
    out += std::string(to_string(report.sim_case)) + "," + (report.theoretical ? "theoretical" : "empirical") + "," +
           format_double(report.overall.re_d) + "," + format_double(report.overall.re_cc) + "," +
           format_double(report.overall.re_a) + ",";
    if (report.re_d_interval)
        out += format_double(report.re_d_interval->lower) + "," + format_double(report.re_d_interval->upper);
    else
        out += ",";
    out += "," + std::to_string(report.per_item.size()) + "," + std::to_string(report.replicates) + "," +
           std::to_string(report.excluded) + "\n";
    return out;
}

std::vector<std::string> write_report(const Report& report, const ReportInput& input,
                                      const std::filesystem::path& out_dir) {
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& bytes) {
        io::write_file(out_dir / name, bytes);
        written.push_back(name);
    };
    emit("item_table.csv", io::efficiency_table_csv(report.per_item, input.truth));
    emit("overall.csv", overall_csv(report));

    std::string sidecar;
    if (!report.blocks.blocks.empty()) {
        emit("icc.svg", icc_plot(report.blocks.blocks.front(), sidecar));
        emit("icc.csv", sidecar);
    }
    if (!report.rules.empty()) {
        emit("intervals.svg", intervals_plot(report.rules, sidecar));
        emit("intervals.csv", sidecar);
    }
    if (input.abilities && !input.abilities->raw.empty()) {
        emit("abilities.svg", abilities_plot(input.abilities->raw, "eap", &input.abilities->normalized, sidecar));
        emit("abilities.csv", sidecar);
    } else if (!input.cohort.empty()) {
        emit("abilities.svg", abilities_plot(input.cohort, "truth", nullptr, sidecar));
        emit("abilities.csv", sidecar);
    }
    emit("re_d_scatter.svg", scatter_plot(report, input.truth, sidecar));
    emit("re_d_scatter.csv", sidecar);
    return written;
}

}  // namespace calib
