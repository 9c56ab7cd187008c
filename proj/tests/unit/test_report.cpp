#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "calibopt/io.hpp"
#include "calibopt/report.hpp"
#include "calibopt/svg.hpp"

using namespace calib;
namespace fs = std::filesystem;

namespace {

// Tag balance and attribute quoting; enough to catch broken output without
// an XML library.
bool well_formed(const std::string& doc, std::string& why) {
    std::vector<std::string> stack;
    std::size_t pos = 0;
    bool root_seen = false;
    while ((pos = doc.find('<', pos)) != std::string::npos) {
        const std::size_t end = doc.find('>', pos);
        if (end == std::string::npos) return why = "unterminated tag", false;
        std::string tag = doc.substr(pos + 1, end - pos - 1);
        pos = end + 1;
        if (tag.starts_with("?")) {
            if (!tag.ends_with("?")) return why = "bad declaration", false;
            continue;
        }
        std::size_t quotes = 0;
        for (char ch : tag) quotes += ch == '"';
        if (quotes % 2) return why = "unbalanced quotes in <" + tag + ">", false;
        if (tag.starts_with("/")) {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return why = "mismatched </" + name + ">", false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.ends_with("/");
        const std::string name = tag.substr(0, tag.find_first_of(" /"));
        if (stack.empty()) {
            if (root_seen) return why = "second root element", false;
            root_seen = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    for (std::size_t k = 0; k < doc.size(); ++k)
        if (doc[k] == '&' && doc.compare(k, 5, "&amp;") && doc.compare(k, 4, "&lt;") && doc.compare(k, 4, "&gt;") &&
            doc.compare(k, 6, "&quot;"))
            return why = "raw ampersand", false;
    if (!stack.empty()) return why = "unclosed <" + stack.back() + ">", false;
    return root_seen;
}

std::size_t plotted_elements(const std::string& doc) {
    std::size_t n = 0;
    for (const char* t : {"<polyline", "<circle", "<polygon"}) {
        for (std::size_t p = doc.find(t); p != std::string::npos; p = doc.find(t, p + 1)) ++n;
    }
    // Bars are rects with a fill-opacity; the background rect has none.
    for (std::size_t p = doc.find("<rect"); p != std::string::npos; p = doc.find("<rect", p + 1))
        if (doc.substr(p, doc.find('>', p) - p).find("fill-opacity") != std::string::npos) ++n;
    return n;
}

ItemBank small_truth() {
    return ItemBank({{1, {0.862, -1.063, 0.203}, ItemRole::calibration},
                     {2, {1.320, -0.549, 0.195}, ItemRole::calibration},
                     {3, {1.220, -0.067, 0.155}, ItemRole::calibration},
                     {4, {2.173, 0.454, 0.107}, ItemRole::calibration}});
}

std::vector<ReplicateResult> identical_arms(const ItemBank& truth, std::size_t s_count) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z(0.0, 0.1);
    std::vector<ReplicateResult> reps(s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
        reps[s].replicate = s;
        std::size_t pos = 0;
        for (const auto& item : truth.items()) {
            ItemFit fit;
            fit.converged = true;
            fit.status = FitStatus::converged;
            fit.estimate = {item.params.a + z(gen), item.params.b + z(gen), item.params.c + 0.2 * z(gen)};
            reps[s].estimates.push_back({item.id, 0, pos, DesignArm::optimal, fit});
            reps[s].estimates.push_back({item.id, 0, pos, DesignArm::random, fit});
            ++pos;
        }
    }
    return reps;
}

}  // namespace

TEST_CASE("the checker itself") {
    std::string why;
    CHECK(well_formed("<?xml version=\"1.0\"?>\n<svg><g><rect x=\"1\"/></g></svg>", why));
    CHECK_FALSE(well_formed("<svg><g></svg>", why));
    CHECK_FALSE(well_formed("<svg><text>a & b</text></svg>", why));
    CHECK_FALSE(well_formed("<svg x=\"1></svg>", why));
}

TEST_CASE("svg helpers") {
    CHECK(svg::escape("a<b & \"c\"") == "a&lt;b &amp; &quot;c&quot;");
    CHECK(svg::fixed(-0.0001, 2) == "0.00");
    CHECK(svg::fixed(1.005, 1) == "1.0");
    CHECK_THROWS(svg::Plot("t", "x", "y", 1.0, 1.0, 0.0, 1.0));
}

TEST_CASE("identical arms give efficiencies of one") {
    ReportInput input;
    input.config.sim_case = SimCase::II;
    input.config.blocks = 1;
    input.config.block_size = 4;
    input.truth = small_truth();
    input.replicates = identical_arms(input.truth, 20);
    input.cohort = {-1.5, -0.5, 0.0, 0.4, 1.2};
    input.bootstrap_resamples = 200;

    const Report report = build_report(input);
    REQUIRE(report.per_item.size() == 4);
    for (const auto& e : report.per_item) {
        CHECK(e.re_d == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(e.re_cc == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(e.re_a == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(report.overall.re_d == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(report.re_d_interval);
    CHECK(report.re_d_interval->lower == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.replicates == 20);
    CHECK(report.excluded == 0);

    const fs::path dir = fs::temp_directory_path() / "calibopt_report_test";
    fs::remove_all(dir);
    const auto written = write_report(report, input, dir);
    const std::string table = io::read_file(dir / "item_table.csv");
    CHECK(table.rfind("Block,Pos,RE_D,RE_CC,RE_A,a,b,c,Item\n", 0) == 0);
    CHECK(table.find("1,1,1,1,1,0.862,-1.063,0.203,1\n") != std::string::npos);
    std::size_t svgs = 0;
    for (const auto& name : written) {
        if (!name.ends_with(".svg")) continue;
        ++svgs;
        const std::string doc = io::read_file(dir / name);
        std::string why;
        CHECK_MESSAGE(well_formed(doc, why), name << ": " << why);
        CHECK_MESSAGE(plotted_elements(doc) > 0, name);
        fs::path sidecar = dir / name;
        CHECK(fs::exists(sidecar.replace_extension(".csv")));
    }
    CHECK(svgs >= 3);
    fs::remove_all(dir);
}

TEST_CASE("a failed fit is excluded from both arms") {
    ReportInput input;
    input.config.blocks = 1;
    input.config.block_size = 4;
    input.truth = small_truth();
    input.replicates = identical_arms(input.truth, 10);
    input.replicates[3].estimates[1].fit.converged = false;
    input.cohort = {0.0};
    input.bootstrap_resamples = 0;
    const Report report = build_report(input);
    CHECK(report.excluded == 1);
    CHECK_FALSE(report.re_d_interval);
    CHECK(overall_csv(report).find(",4,10,1\n") != std::string::npos);
}

TEST_CASE("case I report reproduces the theoretical overall efficiency") {
    ReportInput input;
    input.config.sim_case = SimCase::I;
    input.truth = io::read_bank_csv(std::string(CALIBOPT_DATA_DIR) + "/calibration_true.csv", ItemRole::calibration);
    const Report report = build_report(input);
    CHECK(report.theoretical);
    CHECK(report.per_item.size() == 40);
    CHECK(std::abs(report.overall.re_d - 1.155) <= 0.01);
    CHECK(report.rules.size() == 10);

    const fs::path dir = fs::temp_directory_path() / "calibopt_report_case1";
    fs::remove_all(dir);
    for (const auto& name : write_report(report, input, dir)) {
        if (!name.ends_with(".svg")) continue;
        const std::string doc = io::read_file(dir / name);
        std::string why;
        CHECK_MESSAGE(well_formed(doc, why), name << ": " << why);
        CHECK_MESSAGE(plotted_elements(doc) > 0, name);
    }
    fs::remove_all(dir);
}
