#include "calibopt/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <type_traits>

#include "calibopt/errors.hpp"
#include "json.hpp"

namespace calib::io {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != end)
        throw InputError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    return v;
}

long long parse_integer(std::string_view text, std::string_view what) {
    long long v = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != end)
        throw InputError("cannot parse integer " + std::string(what) + " from '" + std::string(text) + "'");
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            fields.emplace_back(field);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

namespace {

void expect_header(const std::vector<std::string>& got, std::span<const char* const> want, std::string_view what) {
    bool ok = got.size() == want.size();
    for (std::size_t i = 0; ok && i < want.size(); ++i) ok = got[i] == want[i];
    if (!ok) {
        std::string expected;
        for (const char* w : want) expected += (expected.empty() ? "" : ",") + std::string(w);
        throw InputError(std::string(what) + ": header must be '" + expected + "'");
    }
}

void expect_width(const std::vector<std::string>& row, std::size_t width, std::size_t line, std::string_view what) {
    if (row.size() != width)
        throw InputError(std::string(what) + ": row " + std::to_string(line) + " has " + std::to_string(row.size()) +
                         " fields, expected " + std::to_string(width));
}

int parse_id(std::string_view text, std::string_view what) {
    const long long v = parse_integer(text, what);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw InputError(std::string(what) + " out of range");
    return static_cast<int>(v);
}

Json interval_bound(double v) {
    if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
    return Json(v);
}

double bound_from(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "-inf" || s == "+inf") return parse_double(s, "interval bound");
        throw InputError("interval bound '" + s + "' is not a number");
    }
    if (!j.is_number()) throw InputError("interval bound must be a number or \"inf\"/\"-inf\"");
    return j.get<double>();
}

Json parse_json(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view what) {
    if (!obj.is_object()) throw InputError(std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw InputError("unknown key '" + key + "' in " + std::string(what));
    }
}

template <class T>
T field(const Json& obj, const char* key, std::string_view what) {
    if (!obj.contains(key)) throw InputError(std::string(what) + ": missing '" + key + "'");
    if constexpr (std::is_unsigned_v<T>) {
        if (!obj.at(key).is_number_unsigned())
            throw InputError(std::string(what) + ": '" + key + "' must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
        if (!obj.at(key).is_number_integer()) throw InputError(std::string(what) + ": '" + key + "' must be an integer");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InputError(std::string(what) + ": bad '" + key + "': " + e.what());
    }
}

template <class T>
void optional_field(const Json& obj, const char* key, T& out, std::string_view what) {
    if (obj.contains(key)) out = field<T>(obj, key, what);
}

Json params_json(const ItemParams& p) { return Json{{"a", p.a}, {"b", p.b}, {"c", p.c}}; }

ItemParams params_from(const Json& j, std::string_view what) {
    check_keys(j, {"a", "b", "c"}, what);
    ItemParams p;
    optional_field(j, "a", p.a, what);
    optional_field(j, "b", p.b, what);
    optional_field(j, "c", p.c, what);
    return p;
}

}  // namespace

ItemBank parse_bank_csv(std::string_view text, ItemRole role) {
    static constexpr const char* header[] = {"item_id", "a", "b", "c"};
    const auto rows = parse_csv(text);
    if (rows.empty()) throw InputError("item bank: file is empty");
    expect_header(rows.front(), header, "item bank");
    if (rows.size() == 1) throw InputError("item bank: no items");
    std::vector<BankItem> items;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        expect_width(rows[r], 4, r + 1, "item bank");
        BankItem it;
        it.id = parse_id(rows[r][0], "item_id");
        it.params = {parse_double(rows[r][1], "a"), parse_double(rows[r][2], "b"), parse_double(rows[r][3], "c")};
        it.role = role;
        if (!it.params.valid()) throw InputError("item bank: invalid parameters for item " + std::to_string(it.id));
        items.push_back(it);
    }
    try {
        return ItemBank(std::move(items));
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("item bank: ") + e.what());
    }
}

ItemBank read_bank_csv(const std::filesystem::path& path, ItemRole role) {
    try {
        return parse_bank_csv(read_file(path), role);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::string bank_csv(const ItemBank& bank) {
    std::string out = "item_id,a,b,c\n";
    for (const auto& it : bank.items())
        out += std::to_string(it.id) + "," + format_double(it.params.a) + "," + format_double(it.params.b) + "," +
               format_double(it.params.c) + "\n";
    return out;
}

std::string rules_json(std::span<const AllocationRules> rules) {
    Json out = Json::array();
    for (const auto& r : rules) {
        Json items = Json::array();
        for (const auto& it : r.items) {
            Json iv = Json::array();
            for (const auto& i : it.intervals) iv.push_back(Json::array({interval_bound(i.lo), interval_bound(i.hi)}));
            items.push_back(Json{{"item_id", it.item_id}, {"intervals", iv}});
        }
        out.push_back(Json{{"block_id", r.block_id}, {"items", items}});
    }
    return out.dump(2) + "\n";
}

std::vector<AllocationRules> parse_rules_json(std::string_view text) {
    const Json doc = parse_json(text, "rules");
    if (!doc.is_array()) throw InputError("rules: top level must be an array");
    std::vector<AllocationRules> out;
    for (const auto& jr : doc) {
        check_keys(jr, {"block_id", "items"}, "rules block");
        AllocationRules r;
        r.block_id = field<int>(jr, "block_id", "rules block");
        const Json& items = jr.at("items");
        if (!items.is_array()) throw InputError("rules: 'items' must be an array");
        for (const auto& ji : items) {
            check_keys(ji, {"item_id", "intervals"}, "rules item");
            ItemIntervals it;
            it.item_id = field<int>(ji, "item_id", "rules item");
            const Json& ivs = ji.at("intervals");
            if (!ivs.is_array()) throw InputError("rules: 'intervals' must be an array");
            for (const auto& jiv : ivs) {
                if (!jiv.is_array() || jiv.size() != 2) throw InputError("rules: an interval is a [lo, hi] pair");
                it.intervals.push_back({bound_from(jiv[0]), bound_from(jiv[1])});
            }
            r.items.push_back(std::move(it));
        }
        try {
            r.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("rules: ") + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string blocks_json(const BlockSet& blocks) {
    Json arr = Json::array();
    for (const auto& b : blocks.blocks) {
        Json ids = Json::array(), items = Json::array();
        for (const auto& it : b.items()) {
            ids.push_back(it.id);
            items.push_back(Json{{"item_id", it.id}, {"a", it.params.a}, {"b", it.params.b}, {"c", it.params.c}});
        }
        // Parameters travel with the ids so that blocks dealt from estimates
        // can be restored without the bank they came from.
        arr.push_back(Json{{"block_id", b.id()}, {"item_ids", ids}, {"items", items}});
    }
    return Json{{"blocks", arr}}.dump(2) + "\n";
}

BlockSet parse_blocks_json(std::string_view text) {
    const Json doc = parse_json(text, "blocks");
    check_keys(doc, {"blocks"}, "blocks file");
    BlockSet out;
    for (const auto& jb : doc.at("blocks")) {
        check_keys(jb, {"block_id", "item_ids", "items"}, "block");
        const auto ids = field<std::vector<int>>(jb, "item_ids", "block");
        std::vector<CalibrationItem> items;
        for (const auto& ji : jb.at("items")) {
            check_keys(ji, {"item_id", "a", "b", "c"}, "block item");
            Json p = ji;
            p.erase("item_id");
            items.push_back({field<int>(ji, "item_id", "block item"), params_from(p, "block item")});
        }
        if (ids.size() != items.size() ||
            !std::equal(ids.begin(), ids.end(), items.begin(), [](int id, const CalibrationItem& it) { return id == it.id; }))
            throw InputError("blocks: item_ids disagree with the listed items");
        try {
            out.blocks.emplace_back(std::move(items), field<int>(jb, "block_id", "block"));
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("blocks: ") + e.what());
        }
    }
    return out;
}

namespace {

Json grid_json(const GridOptions& g) { return Json{{"lo", g.lo}, {"hi", g.hi}, {"points", g.points}}; }

Json sim_json(const SimConfig& c) {
    return Json{
        {"case", to_string(c.sim_case)},
        {"design", to_string(c.design)},
        {"N", c.examinees},
        {"S", c.replicates},
        {"l", c.blocks},
        {"m", c.block_size},
        {"seed", c.seed},
        {"n_pre", c.n_pre},
        {"threads", c.threads},
        {"grid", grid_json(c.grid)},
        {"exchange", Json{{"tol", c.exchange.tol}, {"max_iters", c.exchange.max_iters}, {"damping", c.exchange.damping}}},
        {"fit",
         Json{{"grad_tol", c.fit.grad_tol},
              {"max_iters", c.fit.max_iters},
              {"start", params_json(c.fit.start)},
              {"lower", params_json(c.fit.box.lower)},
              {"upper", params_json(c.fit.box.upper)}}},
        {"prior",
         Json{{"log_a_sd", c.prior.log_a_sd},
              {"b_mean", c.prior.b_mean},
              {"b_sd", c.prior.b_sd},
              {"c_alpha", c.prior.c_alpha},
              {"c_beta", c.prior.c_beta}}},
    };
}

SimConfig sim_from(const Json& j, std::initializer_list<std::string_view> extra_keys) {
    std::vector<std::string_view> allowed = {"case", "design", "N", "S", "l", "m", "seed", "n_pre",
                                             "threads", "grid", "exchange", "fit", "prior"};
    allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
    if (!j.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError("unknown key '" + key + "' in config");

    const char* what = "config";
    SimConfig c;
    if (j.contains("case")) c.sim_case = parse_case(field<std::string>(j, "case", what));
    if (j.contains("design")) c.design = parse_arm(field<std::string>(j, "design", what));
    optional_field(j, "N", c.examinees, what);
    optional_field(j, "S", c.replicates, what);
    optional_field(j, "l", c.blocks, what);
    optional_field(j, "m", c.block_size, what);
    optional_field(j, "seed", c.seed, what);
    optional_field(j, "n_pre", c.n_pre, what);
    optional_field(j, "threads", c.threads, what);
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        check_keys(g, {"lo", "hi", "points"}, "config grid");
        optional_field(g, "lo", c.grid.lo, what);
        optional_field(g, "hi", c.grid.hi, what);
        optional_field(g, "points", c.grid.points, what);
    }
    if (j.contains("exchange")) {
        const Json& e = j.at("exchange");
        check_keys(e, {"tol", "max_iters", "damping"}, "config exchange");
        optional_field(e, "tol", c.exchange.tol, what);
        optional_field(e, "max_iters", c.exchange.max_iters, what);
        optional_field(e, "damping", c.exchange.damping, what);
    }
    if (j.contains("fit")) {
        const Json& f = j.at("fit");
        check_keys(f, {"grad_tol", "max_iters", "start", "lower", "upper"}, "config fit");
        optional_field(f, "grad_tol", c.fit.grad_tol, what);
        optional_field(f, "max_iters", c.fit.max_iters, what);
        if (f.contains("start")) c.fit.start = params_from(f.at("start"), "config fit start");
        if (f.contains("lower")) c.fit.box.lower = params_from(f.at("lower"), "config fit lower");
        if (f.contains("upper")) c.fit.box.upper = params_from(f.at("upper"), "config fit upper");
    }
    if (j.contains("prior")) {
        const Json& p = j.at("prior");
        check_keys(p, {"log_a_sd", "b_mean", "b_sd", "c_alpha", "c_beta"}, "config prior");
        optional_field(p, "log_a_sd", c.prior.log_a_sd, what);
        optional_field(p, "b_mean", c.prior.b_mean, what);
        optional_field(p, "b_sd", c.prior.b_sd, what);
        optional_field(p, "c_alpha", c.prior.c_alpha, what);
        optional_field(p, "c_beta", c.prior.c_beta, what);
    }
    return c;
}

std::vector<FileDigest> digests_from(const Json& j) {
    std::vector<FileDigest> out;
    if (!j.is_array()) throw InputError("manifest digests must be an array");
    for (const auto& d : j) out.push_back({field<std::string>(d, "name", "digest"), field<std::string>(d, "sha256", "digest")});
    return out;
}

}  // namespace

ConfigFile parse_config_json(std::string_view text, const std::filesystem::path& base_dir) {
    const Json doc = parse_json(text, "config");
    ConfigFile out;
    out.sim = sim_from(doc, {"bank", "operational_bank"});
    auto resolve = [&](const char* key) -> std::optional<std::filesystem::path> {
        if (!doc.contains(key)) return std::nullopt;
        std::filesystem::path p = field<std::string>(doc, key, "config");
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    out.bank = resolve("bank");
    out.operational_bank = resolve("operational_bank");
    return out;
}

ConfigFile read_config(const std::filesystem::path& path) {
    try {
        return parse_config_json(read_file(path), path.parent_path());
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::string config_json(const SimConfig& config) { return sim_json(config).dump(2) + "\n"; }

namespace {
constexpr const char* kEstimateHeader[] = {"replicate", "seed",      "item_id",        "block",       "position",
                                           "design",    "a",         "b",              "c",           "converged",
                                           "status",    "at_boundary", "log_likelihood", "n_responses", "iterations"};

FitStatus parse_status(const std::string& s) {
    if (s == "converged") return FitStatus::converged;
    if (s == "not_converged") return FitStatus::not_converged;
    if (s == "degenerate_data") return FitStatus::degenerate_data;
    throw InputError("unknown fit status '" + s + "'");
}

bool parse_flag(const std::string& s, std::string_view what) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw InputError(std::string(what) + " must be 0 or 1");
}
}  // namespace

std::string estimates_csv(std::span<const ReplicateResult> replicates) {
    std::string out;
    for (const char* h : kEstimateHeader) out += (out.empty() ? "" : ",") + std::string(h);
    out += "\n";
    for (const auto& rep : replicates) {
        for (const auto& e : rep.estimates) {
            const ItemFit& f = e.fit;
            out += std::to_string(rep.replicate) + "," + std::to_string(rep.seed) + "," + std::to_string(e.item_id) +
                   "," + std::to_string(e.block + 1) + "," + std::to_string(e.position + 1) + "," +
                   to_string(e.design) + "," + format_double(f.estimate.a) + "," + format_double(f.estimate.b) + "," +
                   format_double(f.estimate.c) + "," + (f.converged ? "1" : "0") + "," + to_string(f.status) + "," +
                   (f.at_boundary ? "1" : "0") + "," + format_double(f.log_likelihood) + "," +
                   std::to_string(f.n_responses) + "," + std::to_string(f.iterations) + "\n";
        }
    }
    return out;
}

std::vector<ReplicateResult> parse_estimates_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw InputError("estimates: file is empty");
    expect_header(rows.front(), kEstimateHeader, "estimates");
    std::vector<ReplicateResult> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        expect_width(row, std::size(kEstimateHeader), r + 1, "estimates");
        const long long rep = parse_integer(row[0], "replicate");
        const long long block = parse_integer(row[3], "block");
        const long long pos = parse_integer(row[4], "position");
        if (rep < 0 || block < 1 || pos < 1) throw InputError("estimates: row " + std::to_string(r + 1) + " out of range");
        std::uint64_t seed = 0;
        const auto res = std::from_chars(row[1].data(), row[1].data() + row[1].size(), seed);
        if (res.ec != std::errc{} || res.ptr != row[1].data() + row[1].size()) throw InputError("estimates: bad seed");
        if (out.empty() || out.back().replicate != static_cast<std::size_t>(rep)) {
            out.push_back({static_cast<std::size_t>(rep), seed, {}});
        }
        ItemEstimate e;
        e.item_id = parse_id(row[2], "item_id");
        e.block = static_cast<std::size_t>(block - 1);
        e.position = static_cast<std::size_t>(pos - 1);
        e.design = parse_arm(row[5]);
        if (e.design == DesignArm::both) throw InputError("estimates: design must be optimal or random");
        e.fit.estimate = {parse_double(row[6], "a"), parse_double(row[7], "b"), parse_double(row[8], "c")};
        e.fit.converged = parse_flag(row[9], "converged");
        e.fit.status = parse_status(row[10]);
        e.fit.at_boundary = parse_flag(row[11], "at_boundary");
        e.fit.log_likelihood = parse_double(row[12], "log_likelihood");
        e.fit.objective = e.fit.log_likelihood;
        e.fit.n_responses = static_cast<std::size_t>(parse_integer(row[13], "n_responses"));
        e.fit.iterations = static_cast<int>(parse_integer(row[14], "iterations"));
        out.back().estimates.push_back(e);
    }
    return out;
}

std::string efficiency_table_csv(std::span<const ItemEfficiency> rows, const ItemBank& truth) {
    std::string out = "Block,Pos,RE_D,RE_CC,RE_A,a,b,c,Item\n";
    for (const auto& e : rows) {
        const auto item = truth.find(e.item_id);
        if (!item) throw InputError("item " + std::to_string(e.item_id) + " missing from the truth bank");
        out += std::to_string(e.block) + "," + std::to_string(e.position) + "," + format_double(e.re_d) + "," +
               format_double(e.re_cc) + "," + format_double(e.re_a) + "," + format_double(item->params.a) + "," +
               format_double(item->params.b) + "," + format_double(item->params.c) + "," + std::to_string(e.item_id) +
               "\n";
    }
    return out;
}

std::string design_summary_csv(const CaseDesign& design) {
    std::string out =
        "block,position,item_id,a,b,c,criterion,equivalence_gap,iterations,converged,reinitializations,"
        "RE_D,RE_CC,RE_A,block_RE_D\n";
    for (std::size_t k = 0; k < design.blocks.blocks.size(); ++k) {
        const Block& b = design.blocks.blocks[k];
        const DesignSummary& s = design.summaries[k];
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto& t = design.theoretical[k][i];
            out += std::to_string(k + 1) + "," + std::to_string(i + 1) + "," + std::to_string(b[i].id) + "," +
                   format_double(b[i].params.a) + "," + format_double(b[i].params.b) + "," +
                   format_double(b[i].params.c) + "," + format_double(s.criterion) + "," +
                   format_double(s.equivalence_gap) + "," + std::to_string(s.iterations) + "," +
                   (s.converged ? "1" : "0") + "," + std::to_string(s.reinitializations) + "," +
                   format_double(t.re_d) + "," + format_double(t.re_cc) + "," + format_double(t.re_a) + "," +
                   format_double(design.block_efficiency[k]) + "\n";
        }
    }
    return out;
}

std::string abilities_csv(const AbilitySnapshot& snapshot) {
    std::string out = "examinee,truth,raw,normalized\n";
    for (std::size_t j = 0; j < snapshot.truth.size(); ++j)
        out += std::to_string(j + 1) + "," + format_double(snapshot.truth[j]) + "," + format_double(snapshot.raw[j]) +
               "," + format_double(snapshot.normalized[j]) + "\n";
    return out;
}

AbilitySnapshot parse_abilities_csv(std::string_view text) {
    static constexpr const char* header[] = {"examinee", "truth", "raw", "normalized"};
    const auto rows = parse_csv(text);
    if (rows.empty()) throw InputError("abilities: file is empty");
    expect_header(rows.front(), header, "abilities");
    AbilitySnapshot s;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        expect_width(rows[r], 4, r + 1, "abilities");
        s.truth.push_back(parse_double(rows[r][1], "truth"));
        s.raw.push_back(parse_double(rows[r][2], "raw"));
        s.normalized.push_back(parse_double(rows[r][3], "normalized"));
    }
    return s;
}

std::string manifest_json(const RunManifest& m) {
    auto digests = [](const std::vector<FileDigest>& ds) {
        Json arr = Json::array();
        for (const auto& d : ds) arr.push_back(Json{{"name", d.name}, {"sha256", d.sha256}});
        return arr;
    };
    Json timings = Json::array();
    for (const auto& t : m.timings) timings.push_back(Json{{"stage", t.stage}, {"seconds", t.seconds}});
    const Json doc{{"tool", "calib-opt"},
                   {"version", m.version},
                   {"seed", m.config.seed},
                   {"config", sim_json(m.config)},
                   {"inputs", digests(m.inputs)},
                   {"outputs", digests(m.outputs)},
                   {"timings", timings}};
    return doc.dump(2) + "\n";
}

RunManifest parse_manifest_json(std::string_view text) {
    const Json doc = parse_json(text, "manifest");
    check_keys(doc, {"tool", "version", "seed", "config", "inputs", "outputs", "timings"}, "manifest");
    RunManifest m;
    m.version = field<std::string>(doc, "version", "manifest");
    m.config = sim_from(doc.at("config"), {});
    if (doc.contains("inputs")) m.inputs = digests_from(doc.at("inputs"));
    if (doc.contains("outputs")) m.outputs = digests_from(doc.at("outputs"));
    if (doc.contains("timings"))
        for (const auto& t : doc.at("timings"))
            m.timings.push_back({field<std::string>(t, "stage", "timing"), field<double>(t, "seconds", "timing")});
    return m;
}

}  // namespace calib::io
