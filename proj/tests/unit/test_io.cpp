#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "calibopt/errors.hpp"
#include "calibopt/io.hpp"

using namespace calib;
namespace fs = std::filesystem;

namespace {

std::vector<ReplicateResult> sample_replicates() {
    std::vector<ReplicateResult> reps(2);
    for (std::size_t s = 0; s < 2; ++s) {
        reps[s].replicate = s;
        reps[s].seed = derive_seed(99, s);
        for (std::size_t k = 0; k < 3; ++k)
            for (DesignArm arm : {DesignArm::optimal, DesignArm::random}) {
                ItemEstimate e;
                e.item_id = static_cast<int>(10 + k);
                e.block = k / 2;
                e.position = k % 2;
                e.design = arm;
                e.fit.estimate = {1.0 / 3.0 + static_cast<double>(s), -0.1 * static_cast<double>(k), 0.123456789012345};
                e.fit.converged = k != 2;
                e.fit.status = k != 2 ? FitStatus::converged : FitStatus::not_converged;
                e.fit.at_boundary = k == 1;
                e.fit.log_likelihood = -1234.5678901234567;
                e.fit.n_responses = 321 + k;
                e.fit.iterations = 7;
                reps[s].estimates.push_back(e);
            }
    }
    return reps;
}

}  // namespace

TEST_CASE("doubles survive formatting exactly") {
    for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e17, 0.1, 123456.789, std::numeric_limits<double>::max()})
        CHECK(io::parse_double(io::format_double(v), "v") == v);
    CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(std::isinf(io::parse_double("-inf", "v")));
    CHECK_THROWS_AS(io::parse_double("1.5x", "v"), InputError);
    CHECK_THROWS_AS(io::parse_double("", "v"), InputError);
    CHECK_THROWS_AS(io::parse_integer("3.0", "n"), InputError);
}

TEST_CASE("bank CSV") {
    const ItemBank bank = io::parse_bank_csv("item_id,a,b,c\n3,1.2,-0.5,0.2\n7,0.8,1.1,0.15\n", ItemRole::calibration);
    REQUIRE(bank.size() == 2);
    CHECK(bank.items()[1].id == 7);
    CHECK(bank.items()[1].params.b == 1.1);
    CHECK(io::parse_bank_csv(io::bank_csv(bank), ItemRole::calibration).items() == bank.items());

    CHECK_THROWS_AS(io::parse_bank_csv("", ItemRole::calibration), InputError);
    CHECK_THROWS_AS(io::parse_bank_csv("item_id,a,b,c\n", ItemRole::calibration), InputError);
    CHECK_THROWS_AS(io::parse_bank_csv("item_id,a,b,c,d\n1,1,0,0.2,5\n", ItemRole::calibration), InputError);
    CHECK_THROWS_AS(io::parse_bank_csv("item_id,a,b,c\n1,-1,0,0.2\n", ItemRole::calibration), InputError);
    CHECK_THROWS_AS(io::parse_bank_csv("item_id,a,b,c\n1,1,0,0.2\n1,1,0,0.2\n", ItemRole::calibration), InputError);
    CHECK_THROWS_AS(io::parse_bank_csv("item_id,a,b,c\n1,1,0\n", ItemRole::calibration), InputError);
}

TEST_CASE("rules JSON round trip") {
    AllocationRules r;
    r.block_id = 4;
    r.items = {{11, {{-std::numeric_limits<double>::infinity(), -0.3}, {0.2, 0.7}}},
               {12, {{-0.295, 0.195}, {0.705, std::numeric_limits<double>::infinity()}}}};
    const std::vector<AllocationRules> rules{r};
    const std::string text = io::rules_json(rules);
    CHECK(io::parse_rules_json(text) == rules);
    CHECK(io::rules_json(io::parse_rules_json(text)) == text);
    CHECK_THROWS_AS(io::parse_rules_json("{\"block_id\": 1}"), InputError);
    CHECK_THROWS_AS(io::parse_rules_json("[{\"block_id\":1,\"items\":[{\"item_id\":1,\"intervals\":[[0,1]]}]}]"),
                    InputError);
}

TEST_CASE("blocks JSON round trip") {
    BlockSet set;
    set.blocks.emplace_back(std::vector<CalibrationItem>{{5, {1.1, -0.2, 0.2}}, {2, {0.9, 0.4, 0.1}}}, 1);
    set.blocks.emplace_back(std::vector<CalibrationItem>{{8, {1.3, 0.0, 0.25}}, {1, {2.0, 1.5, 0.05}}}, 2);
    const BlockSet back = io::parse_blocks_json(io::blocks_json(set));
    REQUIRE(back.blocks.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back.blocks[k].id() == set.blocks[k].id());
        CHECK(back.blocks[k].items() == set.blocks[k].items());
    }
}

TEST_CASE("config JSON") {
    const io::ConfigFile f = io::parse_config_json(
        R"({"case":"IV","N":8000,"S":200,"l":10,"m":4,"seed":12345678901234,"n_pre":150,
            "grid":{"points":801},"fit":{"start":{"a":1.1,"b":0.0,"c":0.15}},"bank":"banks/cal.csv"})",
        "/tmp/cfg");
    CHECK(f.sim.sim_case == SimCase::IV);
    CHECK(f.sim.examinees == 8000);
    CHECK(f.sim.replicates == 200);
    CHECK(f.sim.seed == 12345678901234ULL);
    CHECK(f.sim.n_pre == 150);
    CHECK(f.sim.grid.points == 801);
    CHECK(f.sim.grid.lo == -4.0);
    CHECK(f.sim.fit.start.a == 1.1);
    CHECK(*f.bank == fs::path("/tmp/cfg/banks/cal.csv"));

    const io::ConfigFile again = io::parse_config_json(io::config_json(f.sim));
    CHECK(io::config_json(again.sim) == io::config_json(f.sim));

    CHECK_THROWS_AS(io::parse_config_json(R"({"case":"II","bogus":1})"), InputError);
    CHECK_THROWS_AS(io::parse_config_json(R"({"case":"II","grid":{"pts":3}})"), InputError);
    CHECK_THROWS_AS(io::parse_config_json(R"({"N":-5})"), InputError);
    CHECK_THROWS_AS(io::parse_config_json(R"({"N":2.5})"), InputError);
    CHECK_THROWS_AS(io::parse_config_json(R"({"case":"VII"})"), InputError);
    CHECK_THROWS_AS(io::parse_config_json("not json"), InputError);
}

TEST_CASE("estimates CSV round trip") {
    const auto reps = sample_replicates();
    const std::string text = io::estimates_csv(reps);
    CHECK(text.rfind("replicate,seed,item_id,block,position,design,a,b,c,converged,status,at_boundary,"
                     "log_likelihood,n_responses,iterations\n", 0) == 0);
    const auto back = io::parse_estimates_csv(text);
    REQUIRE(back.size() == reps.size());
    for (std::size_t s = 0; s < reps.size(); ++s) {
        CHECK(back[s].replicate == reps[s].replicate);
        CHECK(back[s].seed == reps[s].seed);
        REQUIRE(back[s].estimates.size() == reps[s].estimates.size());
        for (std::size_t k = 0; k < reps[s].estimates.size(); ++k) {
            const auto &x = back[s].estimates[k], &y = reps[s].estimates[k];
            CHECK(x.item_id == y.item_id);
            CHECK(x.block == y.block);
            CHECK(x.position == y.position);
            CHECK(x.design == y.design);
            CHECK(x.fit.estimate == y.fit.estimate);
            CHECK(x.fit.converged == y.fit.converged);
            CHECK(x.fit.status == y.fit.status);
            CHECK(x.fit.at_boundary == y.fit.at_boundary);
            CHECK(x.fit.log_likelihood == y.fit.log_likelihood);
            CHECK(x.fit.n_responses == y.fit.n_responses);
            CHECK(x.fit.iterations == y.fit.iterations);
        }
    }
    CHECK(io::estimates_csv(back) == text);
    CHECK_THROWS_AS(io::parse_estimates_csv("replicate,seed\n1,2\n"), InputError);
}

TEST_CASE("abilities CSV round trip") {
    AbilitySnapshot snap{{0.1, -1.0 / 3.0}, {0.2, -0.4}, {0.674489750196, -0.674489750196}};
    const AbilitySnapshot back = io::parse_abilities_csv(io::abilities_csv(snap));
    CHECK(back.truth == snap.truth);
    CHECK(back.raw == snap.raw);
    CHECK(back.normalized == snap.normalized);
}

TEST_CASE("manifest round trip") {
    io::RunManifest m;
    m.config.sim_case = SimCase::III;
    m.config.seed = 4;
    m.inputs = {{"config", std::string(64, 'a')}};
    m.outputs = {{"estimates.csv", std::string(64, 'b')}};
    m.timings = {{"design", 1.25}};
    const io::RunManifest back = io::parse_manifest_json(io::manifest_json(m));
    CHECK(back.config.sim_case == SimCase::III);
    CHECK(back.config.seed == 4);
    CHECK(back.inputs[0].sha256 == m.inputs[0].sha256);
    CHECK(back.outputs[0].name == "estimates.csv");
    CHECK(back.timings[0].seconds == 1.25);
    CHECK(back.version == io::kVersion);
}

TEST_CASE("sha256 of a known string") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("files") {
    const fs::path dir = fs::temp_directory_path() / "calibopt_io_test" / "nested";
    fs::remove_all(dir.parent_path());
    io::write_file(dir / "x.txt", "hello\n");
    CHECK(io::read_file(dir / "x.txt") == "hello\n");
    CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), InputError);
    fs::remove_all(dir.parent_path());
}
