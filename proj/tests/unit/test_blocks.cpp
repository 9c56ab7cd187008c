#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "calibopt/blocks.hpp"
#include "calibopt/errors.hpp"
#include "calibopt/io.hpp"

using namespace calib;

namespace {

ItemBank bundled() {
    return io::read_bank_csv(std::string(CALIBOPT_DATA_DIR) + "/calibration_true.csv", ItemRole::calibration);
}

std::vector<int> ids(const Block& block) {
    std::vector<int> out;
    for (const auto& it : block.items()) out.push_back(it.id);
    return out;
}

}  // namespace

TEST_CASE("a single block holds every item in ascending difficulty") {
    const ItemBank bank = bundled();
    const BlockSet set = build_blocks(bank, 1);
    REQUIRE(set.blocks.size() == 1);
    const Block& block = set.blocks.front();
    CHECK(block.size() == 40);
    for (std::size_t i = 1; i < block.size(); ++i) CHECK(block[i - 1].params.b <= block[i].params.b);
}

TEST_CASE("the bundled bank deals into the reference blocks") {
    const BlockSet set = build_blocks(bundled(), 10);
    REQUIRE(set.blocks.size() == 10);
    CHECK(ids(set.blocks[0]) == std::vector<int>{39, 8, 38, 40});
    const std::vector<int> first_positions{39, 31, 36, 15, 20, 27, 3, 32, 21, 22};
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(set.blocks[k].id() == static_cast<int>(k + 1));
        CHECK(set.blocks[k][0].id == first_positions[k]);
    }
    // Items 24 and 26 share b = 0.315; the reference layout places 26 in block 7.
    CHECK(set.locate(26)->first == 6);
    CHECK(set.locate(24)->first == 7);
}

TEST_CASE("eight items with difficulties one to eight") {
    std::vector<CalibrationItem> items;
    for (int i = 1; i <= 8; ++i) items.push_back({i, {1.0, static_cast<double>(i), 0.2}});
    const BlockSet set = build_blocks(items, 4);
    REQUIRE(set.blocks.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(ids(set.blocks[static_cast<std::size_t>(k)]) == std::vector<int>{k + 1, k + 5});
}

TEST_CASE("l must divide the item count") {
    CHECK_THROWS_AS(build_blocks(bundled(), 3), IndivisibleBank);
    CHECK_THROWS_AS(build_blocks(bundled(), 0), IndivisibleBank);
    CHECK_THROWS_AS(build_blocks(bundled(), 41), IndivisibleBank);
}

TEST_CASE("blocks partition the bank and keep items l ranks apart") {
    const ItemBank bank = bundled();
    std::vector<BankItem> sorted = bank.items();
    std::sort(sorted.begin(), sorted.end(), [](const BankItem& x, const BankItem& y) {
        return x.params.b < y.params.b || (x.params.b == y.params.b && x.id > y.id);
    });
    for (std::size_t l : {1u, 2u, 4u, 5u, 8u, 10u, 20u, 40u}) {
        const BlockSet set = build_blocks(bank, l);
        CHECK(set.item_count() == 40);
        std::set<int> seen;
        for (const auto& block : set.blocks) {
            CHECK(block.size() == 40 / l);
            for (const auto& it : block.items()) CHECK(seen.insert(it.id).second);
            for (std::size_t i = 1; i < block.size(); ++i) {
                const auto rank = [&](int id) {
                    return std::find_if(sorted.begin(), sorted.end(), [&](const BankItem& b) { return b.id == id; }) -
                           sorted.begin();
                };
                CHECK(rank(block[i].id) - rank(block[i - 1].id) == static_cast<std::ptrdiff_t>(l));
            }
        }
        CHECK(seen.size() == 40);
    }
}

TEST_CASE("operational items are not dealt") {
    std::vector<BankItem> items = bundled().items();
    items.push_back({100, {1.0, 0.0, 0.2}, ItemRole::operational});
    const BlockSet set = build_blocks(ItemBank(items), 10);
    CHECK(set.item_count() == 40);
    CHECK_FALSE(set.locate(100).has_value());
}

TEST_CASE("bank invariants") {
    CHECK_THROWS(ItemBank({{1, {1.0, 0.0, 0.2}}, {1, {1.0, 0.5, 0.2}}}));
    CHECK_THROWS(ItemBank(std::vector<BankItem>{{1, {-1.0, 0.0, 0.2}}}));
    const ItemBank a(std::vector<BankItem>{{1, {1.0, 0.0, 0.2}}});
    CHECK_THROWS(a.merged(a));
    CHECK(a.find(1)->params.c == 0.2);
    CHECK_FALSE(a.find(2).has_value());
}
