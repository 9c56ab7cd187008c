#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "calibopt/design.hpp"

namespace calib {

enum class ItemRole { operational, calibration };

struct BankItem {
    int id = 0;
    ItemParams params;
    ItemRole role = ItemRole::calibration;

    bool operator==(const BankItem&) const = default;
};

// Item ids are unique and every parameter triple is valid.
class ItemBank {
public:
    ItemBank() = default;
    explicit ItemBank(std::vector<BankItem> items);

    const std::vector<BankItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    std::vector<BankItem> with_role(ItemRole role) const;
    std::optional<BankItem> find(int id) const;

    // Concatenation; ids must stay unique.
    ItemBank merged(const ItemBank& other) const;

private:
    std::vector<BankItem> items_;
};

struct BlockSet {
    std::vector<Block> blocks;

    std::size_t item_count() const;
    // (block index, position) of an item, both 0-based.
    std::optional<std::pair<std::size_t, std::size_t>> locate(int item_id) const;
};

// Sorts calibration items by difficulty (ties: higher id first) and deals them
// round-robin into l blocks. Throws IndivisibleBank when l does not divide the
// calibration item count.
BlockSet build_blocks(const ItemBank& bank, std::size_t l);

// Same deal over explicit items, e.g. pre-estimated parameters.
BlockSet build_blocks(std::vector<CalibrationItem> items, std::size_t l);

}  // namespace calib
