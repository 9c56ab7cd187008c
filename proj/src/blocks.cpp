#include "calibopt/blocks.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "calibopt/errors.hpp"

namespace calib {

ItemBank::ItemBank(std::vector<BankItem> items) : items_(std::move(items)) {
    std::unordered_set<int> ids;
    for (const auto& it : items_) {
        if (!it.params.valid())
            throw std::invalid_argument("invalid parameters for item " + std::to_string(it.id));
        if (!ids.insert(it.id).second)
            throw std::invalid_argument("duplicate item id " + std::to_string(it.id));
    }
}

std::vector<BankItem> ItemBank::with_role(ItemRole role) const {
    std::vector<BankItem> out;
    std::copy_if(items_.begin(), items_.end(), std::back_inserter(out),
                 [role](const BankItem& it) { return it.role == role; });
    return out;
}

std::optional<BankItem> ItemBank::find(int id) const {
    auto it = std::find_if(items_.begin(), items_.end(), [id](const auto& x) { return x.id == id; });
    if (it == items_.end()) return std::nullopt;
    return *it;
}

ItemBank ItemBank::merged(const ItemBank& other) const {
    std::vector<BankItem> all = items_;
    all.insert(all.end(), other.items_.begin(), other.items_.end());
    return ItemBank(std::move(all));
}

std::size_t BlockSet::item_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
}

std::optional<std::pair<std::size_t, std::size_t>> BlockSet::locate(int item_id) const {
    for (std::size_t k = 0; k < blocks.size(); ++k)
        for (std::size_t i = 0; i < blocks[k].size(); ++i)
            if (blocks[k][i].id == item_id) return std::make_pair(k, i);
    return std::nullopt;
}

BlockSet build_blocks(std::vector<CalibrationItem> items, std::size_t l) {
    if (l == 0 || items.empty() || items.size() % l != 0)
        throw IndivisibleBank("cannot split " + std::to_string(items.size()) +
                              " calibration items into " + std::to_string(l) + " equal blocks");
    std::stable_sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
        return x.params.b != y.params.b ? x.params.b < y.params.b : x.id > y.id;
    });
    std::vector<std::vector<CalibrationItem>> dealt(l);
    for (std::size_t r = 0; r < items.size(); ++r) dealt[r % l].push_back(items[r]);
    BlockSet set;
    for (std::size_t k = 0; k < l; ++k) set.blocks.emplace_back(std::move(dealt[k]), static_cast<int>(k + 1));
    return set;
}

BlockSet build_blocks(const ItemBank& bank, std::size_t l) {
    std::vector<CalibrationItem> items;
    for (const auto& it : bank.with_role(ItemRole::calibration)) items.push_back({it.id, it.params});
    return build_blocks(std::move(items), l);
}

}  // namespace calib
