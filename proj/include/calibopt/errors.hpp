#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace calib {

// Malformed input files, configs, or arguments. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An item's information matrix has (numerically) zero determinant.
class SingularInformation : public std::runtime_error {
public:
    SingularInformation(std::size_t item_index, int item_id)
        : std::runtime_error("singular information matrix for item " + std::to_string(item_id) +
                             " (position " + std::to_string(item_index + 1) + ")"),
          item_index_(item_index), item_id_(item_id) {}

    std::size_t item_index() const { return item_index_; }
    int item_id() const { return item_id_; }

private:
    std::size_t item_index_;
    int item_id_;
};

class IndivisibleBank : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateDenominator : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NonPositiveEfficiency : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace calib
