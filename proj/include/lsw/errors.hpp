#pragma once

#include <stdexcept>

namespace lsw {

// Non-finite loss / numeric blow-up during training. CLI maps this to exit 3.
class NumericError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint / corpus / label-space incompatibility. CLI maps this to exit 4.
class CompatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lsw
