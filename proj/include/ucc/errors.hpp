#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ucc {

// Error taxonomy shared across modules. The CLI maps these to exit codes:
// shape/contract/format/empty-bag -> 2, numeric failures -> 3.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyBagError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDiverged : NumericError {
    explicit TrainingDiverged(std::size_t iter)
        : NumericError("training diverged (non-finite loss) at iteration " +
                       std::to_string(iter)),
          iteration(iter) {}
    std::size_t iteration;
};

}  // namespace ucc
