#include "ponly/errors.hpp"

#include <string>

namespace ponly {

InfeasiblePoint::InfeasiblePoint(std::size_t row, double linear_predictor)
    : std::runtime_error("exp overflow: linear predictor " +
                         std::to_string(linear_predictor) + " at row " +
                         std::to_string(row)),
      row_(row),
      eta_(linear_predictor) {}

}  // namespace ponly
