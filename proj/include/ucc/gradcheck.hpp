#pragma once

#include "ucc/errors.hpp"

#include <functional>
#include <vector>

namespace ucc {

/// Central finite-difference check of an analytic gradient.
/// Returns max over coordinates of |analytic - central| / max(1, |central|).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& params, const std::vector<double>& analytic,
                  double eps);

}  // namespace ucc
