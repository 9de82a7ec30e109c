#include "ucc/gradcheck.hpp"

#include <cmath>
#include <string>

namespace ucc {

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& params, const std::vector<double>& analytic,
                  double eps) {
    if (eps <= 0.0) throw ContractError("grad_check: eps must be positive");
    if (params.size() != analytic.size())
        throw ContractError("grad_check: params and analytic lengths differ");
    std::vector<double> p = params;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + eps;
        const double fp = f(p);
        p[i] = orig - eps;
        const double fm = f(p);
        p[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: non-finite evaluation at coordinate " +
                               std::to_string(i));
        const double fd = (fp - fm) / (2.0 * eps);
        const double rel = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace ucc
