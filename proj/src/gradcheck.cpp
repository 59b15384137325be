#include "deconvdec/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace deconvdec {

GradCheckReport finite_diff_check(const std::function<double()>& f,
                                  const TensorPtr& theta, double h, double tol) {
    if (!theta->requires_grad) {
        throw ContractError("finite_diff_check: parameter does not track gradients");
    }
    GradCheckReport report;
    report.coords_checked = theta->numel();
    for (int i = 0; i < theta->numel(); ++i) {
        double saved = theta->data[i];
        theta->data[i] = saved + h;
        double above = f();
        theta->data[i] = saved - h;
        double below = f();
        theta->data[i] = saved;

        double numeric = (above - below) / (2.0 * h);
        double analytic = theta->grad[i];
        double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
        double rel = std::fabs(analytic - numeric) / denom;
        report.max_rel_err = std::max(report.max_rel_err, rel);
        if (rel > tol) {
            report.failures.push_back({i, analytic, numeric, rel});
        }
    }
    report.passed = report.failures.empty();
    return report;
}

}  // namespace deconvdec
