#pragma once

#include <functional>
#include <string>
#include <vector>

#include "deconvdec/tensor.hpp"

namespace deconvdec {

struct GradCheckIssue {
    int index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    int coords_checked = 0;
    std::vector<GradCheckIssue> failures;  // coordinates with rel_err > tol
    bool passed = true;
};

/// Central-difference check of theta->grad (which must already hold the
/// autodiff gradient) against (f(theta + h e_i) - f(theta - h e_i)) / 2h.
/// f must be a deterministic forward evaluation of the same scalar loss.
/// The relative error uses a unit floor: |a - n| / max(1, |a|, |n|).
GradCheckReport finite_diff_check(const std::function<double()>& f,
                                  const TensorPtr& theta, double h, double tol);

}  // namespace deconvdec
