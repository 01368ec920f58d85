#pragma once

#include "nucx/experiment.hpp"

#include <vector>

// Poisson comparison of an observed 2D spectrum with a model expectation.
// Log-likelihoods omit the n-only ln(n!) terms throughout, so values are
// comparable across models on the same data but not across datasets.

namespace nucx::fit {

// sum_i [n_i ln(s e_i) - s e_i]; cells with e_i = 0 contribute 0 when n_i = 0
// and -infinity when n_i > 0 (model-excluded data)
double poisson_log_likelihood(const experiment::Spectrum2D& observed,
                              const std::vector<double>& expected, double scale);

// closed-form Poisson maximum-likelihood global scale s* = sum n / sum e
double fit_scale(const experiment::Spectrum2D& observed,
                 const std::vector<double>& expected);

} // namespace nucx::fit
