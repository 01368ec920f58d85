#include "nucx/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nucx::fit {

double poisson_log_likelihood(const experiment::Spectrum2D& observed,
                              const std::vector<double>& expected, double scale) {
    if (expected.size() != observed.counts.size())
        throw std::invalid_argument("poisson_log_likelihood: shape mismatch");
    if (!(scale > 0.0))
        throw std::invalid_argument("poisson_log_likelihood: scale must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double e = expected[i];
        if (e < 0.0)
            throw std::invalid_argument("poisson_log_likelihood: negative expectation");
        const long n = observed.counts[i];
        if (e == 0.0) {
            if (n > 0) return -std::numeric_limits<double>::infinity();
            continue;
        }
        sum += static_cast<double>(n) * std::log(scale * e) - scale * e;
    }
    return sum;
}

double fit_scale(const experiment::Spectrum2D& observed,
                 const std::vector<double>& expected) {
    if (expected.size() != observed.counts.size())
        throw std::invalid_argument("fit_scale: shape mismatch");
    double sum_e = 0.0;
    for (double e : expected) sum_e += e;
    if (!(sum_e > 0.0)) throw std::invalid_argument("fit_scale: expectation sums to zero");
    return static_cast<double>(observed.total()) / sum_e;
}

} // namespace nucx::fit
