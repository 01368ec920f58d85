#include "nucx/fit.hpp"

#include "nucx/constants.hpp"
#include "nucx/parallel.hpp"
#include "nucx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace nucx::fit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// deterministic golden-section maximizer on [a, b]
template <typename F>
double golden_max(F&& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int guard = 0;
    while (b - a > tol && ++guard < 200) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Limited-memory BFGS ascent with central-difference gradients and an
// Armijo backtracking line search.  Coordinate-wise polishing stalls on
// this objective because the likelihood ridge runs diagonally through knot
// space (neighboring knots are strongly correlated through the
// interpolant); a quasi-Newton step follows the ridge jointly.  Fully
// deterministic.
template <typename F>
std::pair<std::vector<double>, double> lbfgs_max(F&& f, std::vector<double> x,
                                                 double fx, int max_iter) {
    constexpr std::size_t mem = 8;
    constexpr double h = 1e-4;  // differencing step, lambda0 units
    constexpr double c1 = 1e-4; // sufficient-increase fraction
    const std::size_t n = x.size();

    auto gradient = [&](const std::vector<double>& p) {
        std::vector<double> g(n);
        std::vector<double> w = p;
        for (std::size_t i = 0; i < n; ++i) {
            const double pi = w[i];
            w[i] = pi + h;
            const double fp = f(w);
            w[i] = pi - h;
            const double fm = f(w);
            w[i] = pi;
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    };

    std::vector<double> g = gradient(x);
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho;
    int stalled = 0;

    for (int iter = 0; iter < max_iter; ++iter) {
        // two-loop recursion: d = H g is the ascent direction
        std::vector<double> d = g;
        const std::size_t k = s_hist.size();
        std::vector<double> alpha(k);
        for (std::size_t j = k; j-- > 0;) {
            alpha[j] = rho[j] * dot(s_hist[j], d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[j] * y_hist[j][i];
        }
        if (k > 0) {
            const double sy = dot(s_hist[k - 1], y_hist[k - 1]);
            const double yy = dot(y_hist[k - 1], y_hist[k - 1]);
            if (yy > 0.0)
                for (double& v : d) v *= sy / yy;
        }
        for (std::size_t j = 0; j < k; ++j) {
            const double beta = rho[j] * dot(y_hist[j], d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[j] - beta) * s_hist[j][i];
        }
        double gTd = dot(g, d);
        if (!(gTd > 0.0)) { // curvature went bad: restart from steepest ascent
            d = g;
            gTd = dot(g, g);
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }
        if (!(gTd > 1e-12)) break; // gradient numerically zero

        double dmax = 0.0;
        for (double v : d) dmax = std::max(dmax, std::fabs(v));
        // without curvature history, cap the first move at 0.01 lambda0
        double step = k > 0 ? 1.0 : std::min(1.0, 0.01 / std::max(dmax, 1e-12));
        std::vector<double> x_new(n);
        double f_new = kNegInf;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
            f_new = f(x_new);
            if (f_new >= fx + c1 * step * gTd) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> g_new = gradient(x_new);
        std::vector<double> s_vec(n), y_vec(n);
        for (std::size_t i = 0; i < n; ++i) {
            s_vec[i] = x_new[i] - x[i];
            y_vec[i] = g[i] - g_new[i]; // ascent convention
        }
        const double sy = dot(s_vec, y_vec);
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s_vec));
            y_hist.push_back(std::move(y_vec));
            rho.push_back(1.0 / sy);
            if (s_hist.size() > mem) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho.erase(rho.begin());
            }
        }
        const double gain = f_new - fx;
        x = std::move(x_new);
        fx = f_new;
        g = std::move(g_new);
        stalled = gain < 1e-3 ? stalled + 1 : 0;
        if (stalled >= 2) break;
    }
    return {std::move(x), fx};
}

} // namespace

// ---- shared objective ----------------------------------------------------

MotionObjective::MotionObjective(const experiment::Spectrum2D& observed,
                                 const experiment::IntensityModel& model)
    : model_(model) {
    if (observed.n_time() != model.n_time_bins() ||
        observed.n_detuning() != model.n_detunings())
        throw std::invalid_argument("objective: spectrum shape does not match the model bins");
    const std::size_t nd = model.n_detunings();
    column_weight_.assign(nd, 1.0);
    double exposure_sum = 0.0;
    for (double e : observed.exposure_s) exposure_sum += e;
    if (exposure_sum > 0.0) {
        const double mean = exposure_sum / static_cast<double>(nd);
        for (std::size_t di = 0; di < nd; ++di)
            column_weight_[di] = observed.exposure_s[di] / mean;
    }
    for (std::size_t i = 0; i < observed.counts.size(); ++i) {
        if (observed.counts[i] > 0) nonzero_.emplace_back(i, observed.counts[i]);
        n_total_ += observed.counts[i];
    }
}

double MotionObjective::operator()(const motion::MotionProfile& m) const {
    const std::vector<double> binned = model_.expected_binned(m);
    const std::size_t nd = model_.n_detunings();
    double sum_e = 0.0;
    for (std::size_t i = 0; i < binned.size(); ++i) sum_e += binned[i] * column_weight_[i % nd];
    if (!(sum_e > 0.0)) return kNegInf;
    double obj = -static_cast<double>(n_total_) * std::log(sum_e);
    for (const auto& [idx, n] : nonzero_) {
        const double e = binned[idx] * column_weight_[idx % nd];
        if (!(e > 0.0)) return kNegInf;
        obj += static_cast<double>(n) * std::log(e);
    }
    return obj;
}

double MotionObjective::scale_at(const motion::MotionProfile& m) const {
    const std::vector<double> binned = model_.expected_binned(m);
    const std::size_t nd = model_.n_detunings();
    double sum_e = 0.0;
    for (std::size_t i = 0; i < binned.size(); ++i) sum_e += binned[i] * column_weight_[i % nd];
    return static_cast<double>(n_total_) / sum_e;
}

// ---- evolutionary motion reconstruction ----------------------------------

namespace {

struct Genome {
    std::vector<double> x;     // knot displacements, lambda0
    std::vector<double> sigma; // per-knot mutation scales
    double fitness = kNegInf;
    double smoothness = 0.0; // L2 norm of second differences (tie-break)
};

double second_difference_norm(const std::vector<double>& x) {
    double sum = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        const double d2 = x[i + 1] - 2.0 * x[i] + x[i - 1];
        sum += d2 * d2;
    }
    return std::sqrt(sum);
}

bool better(const Genome& a, const Genome& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.smoothness != b.smoothness) return a.smoothness < b.smoothness;
    return a.x < b.x; // deterministic final tie-break
}

} // namespace

FitResult fit_motion_evolutionary(const experiment::Spectrum2D& observed,
                                  const experiment::IntensityModel& model,
                                  const EaParams& params, std::uint64_t seed) {
    if (params.population < 4 || params.knots < 2 || params.generations < 1)
        throw std::invalid_argument("fit_motion_evolutionary: degenerate parameters");
    if (observed.total() == 0)
        throw std::invalid_argument("fit_motion_evolutionary: empty spectrum");

    const MotionObjective objective(observed, model);
    const auto n_knots = static_cast<std::size_t>(params.knots);
    std::vector<double> knot_times(n_knots);
    const double span = model.config().bunch_period_ns;
    for (std::size_t i = 0; i < n_knots; ++i)
        knot_times[i] = span * static_cast<double>(i) / static_cast<double>(n_knots - 1);

    auto as_motion = [&](const std::vector<double>& x) {
        return motion::free_knot_motion(knot_times, x);
    };

    const auto pop_size = static_cast<std::size_t>(params.population);
    const auto n_elite = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(params.elite_fraction * params.population)));
    const double tau_global = 1.0 / std::sqrt(2.0 * static_cast<double>(n_knots));
    const double tau_local = 1.0 / std::sqrt(2.0 * std::sqrt(static_cast<double>(n_knots)));

    Rng rng(seed);
    std::vector<Genome> pop(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) {
        pop[i].x.assign(n_knots, 0.0);
        pop[i].sigma.assign(n_knots, params.init_sigma);
        if (i > 0)
            for (auto& v : pop[i].x) v = rng.normal(0.0, params.init_sigma);
    }

    auto evaluate = [&](std::vector<Genome>& group, std::size_t from) {
        parallel_for(group.size() - from, [&](std::size_t j) {
            Genome& g = group[from + j];
            g.fitness = objective(as_motion(g.x));
            g.smoothness = second_difference_norm(g.x);
        });
    };

    evaluate(pop, 0);
    std::sort(pop.begin(), pop.end(), better);

    std::vector<double> best_trace;
    best_trace.reserve(params.generations);
    for (int gen = 0; gen < params.generations; ++gen) {
        // truncation selection with elitism: the sorted head survives, the
        // tail is rebuilt from recombined + mutated elite parents
        for (std::size_t j = n_elite; j < pop_size; ++j) {
            const Genome& pa = pop[rng.next_u64() % n_elite];
            const Genome& pb = pop[rng.next_u64() % n_elite];
            Genome child;
            child.x.resize(n_knots);
            child.sigma.resize(n_knots);
            const double g_global = rng.normal();
            for (std::size_t i = 0; i < n_knots; ++i) {
                const bool from_a = (rng.next_u64() & 1) != 0;
                child.x[i] = from_a ? pa.x[i] : pb.x[i];
                child.sigma[i] = from_a ? pa.sigma[i] : pb.sigma[i];
                child.sigma[i] *= std::exp(tau_global * g_global + tau_local * rng.normal());
                child.sigma[i] = std::clamp(child.sigma[i], params.sigma_floor, 0.5);
                child.x[i] += child.sigma[i] * rng.normal();
            }
            pop[j] = std::move(child);
        }
        evaluate(pop, n_elite);
        std::sort(pop.begin(), pop.end(), better);
        best_trace.push_back(pop.front().fitness);
    }

    // Deterministic refinement of the best candidate, iterated until a full
    // sweep stops paying.  Each sweep runs three passes:
    //   (a) unwind 2*pi wraps: an integer-wavelength jump between adjacent
    //       knots changes the field only during that one segment
    //       (whole-wavelength displacements are invisible in the phase
    //       factor), so shifting the complete tail back by the integer part
    //       is likelihood-neutral at worst and removes the spurious chirp;
    //       near-ties go to the flatter motion;
    //   (b) line-search each knot around its current value and around the
    //       +/- one-wavelength displacements, handling wraps the flattening
    //       pass cannot reach;
    //   (c) joint quasi-Newton ascent over all knots at once.
    auto knot_objective = [&](const std::vector<double>& v) {
        return objective(as_motion(v));
    };
    Genome best = pop.front();
    for (int sweep = 0; sweep < params.polish_sweeps; ++sweep) {
        const double sweep_start = best.fitness;
        for (std::size_t i = 0; i + 1 < n_knots; ++i) {
            const double jump = std::round(best.x[i + 1] - best.x[i]);
            if (jump == 0.0) continue;
            std::vector<double> trial = best.x;
            for (std::size_t j = i + 1; j < n_knots; ++j) trial[j] -= jump;
            const double f = objective(as_motion(trial));
            if (f > best.fitness - 1e-6) {
                best.x = std::move(trial);
                best.fitness = f;
            }
        }
        for (std::size_t i = 0; i < n_knots; ++i) {
            std::vector<double> trial = best.x;
            auto line = [&](double v) {
                trial[i] = v;
                return objective(as_motion(trial));
            };
            double center = best.x[i];
            double center_f = best.fitness;
            for (const double shift : {-1.0, 1.0}) {
                const double f = line(best.x[i] + shift);
                if (f > center_f) {
                    center = best.x[i] + shift;
                    center_f = f;
                }
            }
            const double radius = std::max(2.0 * best.sigma[i], 0.1);
            const double xi = golden_max(line, center - radius, center + radius, 1e-5);
            const double f = line(xi);
            if (f > best.fitness) {
                best.x[i] = xi;
                best.fitness = f;
            }
        }
        auto [joint_x, joint_f] = lbfgs_max(knot_objective, best.x, best.fitness, 400);
        if (joint_f > best.fitness) {
            best.x = std::move(joint_x);
            best.fitness = joint_f;
        }
        if (best.fitness - sweep_start < 0.5) break; // converged
    }

    FitResult result;
    result.motion = as_motion(best.x);
    result.scale_factor = objective.scale_at(result.motion);
    result.log_likelihood = best.fitness;
    result.generations = params.generations;
    result.best_by_generation = best_trace;
    const std::size_t checkpoint = best_trace.size() - std::max<std::size_t>(1, best_trace.size() / 4);
    result.converged = best.fitness - best_trace[checkpoint - 1] < 0.5;
    double sigma_sum = 0.0;
    for (const auto& g : pop)
        sigma_sum += std::accumulate(g.sigma.begin(), g.sigma.end(), 0.0) /
                     static_cast<double>(n_knots);
    result.mean_mutation_sigma = sigma_sum / static_cast<double>(pop_size);
    result.population_spread = pop.front().fitness - pop[pop_size / 2].fitness;
    return result;
}

// ---- single-parameter noise models ---------------------------------------

std::string to_string(NoiseModel model) {
    switch (model) {
    case NoiseModel::linear_drift: return "linear";
    case NoiseModel::scaling: return "scaling";
    case NoiseModel::step: return "step";
    }
    return "linear";
}

NoiseModel noise_model_from_string(const std::string& name) {
    if (name == "linear" || name == "linear_drift") return NoiseModel::linear_drift;
    if (name == "scaling") return NoiseModel::scaling;
    if (name == "step") return NoiseModel::step;
    throw std::invalid_argument("unknown noise model: " + name);
}

double temporal_deviation_zs(NoiseModel kind, double parameter, double window_end_ns) {
    switch (kind) {
    case NoiseModel::linear_drift:
        // drift rate A [lambda0/ns] sustained to the end of the acquisition
        return parameter * window_end_ns * constants::carrier_period_zs;
    case NoiseModel::scaling:
        return parameter * constants::half_period_zs;
    case NoiseModel::step:
        return parameter / std::numbers::pi * constants::half_period_zs;
    }
    return 0.0;
}

namespace {

motion::MotionProfile perturbed_motion(const motion::MotionProfile& base, NoiseModel kind,
                                       double p) {
    switch (kind) {
    case NoiseModel::linear_drift: return motion::with_linear_drift(base, p);
    case NoiseModel::scaling: return motion::with_scaling(base, p);
    case NoiseModel::step: return motion::with_phase_step(base, p);
    }
    return motion::with_linear_drift(base, p);
}

} // namespace

NoiseParameterFamily::NoiseParameterFamily(const motion::MotionProfile& base, NoiseModel kind,
                                           const experiment::IntensityModel& model,
                                           int n_nodes)
    : kind_(kind), window_end_ns_(model.config().window_end_ns),
      n_bins_(model.n_time_bins()), n_det_(model.n_detunings()) {
    if (n_nodes < 3) throw std::invalid_argument("noise family: need at least 3 nodes");
    switch (kind) {
    case NoiseModel::linear_drift: bound_ = 3e-3; break; // lambda0/ns, ~150 zs reach
    case NoiseModel::scaling: bound_ = 0.5; break;
    case NoiseModel::step: bound_ = 0.5 * std::numbers::pi; break;
    }
    const auto nn = static_cast<std::size_t>(n_nodes);
    const std::size_t cells = n_bins_ * n_det_;
    nodes_.resize(nn);
    table_.resize(nn * cells);
    colsum_.assign(nn * n_det_, 0.0);
    for (std::size_t j = 0; j < nn; ++j)
        nodes_[j] = -bound_ + 2.0 * bound_ * static_cast<double>(j) /
                                  static_cast<double>(nn - 1);
    // forward evaluations are independent; each node writes its own slots
    parallel_for(nn, [&](std::size_t j) {
        const std::vector<double> binned =
            model.expected_binned(perturbed_motion(base, kind_, nodes_[j]));
        float* row = &table_[j * cells];
        double* cs = &colsum_[j * n_det_];
        for (std::size_t i = 0; i < cells; ++i) {
            row[i] = static_cast<float>(binned[i]);
            cs[i % n_det_] += static_cast<double>(row[i]);
        }
    });
}

NoiseFit NoiseParameterFamily::fit(const experiment::Spectrum2D& observed) const {
    if (observed.n_time() != n_bins_ || observed.n_detuning() != n_det_)
        throw std::invalid_argument("noise family: spectrum shape does not match the model");
    if (observed.total() < 100)
        throw InsufficientStatisticsError(
            "fit_noise_parameter: fewer than 100 counts in the sample");

    std::vector<double> weight(n_det_, 1.0);
    double exposure_sum = 0.0;
    for (double e : observed.exposure_s) exposure_sum += e;
    if (exposure_sum > 0.0) {
        const double mean = exposure_sum / static_cast<double>(n_det_);
        for (std::size_t di = 0; di < n_det_; ++di)
            weight[di] = observed.exposure_s[di] / mean;
    }

    std::vector<std::pair<std::size_t, long>> nonzero;
    long n_total = 0;
    double weight_term = 0.0; // sum n ln w, constant in the parameter
    for (std::size_t i = 0; i < observed.counts.size(); ++i) {
        n_total += observed.counts[i];
        if (observed.counts[i] <= 0) continue;
        const double w = weight[i % n_det_];
        if (!(w > 0.0))
            throw std::invalid_argument("noise family: counts in a zero-exposure column");
        nonzero.emplace_back(i, observed.counts[i]);
        weight_term += static_cast<double>(observed.counts[i]) * std::log(w);
    }

    const std::size_t cells = n_bins_ * n_det_;
    const double step = nodes_[1] - nodes_[0];
    auto g = [&](double p) {
        p = std::clamp(p, nodes_.front(), nodes_.back());
        const double u = (p - nodes_.front()) / step;
        const auto j = std::min(static_cast<std::size_t>(u), nodes_.size() - 2);
        const double f = u - static_cast<double>(j);
        const float* a = &table_[j * cells];
        const float* b = a + cells;
        const double* ca = &colsum_[j * n_det_];
        const double* cb = ca + n_det_;
        double sum_e = 0.0;
        for (std::size_t di = 0; di < n_det_; ++di)
            sum_e += weight[di] * ((1.0 - f) * ca[di] + f * cb[di]);
        if (!(sum_e > 0.0)) return kNegInf;
        double obj = weight_term - static_cast<double>(n_total) * std::log(sum_e);
        for (const auto& [idx, n] : nonzero) {
            const double e = (1.0 - f) * static_cast<double>(a[idx]) +
                             f * static_cast<double>(b[idx]);
            if (!(e > 0.0)) return kNegInf;
            obj += static_cast<double>(n) * std::log(e);
        }
        return obj;
    };

    const double p_hat = golden_max(g, -bound_, bound_, bound_ * 2e-5);
    const double g_max = g(p_hat);
    const double target = g_max - 0.5;

    // profile-likelihood interval edge: bisect g(p) = g_max - 1/2 away from
    // the optimum; if the likelihood stays flat to the table edge, the edge
    // is reported
    auto ci_edge = [&](double direction) {
        double far = direction > 0.0 ? nodes_.back() : nodes_.front();
        if (g(far) > target) return far;
        double near = p_hat;
        for (int it = 0; it < 60 && std::fabs(far - near) > bound_ * 1e-4; ++it) {
            const double mid = 0.5 * (near + far);
            (g(mid) > target ? near : far) = mid;
        }
        return 0.5 * (near + far);
    };
    const double lo = ci_edge(-1.0);
    const double hi = ci_edge(+1.0);

    NoiseFit out;
    out.model = kind_;
    out.parameter = p_hat;
    out.log_likelihood = g_max;
    out.ci_lo = lo;
    out.ci_hi = hi;
    out.y_zs = temporal_deviation_zs(kind_, p_hat, window_end_ns_);
    out.y_ci_lo = temporal_deviation_zs(kind_, lo, window_end_ns_);
    out.y_ci_hi = temporal_deviation_zs(kind_, hi, window_end_ns_);
    return out;
}

NoiseFit fit_noise_parameter(const experiment::Spectrum2D& observed,
                             const motion::MotionProfile& base, NoiseModel kind,
                             const experiment::IntensityModel& model) {
    const NoiseParameterFamily family(base, kind, model);
    return family.fit(observed);
}

// ---- dipole extraction ---------------------------------------------------

tls::DipoleTrace extract_dipole(const FitResult& fit,
                                const response::TransmissionModel& target,
                                const response::TransmissionModel& scu,
                                const signal::TimeGrid& grid) {
    const motion::DoublePulse pulse = motion::shape_double_pulse(scu, fit.motion, grid);
    double b_total = 0.0;
    for (const auto& line : target.lines) b_total += line.b;
    return tls::coherence_response(pulse.field, tls::TlsParams{b_total});
}

tls::DipoleTrace dipole_reference(const response::TransmissionModel& target,
                                  const signal::TimeGrid& grid) {
    double b_total = 0.0;
    for (const auto& line : target.lines) b_total += line.b;
    return tls::coherence_response(signal::SignalEnvelope::impulse(grid),
                                   tls::TlsParams{b_total});
}

} // namespace nucx::fit
