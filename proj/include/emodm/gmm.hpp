#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "emodm/series.hpp"

namespace emodm {

struct GaussianComponent {
    double mean = 0.0;
    double std_dev = 1.0;
};

/// The five-parameter two-state mixture: component 1 models normal
/// operation, component 2 the abnormal pattern, abnormal_weight is the
/// mixing proportion of component 2 (the implied normal weight is its
/// complement).
struct MixtureParams {
    GaussianComponent normal;
    GaussianComponent abnormal;
    double abnormal_weight = 0.0;
};

/// Per-sample soft assignments; one row per *valid* sample, in input
/// order. Each row sums to 1 within 1e-12.
struct ResponsibilityMatrix {
    std::vector<std::array<double, 2>> rows;

    std::size_t size() const { return rows.size(); }
};

struct FitConfig {
    int max_iterations = 500;
    double rel_loglik_tolerance = 1e-8;
    double variance_floor_factor = 1e-6;
    std::uint64_t seed = 0;
};

struct FitResult {
    MixtureParams params;
    ResponsibilityMatrix responsibilities;
    std::vector<double> loglik_trace; // initial value plus one per iteration
    int iterations_used = 0;
    bool converged = false;
};

/// Gaussian density (1/(sigma sqrt(2 pi))) exp(-(x-mu)^2 / (2 sigma^2)).
/// Throws std::invalid_argument on a non-finite sample or an invalid
/// component.
double normal_density(double x, const GaussianComponent& component);

/// log of normal_density, safe far into the tails.
double log_normal_density(double x, const GaussianComponent& component);

/// Soft assignment of every valid sample to the two components, computed
/// in the log domain with max-subtraction so tail samples cannot underflow
/// both densities at once.
ResponsibilityMatrix e_step(const RateSeries& samples, const MixtureParams& params);

/// Weighted-average parameter refit. Sums are accumulated over samples in
/// ascending value order, which keeps the result invariant under input
/// permutation. std_floor is the smallest allowed std_dev (0 disables).
/// Throws NumericalError("empty component") when a column has no weight.
MixtureParams m_step(const RateSeries& samples, const ResponsibilityMatrix& resp,
                     double std_floor = 0.0);

/// Sum over valid samples of log((1-eta) f1(y) + eta f2(y)).
double observed_log_likelihood(const RateSeries& samples, const MixtureParams& params);

/// Full EM loop from the given starting point. Stops when the relative
/// log-likelihood change drops below the configured tolerance or the
/// iteration cap is hit. The recorded trace is non-decreasing; a decrease
/// beyond roundoff slack raises NumericalError.
FitResult fit_em(const RateSeries& samples, const MixtureParams& init,
                 const FitConfig& config = FitConfig{});

/// Quantile-based starting point: component 1 from the samples inside the
/// [5th, 95th] percentile band, component 2 from the samples outside it
/// (or a widened copy of component 1 when the tail is empty), eta = 0.05.
MixtureParams default_init(const RateSeries& samples);

/// Throws std::invalid_argument unless means are finite, std_devs are
/// positive and finite, and the weight lies in [0, 1].
void validate_params(const MixtureParams& params);

} // namespace emodm
