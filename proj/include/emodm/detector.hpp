#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "emodm/gmm.hpp"
#include "emodm/series.hpp"

namespace emodm {

struct DetectionConfig {
    double alpha_f = 0.95;          // posterior threshold, in (0, 1)
    std::size_t warmup_count = 50;  // valid rates required before online scoring
    std::size_t refit_period = 100; // full refit cadence in scored samples
    FitConfig fit;
};

struct DetectionReport {
    std::vector<double> posteriors;  // aligned to rates; NaN for invalid entries
    std::vector<std::size_t> flagged; // ascending rate indices with posterior >= alpha_f
    std::vector<std::pair<std::size_t, std::size_t>> segments; // inclusive runs of flagged
    double failure_probability = 0.0; // the fitted abnormal weight, verbatim
    MixtureParams params;
};

/// p(S=2 | y) by Bayes with the two weighted densities, log-domain stable.
double posterior_abnormal(double y, const MixtureParams& params);

/// Swap the components if needed so the abnormal slot holds the
/// smaller-weight one; a tie within 1e-9 of 0.5 is broken by giving the
/// abnormal slot to the larger std_dev.
MixtureParams canonicalize_components(const MixtureParams& params);

/// Threshold every valid posterior at config.alpha_f, merge flagged
/// indices into maximal consecutive runs, report P_f.
DetectionReport flag_and_segment(const RateSeries& rates, const MixtureParams& params,
                                 const DetectionConfig& config);

/// The global abnormal probability is the fitted abnormal weight.
double failure_probability(const MixtureParams& params);

struct Alarm {
    std::size_t index = 0; // raw index of the rate's interval end
    double value = 0.0;    // the raw value that arrived there
    double posterior = 0.0;
};

enum class OnlineStatus {
    insufficient_data, // still warming up
    ok,
    model_unavailable, // EM failed even after a full refit; state kept
};

struct OnlineStepResult {
    OnlineStatus status = OnlineStatus::insufficient_data;
    std::optional<Alarm> alarm;
    double posterior = 0.0; // NaN until scoring happens
};

/// Growing-window online loop: each new raw value appends to the buffer,
/// EM is warm-started from the previous parameters (with a full refit from
/// default_init every refit_period scored samples), and the newest rate is
/// scored against alpha_f.
class OnlineDetector {
public:
    explicit OnlineDetector(DetectionConfig config);

    OnlineStepResult step(double raw_value);

    const std::vector<double>& raw_buffer() const { return raw_; }
    const std::optional<MixtureParams>& last_params() const { return last_params_; }

private:
    DetectionConfig config_;
    std::vector<double> raw_;
    std::optional<MixtureParams> last_params_;
    std::size_t since_refit_ = 0;
};

} // namespace emodm
