#include "emodm/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "emodm/errors.hpp"
#include "emodm/preprocess.hpp"

namespace emodm {

namespace {

void validate_detection_config(const DetectionConfig& config) {
    if (!(config.alpha_f > 0.0) || !(config.alpha_f < 1.0)) {
        throw std::invalid_argument("alpha_f must lie strictly between 0 and 1");
    }
    if (config.warmup_count == 0 || config.refit_period == 0) {
        throw std::invalid_argument("warmup_count and refit_period must be positive");
    }
}

} // namespace

double posterior_abnormal(double y, const MixtureParams& params) {
    validate_params(params);
    if (!std::isfinite(y)) {
        throw std::invalid_argument("invalid sample");
    }
    const double a1 = std::log1p(-params.abnormal_weight) + log_normal_density(y, params.normal);
    const double a2 = std::log(params.abnormal_weight) + log_normal_density(y, params.abnormal);
    const double m = std::max(a1, a2);
    if (!std::isfinite(m)) {
        throw NumericalError("posterior undefined: both mixture terms vanished");
    }
    const double e1 = std::exp(a1 - m);
    const double e2 = std::exp(a2 - m);
    return e2 / (e1 + e2);
}

MixtureParams canonicalize_components(const MixtureParams& params) {
    validate_params(params);
    const double eta = params.abnormal_weight;
    bool swap;
    if (std::abs(eta - 0.5) < 1e-9) {
        swap = params.normal.std_dev > params.abnormal.std_dev;
    } else {
        swap = eta > 0.5;
    }
    if (!swap) return params;
    MixtureParams out;
    out.normal = params.abnormal;
    out.abnormal = params.normal;
    out.abnormal_weight = 1.0 - eta;
    return out;
}

DetectionReport flag_and_segment(const RateSeries& rates, const MixtureParams& params,
                                 const DetectionConfig& config) {
    validate_detection_config(config);
    validate_params(params);
    DetectionReport report;
    report.params = params;
    report.failure_probability = params.abnormal_weight;
    report.posteriors.assign(rates.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!rates.valid[i]) continue;
        const double p = posterior_abnormal(rates.rates[i], params);
        report.posteriors[i] = p;
        if (p >= config.alpha_f) {
            report.flagged.push_back(i);
        }
    }
    for (std::size_t j = 0; j < report.flagged.size();) {
        std::size_t k = j;
        while (k + 1 < report.flagged.size() &&
               report.flagged[k + 1] == report.flagged[k] + 1) {
            ++k;
        }
        report.segments.emplace_back(report.flagged[j], report.flagged[k]);
        j = k + 1;
    }
    return report;
}

double failure_probability(const MixtureParams& params) {
    return params.abnormal_weight;
}

OnlineDetector::OnlineDetector(DetectionConfig config) : config_(config) {
    validate_detection_config(config_);
}

OnlineStepResult OnlineDetector::step(double raw_value) {
    OnlineStepResult result;
    result.posterior = std::numeric_limits<double>::quiet_NaN();
    raw_.push_back(raw_value);
    if (raw_.size() < 2) {
        return result;
    }

    RawSeries raw{raw_, {}};
    const RateSeries rates = relative_change_rate(raw);
    if (rates.valid_count() < config_.warmup_count) {
        return result;
    }

    ++since_refit_;
    const bool want_full = !last_params_ || since_refit_ >= config_.refit_period;
    bool did_full = want_full;
    FitResult fit;
    try {
        fit = want_full ? fit_em(rates, default_init(rates), config_.fit)
                        : fit_em(rates, *last_params_, config_.fit);
    } catch (const NumericalError&) {
        if (want_full) {
            result.status = OnlineStatus::model_unavailable;
            return result;
        }
        // Warm starts can strand EM; retry cold before giving up.
        try {
            fit = fit_em(rates, default_init(rates), config_.fit);
            did_full = true;
        } catch (const NumericalError&) {
            result.status = OnlineStatus::model_unavailable;
            return result;
        }
    }
    if (did_full) since_refit_ = 0;

    const MixtureParams params = canonicalize_components(fit.params);
    last_params_ = params;
    result.status = OnlineStatus::ok;

    const std::size_t newest = rates.size() - 1;
    if (!rates.valid[newest]) {
        return result;
    }
    const double p = posterior_abnormal(rates.rates[newest], params);
    result.posterior = p;
    if (p >= config_.alpha_f) {
        result.alarm = Alarm{rates.origin_index[newest], raw_value, p};
    }
    return result;
}

} // namespace emodm
