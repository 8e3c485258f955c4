#include "emodm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "emodm/errors.hpp"

namespace emodm {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178; // log(sqrt(2 pi))

void validate_component(const GaussianComponent& c) {
    if (!std::isfinite(c.mean) || !std::isfinite(c.std_dev) || c.std_dev <= 0.0) {
        throw std::invalid_argument("invalid component: mean " + std::to_string(c.mean) +
                                    ", std_dev " + std::to_string(c.std_dev));
    }
}

// Valid sample indices in ascending value order. Accumulating sums in this
// order makes every statistic independent of the input permutation down to
// the last bit (ties carry identical summands).
std::vector<std::size_t> valid_order_by_value(const RateSeries& samples) {
    std::vector<std::size_t> order;
    order.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples.valid[i]) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples.rates[a] < samples.rates[b];
    });
    return order;
}

// Row index into a ResponsibilityMatrix for each sample index (rows cover
// valid samples in input order).
std::vector<std::size_t> row_index_map(const RateSeries& samples) {
    std::vector<std::size_t> rows(samples.size(), static_cast<std::size_t>(-1));
    std::size_t r = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples.valid[i]) rows[i] = r++;
    }
    return rows;
}

struct LogTerms {
    double normal;
    double abnormal;
};

LogTerms log_weighted_terms(double y, const MixtureParams& p) {
    return {std::log1p(-p.abnormal_weight) + log_normal_density(y, p.normal),
            std::log(p.abnormal_weight) + log_normal_density(y, p.abnormal)};
}

// Shared machinery for the fit loop: the value-sorted order and the
// sample-to-row map are computed once per fit instead of per step.
struct FitWorkspace {
    const RateSeries* samples;
    std::vector<std::size_t> order;
    std::vector<std::size_t> rows;
};

MixtureParams m_step_ws(const FitWorkspace& ws, const ResponsibilityMatrix& resp,
                        double std_floor) {
    const RateSeries& samples = *ws.samples;
    const auto n = static_cast<double>(ws.order.size());
    MixtureParams out;
    double weights[2];
    double means[2];
    for (int k = 0; k < 2; ++k) {
        double w = 0.0;
        double wy = 0.0;
        for (std::size_t i : ws.order) {
            const double d = resp.rows[ws.rows[i]][k];
            w += d;
            wy += d * samples.rates[i];
        }
        if (!(w > 0.0)) {
            throw NumericalError("empty component " + std::to_string(k + 1));
        }
        weights[k] = w;
        means[k] = wy / w;
    }
    for (int k = 0; k < 2; ++k) {
        double wss = 0.0;
        for (std::size_t i : ws.order) {
            const double d = resp.rows[ws.rows[i]][k];
            const double diff = samples.rates[i] - means[k];
            wss += d * diff * diff;
        }
        const double sd = std::max(std::sqrt(wss / weights[k]), std_floor);
        GaussianComponent& c = (k == 0) ? out.normal : out.abnormal;
        c.mean = means[k];
        c.std_dev = sd;
    }
    out.abnormal_weight = weights[1] / n;
    return out;
}

// E-step that also accumulates the observed-data log-likelihood of the
// parameters it scores against (both come from the same weighted log terms).
double e_step_with_loglik(const FitWorkspace& ws, const MixtureParams& params,
                          ResponsibilityMatrix& resp) {
    const RateSeries& samples = *ws.samples;
    resp.rows.resize(ws.order.size());
    double total = 0.0;
    for (std::size_t i : ws.order) {
        const LogTerms t = log_weighted_terms(samples.rates[i], params);
        const double m = std::max(t.normal, t.abnormal);
        if (!std::isfinite(m)) {
            throw NumericalError("responsibility undefined: both mixture terms vanished");
        }
        const double e1 = std::exp(t.normal - m);
        const double e2 = std::exp(t.abnormal - m);
        const double s = e1 + e2;
        resp.rows[ws.rows[i]] = {e1 / s, e2 / s};
        total += m + std::log(s);
    }
    return total;
}

std::array<double, 2> softmax_pair(const LogTerms& t) {
    const double m = std::max(t.normal, t.abnormal);
    if (!std::isfinite(m)) {
        throw NumericalError("responsibility undefined: both mixture terms vanished");
    }
    const double e1 = std::exp(t.normal - m);
    const double e2 = std::exp(t.abnormal - m);
    const double s = e1 + e2;
    return {e1 / s, e2 / s};
}

// Population mean/std of the referenced samples, accumulated in the order
// given (callers pass a value-sorted order).
void mean_and_std(const RateSeries& samples, const std::vector<std::size_t>& order,
                  double& mean, double& std_dev) {
    double sum = 0.0;
    for (std::size_t i : order) sum += samples.rates[i];
    mean = sum / static_cast<double>(order.size());
    double ss = 0.0;
    for (std::size_t i : order) {
        const double d = samples.rates[i] - mean;
        ss += d * d;
    }
    std_dev = std::sqrt(ss / static_cast<double>(order.size()));
}

// Type-7 (linear interpolation) quantile of an ascending vector.
double quantile_sorted(const std::vector<double>& v, double q) {
    const double h = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

} // namespace

void validate_params(const MixtureParams& params) {
    validate_component(params.normal);
    validate_component(params.abnormal);
    if (!std::isfinite(params.abnormal_weight) || params.abnormal_weight < 0.0 ||
        params.abnormal_weight > 1.0) {
        throw std::invalid_argument("invalid mixture weight " +
                                    std::to_string(params.abnormal_weight));
    }
}

double log_normal_density(double x, const GaussianComponent& component) {
    validate_component(component);
    if (!std::isfinite(x)) {
        throw std::invalid_argument("invalid sample");
    }
    const double z = (x - component.mean) / component.std_dev;
    return -0.5 * z * z - std::log(component.std_dev) - kLogSqrt2Pi;
}

double normal_density(double x, const GaussianComponent& component) {
    return std::exp(log_normal_density(x, component));
}

ResponsibilityMatrix e_step(const RateSeries& samples, const MixtureParams& params) {
    validate_params(params);
    if (samples.valid_count() < 2) {
        throw std::invalid_argument("e_step needs at least 2 valid samples");
    }
    ResponsibilityMatrix resp;
    resp.rows.reserve(samples.valid_count());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples.valid[i]) continue;
        resp.rows.push_back(softmax_pair(log_weighted_terms(samples.rates[i], params)));
    }
    return resp;
}

MixtureParams m_step(const RateSeries& samples, const ResponsibilityMatrix& resp,
                     double std_floor) {
    if (resp.size() != samples.valid_count()) {
        throw std::invalid_argument("responsibility rows do not match valid sample count");
    }
    FitWorkspace ws{&samples, valid_order_by_value(samples), row_index_map(samples)};
    return m_step_ws(ws, resp, std_floor);
}

double observed_log_likelihood(const RateSeries& samples, const MixtureParams& params) {
    validate_params(params);
    const auto order = valid_order_by_value(samples);
    if (order.empty()) {
        throw std::invalid_argument("no valid samples");
    }
    double total = 0.0;
    for (std::size_t i : order) {
        const LogTerms t = log_weighted_terms(samples.rates[i], params);
        const double m = std::max(t.normal, t.abnormal);
        total += m + std::log(std::exp(t.normal - m) + std::exp(t.abnormal - m));
    }
    return total;
}

FitResult fit_em(const RateSeries& samples, const MixtureParams& init,
                 const FitConfig& config) {
    if (config.max_iterations < 1 || !(config.rel_loglik_tolerance > 0.0) ||
        !(config.variance_floor_factor > 0.0)) {
        throw std::invalid_argument("invalid fit configuration");
    }
    const std::size_t n_valid = samples.valid_count();
    if (n_valid < 10) {
        throw NumericalError("too few samples: " + std::to_string(n_valid) +
                             " valid, need at least 10");
    }
    const auto order = valid_order_by_value(samples);
    double global_mean = 0.0;
    double global_std = 0.0;
    mean_and_std(samples, order, global_mean, global_std);
    if (!(global_std > 0.0)) {
        throw NumericalError("degenerate data: all valid samples are identical");
    }
    const double floor = config.variance_floor_factor * global_std;

    validate_params(init);
    MixtureParams params = init;
    params.normal.std_dev = std::max(params.normal.std_dev, floor);
    params.abnormal.std_dev = std::max(params.abnormal.std_dev, floor);

    FitWorkspace ws{&samples, order, row_index_map(samples)};

    FitResult result;
    ResponsibilityMatrix resp;
    double ll = e_step_with_loglik(ws, params, resp);
    result.loglik_trace.push_back(ll);

    for (int m = 1; m <= config.max_iterations; ++m) {
        try {
            params = m_step_ws(ws, resp, floor);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(m));
        }
        const double next = e_step_with_loglik(ws, params, resp);
        if (next < ll - 1e-9 * std::max(1.0, std::abs(next))) {
            throw NumericalError("log-likelihood decreased at iteration " + std::to_string(m));
        }
        result.loglik_trace.push_back(next);
        result.iterations_used = m;
        const double rel = std::abs(next - ll) / std::max(1.0, std::abs(next));
        ll = next;
        if (rel < config.rel_loglik_tolerance) {
            result.converged = true;
            break;
        }
    }
    result.params = params;
    result.responsibilities = std::move(resp);
    return result;
}

MixtureParams default_init(const RateSeries& samples) {
    if (samples.valid_count() < 10) {
        throw NumericalError("too few samples: " + std::to_string(samples.valid_count()) +
                             " valid, need at least 10");
    }
    std::vector<double> sorted = samples.valid_values();
    std::sort(sorted.begin(), sorted.end());
    const double q05 = quantile_sorted(sorted, 0.05);
    const double q95 = quantile_sorted(sorted, 0.95);

    double c_sum = 0.0, t_sum = 0.0;
    std::size_t c_n = 0, t_n = 0;
    for (double v : sorted) {
        if (v >= q05 && v <= q95) {
            c_sum += v;
            ++c_n;
        } else {
            t_sum += v;
            ++t_n;
        }
    }
    const double c_mean = c_sum / static_cast<double>(c_n);
    double c_ss = 0.0, t_ss = 0.0;
    const double t_mean = (t_n > 0) ? t_sum / static_cast<double>(t_n) : 0.0;
    for (double v : sorted) {
        if (v >= q05 && v <= q95) {
            c_ss += (v - c_mean) * (v - c_mean);
        } else {
            t_ss += (v - t_mean) * (v - t_mean);
        }
    }
    const double c_std = std::sqrt(c_ss / static_cast<double>(c_n));
    if (!(c_std > 0.0)) {
        throw NumericalError("degenerate data: central band has zero spread");
    }

    MixtureParams init;
    init.normal = {c_mean, c_std};
    if (t_n == 0) {
        init.abnormal = {c_mean + 3.0 * c_std, 3.0 * c_std};
    } else {
        const double t_std = std::sqrt(t_ss / static_cast<double>(t_n));
        init.abnormal = {t_mean, t_std > 0.0 ? t_std : 3.0 * c_std};
    }
    init.abnormal_weight = 0.05;
    return init;
}

} // namespace emodm
