#include "emodm/preprocess.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "emodm/errors.hpp"

namespace emodm {

RateSeries relative_change_rate(const RawSeries& raw, double denom_epsilon) {
    if (raw.values.size() < 2) {
        throw DataError("series too short: need at least 2 values, got " +
                        std::to_string(raw.values.size()));
    }
    const std::size_t n = raw.values.size() - 1;
    RateSeries out;
    out.rates.resize(n);
    out.valid.resize(n);
    out.origin_index.resize(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double prev = raw.values[i - 1];
        const double cur = raw.values[i];
        const bool ok = std::isfinite(prev) && std::isfinite(cur) &&
                        std::abs(prev) >= denom_epsilon;
        out.origin_index[i - 1] = i;
        out.valid[i - 1] = ok;
        out.rates[i - 1] = ok ? (cur - prev) / prev
                              : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

RateSeries relative_change_rate(const RawSeries& raw) {
    double max_abs = 0.0;
    for (double v : raw.values) {
        if (std::isfinite(v)) max_abs = std::max(max_abs, std::abs(v));
    }
    return relative_change_rate(raw, 1e-12 * max_abs);
}

RawSeries log10_transform(const RawSeries& raw) {
    RawSeries out;
    out.values.reserve(raw.values.size());
    out.timestamps = raw.timestamps;
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const double v = raw.values[i];
        if (!(v > 0.0)) {
            throw DataError("log10 transform requires positive values; index " +
                            std::to_string(i) + " holds " + std::to_string(v));
        }
        out.values.push_back(std::log10(v));
    }
    return out;
}

} // namespace emodm
