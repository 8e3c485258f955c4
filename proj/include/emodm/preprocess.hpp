#pragma once

#include "emodm/series.hpp"

namespace emodm {

/// y_i = (x_i - x_{i-1}) / x_{i-1} for i = 1..N. Entries whose denominator
/// satisfies |x_{i-1}| < denom_epsilon are marked invalid instead of being
/// clamped. Throws DataError when the series has fewer than two values.
RateSeries relative_change_rate(const RawSeries& raw, double denom_epsilon);

/// Same with the default guard denom_epsilon = 1e-12 * max|x|.
RateSeries relative_change_rate(const RawSeries& raw);

/// Element-wise base-10 logarithm; timestamps preserved. Throws DataError
/// naming the first non-positive entry.
RawSeries log10_transform(const RawSeries& raw);

} // namespace emodm
