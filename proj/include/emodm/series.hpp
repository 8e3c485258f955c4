#pragma once

#include <cstddef>
#include <vector>

namespace emodm {

/// A raw system-output series x_0..x_N. Timestamps are optional labels;
/// when present they must be strictly increasing and aligned to values.
struct RawSeries {
    std::vector<double> values;
    std::vector<double> timestamps; // empty when absent
};

/// Relative-change-rate samples y_1..y_N derived from a RawSeries.
/// Entry i is invalid when its denominator was too close to zero; invalid
/// entries hold NaN and are excluded from every statistic downstream.
/// origin_index maps rate i to the raw index whose arrival it describes
/// (the end of the interval).
struct RateSeries {
    std::vector<double> rates;
    std::vector<bool> valid;
    std::vector<std::size_t> origin_index;

    std::size_t size() const { return rates.size(); }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (bool v : valid) {
            if (v) ++n;
        }
        return n;
    }

    std::vector<double> valid_values() const {
        std::vector<double> out;
        out.reserve(rates.size());
        for (std::size_t i = 0; i < rates.size(); ++i) {
            if (valid[i]) out.push_back(rates[i]);
        }
        return out;
    }
};

} // namespace emodm
