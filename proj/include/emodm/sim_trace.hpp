#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "emodm/series.hpp"

namespace emodm {

/// Ground-truth pattern plan for a synthetic run: which 1-based periods
/// are abnormal. The first period must be normal, segments must be
/// disjoint, ordered and inside [1, total_periods].
struct FaultSchedule {
    std::size_t total_periods = 0;
    double period_duration = 0.0; // seconds
    std::vector<std::pair<std::size_t, std::size_t>> abnormal_segments; // inclusive, 1-based

    bool is_abnormal(std::size_t period_1based) const;
    std::size_t abnormal_period_count() const;
};

/// Throws std::invalid_argument when the schedule breaks its invariants.
void validate_schedule(const FaultSchedule& schedule);

/// One labeled output value per period, sampled at the period end.
struct SimTrace {
    RawSeries outputs;
    std::vector<int> labels; // 1 normal, 2 abnormal, aligned to outputs
    std::string input_description;
};

/// CSV with header period_index,time_s,output,label (17 significant digits).
void write_trace_csv(const SimTrace& trace, std::ostream& out);
void write_trace_csv(const SimTrace& trace, const std::string& path);

/// Reads the trace CSV written above. require_labels makes a missing label
/// column a DataError; otherwise labels default to 1.
SimTrace read_trace_csv(const std::string& path, bool require_labels);

} // namespace emodm
