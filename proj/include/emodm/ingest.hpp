#pragma once

#include <map>
#include <string>
#include <vector>

#include "emodm/series.hpp"

namespace emodm {

enum class CsvLayout { long_form, wide };

struct Dataset {
    std::map<std::string, RawSeries> series_by_key;
    std::string frequency_hint;
};

/// Loads a UTF-8 comma-separated file with a mandatory header. Long layout
/// carries (key, timestamp, value) columns; wide layout carries a
/// timestamp column followed by one value column per key. Timestamps are
/// ISO-8601 dates (stored as days since 1970-01-01) or plain reals. Rows
/// are sorted by timestamp per key; duplicates and unparseable or blank
/// cells raise DataError naming the spot.
Dataset read_csv(const std::string& path, CsvLayout layout);

/// Element-wise sum across the selected keys (all keys when the selection
/// is empty). The selected series must share identical timestamp vectors;
/// the first divergence is reported otherwise.
RawSeries aggregate_sum(const Dataset& data, const std::vector<std::string>& keys);

/// Writes the wide layout with 17 significant digits, keys in map order.
void write_csv(const Dataset& data, const std::string& path);

} // namespace emodm
