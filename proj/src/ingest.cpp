#include "emodm/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "emodm/errors.hpp"

namespace emodm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned long>(y - era * 400);
    const unsigned long doy = (153ul * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

// Accepts a plain real or an ISO-8601 date (YYYY-MM-DD, parsed to days
// since 1970-01-01). Throws DataError with the location on failure.
double parse_timestamp(const std::string& raw, const std::string& where) {
    const std::string cell = trim(raw);
    if (cell.size() == 10 && cell[4] == '-' && cell[7] == '-') {
        try {
            const long y = std::stol(cell.substr(0, 4));
            const unsigned m = static_cast<unsigned>(std::stoul(cell.substr(5, 2)));
            const unsigned d = static_cast<unsigned>(std::stoul(cell.substr(8, 2)));
            if (m >= 1 && m <= 12 && d >= 1 && d <= 31) {
                return static_cast<double>(days_from_civil(y, m, d));
            }
        } catch (const std::exception&) {
            // fall through to the numeric attempt
        }
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used == cell.size()) return v;
    } catch (const std::exception&) {
    }
    throw DataError(where + ": cannot parse timestamp '" + cell + "'");
}

double parse_value(const std::string& raw, const std::string& where) {
    const std::string cell = trim(raw);
    if (cell.empty()) {
        throw DataError(where + ": blank value cell");
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used == cell.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw DataError(where + ": cannot parse value '" + cell + "'");
}

std::string cell_name(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col + 1);
}

struct KeyedPoint {
    double timestamp;
    double value;
};

} // namespace

Dataset read_csv(const std::string& path, CsvLayout layout) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ": empty file, header expected");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);

    std::map<std::string, std::vector<KeyedPoint>> points;
    std::size_t row = 1;

    if (layout == CsvLayout::long_form) {
        if (header.size() < 3) {
            throw DataError(path + ": long layout needs (key, timestamp, value) columns");
        }
        while (std::getline(in, line)) {
            ++row;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            const auto cells = split_line(line);
            if (cells.size() < 3) {
                throw DataError(path + ": row " + std::to_string(row) + " has fewer than 3 cells");
            }
            const std::string key = trim(cells[0]);
            if (key.empty()) {
                throw DataError(path + ": " + cell_name(row, 0) + ": blank key");
            }
            const double t = parse_timestamp(cells[1], path + ": " + cell_name(row, 1));
            const double v = parse_value(cells[2], path + ": " + cell_name(row, 2));
            points[key].push_back({t, v});
        }
    } else {
        if (header.size() < 2) {
            throw DataError(path + ": wide layout needs a timestamp column plus keys");
        }
        for (std::size_t c = 1; c < header.size(); ++c) {
            if (trim(header[c]).empty()) {
                throw DataError(path + ": blank key name in header column " + std::to_string(c + 1));
            }
        }
        while (std::getline(in, line)) {
            ++row;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            const auto cells = split_line(line);
            if (cells.size() != header.size()) {
                throw DataError(path + ": row " + std::to_string(row) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(header.size()));
            }
            const double t = parse_timestamp(cells[0], path + ": " + cell_name(row, 0));
            for (std::size_t c = 1; c < header.size(); ++c) {
                const double v = parse_value(cells[c], path + ": " + cell_name(row, c));
                points[trim(header[c])].push_back({t, v});
            }
        }
    }

    Dataset data;
    for (auto& [key, series] : points) {
        std::stable_sort(series.begin(), series.end(),
                         [](const KeyedPoint& a, const KeyedPoint& b) {
                             return a.timestamp < b.timestamp;
                         });
        for (std::size_t i = 1; i < series.size(); ++i) {
            if (series[i].timestamp == series[i - 1].timestamp) {
                throw DataError(path + ": duplicate timestamp for key '" + key + "'");
            }
        }
        RawSeries raw;
        raw.values.reserve(series.size());
        raw.timestamps.reserve(series.size());
        for (const auto& p : series) {
            raw.timestamps.push_back(p.timestamp);
            raw.values.push_back(p.value);
        }
        data.series_by_key.emplace(key, std::move(raw));
    }
    if (data.series_by_key.empty()) {
        throw DataError(path + ": no data rows");
    }
    return data;
}

RawSeries aggregate_sum(const Dataset& data, const std::vector<std::string>& keys) {
    std::vector<std::string> selected = keys;
    if (selected.empty()) {
        for (const auto& [key, series] : data.series_by_key) selected.push_back(key);
    }
    if (selected.empty()) {
        throw DataError("nothing to aggregate: dataset is empty");
    }
    const RawSeries* first = nullptr;
    for (const auto& key : selected) {
        const auto it = data.series_by_key.find(key);
        if (it == data.series_by_key.end()) {
            throw DataError("unknown key '" + key + "'");
        }
        if (!first) {
            first = &it->second;
            continue;
        }
        const RawSeries& s = it->second;
        if (s.values.size() != first->values.size()) {
            throw DataError("key '" + key + "' has " + std::to_string(s.values.size()) +
                            " rows, expected " + std::to_string(first->values.size()));
        }
        for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
            if (s.timestamps[i] != first->timestamps[i]) {
                throw DataError("key '" + key + "' diverges at position " + std::to_string(i) +
                                ": timestamp " + std::to_string(s.timestamps[i]) + " vs " +
                                std::to_string(first->timestamps[i]));
            }
        }
    }

    RawSeries out;
    out.values.assign(first->values.size(), 0.0);
    out.timestamps = first->timestamps;
    for (const auto& key : selected) {
        const RawSeries& s = data.series_by_key.at(key);
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            out.values[i] += s.values[i];
        }
    }
    return out;
}

void write_csv(const Dataset& data, const std::string& path) {
    if (data.series_by_key.empty()) {
        throw DataError("nothing to write: dataset is empty");
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    const RawSeries& first = data.series_by_key.begin()->second;
    for (const auto& [key, series] : data.series_by_key) {
        if (series.values.size() != first.values.size()) {
            throw DataError("key '" + key + "' length differs; wide layout needs aligned series");
        }
    }
    out << "timestamp";
    for (const auto& [key, series] : data.series_by_key) out << ',' << key;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < first.values.size(); ++i) {
        const double t = (i < first.timestamps.size()) ? first.timestamps[i]
                                                       : static_cast<double>(i);
        std::snprintf(buf, sizeof(buf), "%.17g", t);
        out << buf;
        for (const auto& [key, series] : data.series_by_key) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.values[i]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

} // namespace emodm
