#include "emodm/sim_trace.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "emodm/errors.hpp"

namespace emodm {

bool FaultSchedule::is_abnormal(std::size_t period_1based) const {
    for (const auto& [s, e] : abnormal_segments) {
        if (period_1based >= s && period_1based <= e) return true;
    }
    return false;
}

std::size_t FaultSchedule::abnormal_period_count() const {
    std::size_t n = 0;
    for (const auto& [s, e] : abnormal_segments) n += e - s + 1;
    return n;
}

void validate_schedule(const FaultSchedule& schedule) {
    if (schedule.total_periods == 0 || !(schedule.period_duration > 0.0)) {
        throw std::invalid_argument("schedule needs positive periods and duration");
    }
    std::size_t prev_end = 0;
    for (const auto& [s, e] : schedule.abnormal_segments) {
        if (s < 1 || e < s || e > schedule.total_periods) {
            throw std::invalid_argument("abnormal segment out of range");
        }
        if (s <= prev_end) {
            throw std::invalid_argument("abnormal segments must be ordered and disjoint");
        }
        prev_end = e;
    }
    if (!schedule.abnormal_segments.empty() && schedule.abnormal_segments.front().first == 1) {
        throw std::invalid_argument("the first period must be normal");
    }
}

namespace {

std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
    out << "period_index,time_s,output,label\n";
    for (std::size_t i = 0; i < trace.outputs.values.size(); ++i) {
        const double t = (i < trace.outputs.timestamps.size())
                             ? trace.outputs.timestamps[i]
                             : static_cast<double>(i);
        out << (i + 1) << ',' << format17(t) << ',' << format17(trace.outputs.values[i])
            << ',' << trace.labels[i] << '\n';
    }
}

void write_trace_csv(const SimTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    write_trace_csv(trace, out);
}

SimTrace read_trace_csv(const std::string& path, bool require_labels) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ": empty file, header expected");
    }

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    int time_col = -1, output_col = -1, label_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "time_s") time_col = static_cast<int>(c);
        if (header[c] == "output") output_col = static_cast<int>(c);
        if (header[c] == "label") label_col = static_cast<int>(c);
    }
    if (output_col < 0) {
        throw DataError(path + ": header must name an 'output' column");
    }
    if (require_labels && label_col < 0) {
        throw DataError(path + ": a 'label' column is required for this command");
    }

    SimTrace trace;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < header.size()) {
            throw DataError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        }
        try {
            trace.outputs.values.push_back(std::stod(cells[output_col]));
            if (time_col >= 0) {
                trace.outputs.timestamps.push_back(std::stod(cells[time_col]));
            }
            if (label_col >= 0) {
                const int label = std::stoi(cells[label_col]);
                if (label != 1 && label != 2) {
                    throw DataError(path + ": row " + std::to_string(row) +
                                    " label must be 1 or 2");
                }
                trace.labels.push_back(label);
            } else {
                trace.labels.push_back(1);
            }
        } catch (const std::invalid_argument&) {
            throw DataError(path + ": row " + std::to_string(row) + " has an unparseable cell");
        } catch (const std::out_of_range&) {
            throw DataError(path + ": row " + std::to_string(row) + " has an out-of-range cell");
        }
    }
    if (trace.outputs.values.empty()) {
        throw DataError(path + ": no data rows");
    }
    return trace;
}

} // namespace emodm
