#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emodm/detector.hpp"
#include "emodm/series.hpp"
#include "emodm/sim_trace.hpp"

namespace emodm {

struct BaselineResult {
    std::string method_name;
    std::vector<std::size_t> flagged;  // ascending rate indices
    double abnormal_fraction = 0.0;    // |flagged| / valid-sample-count
    double wall_time = 0.0;            // seconds, filled by the harness
};

/// Least-squares line over index -> rate; flags |standardized residual|
/// >= z_threshold. A perfectly linear series has no residual spread and
/// flags nothing.
BaselineResult lrm_detector(const RateSeries& rates, double z_threshold);

/// Gaussian-kernel leave-one-out density with a Silverman-style plug-in
/// bandwidth; flags points whose density falls strictly below the given
/// quantile of all densities. Throws NumericalError on zero bandwidth.
BaselineResult kde_detector(const RateSeries& rates, double density_quantile);

/// Distance to the k-th nearest neighbour; flags scores strictly above the
/// score_quantile of all scores.
BaselineResult knn_detector(const RateSeries& rates, std::size_t k, double score_quantile);

/// Two-means clustering in 1-D from a seeded start; the smaller cluster is
/// flagged (ties go to the cluster farther from the global mean). An empty
/// cluster triggers one re-seed, then NumericalError.
BaselineResult kmeans_detector(const RateSeries& rates, std::uint64_t seed);

/// Isolation forest on the 1-D samples with path-length scoring; flags
/// scores strictly above the score_quantile of all scores.
BaselineResult iforest_detector(const RateSeries& rates, std::size_t trees,
                                std::size_t subsample, double score_quantile,
                                std::uint64_t seed);

/// Local outlier factor; optional extra method, off by default in the
/// harness.
BaselineResult lof_detector(const RateSeries& rates, std::size_t k, double score_quantile);

struct ComparisonSettings {
    DetectionConfig detection;     // the mixture pipeline's configuration
    double lrm_z_threshold = 3.0;
    double kde_density_quantile = 0.05;
    std::size_t knn_k = 10;
    double knn_score_quantile = 0.95;
    std::size_t iforest_trees = 100;
    std::size_t iforest_subsample = 256; // capped at N
    double iforest_score_quantile = 0.95;
    bool with_lof = false;
    std::size_t lof_k = 10;
    double lof_score_quantile = 0.95;
};

struct ComparisonRow {
    std::string method_name;
    std::string error; // empty on success; a failing method never disturbs the others
    std::size_t anomalies_detected = 0;
    double abnormal_fraction = 0.0;
    std::optional<double> failure_probability; // mixture pipeline only
    double wall_time = 0.0;
    std::size_t true_count = 0;                 // ground-truth abnormal rate points
    std::optional<double> segment_recall;       // empty when the trace has no abnormal segment
};

/// Runs the rate transform once, then every detector on the same samples,
/// wall-timing each and scoring against the trace labels. Throws DataError
/// when the trace is too short to produce rates.
std::vector<ComparisonRow> run_comparison(const SimTrace& trace,
                                          const ComparisonSettings& settings,
                                          std::uint64_t seed);

} // namespace emodm
