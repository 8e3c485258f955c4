#include "emodm/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "emodm/errors.hpp"
#include "emodm/preprocess.hpp"

namespace emodm {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct ValidView {
    std::vector<double> values;
    std::vector<std::size_t> indices; // rate indices, input order
};

ValidView valid_view(const RateSeries& rates, std::size_t minimum) {
    ValidView v;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates.valid[i]) {
            v.values.push_back(rates.rates[i]);
            v.indices.push_back(i);
        }
    }
    if (v.values.size() < minimum) {
        throw NumericalError("too few samples: " + std::to_string(v.values.size()) +
                             " valid, need at least " + std::to_string(minimum));
    }
    return v;
}

double quantile_of(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

BaselineResult make_result(std::string name, std::vector<std::size_t> flagged,
                           std::size_t valid_count) {
    std::sort(flagged.begin(), flagged.end());
    BaselineResult r;
    r.method_name = std::move(name);
    r.abnormal_fraction =
        static_cast<double>(flagged.size()) / static_cast<double>(valid_count);
    r.flagged = std::move(flagged);
    return r;
}

// Average unsuccessful-search path length of a binary search tree with n
// external nodes.
double average_path_length(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const double m = static_cast<double>(n);
    const double harmonic = std::log(m - 1.0) + 0.5772156649015329;
    return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

struct IsoNode {
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0; // leaves only
};

int build_iso_tree(std::vector<IsoNode>& nodes, std::vector<double>& values,
                   std::size_t begin, std::size_t end, std::size_t depth,
                   std::size_t depth_limit, std::mt19937_64& rng) {
    const std::size_t size = end - begin;
    const auto [mn_it, mx_it] = std::minmax_element(values.begin() + begin, values.begin() + end);
    const double mn = *mn_it;
    const double mx = *mx_it;
    if (size <= 1 || depth >= depth_limit || mn == mx) {
        nodes.push_back({0.0, -1, -1, size});
        return static_cast<int>(nodes.size() - 1);
    }
    std::uniform_real_distribution<double> dist(mn, mx);
    double split = dist(rng);
    if (split == mn) split = std::nextafter(mn, mx); // keep both sides reachable
    const auto mid_it = std::partition(values.begin() + begin, values.begin() + end,
                                       [split](double v) { return v < split; });
    const auto mid = static_cast<std::size_t>(mid_it - values.begin());
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back({split, -1, -1, 0});
    const int l = build_iso_tree(nodes, values, begin, mid, depth + 1, depth_limit, rng);
    const int r = build_iso_tree(nodes, values, mid, end, depth + 1, depth_limit, rng);
    nodes[idx].left = l;
    nodes[idx].right = r;
    return idx;
}

double iso_path_length(const std::vector<IsoNode>& nodes, int root, double v) {
    double depth = 0.0;
    int cur = root;
    while (nodes[cur].left >= 0) {
        cur = (v < nodes[cur].split) ? nodes[cur].left : nodes[cur].right;
        depth += 1.0;
    }
    return depth + average_path_length(nodes[cur].size);
}

} // namespace

BaselineResult lrm_detector(const RateSeries& rates, double z_threshold) {
    if (!(z_threshold > 0.0)) {
        throw std::invalid_argument("z_threshold must be positive");
    }
    const ValidView v = valid_view(rates, 10);
    const auto n = static_cast<double>(v.values.size());

    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        sx += static_cast<double>(v.indices[i]);
        sy += v.values[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        const double dx = static_cast<double>(v.indices[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (v.values[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;

    std::vector<double> resid(v.values.size());
    double ssr = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        resid[i] = v.values[i] - (intercept + slope * static_cast<double>(v.indices[i]));
        ssr += resid[i] * resid[i];
    }
    const double sigma = std::sqrt(ssr / (n - 2.0));

    std::vector<std::size_t> flagged;
    if (sigma > 0.0) { // a perfect fit leaves nothing to flag
        for (std::size_t i = 0; i < resid.size(); ++i) {
            if (std::abs(resid[i]) / sigma >= z_threshold) {
                flagged.push_back(v.indices[i]);
            }
        }
    }
    return make_result("LRM", std::move(flagged), v.values.size());
}

BaselineResult kde_detector(const RateSeries& rates, double density_quantile) {
    if (density_quantile < 0.0 || density_quantile > 1.0) {
        throw std::invalid_argument("density_quantile must lie in [0, 1]");
    }
    const ValidView v = valid_view(rates, 10);
    const auto n = static_cast<double>(v.values.size());

    double mean = 0.0;
    for (double x : v.values) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v.values) ss += (x - mean) * (x - mean);
    const double sigma = std::sqrt(ss / (n - 1.0));
    const double iqr = quantile_of(v.values, 0.75) - quantile_of(v.values, 0.25);
    const double spread = (iqr > 0.0) ? std::min(sigma, iqr / 1.34) : sigma;
    const double bandwidth = 0.9 * spread * std::pow(n, -0.2);
    if (!(bandwidth > 0.0)) {
        throw NumericalError("zero bandwidth: samples have no spread");
    }

    const double norm = 1.0 / ((n - 1.0) * bandwidth * std::sqrt(2.0 * M_PI));
    std::vector<double> density(v.values.size(), 0.0);
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < v.values.size(); ++j) {
            if (j == i) continue;
            const double z = (v.values[i] - v.values[j]) / bandwidth;
            acc += std::exp(-0.5 * z * z);
        }
        density[i] = norm * acc;
    }

    const double threshold = quantile_of(density, density_quantile);
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < density.size(); ++i) {
        if (density[i] < threshold) flagged.push_back(v.indices[i]);
    }
    return make_result("KDE", std::move(flagged), v.values.size());
}

BaselineResult knn_detector(const RateSeries& rates, std::size_t k, double score_quantile) {
    if (score_quantile < 0.0 || score_quantile > 1.0) {
        throw std::invalid_argument("score_quantile must lie in [0, 1]");
    }
    const ValidView v = valid_view(rates, 2);
    if (k == 0 || k >= v.values.size()) {
        throw std::invalid_argument("k must satisfy 1 <= k < valid sample count");
    }

    std::vector<std::size_t> order(v.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v.values[a] < v.values[b]; });

    std::vector<double> scores(v.values.size(), 0.0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        // In one dimension the k nearest neighbours form a window around the
        // point in sorted order; grow it greedily.
        std::size_t l = pos, r = pos;
        double kth = 0.0;
        const double x = v.values[order[pos]];
        for (std::size_t step = 0; step < k; ++step) {
            const double dl = (l > 0) ? x - v.values[order[l - 1]]
                                      : std::numeric_limits<double>::infinity();
            const double dr = (r + 1 < order.size()) ? v.values[order[r + 1]] - x
                                                     : std::numeric_limits<double>::infinity();
            if (dl <= dr) {
                kth = dl;
                --l;
            } else {
                kth = dr;
                ++r;
            }
        }
        scores[order[pos]] = kth;
    }

    const double threshold = quantile_of(scores, score_quantile);
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > threshold) flagged.push_back(v.indices[i]);
    }
    return make_result("KNN", std::move(flagged), v.values.size());
}

BaselineResult kmeans_detector(const RateSeries& rates, std::uint64_t seed) {
    const ValidView v = valid_view(rates, 10);
    const std::size_t n = v.values.size();

    auto attempt = [&](std::uint64_t s) -> std::vector<std::size_t> {
        std::mt19937_64 rng(splitmix64(s));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        double c0 = v.values[pick(rng)];
        double c1 = c0;
        for (int tries = 0; tries < 200 && c1 == c0; ++tries) {
            c1 = v.values[pick(rng)];
        }
        if (c1 == c0) {
            throw NumericalError("cannot seed two distinct centroids");
        }

        std::vector<int> assign(n, 0);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                const int a = (std::abs(v.values[i] - c0) <= std::abs(v.values[i] - c1)) ? 0 : 1;
                if (a != assign[i]) {
                    assign[i] = a;
                    changed = true;
                }
            }
            double sum[2] = {0.0, 0.0};
            std::size_t count[2] = {0, 0};
            for (std::size_t i = 0; i < n; ++i) {
                sum[assign[i]] += v.values[i];
                ++count[assign[i]];
            }
            if (count[0] == 0 || count[1] == 0) {
                throw NumericalError("empty cluster");
            }
            c0 = sum[0] / static_cast<double>(count[0]);
            c1 = sum[1] / static_cast<double>(count[1]);
            if (!changed) break;
        }

        std::size_t count[2] = {0, 0};
        for (int a : assign) ++count[a];
        int flagged_cluster;
        if (count[0] != count[1]) {
            flagged_cluster = (count[0] < count[1]) ? 0 : 1;
        } else {
            double mean = 0.0;
            for (double x : v.values) mean += x;
            mean /= static_cast<double>(n);
            flagged_cluster = (std::abs(c0 - mean) > std::abs(c1 - mean)) ? 0 : 1;
        }
        std::vector<std::size_t> flagged;
        for (std::size_t i = 0; i < n; ++i) {
            if (assign[i] == flagged_cluster) flagged.push_back(v.indices[i]);
        }
        return flagged;
    };

    std::vector<std::size_t> flagged;
    try {
        flagged = attempt(seed);
    } catch (const NumericalError&) {
        flagged = attempt(splitmix64(seed ^ 0xDEADBEEFull)); // one re-seed, then give up
    }
    return make_result("K-means", std::move(flagged), n);
}

BaselineResult iforest_detector(const RateSeries& rates, std::size_t trees,
                                std::size_t subsample, double score_quantile,
                                std::uint64_t seed) {
    if (trees == 0 || subsample < 2) {
        throw std::invalid_argument("need at least one tree and subsample >= 2");
    }
    if (score_quantile < 0.0 || score_quantile > 1.0) {
        throw std::invalid_argument("score_quantile must lie in [0, 1]");
    }
    const ValidView v = valid_view(rates, 2);
    if (subsample > v.values.size()) {
        throw std::invalid_argument("subsample exceeds the valid sample count");
    }

    const auto depth_limit = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(subsample))));
    std::vector<double> path_sums(v.values.size(), 0.0);

    for (std::size_t t = 0; t < trees; ++t) {
        std::mt19937_64 rng(splitmix64(splitmix64(seed) ^ t));
        std::vector<double> pool = v.values;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(subsample);

        std::vector<IsoNode> nodes;
        nodes.reserve(2 * subsample);
        const int root = build_iso_tree(nodes, pool, 0, pool.size(), 0, depth_limit, rng);
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            path_sums[i] += iso_path_length(nodes, root, v.values[i]);
        }
    }

    const double c = average_path_length(subsample);
    std::vector<double> scores(v.values.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double avg = path_sums[i] / static_cast<double>(trees);
        scores[i] = (c > 0.0) ? std::exp2(-avg / c) : 1.0;
    }

    const double threshold = quantile_of(scores, score_quantile);
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > threshold) flagged.push_back(v.indices[i]);
    }
    return make_result("IF", std::move(flagged), v.values.size());
}

BaselineResult lof_detector(const RateSeries& rates, std::size_t k, double score_quantile) {
    if (score_quantile < 0.0 || score_quantile > 1.0) {
        throw std::invalid_argument("score_quantile must lie in [0, 1]");
    }
    const ValidView v = valid_view(rates, 10);
    const std::size_t n = v.values.size();
    if (k == 0 || k >= n) {
        throw std::invalid_argument("k must satisfy 1 <= k < valid sample count");
    }

    std::vector<double> k_dist(n);
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) d.emplace_back(std::abs(v.values[i] - v.values[j]), j);
        }
        std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
        k_dist[i] = d[k - 1].first;
        for (const auto& [dist, j] : d) {
            if (dist <= k_dist[i]) neighbours[i].push_back(j);
        }
    }

    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double reach = 0.0;
        for (std::size_t j : neighbours[i]) {
            reach += std::max(k_dist[j], std::abs(v.values[i] - v.values[j]));
        }
        lrd[i] = static_cast<double>(neighbours[i].size()) / std::max(reach, 1e-300);
    }

    std::vector<double> lof(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j : neighbours[i]) acc += lrd[j];
        lof[i] = acc / (static_cast<double>(neighbours[i].size()) * lrd[i]);
    }

    const double threshold = quantile_of(lof, score_quantile);
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < n; ++i) {
        if (lof[i] > threshold) flagged.push_back(v.indices[i]);
    }
    return make_result("LOF", std::move(flagged), n);
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> true_rate_segments(
    const SimTrace& trace, const RateSeries& rates) {
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t i = 0;
    while (i < rates.size()) {
        if (trace.labels[rates.origin_index[i]] != 2) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < rates.size() && trace.labels[rates.origin_index[j + 1]] == 2) ++j;
        segments.emplace_back(i, j);
        i = j + 1;
    }
    return segments;
}

double recall_of(const std::vector<std::size_t>& flagged,
                 const std::vector<std::pair<std::size_t, std::size_t>>& segments) {
    std::size_t hit = 0;
    for (const auto& [s, e] : segments) {
        const auto it = std::lower_bound(flagged.begin(), flagged.end(), s);
        if (it != flagged.end() && *it <= e) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(segments.size());
}

} // namespace

std::vector<ComparisonRow> run_comparison(const SimTrace& trace,
                                          const ComparisonSettings& settings,
                                          std::uint64_t seed) {
    const RateSeries rates = relative_change_rate(trace.outputs);
    const std::size_t valid = rates.valid_count();

    const auto segments = true_rate_segments(trace, rates);
    std::size_t true_count = 0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (trace.labels[rates.origin_index[i]] == 2) ++true_count;
    }

    struct Method {
        std::string name;
        std::function<BaselineResult()> run;
    };
    const std::size_t subsample = std::min(settings.iforest_subsample, valid);
    std::optional<double> mixture_weight;
    std::vector<Method> methods;
    methods.push_back({"EMODM", [&]() {
        FitResult fit = fit_em(rates, default_init(rates), settings.detection.fit);
        const MixtureParams params = canonicalize_components(fit.params);
        mixture_weight = params.abnormal_weight;
        const DetectionReport report = flag_and_segment(rates, params, settings.detection);
        return make_result("EMODM", report.flagged, valid);
    }});
    methods.push_back({"LRM", [&]() { return lrm_detector(rates, settings.lrm_z_threshold); }});
    methods.push_back({"KDE", [&]() { return kde_detector(rates, settings.kde_density_quantile); }});
    methods.push_back({"KNN", [&]() {
        return knn_detector(rates, settings.knn_k, settings.knn_score_quantile);
    }});
    methods.push_back({"K-means", [&]() { return kmeans_detector(rates, splitmix64(seed ^ 1)); }});
    methods.push_back({"IF", [&]() {
        return iforest_detector(rates, settings.iforest_trees, subsample,
                                settings.iforest_score_quantile, splitmix64(seed ^ 2));
    }});
    if (settings.with_lof) {
        methods.push_back({"LOF", [&]() {
            return lof_detector(rates, settings.lof_k, settings.lof_score_quantile);
        }});
    }

    std::vector<ComparisonRow> rows;
    for (const auto& method : methods) {
        ComparisonRow row;
        row.method_name = method.name;
        row.true_count = true_count;
        const auto start = std::chrono::steady_clock::now();
        try {
            const BaselineResult result = method.run();
            row.anomalies_detected = result.flagged.size();
            row.abnormal_fraction = result.abnormal_fraction;
            if (!segments.empty()) {
                row.segment_recall = recall_of(result.flagged, segments);
            }
            if (method.name == "EMODM") {
                row.failure_probability = mixture_weight;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        const auto end = std::chrono::steady_clock::now();
        row.wall_time = std::chrono::duration<double>(end - start).count();
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace emodm
