#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "emodm/baselines.hpp"
#include "emodm/errors.hpp"
#include "oracles.hpp"

using namespace emodm;

namespace {

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

SimTrace trace_from(const std::vector<double>& outputs, const std::vector<int>& labels) {
    SimTrace t;
    t.outputs.values = outputs;
    t.labels = labels;
    return t;
}

} // namespace

TEST_CASE("linear regression detector") {
    SUBCASE("perfectly linear rates flag nothing") {
        std::vector<double> y;
        for (int i = 0; i < 20; ++i) y.push_back(0.5 + 0.1 * i);
        const BaselineResult r = lrm_detector(oracle::make_rates(y), 3.0);
        CHECK(r.flagged.empty());
        CHECK(r.abnormal_fraction == 0.0);
    }
    SUBCASE("a grossly displaced point is the only flag") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::vector<double> y;
        for (int i = 0; i < 40; ++i) y.push_back(1.0 + 0.02 * i + noise(rng));
        // displace one point by ten residual standard deviations
        double mx = 0.0, my = 0.0;
        for (int i = 0; i < 40; ++i) { mx += i; my += y[i]; }
        mx /= 40.0; my /= 40.0;
        double sxx = 0.0, sxy = 0.0;
        for (int i = 0; i < 40; ++i) { sxx += (i - mx) * (i - mx); sxy += (i - mx) * (y[i] - my); }
        const double slope = sxy / sxx, intercept = my - slope * mx;
        double ssr = 0.0;
        for (int i = 0; i < 40; ++i) {
            const double res = y[i] - intercept - slope * i;
            ssr += res * res;
        }
        y[17] += 10.0 * std::sqrt(ssr / 38.0);
        const BaselineResult r = lrm_detector(oracle::make_rates(y), 3.0);
        REQUIRE(r.flagged.size() == 1);
        CHECK(r.flagged[0] == 17);
    }
    SUBCASE("a spike on constant rates is the only flag") {
        std::vector<double> y(30, 0.2);
        y[12] = 5.0;
        const BaselineResult r = lrm_detector(oracle::make_rates(y), 3.0);
        REQUIRE(r.flagged.size() == 1);
        CHECK(r.flagged[0] == 12);
    }
}

TEST_CASE("kernel density detector") {
    SUBCASE("the far point has the lowest leave-one-out density") {
        std::vector<double> y;
        for (int i = 0; i < 40; ++i) y.push_back(static_cast<double>(i % 10) / 10.0);
        y.push_back(50.0);
        const BaselineResult r = kde_detector(oracle::make_rates(y), 0.05);
        CHECK(contains(r.flagged, 40));
    }
    SUBCASE("identical samples have no bandwidth") {
        CHECK_THROWS_WITH_AS(kde_detector(oracle::make_rates(std::vector<double>(20, 1.0)), 0.05),
                             doctest::Contains("bandwidth"), NumericalError);
    }
    SUBCASE("quantile zero flags nothing") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> val(0.0, 1.0);
        std::vector<double> y(50);
        for (double& v : y) v = val(rng);
        CHECK(kde_detector(oracle::make_rates(y), 0.0).flagged.empty());
    }
}

TEST_CASE("k-nearest-neighbour detector") {
    SUBCASE("the outlier carries the maximal distance score") {
        std::vector<double> y;
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> val(0.0, 1.0);
        for (int i = 0; i < 30; ++i) y.push_back(val(rng));
        y.push_back(25.0);
        // brute-force oracle for the k-th neighbour distance of the outlier
        std::vector<double> d;
        for (int i = 0; i < 30; ++i) d.push_back(std::abs(y[i] - 25.0));
        std::sort(d.begin(), d.end());
        const double kth = d[2];
        CHECK(kth > 20.0);
        const BaselineResult r = knn_detector(oracle::make_rates(y), 3, 0.95);
        CHECK(contains(r.flagged, 30));
    }
    SUBCASE("identical samples score zero and flag nothing") {
        CHECK(knn_detector(oracle::make_rates(std::vector<double>(20, 2.0)), 3, 0.95)
                  .flagged.empty());
    }
    SUBCASE("quantile one flags nothing") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> val(0.0, 1.0);
        std::vector<double> y(40);
        for (double& v : y) v = val(rng);
        CHECK(knn_detector(oracle::make_rates(y), 5, 1.0).flagged.empty());
    }
    SUBCASE("k must stay below the sample count") {
        CHECK_THROWS_AS(knn_detector(oracle::make_rates({1.0, 2.0, 3.0}), 3, 0.95),
                        std::invalid_argument);
    }
}

TEST_CASE("two-means detector") {
    SUBCASE("the small far cluster is flagged") {
        std::vector<double> y(10, 0.0);
        y.push_back(100.0);
        y.push_back(101.0);
        const BaselineResult r = kmeans_detector(oracle::make_rates(y), 42);
        CHECK(r.flagged == std::vector<std::size_t>{10, 11});
    }
    SUBCASE("a balanced split reports about half the mass") {
        std::vector<double> y;
        std::mt19937_64 rng(3);
        std::normal_distribution<double> a(0.0, 0.1), b(10.0, 0.1);
        for (int i = 0; i < 25; ++i) y.push_back(a(rng));
        for (int i = 0; i < 25; ++i) y.push_back(b(rng));
        const BaselineResult r = kmeans_detector(oracle::make_rates(y), 7);
        CHECK(r.abnormal_fraction == doctest::Approx(0.5));
    }
    SUBCASE("identical samples cannot seed two centroids") {
        CHECK_THROWS_AS(kmeans_detector(oracle::make_rates(std::vector<double>(15, 4.0)), 1),
                        NumericalError);
    }
    SUBCASE("a fixed seed is reproducible") {
        std::mt19937_64 rng(21);
        std::normal_distribution<double> val(0.0, 1.0);
        std::vector<double> y(60);
        for (double& v : y) v = val(rng);
        const BaselineResult a = kmeans_detector(oracle::make_rates(y), 5);
        const BaselineResult b = kmeans_detector(oracle::make_rates(y), 5);
        CHECK(a.flagged == b.flagged);
    }
}

TEST_CASE("isolation forest detector") {
    SUBCASE("the far outlier earns the top score") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> val(0.0, 0.5);
        std::vector<double> y(100);
        for (double& v : y) v = val(rng);
        y.push_back(30.0);
        const BaselineResult r =
            iforest_detector(oracle::make_rates(y), 100, 64, 0.95, 17);
        CHECK(contains(r.flagged, 100));
    }
    SUBCASE("the degenerate single-tree configuration is defined") {
        const BaselineResult r =
            iforest_detector(oracle::make_rates({0.0, 1.0, 2.0, 10.0}), 1, 2, 0.5, 3);
        CHECK(r.abnormal_fraction >= 0.0);
        CHECK(r.abnormal_fraction <= 1.0);
    }
    SUBCASE("quantile one flags nothing") {
        std::mt19937_64 rng(32);
        std::normal_distribution<double> val(0.0, 1.0);
        std::vector<double> y(50);
        for (double& v : y) v = val(rng);
        CHECK(iforest_detector(oracle::make_rates(y), 20, 32, 1.0, 5).flagged.empty());
    }
    SUBCASE("a fixed seed is reproducible") {
        std::mt19937_64 rng(33);
        std::normal_distribution<double> val(0.0, 1.0);
        std::vector<double> y(80);
        for (double& v : y) v = val(rng);
        const BaselineResult a = iforest_detector(oracle::make_rates(y), 25, 40, 0.9, 11);
        const BaselineResult b = iforest_detector(oracle::make_rates(y), 25, 40, 0.9, 11);
        CHECK(a.flagged == b.flagged);
    }
}

TEST_CASE("local outlier factor detector") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    std::vector<double> y(40);
    for (double& v : y) v = val(rng);
    y.push_back(30.0);
    const BaselineResult r = lof_detector(oracle::make_rates(y), 5, 0.95);
    CHECK(contains(r.flagged, 40));
}

TEST_CASE("detectors ignore invalid rate entries") {
    RateSeries r = oracle::make_rates({0.1, 0.2, 0.15, 0.12, 0.18, 0.11, 0.16, 0.13, 0.19,
                                       0.14, 0.17, 9.0});
    r.valid[3] = false;
    const BaselineResult knn = knn_detector(r, 3, 0.9);
    CHECK_FALSE(contains(knn.flagged, 3));
    CHECK(knn.abnormal_fraction ==
          static_cast<double>(knn.flagged.size()) / static_cast<double>(r.valid_count()));
}

TEST_CASE("comparison harness rows and isolation") {
    SUBCASE("a healthy labeled trace yields one row per method") {
        // step pattern: rates jump where the level shifts
        std::vector<double> outputs;
        std::vector<int> labels;
        std::mt19937_64 rng(77);
        std::normal_distribution<double> noise(0.0, 0.01);
        for (int p = 0; p < 60; ++p) {
            const bool abnormal = p >= 25 && p <= 29;
            outputs.push_back((abnormal ? 3.0 : 1.0) + noise(rng));
            labels.push_back(abnormal ? 2 : 1);
        }
        const auto rows = run_comparison(trace_from(outputs, labels), ComparisonSettings{}, 1);
        REQUIRE(rows.size() == 6);
        CHECK(rows[0].method_name == "EMODM");
        for (const auto& row : rows) {
            if (!row.error.empty()) continue;
            CHECK(row.abnormal_fraction ==
                  static_cast<double>(row.anomalies_detected) / 59.0);
            CHECK(row.true_count == 5); // rates whose interval ends in the segment
            REQUIRE(row.segment_recall.has_value());
        }
        ComparisonSettings with_lof;
        with_lof.with_lof = true;
        CHECK(run_comparison(trace_from(outputs, labels), with_lof, 1).size() == 7);
    }
    SUBCASE("one failing method never disturbs the others") {
        // constant rates: the mixture fit and KDE fail, the rest return rows
        std::vector<double> outputs;
        std::vector<int> labels;
        double v = 1.0;
        for (int p = 0; p < 30; ++p) {
            outputs.push_back(v);
            v *= 2.0;
            labels.push_back(1);
        }
        const auto rows = run_comparison(trace_from(outputs, labels), ComparisonSettings{}, 1);
        REQUIRE(rows.size() == 6);
        bool some_failed = false, some_passed = false;
        for (const auto& row : rows) {
            if (row.error.empty()) {
                some_passed = true;
                CHECK_FALSE(row.segment_recall.has_value()); // all-normal trace
            } else {
                some_failed = true;
            }
        }
        CHECK(some_failed);
        CHECK(some_passed);
    }
    SUBCASE("a too-short trace is a data error") {
        CHECK_THROWS_AS(run_comparison(trace_from({1.0}, {1}), ComparisonSettings{}, 1),
                        DataError);
    }
}
