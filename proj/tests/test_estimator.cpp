#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "fnreg/estimator.hpp"
#include "oracles.hpp"

using namespace fnreg;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

std::vector<double> stdvec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Random distances; `ties` rounds them to a coarse lattice so duplicates are common.
std::vector<double> random_distances(std::mt19937_64& rng, int n, bool ties) {
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> d(n);
    for (auto& x : d)
        x = ties ? std::round(u(rng) * 4.0) / 4.0 : u(rng);
    return d;
}

} // namespace

TEST_CASE("ranking examples") {
    const auto r = rank_by_distance(vec({0.4, 0.1, 0.3, 0.2}));
    CHECK(r == RankVector{1, 3, 2, 0});
    CHECK(rank_by_distance(Eigen::VectorXd::Constant(5, 0.7)) == RankVector{0, 1, 2, 3, 4});
}

TEST_CASE("radius examples") {
    CHECK(knn_radius_from_distances(vec({0.1, 0.5, 0.3}), 2) == 0.3);
    CHECK(knn_radius_from_distances(vec({0.1, 0.5, 0.3}), 3) == 0.5);
    CHECK(knn_radius_from_distances(vec({0.2, 0.2, 0.7}), 2) == 0.2);
    CHECK_THROWS_AS(knn_radius_from_distances(vec({0.1, 0.5}), 3), ConfigError);
    CHECK_THROWS_AS(knn_radius_from_distances(vec({0.1, 0.5}), 0), ConfigError);
}

TEST_CASE("weight examples") {
    const auto w = weights_from_distances(SimpleKnn{2}, vec({0.4, 0.1, 0.3, 0.2}));
    CHECK(w.weights == vec({0.0, 0.5, 0.0, 0.5}));
    CHECK(w.radius == 0.2);

    const Eigen::VectorXd d = vec({0.3, 0.9, 0.1, 0.5, 0.7});
    const auto nw = weights_from_distances(NadarayaWatson{1.0, Kernel::uniform}, d);
    for (double v : nw.weights)
        CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(nw.k_effective == 5);

    const auto tri = weights_from_distances(NadarayaWatson{1.0, Kernel::triangle}, d);
    CHECK_FALSE(tri.envelope_compliant);
    CHECK(tri.weights[2] == doctest::Approx(0.9 / 2.5));
}

TEST_CASE("empty neighborhood is an error") {
    try {
        (void)weights_from_distances(NadarayaWatson{0.05, Kernel::uniform}, vec({0.3, 0.2}));
        FAIL("expected EmptyNeighborhood");
    } catch (const EmptyNeighborhood& e) {
        CHECK(std::string(e.what()).find("empty neighborhood") != std::string::npos);
    }
    // triangle puts zero mass on the boundary point itself
    CHECK_THROWS_AS(weights_from_distances(NadarayaWatson{0.2, Kernel::triangle}, vec({0.3, 0.2})),
                    EmptyNeighborhood);
}

TEST_CASE("closed ball: points at distance H are inside") {
    const auto w = weights_from_distances(KernelKnn{2, Kernel::uniform}, vec({0.1, 0.2, 0.2, 0.9}));
    CHECK(w.k_effective == 3);
    CHECK(w.weights[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("brute-force agreement on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 50);
    for (int inst = 0; inst < 1000; ++inst) {
        const int n = size(rng);
        const bool ties = inst % 2 == 0;
        const auto d = random_distances(rng, n, ties);
        const Eigen::VectorXd de = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
        const int k = std::uniform_int_distribution<int>(1, n)(rng);

        const auto r = rank_by_distance(de);
        const auto ro = oracle::ranks(d);
        REQUIRE(r.size() == ro.size());
        for (int i = 0; i < n; ++i)
            CHECK(std::size_t(r[i]) == ro[i]);

        CHECK(knn_radius_from_distances(de, k) == oracle::radius(d, k));

        const auto check_weights = [&](const WeightVector& w, const std::vector<double>& expect) {
            for (int i = 0; i < n; ++i)
                CHECK(std::abs(w.weights[i] - expect[i]) <= 1e-12);
            CHECK(std::abs(w.weights.sum() - 1.0) <= 1e-12);
            for (int i = 1; i < n; ++i)
                CHECK(w.sorted[i] <= w.sorted[i - 1]);
        };
        check_weights(weights_from_distances(SimpleKnn{k}, de), oracle::knn_weights(d, k));
        const double h = oracle::radius(d, k);
        check_weights(weights_from_distances(KernelKnn{k, Kernel::uniform}, de), oracle::kernel_weights(d, h, false));
        if (h > 0.0 && std::count(d.begin(), d.end(), h) < long(d.size())) {
            // triangle kernel needs some point strictly inside the ball
            bool inside = false;
            for (double v : d)
                inside = inside || v < h;
            if (inside)
                check_weights(weights_from_distances(KernelKnn{k, Kernel::triangle}, de),
                              oracle::kernel_weights(d, h, true));
        }
        const double bw = 0.25 + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
        bool any = false;
        for (double v : d)
            any = any || v <= bw;
        if (any)
            check_weights(weights_from_distances(NadarayaWatson{bw, Kernel::uniform}, de),
                          oracle::kernel_weights(d, bw, false));

        // estimate against a reverse-order accumulation
        const int grid = 1 + inst % 5;
        std::vector<std::vector<double>> ys(n, std::vector<double>(grid));
        Eigen::MatrixXd ym(grid, n);
        std::normal_distribution<double> g;
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < grid; ++t)
                ym(t, i) = ys[i][t] = g(rng);
        const auto w = weights_from_distances(SimpleKnn{k}, de);
        const auto expect = oracle::weighted_sum(oracle::knn_weights(d, k), ys);
        const Eigen::VectorXd got = estimate(w, ym);
        for (int t = 0; t < grid; ++t)
            CHECK(std::abs(got[t] - expect[t]) <= 1e-12);
    }
}

TEST_CASE("uniform kernel kNN equals simple kNN on distinct distances") {
    std::mt19937_64 rng(99);
    for (int inst = 0; inst < 300; ++inst) {
        const int n = 2 + inst % 48;
        const auto d = random_distances(rng, n, false);
        const Eigen::VectorXd de = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
        const int k = 1 + inst % n;
        const auto a = weights_from_distances(SimpleKnn{k}, de);
        const auto b = weights_from_distances(KernelKnn{k, Kernel::uniform}, de);
        CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(a.radius == b.radius);
    }
}

TEST_CASE("NW at h = H matches kernel kNN") {
    std::mt19937_64 rng(7);
    for (int inst = 0; inst < 200; ++inst) {
        const int n = 5 + inst % 40;
        const auto d = random_distances(rng, n, inst % 3 == 0);
        const Eigen::VectorXd de = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
        const int k = 1 + inst % n;
        for (Kernel kern : {Kernel::uniform, Kernel::triangle}) {
            const double h = knn_radius_from_distances(de, k);
            if (!(h > 0.0) || de.minCoeff() >= h)
                continue;
            const auto a = weights_from_distances(KernelKnn{k, kern}, de);
            const auto b = weights_from_distances(NadarayaWatson{h, kern}, de);
            CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("estimate examples") {
    const auto grid = GridD::uniform(0.0, 1.0, 11);
    const auto t = CurveD::from_function(grid, [](double s) { return s; });
    auto w = weights_from_distances(SimpleKnn{2}, vec({0.1, 0.2}));
    const CurveD z = estimate(w, std::vector<CurveD>{t, -t});
    CHECK(z.values().cwiseAbs().maxCoeff() == 0.0);

    const auto c = CurveD::from_function(grid, [](double s) { return std::cos(s); });
    w = weights_from_distances(NadarayaWatson{1.0, Kernel::triangle}, vec({0.1, 0.5, 0.3}));
    const CurveD same = estimate(w, std::vector<CurveD>{c, c, c});
    CHECK((same.values() - c.values()).cwiseAbs().maxCoeff() <= 1e-15);

    const auto other = CurveD::zero(GridD::uniform(0.0, 2.0, 11));
    CHECK_THROWS_AS(estimate(w, std::vector<CurveD>{c, other, c}), GridMismatch);
    CHECK_THROWS_AS(estimate(w, Eigen::MatrixXd::Zero(3, 2)), DataError);
}

TEST_CASE("convexity bound") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    const auto grid = GridD::uniform(0.0, 1.0, 9);
    for (int inst = 0; inst < 100; ++inst) {
        const int n = 3 + inst % 20;
        Eigen::MatrixXd ys(9, n);
        for (auto& v : ys.reshaped())
            v = g(rng);
        Eigen::VectorXd r(9);
        for (auto& v : r)
            v = g(rng);
        const auto d = random_distances(rng, n, false);
        const auto w = weights_from_distances(KernelKnn{2 + inst % (n - 1), Kernel::triangle},
                                              Eigen::Map<const Eigen::VectorXd>(d.data(), n));
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, grid_norm(*grid, ys.col(i) - r));
        CHECK(grid_norm(*grid, estimate(w, ys) - r) <= worst + 1e-12);
    }
}

TEST_CASE("weight statistics") {
    const auto w = weights_from_distances(SimpleKnn{4}, Eigen::VectorXd::LinSpaced(10, 0.1, 1.0));
    const auto s = weight_stats(w, 4);
    CHECK(s.v_n1 == 0.25);
    CHECK(s.c_n2 == doctest::Approx(0.5));
    CHECK(s.b_n == 0.0);

    const auto u = weights_from_distances(NadarayaWatson{5.0, Kernel::uniform}, Eigen::VectorXd::LinSpaced(16, 0.1, 1.0));
    const auto su = weight_stats(u, 16);
    CHECK(su.b_n == 0.0);
    CHECK(su.c_n2 == doctest::Approx(0.25));

    std::mt19937_64 rng(3);
    for (int inst = 0; inst < 200; ++inst) {
        const int n = 2 + inst % 40;
        const auto d = random_distances(rng, n, inst % 2 == 0);
        const Eigen::VectorXd de = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
        const int k = 1 + inst % n;
        const WeightScheme scheme = inst % 3 == 0 ? WeightScheme(SimpleKnn{k})
                                                  : WeightScheme(NadarayaWatson{0.1 + 1.5 * de.maxCoeff(), Kernel::triangle});
        const auto wv = weights_from_distances(scheme, de);
        // sort-and-sum reference
        std::vector<double> sorted = stdvec(wv.weights);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        double sq = 0.0, tail = 0.0;
        for (int i = 0; i < n; ++i) {
            sq += sorted[i] * sorted[i];
            if (i >= k)
                tail += sorted[i];
        }
        const auto st = weight_stats(wv, k);
        CHECK(st.v_n1 == sorted[0]);
        CHECK(st.c_n2 == doctest::Approx(std::sqrt(sq)).epsilon(1e-14));
        CHECK(st.b_n == doctest::Approx(tail).epsilon(1e-12));
        CHECK(st.v_n1 >= 1.0 / n - 1e-15);
        CHECK(st.v_n1 <= st.c_n2 + 1e-15);
        CHECK(st.c_n2 <= std::sqrt(st.v_n1) + 1e-15);
        CHECK(st.c_n2 >= 1.0 / std::sqrt(double(n)) - 1e-15);
    }
}

TEST_CASE("custom weight sequences") {
    const Eigen::VectorXd d = vec({0.5, 0.1, 0.3, 0.9});
    const auto w = weights_from_sequence(vec({0.5, 0.3, 0.2, 0.0}), d);
    CHECK(w.weights == vec({0.2, 0.5, 0.3, 0.0}));
    CHECK(w.k_effective == 3);
    CHECK(w.radius == 0.5);
    CHECK_THROWS_AS(weights_from_sequence(vec({0.2, 0.3, 0.5, 0.0}), d), DataError);
    CHECK_THROWS_AS(weights_from_sequence(vec({0.5, 0.3, 0.1, 0.0}), d), DataError);
}

TEST_CASE("metric-driven ranking") {
    Eigen::MatrixXd xs(2, 4);
    xs << 0, 3, 1, 0,
          1, 0, 1, 0.5;
    const auto r = rank_neighbors(xs, Eigen::Vector2d::Zero(), SemiMetric::euclidean());
    CHECK(r == RankVector{3, 0, 2, 1});
    CHECK(knn_radius(xs, Eigen::Vector2d::Zero(), SemiMetric::euclidean(), 3) == doctest::Approx(std::sqrt(2.0)));
}
