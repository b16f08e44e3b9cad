#include "doctest.h"

#include <cmath>
#include <random>

#include "fnreg/curves.hpp"

using namespace fnreg;

namespace {

// Plain-loop trapezoid rule, kept apart from the Grid weights on purpose.
double trapezoid(const Eigen::VectorXd& t, const Eigen::VectorXd& f) {
    double s = 0.0;
    for (Eigen::Index j = 1; j < t.size(); ++j)
        s += 0.5 * (t[j] - t[j - 1]) * (f[j] + f[j - 1]);
    return s;
}

Eigen::VectorXd random_values(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v)
        x = g(rng);
    return v;
}

// Orthonormal in the weighted inner product: W^{-1/2} times an orthogonal matrix.
Eigen::MatrixXd weighted_orthonormal(const GridD& grid, std::mt19937_64& rng) {
    const Eigen::Index n = grid.size();
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        a.col(j) = random_values(rng, n);
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    return grid.weights().cwiseSqrt().cwiseInverse().asDiagonal() * q;
}

} // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridD(Eigen::VectorXd::Constant(1, 0.0)), DataError);
    Eigen::VectorXd bad(3);
    bad << 0.0, 0.5, 0.5;
    CHECK_THROWS_AS(GridD{bad}, DataError);
    const auto g = GridD::uniform(0.0, 1.0, 11);
    CHECK(g->weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("inner product of constants is the interval length") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> pts{0.0, 1.0};
        for (int i = 0; i < 20; ++i)
            pts.push_back(u(rng));
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        auto grid = std::make_shared<const GridD>(Eigen::Map<Eigen::VectorXd>(pts.data(), Eigen::Index(pts.size())));
        const auto one = CurveD::from_function(grid, [](double) { return 1.0; });
        CHECK(inner_product(one, one) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("inner product of t with itself") {
    const auto grid = GridD::uniform(0.0, 1.0, 1001);
    const auto t = CurveD::from_function(grid, [](double s) { return s; });
    CHECK(std::abs(inner_product(t, t) - 1.0 / 3.0) < 1e-6);
    CHECK(std::abs(hilbert_norm(t) - 1.0 / std::sqrt(3.0)) < 1e-6);
    CHECK(inner_product(t, -t) == doctest::Approx(-inner_product(t, t)).epsilon(1e-15));
}

TEST_CASE("weights agree with a loop trapezoid rule") {
    std::mt19937_64 rng(11);
    Eigen::VectorXd t(7);
    t << -1.0, -0.3, 0.0, 0.2, 0.9, 1.5, 4.0;
    auto grid = std::make_shared<const GridD>(t);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd a = random_values(rng, 7), b = random_values(rng, 7);
        const double expect = trapezoid(t, a.cwiseProduct(b));
        CHECK(inner_product(CurveD(grid, a), CurveD(grid, b)) == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("norms of constants and zero") {
    const auto grid = GridD::uniform(0.0, 1.0, 17);
    CHECK(hilbert_norm(CurveD::zero(grid)) == 0.0);
    CHECK(hilbert_norm(CurveD::from_function(grid, [](double) { return 2.0; })) == doctest::Approx(2.0));
}

TEST_CASE("grid mismatch names both lengths") {
    const auto a = CurveD::zero(GridD::uniform(0.0, 1.0, 5));
    const auto b = CurveD::zero(GridD::uniform(0.0, 1.0, 6));
    try {
        (void)inner_product(a, b);
        FAIL("expected a mismatch");
    } catch (const GridMismatch& e) {
        const std::string msg = e.what();
        CHECK(msg.find('5') != std::string::npos);
        CHECK(msg.find('6') != std::string::npos);
    }
    // same length, different points
    const auto c = CurveD::zero(GridD::uniform(0.0, 2.0, 5));
    CHECK_THROWS_AS(a + c, GridMismatch);
}

TEST_CASE("quadrature error shrinks at least threefold per doubling") {
    auto err = [](int n) {
        const auto grid = GridD::uniform(0.0, 1.0, n);
        const auto f = CurveD::from_function(grid, [](double s) { return std::exp(s); });
        const auto g = CurveD::from_function(grid, [](double s) { return std::sin(3.0 * s); });
        // exact integral of e^t sin(3t) on [0, 1]
        const double exact = (std::exp(1.0) * (std::sin(3.0) - 3.0 * std::cos(3.0)) + 3.0) / 10.0;
        return std::abs(inner_product(f, g) - exact);
    };
    for (int n : {11, 21, 41, 81, 161})
        CHECK(err(n) / err(2 * n - 1) >= 3.0);
}

TEST_CASE("parallelogram identity") {
    std::mt19937_64 rng(5);
    const auto grid = GridD::uniform(0.0, 1.0, 64);
    for (int rep = 0; rep < 50; ++rep) {
        const CurveD a(grid, random_values(rng, 64)), b(grid, random_values(rng, 64));
        const double lhs = std::pow(hilbert_norm(a + b), 2) + std::pow(hilbert_norm(a - b), 2);
        const double rhs = 2 * std::pow(hilbert_norm(a), 2) + 2 * std::pow(hilbert_norm(b), 2);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
    }
}

TEST_CASE("l2 semi-metric") {
    const auto grid = GridD::uniform(0.0, 1.0, 33);
    const auto one = CurveD::from_function(grid, [](double) { return 1.0; });
    const auto zero = CurveD::zero(grid);
    const auto m = SemiMetric::l2(grid);
    CHECK(semi_metric(m, one, zero) == doctest::Approx(1.0));
    CHECK(semi_metric(m, one, one) == 0.0);

    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const CurveD x(grid, random_values(rng, 33)), y(grid, random_values(rng, 33));
        CHECK(semi_metric(m, x, y) == semi_metric(m, y, x));
        CHECK(semi_metric(m, x, x) == 0.0);
        CHECK(semi_metric(m, x, y) == doctest::Approx(hilbert_norm(x - y)).epsilon(1e-14));
    }
}

TEST_CASE("full projection equals l2 by Parseval") {
    std::mt19937_64 rng(21);
    Eigen::VectorXd t(25);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    t[0] = 0.0;
    for (Eigen::Index j = 1; j < 25; ++j)
        t[j] = t[j - 1] + 0.01 + u(rng);
    auto grid = std::make_shared<const GridD>(t);
    const Eigen::MatrixXd basis = weighted_orthonormal(*grid, rng);
    CHECK(gram_deviation(*grid, basis) < 1e-10);
    const auto proj = SemiMetric::projection(grid, basis, 25);
    const auto l2 = SemiMetric::l2(grid);
    for (int rep = 0; rep < 20; ++rep) {
        const CurveD x(grid, random_values(rng, 25)), y(grid, random_values(rng, 25));
        CHECK(std::abs(semi_metric(proj, x, y) - semi_metric(l2, x, y)) < 1e-8);
        CHECK(semi_metric(proj, x, y) == doctest::Approx(semi_metric(proj, y, x)).epsilon(1e-14));
    }
}

TEST_CASE("truncated projection uses the leading coefficients") {
    std::mt19937_64 rng(4);
    const auto grid = GridD::uniform(0.0, 1.0, 40);
    const Eigen::MatrixXd basis = weighted_orthonormal(*grid, rng);
    const auto proj = SemiMetric::projection(grid, basis, 3);
    const Eigen::VectorXd x = random_values(rng, 40), y = random_values(rng, 40);
    double s = 0.0;
    for (int j = 0; j < 3; ++j) {
        double c = 0.0;
        for (Eigen::Index i = 0; i < 40; ++i)
            c += grid->weights()[i] * basis(i, j) * (x[i] - y[i]);
        s += c * c;
    }
    CHECK(proj.distance(x, y) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
    // the projection may vanish on distinct curves: semi-metric, not metric
    const Eigen::VectorXd z = x + basis.col(10);
    CHECK(proj.distance(x, z) < 1e-12);
}

TEST_CASE("non-orthonormal basis is rejected") {
    const auto grid = GridD::uniform(0.0, 1.0, 20);
    Eigen::MatrixXd basis = cosine_basis(*grid, 4);
    CHECK(gram_deviation(*grid, basis) < 1e-8);
    basis.col(1) *= 1.0 + 1e-6;
    CHECK_THROWS_AS(SemiMetric::projection(grid, basis, 4), NumericError);
}

TEST_CASE("vectorized distances match pairwise calls") {
    std::mt19937_64 rng(8);
    const auto grid = GridD::uniform(0.0, 1.0, 15);
    const Eigen::MatrixXd basis = cosine_basis(*grid, 5);
    for (const auto& m : {SemiMetric::euclidean(), SemiMetric::l2(grid), SemiMetric::projection(grid, basis, 5)}) {
        Eigen::MatrixXd xs(15, 12);
        for (Eigen::Index j = 0; j < 12; ++j)
            xs.col(j) = random_values(rng, 15);
        const Eigen::VectorXd x = random_values(rng, 15);
        const Eigen::VectorXd d = m.distances(xs, x);
        for (Eigen::Index j = 0; j < 12; ++j)
            CHECK(d[j] == doctest::Approx(m.distance(xs.col(j), x)).epsilon(1e-12));
    }
}
