#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "fnreg/ratebench.hpp"

using namespace fnreg;

namespace {

ProcessSpec gaussian(int dim) {
    ProcessSpec s;
    s.kind = IidGaussian{dim, 1.0};
    return s;
}

ProcessSpec scalar_ar1(double rho, Innovation inn = {}) {
    ProcessSpec s;
    Ar1 a;
    a.rho = rho;
    a.innovation = inn;
    s.kind = a;
    return s;
}

ExperimentConfig base_config() {
    ExperimentConfig c;
    c.covariates = gaussian(2);
    c.metric = SemiMetric::euclidean();
    c.target = Eigen::VectorXd::Zero(2);
    const auto grid = GridD::uniform(0.0, 1.0, 21);
    c.truth = RegressionTruth::sine(grid, RegressionTruth::Profile::sine, c.metric, c.target, 1.0, 2.0);
    c.scheme.rule = Rule("ceil(n^(2/3))");
    c.n_grid = {100, 200, 400};
    c.replications = 20;
    c.seed = 99;
    return c;
}

} // namespace

TEST_CASE("rules") {
    CHECK(Rule("ceil(n^(2/3))")(1000.0) == 100.0);
    CHECK(Rule("0.8*n^-0.2")(32.0) == doctest::Approx(0.4));
    CHECK(Rule("2^3^2")(0) == 512.0);
    CHECK(Rule("-2^2")(0) == -4.0);
    CHECK(Rule("(1 + 2) * 3 - 4 / 2")(0) == 7.0);
    CHECK(Rule("min(n, 10) + max(1, 2)")(4.0) == 6.0);
    CHECK(Rule("floor(log(n)) + round(2.5) + sqrt(abs(-16)) + exp(0)")(std::exp(2.5)) == 2 + 3 + 4 + 1);
    CHECK_THROWS_AS(Rule("bandwith*n"), ConfigError);
    CHECK_THROWS_AS(Rule("ceil(n"), ConfigError);
    CHECK_THROWS_AS(Rule(""), ConfigError);
    const Rule copy = Rule("n/2");
    CHECK(copy(9.0) == 4.5);
    CHECK(copy.text() == "n/2");
}

TEST_CASE("scheme rules resolve per n") {
    SchemeRule s;
    s.rule = Rule("ceil(n^(2/3))");
    CHECK(std::get<SimpleKnn>(s.at(1000)).k == 100);
    s.rule = Rule("n^0.5");
    CHECK_THROWS_AS(s.at(10), ConfigError); // not an integer
    s.rule = Rule("2*n");
    CHECK_THROWS_AS(s.at(10), ConfigError);
    s.family = SchemeRule::Family::nw;
    s.rule = Rule("n^-0.2");
    CHECK(std::get<NadarayaWatson>(s.at(32)).h == doctest::Approx(0.5));
}

TEST_CASE("slope fitting") {
    const std::vector<double> ns{250, 500, 1000, 2000, 4000};
    std::vector<double> e;
    for (double n : ns)
        e.push_back(3.0 * std::pow(n, -0.5));
    const auto fit = fit_slope(ns, e);
    CHECK(std::abs(fit.slope + 0.5) <= 1e-12);
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)));
    CHECK(fit.residual <= 1e-12);

    CHECK_THROWS_AS(fit_slope({100, 100, 200}, {1, 1, 1}), DataError);
    CHECK_THROWS_AS(fit_slope({100, 200, 400}, {1, 0, 1}), DataError);
    CHECK_THROWS_AS(fit_slope({100, 200}, {1, 1}), DataError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> jitter(0.95, 1.05);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> j;
        for (double n : ns)
            j.push_back(std::pow(n, -0.3) * jitter(rng));
        CHECK(std::abs(fit_slope(ns, j).slope + 0.3) <= 0.05);
    }
}

TEST_CASE("regression truth constants") {
    const auto grid = GridD::uniform(0.0, 1.0, 101);
    const auto m = SemiMetric::euclidean();
    const Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    const auto sine = RegressionTruth::sine(grid, RegressionTruth::Profile::one, m, c, 0.5, 3.0);
    CHECK(sine.lipschitz_constant() == doctest::Approx(1.5));
    CHECK(sine.bound() == doctest::Approx(0.5));
    auto cov = gaussian(2);
    cov.seed = 5;
    sine.verify_lipschitz(cov);

    const auto prof = RegressionTruth::sine(grid, RegressionTruth::Profile::sine, m, c, 1.0, 1.0);
    CHECK(prof.bound() == doctest::Approx(1.0).epsilon(1e-3)); // sqrt(2) sin(pi t) has unit L2 norm

    const auto hold = RegressionTruth::holder(grid, RegressionTruth::Profile::one, m, c, 2.0, 0.5, 1.0);
    CHECK(hold.alpha() == 0.5);
    hold.verify_lipschitz(cov);
    Eigen::Vector2d x(0.25, 0.0);
    CHECK(hold.evaluate_one(x)[7] == doctest::Approx(1.0));
    CHECK_THROWS_AS(RegressionTruth::holder(grid, RegressionTruth::Profile::one, m, c, 1.0, 1.5, 1.0), ConfigError);
}

TEST_CASE("noiseless constant truth is recovered exactly") {
    auto c = base_config();
    c.truth = RegressionTruth::constant(c.truth.grid(), RegressionTruth::Profile::sine, 2.0);
    const auto res = run_experiment(c);
    for (const auto& r : res.records)
        CHECK(r.error <= 1e-14);
}

TEST_CASE("noiseless errors respect the bias bound") {
    auto c = base_config();
    c.scheme.family = SchemeRule::Family::kknn;
    c.scheme.kernel = Kernel::triangle;
    const auto res = run_experiment(c);
    CHECK(res.bias_bound_violations == 0);
    const double mconst = c.truth.lipschitz_constant();
    for (const auto& r : res.records) {
        CHECK(r.ok);
        CHECK(r.error <= mconst * r.radius * (1 + 1e-9) + 2 * c.truth.bound() * r.b_n);
    }
}

TEST_CASE("worker count does not change results") {
    auto c = base_config();
    c.noise = scalar_ar1(0.5);
    const auto a = run_experiment(c);
    c.workers = 3;
    const auto b = run_experiment(c);
    CHECK(raw_csv(a) == raw_csv(b));
    CHECK(summary_csv(a) == summary_csv(b));
    REQUIRE(a.noise_gamma1);
    CHECK(*a.noise_gamma1 == *b.noise_gamma1);
    CHECK(*a.noise_gamma1 == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(0.15));
}

TEST_CASE("empty neighborhoods are recorded, not thrown") {
    auto c = base_config();
    c.scheme.family = SchemeRule::Family::nw;
    c.scheme.rule = Rule("0.02");
    const auto res = run_experiment(c);
    CHECK(res.failures > 0);
    CHECK(raw_csv(res).find("empty_neighborhood") != std::string::npos);
    for (const auto& s : res.summaries)
        CHECK(s.failures <= c.replications);
}

TEST_CASE("config validation") {
    auto c = base_config();
    c.n_grid = {200, 100};
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
    c = base_config();
    c.truth = RegressionTruth();
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
    c = base_config();
    c.target = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(run_experiment(c), GridMismatch);
}

TEST_CASE("csv layout") {
    auto c = base_config();
    c.n_grid = {50, 60, 70};
    c.replications = 3;
    const auto res = run_experiment(c);
    const std::string raw = raw_csv(res);
    CHECK(raw.rfind("n,replication,error,H,k_eff,v_n1,c_n2,b_n,status\n", 0) == 0);
    CHECK(std::count(raw.begin(), raw.end(), '\n') == 1 + 9);
    const std::string sum = summary_csv(res);
    CHECK(sum.rfind("n,median,q90,", 0) == 0);
    CHECK(res.slope.has_value());
}

TEST_CASE("dependent noise stays within a constant factor of iid noise") {
    auto c = base_config();
    c.replications = 40;
    c.noise = scalar_ar1(0.0);
    const auto iid = run_experiment(c);
    c.noise = scalar_ar1(0.5);
    const auto dep = run_experiment(c);
    for (std::size_t i = 0; i < iid.summaries.size(); ++i)
        CHECK(dep.summaries[i].median <= 2.5 * iid.summaries[i].median);
}

TEST_CASE("variance diagnostic for Gaussian noise") {
    auto noise = scalar_ar1(0.0);
    noise.seed = 4;
    Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(400, 0.001, 1.0);
    for (int k : {10, 40, 160}) {
        const auto w = weights_from_distances(SimpleKnn{k}, d);
        const auto diag = variance_diagnostic(w, noise, 4000, nullptr);
        CHECK(diag.gamma1 == 0.0);
        CHECK(diag.c_n2 == doctest::Approx(1.0 / std::sqrt(double(k))));
        // S_n is N(0, 1/k), so E|S_n| = sqrt(2/pi) / sqrt(k)
        CHECK(diag.mean_sn_norm / diag.c_n2 == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.05));
    }
    // doubling the innovation scale doubles the mean norm
    auto wide = scalar_ar1(0.0, {Innovation::Kind::gaussian, 2.0});
    wide.seed = 4;
    const auto w = weights_from_distances(SimpleKnn{40}, d);
    CHECK(variance_diagnostic(w, wide, 500, nullptr).mean_sn_norm ==
          doctest::Approx(2.0 * variance_diagnostic(w, noise, 500, nullptr).mean_sn_norm).epsilon(1e-12));
}

TEST_CASE("variance diagnostic on a curve target") {
    auto noise = scalar_ar1(0.3);
    noise.seed = 6;
    const auto grid = GridD::uniform(0.0, 2.0, 11);
    const auto w = weights_from_distances(SimpleKnn{25}, Eigen::VectorXd::LinSpaced(100, 0.0, 1.0));
    const auto a = variance_diagnostic(w, noise, 300, grid, 1.0);
    const auto b = variance_diagnostic(w, noise, 300, nullptr, 1.0);
    // a constant curve on [0, 2] has L2 norm sqrt(2) times its level
    CHECK(a.mean_sn_norm == doctest::Approx(std::sqrt(2.0) * b.mean_sn_norm).epsilon(1e-12));
    CHECK(a.gamma1 == 1.0);
    CHECK(a.ratio == doctest::Approx(a.mean_sn_norm / (a.c_n2 + std::sqrt(a.v_n1))));
}
