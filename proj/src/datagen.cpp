#include "fnreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fnreg/rng.hpp"

namespace fnreg {

bool ProcessSpec::is_independent() const {
    if (const auto* a = ar1())
        return a->rho == 0.0;
    return true;
}

Eigen::Index ProcessSpec::element_dim() const {
    return std::visit(
        [](const auto& k) -> Eigen::Index {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, IidGaussian>)
                return k.dim;
            else
                return k.grid ? k.grid->size() : 1;
        },
        kind);
}

GridPtrD ProcessSpec::element_grid() const {
    if (const auto* b = std::get_if<BrownianMotion>(&kind))
        return b->grid;
    if (const auto* a = ar1())
        return a->grid;
    return nullptr;
}

ProcessSpec ProcessSpec::with_seed(std::uint64_t s) const {
    ProcessSpec copy = *this;
    copy.seed = s;
    return copy;
}

void validate(const ProcessSpec& spec) {
    if (spec.burn_in && *spec.burn_in < 0)
        throw ConfigError("burn_in must be >= 0");
    std::visit(
        [](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, IidGaussian>) {
                if (k.dim < 1)
                    throw ConfigError("iid_gaussian dim must be >= 1");
                if (!(k.scale > 0.0))
                    throw ConfigError("iid_gaussian scale must be positive");
            } else if constexpr (std::is_same_v<K, BrownianMotion>) {
                if (!k.grid)
                    throw ConfigError("brownian_motion needs a grid");
            } else {
                if (!(std::abs(k.rho) < 1.0))
                    throw ConfigError("ar1 needs |rho| < 1 for stationarity, got " + std::to_string(k.rho));
                if (!(k.innovation.scale > 0.0))
                    throw ConfigError("innovation scale must be positive");
                if (k.innovation.kind == Innovation::Kind::brownian && !k.grid)
                    throw ConfigError("brownian innovations need a curve-valued ar1");
                if (k.op == Ar1::Operator::banded && !k.grid)
                    throw ConfigError("banded operator needs a curve-valued ar1");
                if (!(k.band_weight >= 0.0 && k.band_weight <= 0.5))
                    throw ConfigError("band_weight must lie in [0, 0.5]");
            }
        },
        spec.kind);
}

int default_burn_in(double rho) {
    if (rho == 0.0)
        return 0;
    return static_cast<int>(std::ceil(std::log(1e-12) / std::log(std::abs(rho))));
}

int effective_burn_in(const ProcessSpec& spec) {
    if (spec.burn_in)
        return *spec.burn_in;
    if (const auto* a = spec.ar1())
        return default_burn_in(a->rho);
    return 0;
}

namespace {

void fill_brownian(const GridD& grid, double scale, Engine& eng, std::normal_distribution<double>& normal,
                   Eigen::Ref<Eigen::VectorXd> out) {
    const auto& t = grid.points();
    double prev_t = 0.0;
    double level = 0.0;
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        // a grid starting after 0 gets its first value from N(0, t_0)
        const double dt = std::abs(t[j] - prev_t);
        level += std::sqrt(dt) * normal(eng);
        out[j] = scale * level;
        prev_t = t[j];
    }
}

class InnovationSource {
public:
    InnovationSource(const Ar1& spec, Eigen::Index dim, std::uint64_t seed)
        : spec_(spec), dim_(dim), eng_(make_engine(seed)) {}

    void draw(Eigen::Ref<Eigen::VectorXd> out) {
        const double s = spec_.innovation.scale;
        switch (spec_.innovation.kind) {
        case Innovation::Kind::gaussian:
            for (Eigen::Index j = 0; j < dim_; ++j)
                out[j] = s * normal_(eng_);
            break;
        case Innovation::Kind::uniform:
            for (Eigen::Index j = 0; j < dim_; ++j)
                out[j] = s * (2.0 * unit_(eng_) - 1.0);
            break;
        case Innovation::Kind::exponential:
            for (Eigen::Index j = 0; j < dim_; ++j)
                out[j] = s * exponential_(eng_);
            break;
        case Innovation::Kind::brownian:
            fill_brownian(*spec_.grid, s, eng_, normal_, out);
            break;
        }
    }

private:
    const Ar1& spec_;
    Eigen::Index dim_;
    Engine eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
};

/// Applies rho * Op in place.
class Ar1Step {
public:
    Ar1Step(const Ar1& spec, Eigen::Index dim) : spec_(spec), scratch_(dim) {}

    void operator()(Eigen::Ref<Eigen::VectorXd> x, const Eigen::Ref<const Eigen::VectorXd>& innovation) {
        if (spec_.op == Ar1::Operator::diagonal || x.size() < 2) {
            x = spec_.rho * x + innovation;
            return;
        }
        const double w = spec_.band_weight;
        const Eigen::Index n = x.size();
        scratch_[0] = (1.0 - w) * x[0] + w * x[1];
        scratch_[n - 1] = w * x[n - 2] + (1.0 - w) * x[n - 1];
        for (Eigen::Index j = 1; j + 1 < n; ++j)
            scratch_[j] = w * x[j - 1] + (1.0 - 2.0 * w) * x[j] + w * x[j + 1];
        x = spec_.rho * scratch_ + innovation;
    }

private:
    const Ar1& spec_;
    Eigen::VectorXd scratch_;
};

struct Ar1Run {
    Eigen::MatrixXd values;      // times 1 - history .. n
    Eigen::MatrixXd innovations; // same times
};

Ar1Run run_ar1(const ProcessSpec& spec, const Ar1& ar, Eigen::Index n, Eigen::Index history,
               std::uint64_t stream_label) {
    const Eigen::Index dim = spec.element_dim();
    const int burn = effective_burn_in(spec);
    InnovationSource source(ar, dim, derive_seed(spec.seed, {stream_label}));
    Ar1Step step(ar, dim);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd alpha(dim);
    for (int b = 0; b < burn; ++b) {
        source.draw(alpha);
        step(x, alpha);
    }
    Ar1Run run{Eigen::MatrixXd(dim, n + history), Eigen::MatrixXd(dim, n + history)};
    for (Eigen::Index t = 0; t < n + history; ++t) {
        source.draw(alpha);
        step(x, alpha);
        run.values.col(t) = x;
        run.innovations.col(t) = alpha;
    }
    return run;
}

} // namespace

Eigen::MatrixXd generate(const ProcessSpec& spec, Eigen::Index n) {
    validate(spec);
    if (n < 1)
        throw ConfigError("generate needs n >= 1");
    const Eigen::Index dim = spec.element_dim();
    if (const auto* ar = spec.ar1())
        return run_ar1(spec, *ar, n, 0, stream::innovations).values;

    Eigen::MatrixXd out(dim, n);
    Engine eng = make_engine(derive_seed(spec.seed, {stream::innovations}));
    std::normal_distribution<double> normal(0.0, 1.0);
    if (const auto* g = std::get_if<IidGaussian>(&spec.kind)) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < dim; ++j)
                out(j, i) = g->scale * normal(eng);
    } else {
        const auto& grid = *std::get<BrownianMotion>(spec.kind).grid;
        for (Eigen::Index i = 0; i < n; ++i)
            fill_brownian(grid, 1.0, eng, normal, out.col(i));
    }
    return out;
}

CoupledPair::CoupledPair(Eigen::MatrixXd original_ext, Eigen::MatrixXd prime_ext, Eigen::Index offset,
                         std::map<int, Eigen::MatrixXd> coupled)
    : original_(std::move(original_ext)), prime_(std::move(prime_ext)), offset_(offset), coupled_(std::move(coupled)) {}

const Eigen::MatrixXd& CoupledPair::coupled(int m) const {
    auto it = coupled_.find(m);
    if (it == coupled_.end())
        throw ConfigError("no coupled sequence for m = " + std::to_string(m));
    return it->second;
}

CoupledPair generate_coupled(const ProcessSpec& spec, Eigen::Index n, const std::vector<int>& m_list) {
    validate(spec);
    const auto* ar = spec.ar1();
    if (!ar)
        throw ConfigError("coupled generation needs an ar1 process");
    if (n < 1)
        throw ConfigError("generate_coupled needs n >= 1");
    if (m_list.empty())
        throw ConfigError("generate_coupled needs at least one m");
    int history = 0;
    for (int m : m_list) {
        if (m < 1)
            throw ConfigError("coupling lag m must be >= 1, got " + std::to_string(m));
        history = std::max(history, m);
    }
    const Ar1Run orig = run_ar1(spec, *ar, n, history, stream::innovations);
    const Ar1Run prime = run_ar1(spec, *ar, n, history, stream::coupled_primes);

    const Eigen::Index dim = spec.element_dim();
    Ar1Step step(*ar, dim);
    std::map<int, Eigen::MatrixXd> coupled;
    Eigen::VectorXd z(dim);
    for (int m : m_list) {
        if (coupled.count(m))
            continue;
        Eigen::MatrixXd seq(dim, n);
        for (Eigen::Index i = 1; i <= n; ++i) {
            // start from X'_{i-m} and replay the original innovations at times i-m+1..i
            const Eigen::Index start = i - m - 1 + history;
            z = prime.values.col(start);
            for (Eigen::Index s = start + 1; s <= start + m; ++s)
                step(z, orig.innovations.col(s));
            seq.col(i - 1) = z;
        }
        coupled.emplace(m, std::move(seq));
    }
    return CoupledPair(orig.values, prime.values, history, std::move(coupled));
}

Eigen::VectorXd element_norms(const ProcessSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& elements) {
    if (const auto grid = spec.element_grid()) {
        if (elements.rows() != grid->size())
            throw GridMismatch(grid->size(), elements.rows());
        return (elements.array().square().colwise() * grid->weights().array()).colwise().sum().sqrt().transpose();
    }
    return elements.colwise().norm().transpose();
}

DecayEstimate estimate_gamma(const ProcessSpec& spec, int m, int replications, const DecayNorm& norm,
                             const SemiMetric* metric) {
    validate(spec);
    if (!spec.is_ar1())
        throw ConfigError("estimate_gamma needs an ar1 process");
    if (m < 1)
        throw ConfigError("estimate_gamma needs m >= 1");
    if (replications < 100)
        throw ConfigError("estimate_gamma needs at least 100 replications");
    std::vector<double> gaps(replications);
    Eigen::MatrixXd diff(spec.element_dim(), 1);
    for (int r = 0; r < replications; ++r) {
        const auto rep = spec.with_seed(derive_seed(spec.seed, {stream::gamma_replication, std::uint64_t(r)}));
        const CoupledPair pair = generate_coupled(rep, m, {m});
        if (metric) {
            gaps[r] = metric->distance(pair.original_at(m), pair.coupled(m).col(m - 1));
        } else {
            diff.col(0) = pair.original_at(m) - pair.coupled(m).col(m - 1);
            gaps[r] = element_norms(spec, diff)[0];
        }
    }
    DecayEstimate est{m, 0.0, norm, replications};
    if (norm.kind == DecayNorm::Kind::l2) {
        double ss = 0.0;
        for (double g : gaps)
            ss += g * g;
        est.gamma_hat = std::sqrt(ss / replications);
    } else {
        est.gamma_hat = orlicz_norm(gaps, norm.psi).value;
    }
    return est;
}

double estimate_gamma_sum(const ProcessSpec& spec, int replications, const DecayNorm& norm, double relative_cutoff,
                          int max_m) {
    double total = 0.0;
    double first = 0.0;
    for (int m = 1; m <= max_m; ++m) {
        const double term = estimate_gamma(spec, m, replications, norm).gamma_hat;
        if (m == 1)
            first = term;
        total += term;
        if (first == 0.0 || term < relative_cutoff * first)
            break;
    }
    return total;
}

Eigen::VectorXd stationary_mean(const ProcessSpec& spec) {
    const Eigen::Index dim = spec.element_dim();
    if (const auto* ar = spec.ar1())
        return Eigen::VectorXd::Constant(dim, ar->innovation.mean() / (1.0 - ar->rho));
    return Eigen::VectorXd::Zero(dim);
}

Eigen::MatrixXd noise_sequence(const ProcessSpec& spec, Eigen::Index n, const GridPtrD& target) {
    Eigen::MatrixXd raw = generate(spec, n);
    raw.colwise() -= stationary_mean(spec);
    if (!target) {
        if (raw.rows() != 1)
            throw DataError("scalar noise target needs a scalar process, got dimension " + std::to_string(raw.rows()));
        return raw;
    }
    if (raw.rows() == 1)
        return Eigen::VectorXd::Ones(target->size()) * raw;
    const auto grid = spec.element_grid();
    if (!grid)
        throw DataError("curve noise target needs a curve-valued or scalar process");
    require_same_grid(*grid, *target);
    return raw;
}

} // namespace fnreg
