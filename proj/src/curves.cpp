#include "fnreg/curves.hpp"

#include <numbers>

namespace fnreg {

SemiMetric SemiMetric::euclidean() {
    return SemiMetric();
}

SemiMetric SemiMetric::l2(GridPtrD grid) {
    if (!grid)
        throw ConfigError("l2 semi-metric needs a grid");
    SemiMetric m;
    m.kind_ = Kind::l2;
    m.grid_ = std::move(grid);
    return m;
}

SemiMetric SemiMetric::projection(GridPtrD grid, Eigen::MatrixXd basis, Eigen::Index dim) {
    if (!grid)
        throw ConfigError("projection semi-metric needs a grid");
    if (basis.rows() != grid->size())
        throw GridMismatch(grid->size(), basis.rows());
    if (dim < 1 || dim > basis.cols())
        throw ConfigError("projection dim " + std::to_string(dim) + " outside [1, " +
                          std::to_string(basis.cols()) + "]");
    const double dev = gram_deviation(*grid, basis);
    if (dev > 1e-8)
        throw NumericError("projection basis is not orthonormal (Gram deviation " + std::to_string(dev) + ")");
    SemiMetric m;
    m.kind_ = Kind::projection;
    m.dim_ = dim;
    m.weighted_basis_ = grid->weights().asDiagonal() * basis.leftCols(dim);
    m.grid_ = std::move(grid);
    return m;
}

std::string SemiMetric::name() const {
    switch (kind_) {
    case Kind::euclidean:
        return "euclidean";
    case Kind::l2:
        return "l2";
    case Kind::projection:
        return "projection(" + std::to_string(dim_) + ")";
    }
    return "?";
}

void SemiMetric::check_dim(Eigen::Index n) const {
    if (grid_ && n != grid_->size())
        throw GridMismatch(grid_->size(), n);
}

double SemiMetric::distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (x.size() != y.size())
        throw GridMismatch(x.size(), y.size());
    check_dim(x.size());
    switch (kind_) {
    case Kind::euclidean:
        return (x - y).norm();
    case Kind::l2:
        return grid_norm(*grid_, x - y);
    case Kind::projection:
        return (weighted_basis_.transpose() * (x - y)).norm();
    }
    return 0.0;
}

Eigen::VectorXd SemiMetric::distances(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (xs.rows() != x.size())
        throw GridMismatch(xs.rows(), x.size());
    check_dim(x.size());
    switch (kind_) {
    case Kind::euclidean:
        return (xs.colwise() - x).colwise().norm().transpose();
    case Kind::l2:
        return ((xs.colwise() - x).array().square().colwise() * grid_->weights().array())
            .colwise()
            .sum()
            .sqrt()
            .transpose();
    case Kind::projection: {
        // coefficients of every difference at once: dim x n
        const Eigen::MatrixXd coeff = weighted_basis_.transpose() * (xs.colwise() - x);
        return coeff.colwise().norm().transpose();
    }
    }
    return {};
}

double semi_metric(const SemiMetric& metric, const CurveD& x, const CurveD& y) {
    require_same_grid(x.grid(), y.grid());
    if (metric.grid())
        require_same_grid(*metric.grid(), x.grid());
    return metric.distance(x.values(), y.values());
}

double gram_deviation(const GridD& grid, const Eigen::MatrixXd& basis) {
    if (basis.rows() != grid.size())
        throw GridMismatch(grid.size(), basis.rows());
    const Eigen::MatrixXd gram = basis.transpose() * grid.weights().asDiagonal() * basis;
    return (gram - Eigen::MatrixXd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd cosine_basis(const GridD& grid, Eigen::Index dim) {
    const auto n = grid.size();
    if (dim < 1 || dim > n)
        throw ConfigError("cosine basis dim " + std::to_string(dim) + " outside [1, " + std::to_string(n) + "]");
    const auto& t = grid.points();
    const double lo = t[0];
    const double span = t[n - 1] - lo;
    Eigen::MatrixXd basis(n, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        basis.col(j) = ((t.array() - lo) / span * std::numbers::pi * double(j)).cos();
    }
    // modified Gram-Schmidt, two passes, in the weighted inner product
    const Eigen::VectorXd& w = grid.weights();
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            for (Eigen::Index i = 0; i < j; ++i)
                basis.col(j) -= (w.array() * basis.col(i).array() * basis.col(j).array()).sum() * basis.col(i);
            const double nrm = std::sqrt((w.array() * basis.col(j).array().square()).sum());
            if (!(nrm > 1e-12))
                throw NumericError("cosine basis degenerates at column " + std::to_string(j));
            basis.col(j) /= nrm;
        }
    }
    return basis;
}

} // namespace fnreg
