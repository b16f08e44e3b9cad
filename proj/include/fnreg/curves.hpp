#pragma once

#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "fnreg/errors.hpp"

namespace fnreg {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Strictly increasing abscissae with cached trapezoid weights.
template <typename Scalar>
class Grid {
public:
    explicit Grid(Vector<Scalar> points) : points_(std::move(points)) {
        if (points_.size() < 2)
            throw DataError("grid needs at least 2 points, got " + std::to_string(points_.size()));
        for (Eigen::Index j = 1; j < points_.size(); ++j) {
            if (!(points_[j] > points_[j - 1]))
                throw DataError("grid points must be strictly increasing (index " + std::to_string(j) + ")");
        }
        const Eigen::Index n = points_.size();
        weights_.resize(n);
        weights_[0] = (points_[1] - points_[0]) / Scalar(2);
        weights_[n - 1] = (points_[n - 1] - points_[n - 2]) / Scalar(2);
        for (Eigen::Index j = 1; j + 1 < n; ++j)
            weights_[j] = (points_[j + 1] - points_[j - 1]) / Scalar(2);
    }

    static std::shared_ptr<const Grid> uniform(Scalar lo, Scalar hi, Eigen::Index count) {
        if (count < 2)
            throw DataError("grid needs at least 2 points, got " + std::to_string(count));
        return std::make_shared<const Grid>(Vector<Scalar>::LinSpaced(count, lo, hi));
    }

    Eigen::Index size() const { return points_.size(); }
    const Vector<Scalar>& points() const { return points_; }
    const Vector<Scalar>& weights() const { return weights_; }

    bool operator==(const Grid& other) const {
        return points_.size() == other.points_.size() && points_ == other.points_;
    }

private:
    Vector<Scalar> points_;
    Vector<Scalar> weights_;
};

template <typename Scalar>
using GridPtr = std::shared_ptr<const Grid<Scalar>>;

template <typename Scalar>
void require_same_grid(const Grid<Scalar>& a, const Grid<Scalar>& b) {
    if (&a == &b)
        return;
    if (!(a == b))
        throw GridMismatch(a.size(), b.size());
}

/// A discretized element of the response Hilbert space.
template <typename Scalar>
class Curve {
public:
    Curve(GridPtr<Scalar> grid, Vector<Scalar> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (!grid_)
            throw DataError("curve without grid");
        if (values_.size() != grid_->size())
            throw GridMismatch(grid_->size(), values_.size());
    }

    template <typename F>
    static Curve from_function(GridPtr<Scalar> grid, F&& f) {
        Vector<Scalar> v = grid->points().unaryExpr(std::forward<F>(f));
        return Curve(std::move(grid), std::move(v));
    }

    static Curve zero(GridPtr<Scalar> grid) {
        const auto n = grid->size();
        return Curve(std::move(grid), Vector<Scalar>::Zero(n));
    }

    const Grid<Scalar>& grid() const { return *grid_; }
    const GridPtr<Scalar>& grid_ptr() const { return grid_; }
    const Vector<Scalar>& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }

    Curve operator+(const Curve& o) const {
        require_same_grid(*grid_, *o.grid_);
        return Curve(grid_, values_ + o.values_);
    }
    Curve operator-(const Curve& o) const {
        require_same_grid(*grid_, *o.grid_);
        return Curve(grid_, values_ - o.values_);
    }
    Curve operator-() const { return Curve(grid_, -values_); }
    Curve operator*(Scalar s) const { return Curve(grid_, values_ * s); }

private:
    GridPtr<Scalar> grid_;
    Vector<Scalar> values_;
};

template <typename Scalar>
Curve<Scalar> operator*(Scalar s, const Curve<Scalar>& c) {
    return c * s;
}

/// Trapezoid-rule inner product on the shared grid.
template <typename Scalar>
Scalar inner_product(const Curve<Scalar>& a, const Curve<Scalar>& b) {
    require_same_grid(a.grid(), b.grid());
    return (a.grid().weights().array() * a.values().array() * b.values().array()).sum();
}

template <typename Scalar>
Scalar hilbert_norm(const Curve<Scalar>& a) {
    using std::sqrt;
    return sqrt(inner_product(a, a));
}

/// Weighted norm of raw grid values; used on the hot paths where building Curves would allocate.
template <typename Scalar, typename Derived>
Scalar grid_norm(const Grid<Scalar>& grid, const Eigen::MatrixBase<Derived>& values) {
    using std::sqrt;
    if (values.size() != grid.size())
        throw GridMismatch(grid.size(), values.size());
    return sqrt((grid.weights().array() * values.array().square()).sum());
}

using GridD = Grid<double>;
using CurveD = Curve<double>;
using GridPtrD = GridPtr<double>;

/// Semi-metric on the predictor space. Elements are plain coordinate vectors;
/// for the curve kinds those coordinates are values on `grid()`.
class SemiMetric {
public:
    enum class Kind { euclidean, l2, projection };

    SemiMetric() = default; // euclidean
    static SemiMetric euclidean();
    static SemiMetric l2(GridPtrD grid);
    /// `basis` holds one basis curve per column; it must be orthonormal in the
    /// trapezoid inner product on `grid` (max Gram deviation 1e-8).
    static SemiMetric projection(GridPtrD grid, Eigen::MatrixXd basis, Eigen::Index dim);

    Kind kind() const { return kind_; }
    const GridPtrD& grid() const { return grid_; }
    Eigen::Index projection_dim() const { return dim_; }
    std::string name() const;

    double distance(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const;

    /// Distances from every column of `xs` to `x`.
    Eigen::VectorXd distances(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                              const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    void check_dim(Eigen::Index n) const;

    Kind kind_ = Kind::euclidean;
    GridPtrD grid_;
    Eigen::MatrixXd weighted_basis_; // W * basis(:, 0:dim)
    Eigen::Index dim_ = 0;
};

double semi_metric(const SemiMetric& metric, const CurveD& x, const CurveD& y);

/// Largest |G - I| entry of the trapezoid Gram matrix of `basis` on `grid`.
double gram_deviation(const GridD& grid, const Eigen::MatrixXd& basis);

/// Cosine basis 1, sqrt(2)cos(pi j t'), orthonormalized in the trapezoid inner product.
Eigen::MatrixXd cosine_basis(const GridD& grid, Eigen::Index dim);

} // namespace fnreg
