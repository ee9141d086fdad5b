#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fraglab {

/// Sampled density on a grid. The same type stands for f, g, G and test functions.
using StateVector = Eigen::VectorXd;

enum class Spacing { Uniform, Geometric };

/**
 * Truncated size axis [0, x_max].
 *
 * Uniform grids start at x = 0. Geometric grids start at x_max * 1e-4 and the
 * interval [0, x_1] is lumped into the first weight, so the weights always sum
 * to x_max.
 */
class Grid {
public:
    std::size_t size() const noexcept { return nodes_.size(); }
    double x_max() const noexcept { return x_max_; }
    Spacing spacing() const noexcept { return spacing_; }

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    // Spacing to the next node, i < size() - 1.
    double step(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }

    // Vector of w_i x_i: the discrete first-moment functional and the L^2(x dx) metric.
    Eigen::VectorXd moment_weights() const;

    Eigen::Map<const Eigen::VectorXd> x() const {
        return {nodes_.data(), static_cast<Eigen::Index>(nodes_.size())};
    }
    Eigen::Map<const Eigen::VectorXd> w() const {
        return {weights_.data(), static_cast<Eigen::Index>(weights_.size())};
    }

    bool same_as(const Grid& other) const noexcept;

private:
    friend Grid make_grid(std::size_t n, double x_max, Spacing spacing);

    std::vector<double> nodes_;
    std::vector<double> weights_;
    double x_max_ = 0.0;
    Spacing spacing_ = Spacing::Uniform;
};

inline constexpr std::size_t kMinGridNodes = 8;
inline constexpr double kGeometricFirstNodeRatio = 1e-4;

Grid make_grid(std::size_t n, double x_max, Spacing spacing = Spacing::Uniform);

// Throws InvalidArgument when the vector does not match the grid.
void require_on_grid(const Grid& grid, const StateVector& values, const char* what = "values");

/// Quadrature of int x^k u(x) dx, k > -1. Nodes at x = 0 contribute nothing
/// for k != 0.
double weighted_integral(const Grid& grid, const StateVector& values, double k);

/**
 * Three-point Lagrange differentiation: central-type stencils inside, one-sided
 * second-order stencils at both ends. Exact for quadratics on any node layout.
 */
Eigen::MatrixXd derivative_matrix(const Grid& grid);

// derivative_matrix(grid) * u without forming the matrix.
StateVector differentiate(const Grid& grid, const StateVector& u);

/**
 * Summation-by-parts first derivative D = H^{-1} Q with H = diag(w): central
 * differences inside and first-order closures at the ends. Satisfies
 * sum_i w_i v_i (D v)_i = (v_N^2 - v_0^2) / 2 exactly, the discrete form of
 * int v v' dx = [v^2/2]. The end rows are exact for linears only when the end
 * weights are half intervals (uniform grids).
 */
Eigen::MatrixXd sbp_derivative_matrix(const Grid& grid);

// Sample a function on the grid nodes.
template <typename F>
StateVector sample(const Grid& grid, F&& fn) {
    StateVector out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = fn(grid.node(i));
    }
    return out;
}

}  // namespace fraglab
