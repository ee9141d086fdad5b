#include "fraglab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fraglab/error.hpp"

namespace fraglab {

Eigen::VectorXd Grid::moment_weights() const {
    return w().cwiseProduct(x());
}

bool Grid::same_as(const Grid& other) const noexcept {
    return spacing_ == other.spacing_ && x_max_ == other.x_max_ && nodes_ == other.nodes_;
}

Grid make_grid(std::size_t n, double x_max, Spacing spacing) {
    if (n < kMinGridNodes) {
        throw Error(ErrorKind::InvalidArgument,
                    "grid needs at least " + std::to_string(kMinGridNodes) + " nodes, got " +
                        std::to_string(n));
    }
    if (!(x_max > 0.0) || !std::isfinite(x_max)) {
        throw Error(ErrorKind::InvalidArgument, "x_max must be positive and finite");
    }

    Grid g;
    g.x_max_ = x_max;
    g.spacing_ = spacing;
    g.nodes_.resize(n);
    g.weights_.assign(n, 0.0);

    if (spacing == Spacing::Uniform) {
        const double h = x_max / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) g.nodes_[i] = h * static_cast<double>(i);
    } else {
        // x_i = x_max r^(i - n + 1), so x_0 = x_max r^(1 - n) = x_max * ratio.
        const double r = std::pow(1.0 / kGeometricFirstNodeRatio, 1.0 / static_cast<double>(n - 1));
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes_[i] = x_max * std::pow(r, static_cast<double>(i) - static_cast<double>(n - 1));
        }
    }
    g.nodes_.back() = x_max;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double half = 0.5 * (g.nodes_[i + 1] - g.nodes_[i]);
        g.weights_[i] += half;
        g.weights_[i + 1] += half;
    }
    // [0, x_1] lumped onto the first node.
    g.weights_[0] += g.nodes_[0];
    return g;
}

void require_on_grid(const Grid& grid, const StateVector& values, const char* what) {
    if (static_cast<std::size_t>(values.size()) != grid.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    std::string(what) + " has " + std::to_string(values.size()) +
                        " entries but the grid has " + std::to_string(grid.size()) + " nodes");
    }
}

double weighted_integral(const Grid& grid, const StateVector& values, double k) {
    require_on_grid(grid, values);
    if (!(k > -1.0)) {
        throw Error(ErrorKind::InvalidArgument, "weight exponent must exceed -1");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        double xk = 1.0;
        if (k != 0.0) {
            if (x == 0.0) continue;
            xk = std::pow(x, k);
        }
        sum += grid.weight(i) * xk * values[static_cast<Eigen::Index>(i)];
    }
    return sum;
}

namespace {

// Derivative weights at x of the parabola through (a, b, c).
void lagrange_first_derivative(double x, double a, double b, double c, double& wa, double& wb,
                               double& wc) {
    wa = ((x - b) + (x - c)) / ((a - b) * (a - c));
    wb = ((x - a) + (x - c)) / ((b - a) * (b - c));
    wc = ((x - a) + (x - b)) / ((c - a) * (c - b));
}

// Calls fn(row, first_column, wa, wb, wc) for every row of the three-point stencil.
template <typename Fn>
void for_each_stencil(const Grid& grid, Fn&& fn) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "derivative needs at least 3 nodes");
    const auto& x = grid.nodes();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index s = std::clamp<Eigen::Index>(i - 1, 0, n - 3);
        double wa = 0, wb = 0, wc = 0;
        lagrange_first_derivative(x[i], x[s], x[s + 1], x[s + 2], wa, wb, wc);
        fn(i, s, wa, wb, wc);
    }
}

}  // namespace

Eigen::MatrixXd derivative_matrix(const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for_each_stencil(grid, [&](Eigen::Index i, Eigen::Index s, double wa, double wb, double wc) {
        d(i, s) = wa;
        d(i, s + 1) = wb;
        d(i, s + 2) = wc;
    });
    return d;
}

StateVector differentiate(const Grid& grid, const StateVector& u) {
    require_on_grid(grid, u, "u");
    StateVector du(u.size());
    for_each_stencil(grid, [&](Eigen::Index i, Eigen::Index s, double wa, double wb, double wc) {
        du[i] = wa * u[s] + wb * u[s + 1] + wc * u[s + 2];
    });
    return du;
}

Eigen::MatrixXd sbp_derivative_matrix(const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "derivative needs at least 3 nodes");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    // Q: +-1/2 off the diagonal, -1/2 and +1/2 in the corners; D = H^{-1} Q.
    for (Eigen::Index i = 0; i < n; ++i) {
        const double inv = 1.0 / grid.weight(static_cast<std::size_t>(i));
        if (i > 0) d(i, i - 1) = -0.5 * inv;
        if (i + 1 < n) d(i, i + 1) = 0.5 * inv;
    }
    d(0, 0) = -0.5 / grid.weight(0);
    d(n - 1, n - 1) = 0.5 / grid.weight(grid.size() - 1);
    return d;
}

}  // namespace fraglab
