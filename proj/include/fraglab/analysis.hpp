#pragma once

#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fraglab/grid.hpp"
#include "fraglab/operators.hpp"

namespace fraglab {

// Weighted norms of a sampled function; the fields of the space
// L^1 ∩ L^1(x^gamma dx) ∩ W^{1,1}(x dx) plus the L^2(x dx) norm.
struct NormReport {
    double l1 = 0.0;            // int |u|
    double l1_1 = 0.0;          // int x |u|
    double l1_gamma = 0.0;      // int x^gamma |u|
    double l2_1 = 0.0;          // sqrt(int x u^2)
    double w11_1 = 0.0;         // int x (|u| + |u'|)
    double first_moment = 0.0;  // int x u, signed
};

struct GapReport {
    double sym_gap = 0.0;
    double zero_eigenvalue = 0.0;
    double zero_mode_alignment = 0.0;
    std::vector<double> spectrum_real_parts;
};

void to_json(nlohmann::json& j, const NormReport& r);
void to_json(nlohmann::json& j, const GapReport& r);

/// (u, v) = sum_i w_i x_i u_i v_i when v is given, and the norms of u.
std::pair<std::optional<double>, NormReport> inner_product_and_norms(
    const Grid& grid, const StateVector& u, const StateVector* v, double gamma);

/// Discrete L^2(x dx) inner product.
double inner(const Grid& grid, const StateVector& u, const StateVector& v);

/// M(x_i) = int_0^{x_i} y u(y) dy by cumulative trapezoid; M(x_0) = 0 at x_0 = 0.
StateVector primitive_M(const Grid& grid, const StateVector& u);

/**
 * max over x_i > 0 of |M(x_i)| x_i^(gamma-1) / ||u||_{L^1(x^gamma dx)}. For
 * mean-zero u and gamma >= 1 this never exceeds 1. Requires
 * |int x u| <= 1e-8 int x |u|; returns 0 for u = 0.
 */
double tail_bound_ratio(const Grid& grid, const StateVector& u, double gamma);

struct QuadraticForms {
    double direct_L = 0.0;        // (u, A_h u)
    double direct_F = 0.0;        // (u, F_h u)
    double identity_F = 0.0;      // -(gamma-2) int x^(gamma-3) M^2 - int x^(gamma+1) u^2
    double transport_term = 0.0;  // (u, T_h u)
    double norm_sq = 0.0;         // (u, u)
};

QuadraticForms quadratic_forms(const OperatorSet& op, const StateVector& u);

/// u - (sum w x u) G for a steady state G of unit discrete mass.
StateVector project_mean_zero(const Grid& grid, const StateVector& u, const StateVector& steady);

/// G (1 + amplitude cos 2x) rescaled to unit discrete mass; |amplitude| <= 1 keeps it nonnegative.
StateVector perturbed_steady(const Grid& grid, const StateVector& steady, double amplitude);

/**
 * Largest eigenvalue of the symmetric part of A in the diagonal metric W,
 * i.e. of the pencil (S, W) with S = (W A + A^T W) / 2. Nodes with zero metric
 * weight are dropped. With mean_zero the pencil is restricted to
 * {u : sum W_i u_i = 0}.
 */
double constrained_symmetric_top(const Eigen::MatrixXd& a, const Eigen::VectorXd& metric,
                                 bool mean_zero);

struct GapOptions {
    bool full_spectrum = true;  // all eigenvalues of A_h (diagnostic, O(N^3))
    int inverse_iterations = 40;
};

GapReport spectral_gap(const OperatorSet& op, const GapOptions& options = {});

inline constexpr std::pair<double, double> kDefaultDecayWindow{1.0, 3.0};

/// Minus the least-squares slope of log(distance) against time over the window.
double fit_decay_rate(std::span<const double> times, std::span<const double> distances,
                      std::pair<double, double> window = kDefaultDecayWindow);

/**
 * Seeded test function in the mean-zero subspace: G(x) times a quartic with
 * standard normal coefficients, then projected with project_mean_zero.
 */
StateVector random_mean_zero(const Grid& grid, const StateVector& steady, std::mt19937_64& rng);

}  // namespace fraglab
