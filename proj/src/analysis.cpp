#include "fraglab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "fraglab/coefficients.hpp"
#include "fraglab/error.hpp"

namespace fraglab {

void to_json(nlohmann::json& j, const NormReport& r) {
    j = nlohmann::json{{"l1", r.l1},       {"l1_1", r.l1_1},   {"l1_gamma", r.l1_gamma},
                       {"l2_1", r.l2_1},   {"w11_1", r.w11_1}, {"first_moment", r.first_moment}};
}

void to_json(nlohmann::json& j, const GapReport& r) {
    j = nlohmann::json{{"sym_gap", r.sym_gap},
                       {"zero_eigenvalue", r.zero_eigenvalue},
                       {"zero_mode_alignment", r.zero_mode_alignment},
                       {"spectrum_real_parts", r.spectrum_real_parts}};
}

double inner(const Grid& grid, const StateVector& u, const StateVector& v) {
    require_on_grid(grid, u, "u");
    require_on_grid(grid, v, "v");
    return (grid.moment_weights().array() * u.array() * v.array()).sum();
}

std::pair<std::optional<double>, NormReport> inner_product_and_norms(
    const Grid& grid, const StateVector& u, const StateVector* v, double gamma) {
    require_on_grid(grid, u, "u");
    std::optional<double> ip;
    if (v != nullptr) ip = inner(grid, u, *v);

    const StateVector abs_u = u.cwiseAbs();
    const StateVector abs_du = differentiate(grid, u).cwiseAbs();
    NormReport r;
    r.l1 = weighted_integral(grid, abs_u, 0.0);
    r.l1_1 = weighted_integral(grid, abs_u, 1.0);
    r.l1_gamma = weighted_integral(grid, abs_u, gamma);
    r.l2_1 = std::sqrt(inner(grid, u, u));
    r.w11_1 = r.l1_1 + weighted_integral(grid, abs_du, 1.0);
    r.first_moment = weighted_integral(grid, u, 1.0);
    return {ip, r};
}

StateVector primitive_M(const Grid& grid, const StateVector& u) {
    require_on_grid(grid, u, "u");
    const auto n = static_cast<Eigen::Index>(grid.size());
    StateVector m(n);
    // On geometric grids [0, x_1] is integrated with the rectangle rule, matching the weights.
    m[0] = grid.node(0) * grid.node(0) * u[0];
    for (Eigen::Index i = 1; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double a0 = grid.node(ui - 1) * u[i - 1];
        const double a1 = grid.node(ui) * u[i];
        m[i] = m[i - 1] + 0.5 * grid.step(ui - 1) * (a0 + a1);
    }
    return m;
}

double tail_bound_ratio(const Grid& grid, const StateVector& u, double gamma) {
    require_on_grid(grid, u, "u");
    if (!(gamma >= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "tail bound holds for gamma >= 1 only");
    }
    const double mass = weighted_integral(grid, u, 1.0);
    const double abs_mass = weighted_integral(grid, u.cwiseAbs(), 1.0);
    if (abs_mass == 0.0) return 0.0;
    if (std::abs(mass) > 1e-8 * abs_mass) {
        throw Error(ErrorKind::PreconditionViolation,
                    "tail bound needs a mean-zero function (int x u = " + std::to_string(mass) + ")");
    }
    const double norm_gamma = weighted_integral(grid, u.cwiseAbs(), gamma);
    const StateVector m = primitive_M(grid, u);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        if (x <= 0.0) continue;
        worst = std::max(worst, std::abs(m[static_cast<Eigen::Index>(i)]) * std::pow(x, gamma - 1.0));
    }
    return worst / norm_gamma;
}

QuadraticForms quadratic_forms(const OperatorSet& op, const StateVector& u) {
    const Grid& grid = op.grid;
    require_on_grid(grid, u, "u");
    const double gamma = op.model.gamma();

    QuadraticForms q;
    q.norm_sq = inner(grid, u, u);
    q.direct_L = inner(grid, u, op.generator * u);
    q.direct_F = inner(grid, u, op.frag * u);
    q.transport_term = inner(grid, u, op.transport * u);

    const StateVector m = primitive_M(grid, u);
    double primitive_term = 0.0;
    double loss_term = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        const auto k = static_cast<Eigen::Index>(i);
        loss_term += grid.weight(i) * std::pow(x, gamma + 1.0) * u[k] * u[k];
        // The x^(gamma-3) weight may be singular at 0 but M = O(x^2) there.
        if (x > 0.0) primitive_term += grid.weight(i) * std::pow(x, gamma - 3.0) * m[k] * m[k];
    }
    q.identity_F = -(gamma - 2.0) * primitive_term - loss_term;
    return q;
}

StateVector project_mean_zero(const Grid& grid, const StateVector& u, const StateVector& steady) {
    require_on_grid(grid, u, "u");
    require_on_grid(grid, steady, "steady state");
    const double g_mass = weighted_integral(grid, steady, 1.0);
    if (std::abs(g_mass - 1.0) > 1e-12) {
        throw Error(ErrorKind::PreconditionViolation, "steady state must have unit discrete mass");
    }
    return u - weighted_integral(grid, u, 1.0) * steady;
}

StateVector perturbed_steady(const Grid& grid, const StateVector& steady, double amplitude) {
    require_on_grid(grid, steady, "steady state");
    if (!(std::abs(amplitude) <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "perturbation amplitude must lie in [-1, 1]");
    }
    StateVector g = steady.array() * (1.0 + amplitude * (2.0 * grid.x().array()).cos());
    const double mass = weighted_integral(grid, g, 1.0);
    if (!(mass > 0.0)) throw Error(ErrorKind::NumericalFailure, "perturbed state has no mass");
    return g / mass;
}

double constrained_symmetric_top(const Eigen::MatrixXd& a, const Eigen::VectorXd& metric,
                                 bool mean_zero) {
    if (a.rows() != a.cols() || a.rows() != metric.size()) {
        throw Error(ErrorKind::InvalidArgument, "matrix and metric sizes differ");
    }
    if (!a.allFinite() || !metric.allFinite()) {
        throw Error(ErrorKind::NumericalFailure, "non-finite entries in gap problem");
    }
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < metric.size(); ++i) {
        if (metric[i] < 0.0) throw Error(ErrorKind::InvalidArgument, "metric must be nonnegative");
        if (metric[i] > 0.0) active.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(active.size());
    if (n < (mean_zero ? 2 : 1)) {
        throw Error(ErrorKind::InvalidArgument, "gap problem has no admissible directions");
    }

    // S~ = W^{-1/2} (W A + A^T W)/2 W^{-1/2} = (W^{1/2} A W^{-1/2} + transpose) / 2.
    Eigen::VectorXd root(n);
    for (Eigen::Index k = 0; k < n; ++k) root[k] = std::sqrt(metric[active[k]]);
    Eigen::MatrixXd s(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            s(r, c) = root[r] * a(active[r], active[c]) / root[c];
        }
    }
    s = 0.5 * (s + s.transpose()).eval();

    if (!mean_zero) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) {
            throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
        }
        return solver.eigenvalues().maxCoeff();
    }

    // The constraint sum W_i u_i = 0 reads q . y = 0 with y = W^{1/2} u and q = W^{1/2} 1.
    // A Householder reflector H maps q to a multiple of e_0; H S~ H without its first
    // row and column is S~ on the orthogonal complement of q.
    Eigen::VectorXd v = root / root.norm();
    v[0] += (v[0] >= 0.0 ? 1.0 : -1.0);
    v /= v.norm();
    const Eigen::VectorXd sv = s * v;
    const double vsv = v.dot(sv);
    Eigen::MatrixXd reflected = s;
    reflected.noalias() -= 2.0 * v * sv.transpose();
    reflected.noalias() -= 2.0 * sv * v.transpose();
    reflected.noalias() += (4.0 * vsv) * v * v.transpose();

    const Eigen::MatrixXd block = reflected.bottomRightCorner(n - 1, n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
    }
    return solver.eigenvalues().maxCoeff();
}

GapReport spectral_gap(const OperatorSet& op, const GapOptions& options) {
    const Eigen::MatrixXd& a = op.generator;
    if (!a.allFinite()) throw Error(ErrorKind::NumericalFailure, "generator has non-finite entries");
    const Grid& grid = op.grid;
    const Eigen::VectorXd metric = grid.moment_weights();

    GapReport report;
    report.sym_gap = constrained_symmetric_top(a, metric, true);

    double shift = 0.0;
    if (options.full_spectrum) {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
        if (solver.info() != Eigen::Success) {
            throw Error(ErrorKind::NumericalFailure, "nonsymmetric eigensolver did not converge");
        }
        const Eigen::VectorXcd& ev = solver.eigenvalues();
        report.spectrum_real_parts.reserve(static_cast<std::size_t>(ev.size()));
        Eigen::Index nearest = 0;
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            report.spectrum_real_parts.push_back(ev[k].real());
            if (std::abs(ev[k]) < std::abs(ev[nearest])) nearest = k;
        }
        std::sort(report.spectrum_real_parts.begin(), report.spectrum_real_parts.end(),
                  std::greater<>());
        shift = ev[nearest].real();
    }

    // Inverse iteration for the eigenvector nearest the shift. A tiny offset keeps
    // the shifted matrix invertible when the shift hits the eigenvalue exactly.
    const double offset = 1e-10 * std::max(1.0, std::abs(shift));
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() -= (shift + offset);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
    // Start from G when it is known; any positive profile works otherwise.
    const bool has_steady = op.model.uniform_binary();
    const StateVector g = has_steady ? steady_state(op.model, grid)
                                     : StateVector(sample(grid, [](double x) { return std::exp(-x); }));
    StateVector vec = g;
    for (int it = 0; it < options.inverse_iterations; ++it) {
        vec = lu.solve(vec);
        const double norm = vec.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw Error(ErrorKind::NumericalFailure, "inverse iteration broke down");
        }
        vec /= norm;
    }
    report.zero_eigenvalue =
        options.full_spectrum ? shift : vec.dot(a * vec) / vec.squaredNorm();
    if (has_steady) {
        const double num = std::abs(inner(grid, vec, g));
        const double den = std::sqrt(inner(grid, vec, vec) * inner(grid, g, g));
        report.zero_mode_alignment = den > 0.0 ? std::min(1.0, num / den) : 0.0;
    }
    return report;
}

double fit_decay_rate(std::span<const double> times, std::span<const double> distances,
                      std::pair<double, double> window) {
    if (times.size() != distances.size()) {
        throw Error(ErrorKind::InvalidArgument, "times and distances differ in length");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "times must be strictly increasing");
        }
    }
    constexpr double slack = 1e-9;
    double st = 0, sl = 0, stt = 0, stl = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window.first - slack || times[i] > window.second + slack) continue;
        if (!(distances[i] > 0.0)) {
            throw Error(ErrorKind::WindowDegenerate, "distance reached zero inside the fit window");
        }
        const double t = times[i];
        const double l = std::log(distances[i]);
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
        ++count;
    }
    if (count < 5) {
        throw Error(ErrorKind::WindowDegenerate, "fit window holds fewer than 5 samples");
    }
    const double c = static_cast<double>(count);
    const double slope = (c * stl - st * sl) / (c * stt - st * st);
    return -slope;
}

StateVector random_mean_zero(const Grid& grid, const StateVector& steady, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double coeff[5];
    for (double& c : coeff) c = normal(rng);
    StateVector u(steady.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        const double p = coeff[0] + x * (coeff[1] + x * (coeff[2] + x * (coeff[3] + x * coeff[4])));
        u[static_cast<Eigen::Index>(i)] = steady[static_cast<Eigen::Index>(i)] * p;
    }
    return project_mean_zero(grid, u, steady);
}

}  // namespace fraglab
