#include "fraglab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "fraglab/analysis.hpp"
#include "fraglab/error.hpp"
#include "fraglab/interpolation.hpp"

namespace fraglab {

namespace {

constexpr double kRk4StabilityConstant = 2.7;

double max_row_sum(const Eigen::MatrixXd& a, bool skip_diagonal) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double row = a.row(i).cwiseAbs().sum();
        if (skip_diagonal) row -= std::abs(a(i, i));
        worst = std::max(worst, row);
    }
    return worst;
}

void rk4_step(const Eigen::MatrixXd& a, StateVector& u, double dt, StateVector& k1,
              StateVector& k2, StateVector& k3, StateVector& k4) {
    k1.noalias() = a * u;
    k2.noalias() = a * (u + 0.5 * dt * k1);
    k3.noalias() = a * (u + 0.5 * dt * k2);
    k4.noalias() = a * (u + dt * k3);
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void validate_initial(const Grid& grid, const StateVector& u0, double gamma) {
    require_on_grid(grid, u0, "initial state");
    if (!u0.allFinite()) throw Error(ErrorKind::InvalidInput, "initial state has non-finite entries");
    if (u0.size() > 0 && u0.minCoeff() < -1e-12) {
        throw Error(ErrorKind::InvalidInput, "initial state has negative entries");
    }
    const auto [unused, norms] = inner_product_and_norms(grid, u0, nullptr, gamma);
    (void)unused;
    if (!std::isfinite(norms.l1) || !std::isfinite(norms.l1_gamma) || !std::isfinite(norms.w11_1)) {
        throw Error(ErrorKind::InvalidInput, "initial state norms are not finite");
    }
}

RunReport make_report(const OperatorSet& op, const std::vector<Snapshot>& snaps, double dt,
                      Scheme scheme) {
    RunReport r;
    r.gamma = op.model.gamma();
    r.n = op.grid.size();
    r.x_max = op.grid.x_max();
    r.dt = dt;
    r.scheme = scheme;
    for (const Snapshot& s : snaps) {
        r.times.push_back(s.time);
        r.mass.push_back(weighted_integral(op.grid, s.state, 1.0));
        r.number.push_back(weighted_integral(op.grid, s.state, 0.0));
    }
    r.rho_in = r.mass.front();
    r.final_state = snaps.back().state;
    return r;
}

// One output segment: the interval, or the whole run when there is none.
double segment_length(double t_end, double interval) {
    return interval > 0.0 && interval < t_end ? interval : t_end;
}

std::size_t substeps(double length, double dt) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / dt - 1e-12)));
}

void check_step(double dt, double limit, Scheme scheme) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    if (dt > limit * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "dt = " << dt << " exceeds the stability bound " << limit << " for " << to_string(scheme);
        throw Error(ErrorKind::StabilityViolation, msg.str());
    }
}

void check_horizon(double t_end) {
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
        throw Error(ErrorKind::InvalidArgument, "t_end must be finite and nonnegative");
    }
}

// Snapshots land on exact multiples of the output interval (and on t_end);
// every segment is cut into equal substeps no longer than dt.
template <typename Step>
std::vector<Snapshot> march(const StateVector& u0, double t_end, double dt, double interval,
                            Step&& step) {
    std::vector<Snapshot> out;
    out.push_back({0.0, u0});
    if (t_end == 0.0) return out;
    const double seg = segment_length(t_end, interval);
    std::vector<double> ends;
    for (std::size_t k = 1;; ++k) {
        const double end = seg * static_cast<double>(k);
        if (end > t_end - 1e-9 * seg) break;
        ends.push_back(end);
    }
    ends.push_back(t_end);

    StateVector u = u0;
    double t = 0.0;
    for (double end : ends) {
        const std::size_t m = substeps(end - t, dt);
        const double h = (end - t) / static_cast<double>(m);
        for (std::size_t k = 0; k < m; ++k) step(u, h);
        if (!u.allFinite()) throw Error(ErrorKind::NumericalFailure, "integration produced non-finite values");
        out.push_back({end, u});
        t = end;
    }
    return out;
}

/**
 * du/dt = A u with A = c (Gain - diag B) + rest. The fragmentation part takes
 * an exponential Euler step: each class keeps e^(-h c B) of itself and its gain
 * column hands out exactly what left, so the first moment is conserved to
 * roundoff however stiff c B is. rest (transport and identity) takes an RK4
 * step between two such half steps.
 */
class ConservativeSplit {
public:
    ConservativeSplit(const OperatorSet& op, const Eigen::MatrixXd& a, double c)
        : gain_(c * op.frag), loss_(a.rows()), rest_(a - c * op.frag) {
        for (Eigen::Index i = 0; i < loss_.size(); ++i) {
            loss_[i] = c * op.model.rate(op.grid.node(static_cast<std::size_t>(i)));
        }
        gain_.diagonal().array() += loss_;
        has_rest_ = rest_.cwiseAbs().maxCoeff() > 0.0;
        const auto n = a.rows();
        k1_.resize(n);
        k2_.resize(n);
        k3_.resize(n);
        k4_.resize(n);
    }

    double stable_step() const { return stable_time_step(rest_, Scheme::Rk4); }

    void step(StateVector& u, double h) {
        fragment(u, 0.5 * h);
        if (has_rest_) rk4_step(rest_, u, h, k1_, k2_, k3_, k4_);
        fragment(u, 0.5 * h);
    }

private:
    void fragment(StateVector& u, double tau) {
        if (tau != cached_tau_) {
            keep_ = (-tau * loss_).exp();
            // (1 - e^(-tau L)) / L, which tends to tau as L -> 0.
            share_ = Eigen::ArrayXd::Constant(loss_.size(), tau);
            for (Eigen::Index i = 0; i < loss_.size(); ++i) {
                if (loss_[i] > 0.0) share_[i] = -std::expm1(-tau * loss_[i]) / loss_[i];
            }
            cached_tau_ = tau;
        }
        scratch_ = (share_ * u.array()).matrix();
        u.array() *= keep_;
        u.noalias() += gain_ * scratch_;
    }

    Eigen::MatrixXd gain_;
    Eigen::ArrayXd loss_;
    Eigen::MatrixXd rest_;
    bool has_rest_ = false;
    double cached_tau_ = -1.0;
    Eigen::ArrayXd keep_, share_;
    StateVector scratch_, k1_, k2_, k3_, k4_;
};

// Integrates du/dt = a u where a = c F_h + (rest), under the run options.
std::vector<Snapshot> run_matrix(const OperatorSet& op, const Eigen::MatrixXd& a, double c,
                                 const StateVector& u0, const RunOptions& options, double& used_dt) {
    check_horizon(options.t_end);
    const double seg = segment_length(options.t_end, options.output_interval);
    if (options.scheme == Scheme::Rk4) {
        const double dt = options.dt.value_or(stable_time_step(a, Scheme::Rk4));
        used_dt = seg > 0.0 ? seg / static_cast<double>(substeps(seg, dt)) : dt;
        return integrate_linear(a, u0, options.t_end, dt, Scheme::Rk4, options.output_interval);
    }
    ConservativeSplit split(op, a, c);
    const double limit = split.stable_step();
    // With nothing explicit left the split is unconditionally stable: ten steps per segment.
    double dt = options.dt.value_or(std::isfinite(limit) ? limit : 0.1 * seg);
    if (seg == 0.0 && !(dt > 0.0)) dt = 1.0;
    check_step(dt, limit, options.scheme);
    used_dt = seg > 0.0 ? seg / static_cast<double>(substeps(seg, dt)) : dt;
    return march(u0, options.t_end, dt, options.output_interval,
                 [&](StateVector& u, double h) { split.step(u, h); });
}

}  // namespace

std::string to_string(Scheme scheme) {
    return scheme == Scheme::Rk4 ? "rk4" : "exp_diag_split";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "rk4") return Scheme::Rk4;
    if (name == "exp_diag_split") return Scheme::ExpDiagSplit;
    throw Error(ErrorKind::InvalidArgument, "unknown scheme '" + name + "'");
}

double stable_time_step(const Eigen::MatrixXd& a, Scheme scheme) {
    const double norm = max_row_sum(a, scheme == Scheme::ExpDiagSplit);
    if (norm == 0.0) return std::numeric_limits<double>::infinity();
    return kRk4StabilityConstant / norm;
}

std::vector<Snapshot> integrate_linear(const Eigen::MatrixXd& a, const StateVector& u0,
                                       double t_end, double dt, Scheme scheme,
                                       double output_interval) {
    if (a.rows() != a.cols() || a.rows() != u0.size()) {
        throw Error(ErrorKind::InvalidArgument, "matrix and state sizes differ");
    }
    check_horizon(t_end);
    check_step(dt, stable_time_step(a, scheme), scheme);

    StateVector k1(u0.size()), k2(u0.size()), k3(u0.size()), k4(u0.size());
    if (scheme == Scheme::Rk4) {
        return march(u0, t_end, dt, output_interval,
                     [&](StateVector& u, double h) { rk4_step(a, u, h, k1, k2, k3, k4); });
    }
    Eigen::MatrixXd rest = a;
    rest.diagonal().setZero();
    const Eigen::ArrayXd diag = a.diagonal().array();
    double cached = -1.0;
    Eigen::ArrayXd half_decay;
    return march(u0, t_end, dt, output_interval, [&](StateVector& u, double h) {
        if (h != cached) {
            half_decay = (0.5 * h * diag).exp();
            cached = h;
        }
        u.array() *= half_decay;
        rk4_step(rest, u, h, k1, k2, k3, k4);
        u.array() *= half_decay;
    });
}

RunReport run_selfsim(const OperatorSet& op, const StateVector& g_in, const RunOptions& options) {
    validate_initial(op.grid, g_in, op.model.gamma());
    double dt = 0.0;
    const auto snaps = run_matrix(op, op.generator, op.model.gamma(), g_in, options, dt);
    RunReport r = make_report(op, snaps, dt, options.scheme);
    if (!op.model.uniform_binary()) return r;  // no closed-form equilibrium to measure against

    const StateVector target = r.rho_in * steady_state(op.model, op.grid);
    for (const Snapshot& s : snaps) {
        const StateVector diff = s.state - target;
        r.distance.push_back(std::sqrt(inner(op.grid, diff, diff)));
    }
    try {
        r.fitted_rate = fit_decay_rate(r.times, r.distance, {1.0, std::min(3.0, options.t_end)});
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::WindowDegenerate) throw;
    }
    return r;
}

RunReport run_selfsim(const FragmentationModel& model, const Grid& grid, const StateVector& g_in,
                      const RunOptions& options) {
    return run_selfsim(assemble_operators(model, grid), g_in, options);
}

RunReport run_frag(const OperatorSet& op, const StateVector& f_in, const RunOptions& options) {
    if (options.t_end > kMaxFragHorizon) {
        throw Error(ErrorKind::InvalidArgument, "fragmentation runs are limited to t_end <= 10");
    }
    validate_initial(op.grid, f_in, op.model.gamma());
    double dt = 0.0;
    const auto snaps = run_matrix(op, op.frag, 1.0, f_in, options, dt);
    return make_report(op, snaps, dt, options.scheme);
}

RunReport run_frag(const FragmentationModel& model, const Grid& grid, const StateVector& f_in,
                   const RunOptions& options) {
    return run_frag(assemble_operators(model, grid), f_in, options);
}

StateVector map_selfsim(const Grid& grid, const StateVector& values, double t, double gamma,
                        MapDirection direction) {
    require_on_grid(grid, values);
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidArgument, "t must be >= 0");
    if (!(gamma > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be positive");
    if (t == 0.0) return values;

    const MonotoneCubic interp(grid.nodes(), std::span<const double>(values.data(), grid.size()));
    const double scale = direction == MapDirection::FToG ? std::exp(-t) : std::exp(t);
    const double amplitude = direction == MapDirection::FToG ? std::exp(-2.0 * t) : std::exp(2.0 * t);
    const double x_back = grid.nodes().back();
    return sample(grid, [&](double x) {
        double y = scale * x;
        // Rounding can push the image of the last node just past the grid.
        if (y > x_back && y <= x_back * (1.0 + 1e-14)) y = x_back;
        return amplitude * interp(y);
    });
}

void write_run_csv(std::ostream& out, const RunReport& report) {
    const auto old_precision = out.precision(17);
    out << "# gamma=" << report.gamma << ",N=" << report.n << ",x_max=" << report.x_max
        << ",dt=" << report.dt << ",scheme=" << to_string(report.scheme) << '\n';
    out << "time,mass,number,distance\n";
    for (std::size_t i = 0; i < report.times.size(); ++i) {
        out << report.times[i] << ',' << report.mass[i] << ',' << report.number[i] << ',';
        if (i < report.distance.size()) out << report.distance[i];
        out << '\n';
    }
    if (report.fitted_rate) out << "# fitted_rate=" << *report.fitted_rate << '\n';
    out.precision(old_precision);
}

}  // namespace fraglab
