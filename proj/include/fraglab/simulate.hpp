#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fraglab/coefficients.hpp"
#include "fraglab/grid.hpp"
#include "fraglab/operators.hpp"

namespace fraglab {

enum class Scheme {
    Rk4,           // classical fourth order
    ExpDiagSplit,  // exact exponential of the diagonal, RK4 for the rest (Strang)
};

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct Snapshot {
    double time;
    StateVector state;
};

/// Largest dt accepted by integrate_linear: 2.7 / ||M||_inf, where M is A for
/// rk4 and A without its diagonal for the split scheme.
double stable_time_step(const Eigen::MatrixXd& a, Scheme scheme);

/**
 * Integrates du/dt = A u from u0 to t_end. The step is shrunk so that an
 * integer number of steps reaches t_end; a snapshot is kept roughly every
 * output_interval (always at t = 0 and t = t_end). A requested dt above
 * stable_time_step raises StabilityViolation.
 */
std::vector<Snapshot> integrate_linear(const Eigen::MatrixXd& a, const StateVector& u0,
                                       double t_end, double dt, Scheme scheme,
                                       double output_interval = 0.0);

struct RunOptions {
    double t_end = 3.0;
    std::optional<double> dt;  // empty: stable_time_step
    Scheme scheme = Scheme::Rk4;
    double output_interval = 0.05;
};

struct RunReport {
    std::vector<double> times;
    std::vector<double> mass;      // int x u
    std::vector<double> number;    // int u
    std::vector<double> distance;  // ||g - rho_in G||, self-similar runs only
    double rho_in = 0.0;
    std::optional<double> fitted_rate;
    StateVector final_state;

    double gamma = 0.0;
    std::size_t n = 0;
    double x_max = 0.0;
    double dt = 0.0;
    Scheme scheme = Scheme::Rk4;
};

// Longest physical horizon accepted by run_frag; the profile concentrates at x = 0.
inline constexpr double kMaxFragHorizon = 10.0;

/// dg/dt = A_h g, with the L^2(x dx) distance to rho_in G at every snapshot.
RunReport run_selfsim(const OperatorSet& op, const StateVector& g_in, const RunOptions& options);
RunReport run_selfsim(const FragmentationModel& model, const Grid& grid, const StateVector& g_in,
                      const RunOptions& options);

/// df/dt = F_h f (no gamma prefactor), t_end <= kMaxFragHorizon.
RunReport run_frag(const OperatorSet& op, const StateVector& f_in, const RunOptions& options);
RunReport run_frag(const FragmentationModel& model, const Grid& grid, const StateVector& f_in,
                   const RunOptions& options);

enum class MapDirection { FToG, GToF };

/**
 * Self-similar change of variables at rescaled time t (physical time
 * s = e^(gamma t) - 1):
 *   f_to_g: g(x) = e^(-2t) f(e^(-t) x)
 *   g_to_f: f(x) = e^(2t) g(e^(t) x)
 * Off-grid abscissae read zero.
 */
StateVector map_selfsim(const Grid& grid, const StateVector& values, double t, double gamma,
                        MapDirection direction);

/// CSV with a '#' metadata line (gamma, N, x_max, dt, scheme), the column header
/// time,mass,number,distance and, when available, a trailing fitted-rate comment.
void write_run_csv(std::ostream& out, const RunReport& report);

}  // namespace fraglab
