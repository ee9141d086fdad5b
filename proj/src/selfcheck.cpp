#include "fraglab/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

#include "fraglab/analysis.hpp"
#include "fraglab/coefficients.hpp"
#include "fraglab/error.hpp"
#include "fraglab/grid.hpp"
#include "fraglab/operators.hpp"
#include "fraglab/simulate.hpp"

namespace fraglab {

namespace {

constexpr std::size_t kAcceptanceNodes = 1001;
constexpr std::uint64_t kSampleSeed = 20240611;
constexpr std::size_t kSampleCount = 100;

// Pure quadrature checks with 1e-10 tolerances need h^2/12 well below 1e-10;
// they touch no dense matrices, so a fine grid costs milliseconds.
constexpr std::size_t kQuadratureNodes = 1000001;
constexpr std::size_t kMicroOracleNodes = 2000001;

class Detail {
public:
    template <typename T>
    Detail& operator<<(const T& v) {
        s_ << v;
        return *this;
    }
    std::string str() const { return s_.str(); }
    Detail() { s_.precision(6); }

private:
    std::ostringstream s_;
};

struct Outcome {
    bool pass;
    std::string detail;
};

struct Check {
    std::string id;
    std::string title;
    std::function<Outcome()> run;
};

std::vector<StateVector> mean_zero_samples(const Grid& grid, const StateVector& steady) {
    std::mt19937_64 rng(kSampleSeed);
    std::vector<StateVector> out;
    out.reserve(kSampleCount);
    for (std::size_t k = 0; k < kSampleCount; ++k) out.push_back(random_mean_zero(grid, steady, rng));
    return out;
}

StateVector random_state(const Grid& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    StateVector v(static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uni(rng);
    return v;
}

double l2_norm(const Grid& grid, const StateVector& u) { return std::sqrt(inner(grid, u, u)); }

// ---- invariants ----

Outcome kernel_identity() {
    double worst = 0.0;
    for (double gamma : {0.5, 1.0, 2.0, 3.0, 4.0}) {
        const FragmentationModel model(gamma);
        for (double y : {0.25, 1.0, 4.0}) worst = std::max(worst, verify_kernel_identity(model, y));
    }
    return {worst <= 1e-12, (Detail() << "max relative defect " << worst << " <= 1e-12").str()};
}

Outcome grid_weights() {
    double worst = 0.0;
    for (Spacing s : {Spacing::Uniform, Spacing::Geometric}) {
        for (std::size_t n : {8, 101, 1001}) {
            for (double x_max : {1.0, 6.0, 40.0}) {
                const Grid g = make_grid(n, x_max, s);
                worst = std::max(worst, std::abs(g.w().sum() - x_max) / x_max);
            }
        }
    }
    return {worst <= 1e-12, (Detail() << "max |sum w - x_max| / x_max " << worst << " <= 1e-12").str()};
}

Outcome derivative_quadratics() {
    double worst = 0.0;
    for (Spacing s : {Spacing::Uniform, Spacing::Geometric}) {
        const Grid g = make_grid(41, 3.0, s);
        const StateVector q = sample(g, [](double x) { return 1.0 - 2.0 * x + 0.75 * x * x; });
        const StateVector dq = sample(g, [](double x) { return -2.0 + 1.5 * x; });
        worst = std::max(worst, (differentiate(g, q) - dq).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-9, (Detail() << "max error on a quadratic " << worst << " <= 1e-9").str()};
}

Outcome sbp_identity() {
    double worst = 0.0;
    for (Spacing s : {Spacing::Uniform, Spacing::Geometric}) {
        const Grid g = make_grid(257, 6.0, s);
        const StateVector v = random_state(g, 7);
        const double lhs = (g.w().array() * v.array() * (sbp_derivative_matrix(g) * v).array()).sum();
        const double rhs = 0.5 * (v[v.size() - 1] * v[v.size() - 1] - v[0] * v[0]);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return {worst <= 1e-12, (Detail() << "|sum w v Dv - (v_N^2 - v_0^2)/2| = " << worst << " <= 1e-12").str()};
}

Outcome mass_neutrality() {
    const Grid g = make_grid(kAcceptanceNodes, 6.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    const Eigen::RowVectorXd m = g.moment_weights().transpose();
    const Eigen::RowVectorXd frag_row = m * op.frag;
    Eigen::RowVectorXd gen_row = m * op.generator;
    const double scale = op.frag.cwiseAbs().maxCoeff();
    const double frag_defect = frag_row.cwiseAbs().maxCoeff() / scale;
    // The last column carries the outflow x_max^2 u_N through the boundary.
    const double x_max = g.x_max();
    gen_row[gen_row.size() - 1] += x_max * x_max;
    const double gen_defect = gen_row.cwiseAbs().maxCoeff() / scale;
    const bool ok = frag_defect <= 1e-13 && gen_defect <= 1e-13;
    return {ok, (Detail() << "|m F_h| " << frag_defect << ", |m A_h + x_max^2 e_N| " << gen_defect
                          << " (relative to max|F_h|) <= 1e-13")
                    .str()};
}

Outcome gain_structure() {
    const Grid g = make_grid(201, 6.0, Spacing::Geometric);
    const OperatorSet op = assemble_operators(FragmentationModel(3.0), g);
    double negative = 0.0;
    double below = 0.0;
    for (Eigen::Index i = 0; i < op.frag.rows(); ++i) {
        for (Eigen::Index j = 0; j < op.frag.cols(); ++j) {
            if (i == j) continue;
            if (j < i) below = std::max(below, std::abs(op.frag(i, j)));
            negative = std::max(negative, -op.frag(i, j));
        }
    }
    return {negative <= 0.0 && below == 0.0,
            (Detail() << "most negative off-diagonal " << -negative << ", max below-diagonal " << below)
                .str()};
}

Outcome transport_form() {
    const Grid g = make_grid(kAcceptanceNodes, 6.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    const StateVector u = random_state(g, 11);
    const double form = inner(g, u, op.transport * u);
    const double flux = g.x_max() * u[u.size() - 1];
    const double expected = 0.5 * flux * flux;
    const double err = std::abs(form - expected) / std::max(1.0, expected);
    return {err <= 1e-12, (Detail() << "(u, T_h u) - (x_max u_N)^2/2 = " << err << " <= 1e-12").str()};
}

Outcome map_round_trip() {
    const Grid g = make_grid(kAcceptanceNodes, 6.0);
    const StateVector steady = steady_state(FragmentationModel(2.0), g);
    const StateVector f = map_selfsim(g, steady, 0.5, 2.0, MapDirection::GToF);
    const StateVector back = map_selfsim(g, f, 0.5, 2.0, MapDirection::FToG);
    const double err = l2_norm(g, back - steady) / l2_norm(g, steady);
    return {err <= 1e-6, (Detail() << "relative L2_1 round-trip error " << err << " <= 1e-6").str()};
}

Outcome steady_profile() {
    bool ok = true;
    for (double gamma : {1.0, 2.0, 3.0}) {
        const Grid g = make_grid(kAcceptanceNodes, default_x_max(gamma));
        const StateVector s = steady_state(FragmentationModel(gamma), g);
        ok = ok && s.minCoeff() > 0.0;
        for (Eigen::Index i = 1; i < s.size(); ++i) ok = ok && s[i] <= s[i - 1];
    }
    return {ok, ok ? "G > 0 and nonincreasing for gamma in {1, 2, 3}" : "G not positive or not monotone"};
}

Outcome determinism() {
    const Grid g = make_grid(301, 6.0);
    const StateVector steady = steady_state(FragmentationModel(2.0), g);
    const auto a = mean_zero_samples(g, steady);
    const auto b = mean_zero_samples(g, steady);
    bool same = true;
    for (std::size_t k = 0; k < a.size(); ++k) same = same && (a[k].array() == b[k].array()).all();
    RunOptions opt;
    opt.t_end = 0.5;
    const StateVector g_in = perturbed_steady(g, steady, 0.5);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    const RunReport r1 = run_selfsim(op, g_in, opt);
    const RunReport r2 = run_selfsim(op, g_in, opt);
    same = same && r1.distance == r2.distance && r1.mass == r2.mass;
    return {same, same ? "seeded samples and runs are bit-identical" : "repeated runs differ"};
}

// ---- acceptance criteria ----

Outcome a1_steady_state() {
    double worst_mass = 0.0;
    double worst_point = 0.0;
    double worst_constant = 0.0;
    for (double gamma : {2.0, 3.0}) {
        const Grid g = make_grid(kQuadratureNodes, default_x_max(gamma));
        const StateVector s = steady_state(FragmentationModel(gamma), g);
        worst_mass = std::max(worst_mass, std::abs(weighted_integral(g, s, 1.0) - 1.0));
        const double c = gamma / std::tgamma(2.0 / gamma);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double ref = c * std::exp(-std::pow(g.node(i), gamma));
            worst_point = std::max(worst_point, std::abs(s[static_cast<Eigen::Index>(i)] / ref - 1.0));
        }
    }
    // Gamma(2/3) and Gamma(1/2) = sqrt(pi) to 15 digits.
    worst_constant = std::max(std::abs(std::tgamma(2.0 / 3.0) / 1.35411793942640 - 1.0),
                              std::abs(std::tgamma(0.5) / std::sqrt(std::acos(-1.0)) - 1.0));
    const bool ok = worst_mass <= 1e-12 && worst_point <= 1e-10 && worst_constant <= 1e-13;
    return {ok, (Detail() << "|mass - 1| " << worst_mass << " <= 1e-12, pointwise relative "
                          << worst_point << " <= 1e-10, Gamma " << worst_constant << " (N = "
                          << kQuadratureNodes << ")")
                    .str()};
}

double steady_residual(std::size_t n) {
    const Grid g = make_grid(n, 6.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    const StateVector s = steady_state(op.model, g);
    return l2_norm(g, op.generator * s) / l2_norm(g, s);
}

Outcome a2_residual() {
    const double r501 = steady_residual(501);
    const double r1001 = steady_residual(1001);
    const double ratio = r501 / r1001;
    return {ratio >= 3.0, (Detail() << "residual " << r501 << " -> " << r1001 << ", ratio " << ratio
                                    << " >= 3")
                              .str()};
}

double max_relative_drift(const std::vector<double>& mass) {
    double worst = 0.0;
    for (double m : mass) worst = std::max(worst, std::abs(m - mass.front()) / std::abs(mass.front()));
    return worst;
}

Outcome a3_mass() {
    const Grid g = make_grid(kAcceptanceNodes, 6.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    const StateVector g_in = perturbed_steady(g, steady_state(op.model, g), 0.5);
    RunOptions frag_opt;
    frag_opt.t_end = 1.0;
    const double frag = max_relative_drift(run_frag(op, g_in, frag_opt).mass);
    RunOptions self_opt;
    self_opt.t_end = 3.0;
    const double self = max_relative_drift(run_selfsim(op, g_in, self_opt).mass);
    return {frag <= 1e-8 && self <= 1e-8,
            (Detail() << "mass drift frag " << frag << ", selfsim " << self << " <= 1e-8").str()};
}

struct SampleStats {
    double worst_ratio = -1e300;
    double worst_identity = 0.0;
    double worst_transport = 0.0;
};

SampleStats quadform_stats(double gamma) {
    const Grid g = make_grid(kAcceptanceNodes, default_x_max(gamma));
    const OperatorSet op = assemble_operators(FragmentationModel(gamma), g);
    const StateVector steady = steady_state(op.model, g);
    SampleStats st;
    for (const StateVector& u : mean_zero_samples(g, steady)) {
        const QuadraticForms q = quadratic_forms(op, u);
        st.worst_ratio = std::max(st.worst_ratio, q.direct_L / q.norm_sq);
        st.worst_identity =
            std::max(st.worst_identity, std::abs(q.direct_F - q.identity_F) / std::abs(q.direct_F));
        st.worst_transport = std::max(st.worst_transport, std::abs(q.transport_term) / q.norm_sq);
    }
    return st;
}

Outcome a4_quadratic_form() {
    Detail d;
    bool ok = true;
    for (double gamma : {2.0, 3.0, 4.0}) {
        const SampleStats st = quadform_stats(gamma);
        ok = ok && st.worst_ratio <= -0.98;
        d << "gamma " << gamma << ": max (u,Lu)/(u,u) " << st.worst_ratio << "; ";
    }
    d << "threshold -0.98";
    return {ok, d.str()};
}

Outcome a5_identity() {
    Detail d;
    bool ok = true;
    for (double gamma : {2.0, 3.0, 4.0}) {
        const SampleStats st = quadform_stats(gamma);
        ok = ok && st.worst_identity <= 1e-5 && st.worst_transport <= 1e-4;
        d << "gamma " << gamma << ": identity " << st.worst_identity << ", transport "
          << st.worst_transport << "; ";
    }
    d << "thresholds 1e-5, 1e-4";
    return {ok, d.str()};
}

Outcome a6_micro_oracles() {
    const Grid g = make_grid(kMicroOracleNodes, 40.0);
    const StateVector u = sample(g, [](double x) { return (1.0 - 0.5 * x) * std::exp(-x); });
    const auto [unused, norms] = inner_product_and_norms(g, u, nullptr, 2.0);
    (void)unused;
    const double moment = std::abs(norms.first_moment);
    const double l2 = std::abs(norms.l2_1 * norms.l2_1 - 3.0 / 32.0);
    const StateVector m = primitive_M(g, u);
    const std::size_t at_one = static_cast<std::size_t>(std::llround(1.0 / g.step(0)));
    const double m1 = std::abs(m[static_cast<Eigen::Index>(at_one)] - 0.5 * std::exp(-1.0));

    const Grid coarse = make_grid(kAcceptanceNodes, 20.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), coarse);
    const StateVector f = sample(coarse, [](double x) { return std::exp(-x); });
    const double f0 = std::abs((op.frag * f)[0] - 2.0);

    const bool ok = moment <= 1e-10 && l2 <= 1e-6 && m1 <= 1e-6 && f0 <= 1e-3;
    return {ok, (Detail() << "first moment " << moment << " <= 1e-10, |l2^2 - 3/32| " << l2
                          << " <= 1e-6, |M(1) - e^-1/2| " << m1 << " <= 1e-6, |(F f)(0) - 2| " << f0
                          << " <= 1e-3")
                    .str()};
}

Outcome a7_gap() {
    Detail d;
    bool ok = true;
    for (double gamma : {2.0, 3.0, 4.0}) {
        const OperatorSet op = assemble_operators(FragmentationModel(gamma), make_grid(kAcceptanceNodes, 6.0));
        const GapReport r = spectral_gap(op);
        ok = ok && r.sym_gap <= -0.98 && std::abs(r.zero_eigenvalue) <= 5e-3 &&
             r.zero_mode_alignment >= 0.999;
        d << "gamma " << gamma << ": gap " << r.sym_gap << ", lambda0 " << r.zero_eigenvalue
          << ", alignment " << r.zero_mode_alignment << "; ";
    }
    d << "thresholds -0.98, 5e-3, 0.999";
    return {ok, d.str()};
}

Outcome a8_envelope() {
    const Grid g = make_grid(kAcceptanceNodes, 6.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    RunOptions opt;
    opt.t_end = 3.0;
    const RunReport r = run_selfsim(op, perturbed_steady(g, steady_state(op.model, g), 0.5), opt);
    double worst = 0.0;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        worst = std::max(worst, r.distance[k] / (r.distance.front() * std::exp(-r.times[k])));
    }
    const double rate = r.fitted_rate.value_or(0.0);
    return {worst <= 1.02 && rate >= 0.98,
            (Detail() << "max distance / (d0 e^-t) " << worst << " <= 1.02, fitted rate " << rate
                      << " >= 0.98")
                .str()};
}

Outcome a9_routes() {
    const Grid g = make_grid(kAcceptanceNodes, 6.0);
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), g);
    const StateVector g_in = perturbed_steady(g, steady_state(op.model, g), 0.5);
    RunOptions frag_opt;
    frag_opt.t_end = std::exp(2.0) - 1.0;
    frag_opt.output_interval = 0.0;
    const StateVector f = run_frag(op, g_in, frag_opt).final_state;
    const StateVector via_f = map_selfsim(g, f, 1.0, 2.0, MapDirection::FToG);
    RunOptions self_opt;
    self_opt.t_end = 1.0;
    self_opt.output_interval = 0.0;
    const StateVector via_g = run_selfsim(op, g_in, self_opt).final_state;
    const double rel = l2_norm(g, via_f - via_g) / l2_norm(g, via_g);
    return {rel <= 1e-3, (Detail() << "relative L2_1 difference " << rel << " <= 1e-3").str()};
}

Outcome a10_tail_bound() {
    double worst = 0.0;
    for (double gamma : {2.0, 3.0}) {
        const Grid g = make_grid(kAcceptanceNodes, default_x_max(gamma));
        const StateVector steady = steady_state(FragmentationModel(gamma), g);
        for (const StateVector& u : mean_zero_samples(g, steady)) {
            worst = std::max(worst, tail_bound_ratio(g, u, gamma));
        }
    }
    return {worst <= 1.0 + 1e-8, (Detail() << "max ratio " << worst << " <= 1 + 1e-8").str()};
}

const std::vector<Check>& registry() {
    static const std::vector<Check> checks = {
        {"I1", "kernel first-moment identity", kernel_identity},
        {"I2", "grid weights sum to x_max", grid_weights},
        {"I3", "derivative exact on quadratics", derivative_quadratics},
        {"I4", "summation-by-parts identity", sbp_identity},
        {"I5", "discrete mass neutrality of F_h and A_h", mass_neutrality},
        {"I6", "gain nonnegative and upper triangular", gain_structure},
        {"I7", "transport form equals boundary flux", transport_form},
        {"I8", "self-similar map round trip", map_round_trip},
        {"I9", "steady state positive and monotone", steady_profile},
        {"I10", "determinism", determinism},
        {"A1", "steady-state normalization and formula", a1_steady_state},
        {"A2", "steady-state residual convergence", a2_residual},
        {"A3", "mass conservation", a3_mass},
        {"A4", "quadratic-form bound", a4_quadratic_form},
        {"A5", "quadratic-form identity and transport term", a5_identity},
        {"A6", "closed-form micro-oracles", a6_micro_oracles},
        {"A7", "spectral gap and zero mode", a7_gap},
        {"A8", "exponential decay envelope", a8_envelope},
        {"A9", "change-of-variables consistency", a9_routes},
        {"A10", "tail bound", a10_tail_bound},
    };
    return checks;
}

}  // namespace

std::vector<std::string> selfcheck_ids() {
    std::vector<std::string> ids;
    for (const Check& c : registry()) ids.push_back(c.id);
    return ids;
}

std::vector<CheckResult> run_selfcheck(const std::vector<std::string>& only, std::ostream& out) {
    for (const std::string& id : only) {
        const auto& r = registry();
        if (std::none_of(r.begin(), r.end(), [&](const Check& c) { return c.id == id; })) {
            throw Error(ErrorKind::InvalidArgument, "unknown check id '" + id + "'");
        }
    }
    std::vector<CheckResult> results;
    for (const Check& c : registry()) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        CheckResult r{c.id, c.title, false, {}};
        try {
            const Outcome o = c.run();
            r.pass = o.pass;
            r.detail = o.detail;
        } catch (const std::exception& e) {
            r.detail = std::string("raised ") + e.what();
        }
        out << (r.pass ? "PASS " : "FAIL ") << r.id << ' ' << r.title << ": " << r.detail << '\n'
            << std::flush;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace fraglab
