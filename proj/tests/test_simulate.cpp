#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fraglab/analysis.hpp"
#include "fraglab/error.hpp"
#include "fraglab/simulate.hpp"

using namespace fraglab;

namespace {

ErrorKind kind_of(auto fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::NumericalFailure;
}

}  // namespace

TEST_CASE("scalar decay") {
    const Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(3, 3);
    const StateVector u0 = Eigen::Vector3d(1.0, -2.0, 0.5);
    const auto snaps = integrate_linear(a, u0, 1.0, 0.01, Scheme::Rk4);
    CHECK(snaps.back().time == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((snaps.back().state - std::exp(-1.0) * u0).cwiseAbs().maxCoeff() <= 1e-8);

    const auto still = integrate_linear(Eigen::MatrixXd::Zero(3, 3), u0, 2.0, 0.1, Scheme::Rk4);
    CHECK((still.back().state.array() == u0.array()).all());
}

TEST_CASE("snapshot times") {
    const Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(2, 2);
    const auto snaps = integrate_linear(a, StateVector::Ones(2), 1.0, 0.01, Scheme::Rk4, 0.25);
    REQUIRE(snaps.size() == 5);
    for (std::size_t k = 0; k < snaps.size(); ++k) CHECK(snaps[k].time == doctest::Approx(0.25 * k));
    CHECK(integrate_linear(a, StateVector::Ones(2), 0.0, 0.01, Scheme::Rk4).size() == 1);
}

TEST_CASE("rk4 converges at fourth order") {
    Eigen::MatrixXd a(3, 3);
    a << -2, 1, 0, 0.5, -1, 0.3, 0, 0.7, -3;
    const StateVector u0 = Eigen::Vector3d(1, 0.5, -0.25);
    const StateVector ref = integrate_linear(a, u0, 2.0, 1e-4, Scheme::Rk4).back().state;
    const double e1 = (integrate_linear(a, u0, 2.0, 0.1, Scheme::Rk4).back().state - ref).norm();
    const double e2 = (integrate_linear(a, u0, 2.0, 0.05, Scheme::Rk4).back().state - ref).norm();
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));
}

TEST_CASE("split scheme") {
    // Exact for a diagonal matrix, whatever the stiffness.
    Eigen::MatrixXd d = Eigen::Vector2d(-1.0, -400.0).asDiagonal();
    const StateVector u0 = Eigen::Vector2d(1.0, 1.0);
    const StateVector out = integrate_linear(d, u0, 1.0, 0.5, Scheme::ExpDiagSplit).back().state;
    CHECK(out[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(std::exp(-400.0)).epsilon(1e-14));
    CHECK(kind_of([&] { integrate_linear(d, u0, 1.0, 0.5, Scheme::Rk4); }) == ErrorKind::StabilityViolation);

    Eigen::MatrixXd a(2, 2);
    a << -3, 1, 0.5, -2;
    const StateVector ref = integrate_linear(a, u0, 1.0, 1e-4, Scheme::Rk4).back().state;
    const double e1 = (integrate_linear(a, u0, 1.0, 0.1, Scheme::ExpDiagSplit).back().state - ref).norm();
    const double e2 = (integrate_linear(a, u0, 1.0, 0.05, Scheme::ExpDiagSplit).back().state - ref).norm();
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("integration argument errors") {
    const Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(2, 2);
    const StateVector u0 = StateVector::Ones(2);
    CHECK(kind_of([&] { integrate_linear(a, StateVector::Ones(3), 1.0, 0.1, Scheme::Rk4); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { integrate_linear(a, u0, -1.0, 0.1, Scheme::Rk4); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { integrate_linear(a, u0, 1.0, 0.0, Scheme::Rk4); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { integrate_linear(a, u0, 1.0, 3.0, Scheme::Rk4); }) == ErrorKind::StabilityViolation);
    CHECK(stable_time_step(a, Scheme::Rk4) == doctest::Approx(2.7));
    CHECK(std::isinf(stable_time_step(a, Scheme::ExpDiagSplit)));
    CHECK(parse_scheme("rk4") == Scheme::Rk4);
    CHECK(parse_scheme(to_string(Scheme::ExpDiagSplit)) == Scheme::ExpDiagSplit);
    CHECK(kind_of([] { parse_scheme("euler"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("steady state stays put") {
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), make_grid(1001, 6.0));
    const StateVector rho_g = 0.7 * steady_state(op.model, op.grid);
    RunOptions opt;
    opt.t_end = 3.0;
    const RunReport r = run_selfsim(op, rho_g, opt);
    CHECK(r.rho_in == doctest::Approx(0.7).epsilon(1e-14));
    for (double d : r.distance) REQUIRE(d <= 1e-4);
    for (double m : r.mass) REQUIRE(std::abs(m - r.rho_in) <= 1e-8 * r.rho_in);
}

TEST_CASE("perturbation decays within the envelope") {
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), make_grid(401, 6.0));
    RunOptions opt;
    opt.t_end = 3.0;
    const RunReport r = run_selfsim(op, perturbed_steady(op.grid, steady_state(op.model, op.grid), 0.5), opt);
    REQUIRE(r.fitted_rate.has_value());
    CHECK(*r.fitted_rate >= 0.98);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        REQUIRE(r.distance[k] <= 1.02 * r.distance[0] * std::exp(-r.times[k]));
    }
    CHECK(r.times.size() == 61);
}

TEST_CASE("fragmentation run") {
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), make_grid(401, 6.0));
    const StateVector f0 = perturbed_steady(op.grid, steady_state(op.model, op.grid), 0.3);
    RunOptions opt;
    opt.t_end = 1.0;
    const RunReport r = run_frag(op, f0, opt);
    CHECK(r.distance.empty());
    CHECK_FALSE(r.fitted_rate.has_value());
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        REQUIRE(std::abs(r.mass[k] - r.mass[0]) <= 1e-8 * r.mass[0]);
        if (k > 0) REQUIRE(r.number[k] >= r.number[k - 1]);
    }

    // Mass drifts toward small sizes.
    const auto snaps = integrate_linear(op.frag, f0, 1.0, stable_time_step(op.frag, Scheme::Rk4), Scheme::Rk4, 0.1);
    StateVector below = StateVector::Zero(401);
    for (std::size_t i = 0; i < op.grid.size() && op.grid.node(i) <= 0.5; ++i) below[static_cast<Eigen::Index>(i)] = 1.0;
    double prev = -1.0;
    for (const Snapshot& s : snaps) {
        const double frac = weighted_integral(op.grid, StateVector(below.cwiseProduct(s.state)), 1.0);
        REQUIRE(frac > prev);
        prev = frac;
    }

    RunOptions too_long;
    too_long.t_end = kMaxFragHorizon + 1.0;
    CHECK(kind_of([&] { run_frag(op, f0, too_long); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("initial state validation") {
    const OperatorSet op = assemble_operators(FragmentationModel(2.0), make_grid(64, 6.0));
    StateVector bad = steady_state(op.model, op.grid);
    bad[10] = -1e-6;
    CHECK(kind_of([&] { run_selfsim(op, bad, {}); }) == ErrorKind::InvalidInput);
    bad[10] = -1e-14;  // roundoff-level negatives are tolerated
    CHECK_NOTHROW(run_selfsim(op, bad, {}));
    bad[10] = NAN;
    CHECK(kind_of([&] { run_frag(op, bad, {}); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([&] { run_selfsim(op, StateVector::Ones(63), {}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("split scheme on a stiff generator") {
    const OperatorSet op = assemble_operators(FragmentationModel(4.0), make_grid(201, default_x_max(4.0)));
    const StateVector g0 = perturbed_steady(op.grid, steady_state(op.model, op.grid), 0.5);
    RunOptions rk;
    rk.t_end = 1.0;
    RunOptions split = rk;
    split.scheme = Scheme::ExpDiagSplit;
    const RunReport a = run_selfsim(op, g0, rk);
    const RunReport b = run_selfsim(op, g0, split);
    CHECK(b.dt >= a.dt);
    CHECK(std::abs(b.mass.back() - 1.0) <= 1e-8);

    // First order in dt: halving the step halves the gap to RK4.
    auto gap = [&](double dt) {
        RunOptions o = split;
        o.dt = dt;
        const StateVector diff = run_selfsim(op, g0, o).final_state - a.final_state;
        return std::sqrt(inner(op.grid, diff, diff));
    };
    const double coarse = gap(0.005), fine = gap(0.0025);
    CHECK(coarse <= 1e-2 * a.distance.front());
    CHECK(coarse / fine == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("general densities run without an equilibrium") {
    const FragmentationModel beta(2.0, [](double z) { return 12.0 * z * (1.0 - z); }, "beta");
    const Grid g = make_grid(101, 6.0);
    const StateVector g0 = sample(g, [](double x) { return std::exp(-x * x); });
    RunOptions opt;
    opt.t_end = 0.5;
    const RunReport r = run_selfsim(beta, g, g0, opt);
    CHECK(r.distance.empty());
    CHECK(std::abs(r.mass.back() - r.mass.front()) <= 1e-8 * r.mass.front());
}

TEST_CASE("self-similar change of variables") {
    const Grid g = make_grid(1001, 6.0);
    const StateVector s = steady_state(FragmentationModel(2.0), g);
    CHECK((map_selfsim(g, s, 0.0, 2.0, MapDirection::FToG).array() == s.array()).all());

    // A profile that keeps its mass inside the grid under both scalings.
    const StateVector u = sample(g, [](double x) { return x * x * std::exp(-3.0 * x); });
    const StateVector v = map_selfsim(g, u, 0.4, 2.0, MapDirection::GToF);
    CHECK(weighted_integral(g, v, 1.0) == doctest::Approx(weighted_integral(g, u, 1.0)).epsilon(1e-6));

    // Round trip through two interpolations. Past x ~ 4 the forward map pushes
    // mass off the grid, so only the interior is compared. The monotone
    // interpolant flattens at the peak, which caps accuracy near x = 2/3.
    auto round_trip = [](std::size_t n) {
        const Grid fine = make_grid(n, 6.0);
        const StateVector w = sample(fine, [](double x) { return x * x * std::exp(-3.0 * x); });
        const StateVector out = map_selfsim(fine, map_selfsim(fine, w, 0.4, 2.0, MapDirection::GToF), 0.4, 2.0,
                                            MapDirection::FToG);
        double worst = 0.0;
        for (std::size_t i = 0; i < fine.size() && fine.node(i) <= 4.0; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            worst = std::max(worst, std::abs(out[k] - w[k]));
        }
        return worst / w.cwiseAbs().maxCoeff();
    };
    CHECK(round_trip(1001) <= 1e-4);
    CHECK(round_trip(4001) <= 1e-5);

    CHECK(kind_of([&] { map_selfsim(g, s, -0.1, 2.0, MapDirection::FToG); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("run report csv") {
    RunReport r;
    r.gamma = 2;
    r.n = 11;
    r.x_max = 6;
    r.dt = 0.125;
    r.times = {0.0, 0.5};
    r.mass = {1.0, 1.0};
    r.number = {2.0, 2.5};
    r.distance = {0.1, 1.0 / 3.0};
    r.fitted_rate = 1.25;
    std::ostringstream out;
    write_run_csv(out, r);
    CHECK(out.str() ==
          "# gamma=2,N=11,x_max=6,dt=0.125,scheme=rk4\n"
          "time,mass,number,distance\n"
          "0,1,2,0.10000000000000001\n"
          "0.5,1,2.5,0.33333333333333331\n"
          "# fitted_rate=1.25\n");
}
