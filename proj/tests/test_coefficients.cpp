#include <doctest.h>

#include <cmath>

#include "fraglab/coefficients.hpp"
#include "fraglab/error.hpp"
#include "oracles.hpp"

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

TEST_CASE("rate and kernel values") {
    const Coefficients c2 = eval_coefficients(FragmentationModel(2.0), 3.0, 1.0);
    CHECK(c2.rate == doctest::Approx(9.0));
    CHECK(c2.kernel == doctest::Approx(6.0));
    const Coefficients c1 = eval_coefficients(FragmentationModel(1.0), 5.0, 2.0);
    CHECK(c1.rate == doctest::Approx(5.0));
    CHECK(c1.kernel == doctest::Approx(2.0));
    const Coefficients c3 = eval_coefficients(FragmentationModel(3.0), 2.0, 0.5);
    CHECK(c3.rate == doctest::Approx(8.0));
    CHECK(c3.kernel == doctest::Approx(8.0));
}

TEST_CASE("coefficient argument errors") {
    const FragmentationModel m(2.0);
    CHECK(kind_of([&] { eval_coefficients(m, 1.0, 1.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { eval_coefficients(m, 1.0, 2.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { eval_coefficients(m, 1.0, 0.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { FragmentationModel(0.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { FragmentationModel(-1.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { verify_kernel_identity(m, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("kernel first-moment identity") {
    CHECK(verify_kernel_identity(FragmentationModel(2.0), 3.0) <= 1e-10);
    CHECK(verify_kernel_identity(FragmentationModel(3.0), 1.0) <= 1e-10);
    CHECK(verify_kernel_identity(FragmentationModel(0.7), 2.5) <= 1e-10);
}

TEST_CASE("general fragment densities") {
    // int z * 6z(1-z) dz = 1/2: not mass conserving.
    CHECK(kind_of([] { FragmentationModel(2.0, [](double z) { return 6.0 * z * (1.0 - z); }); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([] { FragmentationModel(2.0, [](double) { return -1.0; }); }) ==
          ErrorKind::InvalidArgument);

    const FragmentationModel beta(2.0, [](double z) { return 12.0 * z * (1.0 - z); }, "beta");
    CHECK_FALSE(beta.uniform_binary());
    CHECK(beta.density_label() == "beta");
    CHECK(verify_kernel_identity(beta, 1.7) <= 1e-10);
    CHECK(fragment_first_moment([](double z) { return 3.0 * z; }) == doctest::Approx(1.0).epsilon(1e-14));

    const Grid g = make_grid(101, 6.0);
    CHECK(kind_of([&] { steady_state(beta, g); }) == ErrorKind::UnsupportedModel);
}

TEST_CASE("steady-state formula against frozen oracles") {
    CHECK(std::abs(steady_state_formula(2.0, 0.0) - oracle::kG2At0) <= 1e-14);
    CHECK(std::abs(steady_state_formula(3.0, 1.0) / oracle::kG3At1 - 1.0) <= 1e-13);
    CHECK(std::abs(steady_state_formula(4.0, 0.5) / oracle::kG4AtHalf - 1.0) <= 1e-13);
    CHECK(std::abs(std::tgamma(2.0 / 3.0) / oracle::kGammaTwoThirds - 1.0) <= 1e-14);
}

TEST_CASE("steady state on a grid") {
    for (double gamma : {2.0, 3.0, 4.0}) {
        const Grid g = make_grid(1001, default_x_max(gamma));
        const StateVector s = steady_state(FragmentationModel(gamma), g);
        CHECK(std::abs(weighted_integral(g, s, 1.0) - 1.0) <= 1e-14);
        CHECK(s.minCoeff() > 0.0);
        for (Eigen::Index i = 1; i < s.size(); ++i) REQUIRE(s[i] <= s[i - 1]);
    }
    // Zeroth moment: finite, grid-stable, and close to the exact integral.
    const double exact[] = {oracle::kZerothMomentG2, oracle::kZerothMomentG3, oracle::kZerothMomentG4};
    int k = 0;
    for (double gamma : {2.0, 3.0, 4.0}) {
        const FragmentationModel m(gamma);
        const double coarse = weighted_integral(make_grid(501, default_x_max(gamma)),
                                                steady_state(m, make_grid(501, default_x_max(gamma))), 0.0);
        const Grid fine = make_grid(2001, default_x_max(gamma));
        const double z = weighted_integral(fine, steady_state(m, fine), 0.0);
        CHECK(std::abs(z - exact[k]) <= 1e-5);
        CHECK(std::abs(z - coarse) <= 1e-4);
        ++k;
    }
}

TEST_CASE("default truncation") {
    CHECK(default_x_max(2.0) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(std::exp(-std::pow(default_x_max(3.0), 3.0)) == doctest::Approx(std::exp(-36.0)).epsilon(1e-12));
}
