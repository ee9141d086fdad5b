#include "fraglab/coefficients.hpp"

#include <cmath>
#include <sstream>

#include "fraglab/error.hpp"

namespace fraglab {

namespace {

constexpr int kSimpsonIntervals = 1024;
constexpr double kMomentTolerance = 1e-8;

void require_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be positive and finite");
    }
}

template <typename F>
double simpson(F&& f, double a, double b) {
    const double h = (b - a) / kSimpsonIntervals;
    double sum = f(a) + f(b);
    for (int k = 1; k < kSimpsonIntervals; ++k) {
        sum += (k % 2 == 1 ? 4.0 : 2.0) * f(a + h * k);
    }
    return sum * h / 3.0;
}

}  // namespace

FragmentationModel::FragmentationModel(double gamma)
    : gamma_(gamma), uniform_binary_(true), label_("uniform_binary") {
    require_gamma(gamma);
}

FragmentationModel::FragmentationModel(double gamma, Density density, std::string label)
    : gamma_(gamma),
      uniform_binary_(false),
      density_(std::make_shared<const Density>(std::move(density))),
      label_(std::move(label)) {
    require_gamma(gamma);
    if (!*density_) throw Error(ErrorKind::InvalidArgument, "empty fragment density");
    for (int k = 0; k <= kSimpsonIntervals; ++k) {
        const double z = static_cast<double>(k) / kSimpsonIntervals;
        const double p = (*density_)(z);
        if (!(p >= 0.0) || !std::isfinite(p)) {
            std::ostringstream msg;
            msg << "fragment density must be finite and nonnegative, p(" << z << ") = " << p;
            throw Error(ErrorKind::InvalidArgument, msg.str());
        }
    }
    const double moment = fragment_first_moment(*density_);
    if (std::abs(moment - 1.0) > kMomentTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "fragment density must satisfy int z p(z) dz = 1, got " << moment;
        throw Error(ErrorKind::InvalidArgument, msg.str());
    }
}

double FragmentationModel::rate(double x) const {
    return std::pow(x, gamma_);
}

double FragmentationModel::kernel(double y, double x) const {
    return std::pow(y, gamma_ - 1.0) * density(x / y);
}

Coefficients eval_coefficients(const FragmentationModel& model, double y, double x) {
    if (!(x > 0.0) || !(x < y)) {
        throw Error(ErrorKind::InvalidArgument, "coefficients require 0 < x < y");
    }
    return {model.rate(y), model.kernel(y, x)};
}

double verify_kernel_identity(const FragmentationModel& model, double y) {
    if (!(y > 0.0) || !std::isfinite(y)) {
        throw Error(ErrorKind::InvalidArgument, "kernel identity needs y > 0");
    }
    const double lhs = simpson([&](double x) { return x * model.kernel(y, x); }, 0.0, y);
    const double rhs = y * model.rate(y);
    return std::abs(lhs - rhs) / rhs;
}

double fragment_first_moment(const FragmentationModel::Density& density) {
    return simpson([&](double z) { return z * density(z); }, 0.0, 1.0);
}

double steady_state_formula(double gamma, double x) {
    return gamma / std::tgamma(2.0 / gamma) * std::exp(-std::pow(x, gamma));
}

StateVector steady_state(const FragmentationModel& model, const Grid& grid) {
    if (!model.uniform_binary()) {
        throw Error(ErrorKind::UnsupportedModel,
                    "closed-form steady state exists only for p = 2 (density '" +
                        model.density_label() + "')");
    }
    const double gamma = model.gamma();
    StateVector g = sample(grid, [gamma](double x) { return steady_state_formula(gamma, x); });
    const double mass = weighted_integral(grid, g, 1.0);
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw Error(ErrorKind::NumericalFailure, "steady state has no resolvable mass on this grid");
    }
    g /= mass;
    return g;
}

double default_x_max(double gamma) {
    require_gamma(gamma);
    return std::pow(36.0, 1.0 / gamma);
}

}  // namespace fraglab
