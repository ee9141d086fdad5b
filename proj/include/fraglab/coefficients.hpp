#pragma once

#include <functional>
#include <memory>
#include <string>

#include "fraglab/grid.hpp"

namespace fraglab {

/**
 * Homogeneous fragmentation coefficients
 *
 *   B(x) = x^gamma,   b(y, x) = y^(gamma - 1) p(x / y),
 *
 * with fragment density p on [0, 1] normalised by int_0^1 z p(z) dz = 1. The
 * default density is the constant 2 (uniform binary splitting).
 */
class FragmentationModel {
public:
    using Density = std::function<double(double)>;

    /// Uniform binary fragmentation, p = 2.
    explicit FragmentationModel(double gamma);

    /// General density. Throws InvalidArgument if gamma <= 0, if p is negative
    /// somewhere on [0, 1], or if int z p(z) dz differs from 1 by more than 1e-8.
    FragmentationModel(double gamma, Density density, std::string label = "custom");

    double gamma() const noexcept { return gamma_; }
    bool uniform_binary() const noexcept { return uniform_binary_; }
    const std::string& density_label() const noexcept { return label_; }

    double density(double z) const { return uniform_binary_ ? 2.0 : (*density_)(z); }
    double rate(double x) const;
    // b(y, x) without argument checks; y > 0 and 0 <= x <= y assumed.
    double kernel(double y, double x) const;

private:
    double gamma_;
    bool uniform_binary_;
    std::shared_ptr<const Density> density_;
    std::string label_;
};

struct Coefficients {
    double rate;    // B(y)
    double kernel;  // b(y, x)
};

/// (B(y), b(y, x)) for 0 < x < y.
Coefficients eval_coefficients(const FragmentationModel& model, double y, double x);

/// Relative defect |int_0^y x b(y, x) dx - y B(y)| / (y B(y)).
double verify_kernel_identity(const FragmentationModel& model, double y);

/// int_0^1 z p(z) dz by composite Simpson on 1024 subintervals.
double fragment_first_moment(const FragmentationModel::Density& density);

/// gamma / Gamma(2/gamma) * exp(-x^gamma), the unit-mass steady profile for p = 2.
double steady_state_formula(double gamma, double x);

/**
 * G sampled on the grid and rescaled so that sum_i w_i x_i G_i = 1 exactly.
 * Only the uniform binary model has a closed form; other densities raise
 * UnsupportedModel.
 */
StateVector steady_state(const FragmentationModel& model, const Grid& grid);

/// Default truncation for a given gamma: the point where exp(-x^gamma) = exp(-36).
double default_x_max(double gamma);

}  // namespace fraglab
