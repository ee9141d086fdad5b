#pragma once

#include <span>
#include <vector>

namespace fraglab {

/**
 * Monotone piecewise cubic Hermite interpolant: three-point parabolic slopes
 * clipped to three times the smaller neighbouring secant, zero at data
 * extrema, limited three-point end slopes. Never
 * overshoots the data, so nonnegative samples stay nonnegative.
 */
class MonotoneCubic {
public:
    MonotoneCubic(std::span<const double> x, std::span<const double> y);

    // Values outside [x_front, x_back] are `outside`.
    double operator()(double x, double outside = 0.0) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slope_;
};

}  // namespace fraglab
