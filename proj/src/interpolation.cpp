#include "fraglab/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "fraglab/error.hpp"

namespace fraglab {

namespace {

// One-sided three-point end slope, limited as in PCHIP.
double end_slope(double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (std::signbit(s) != std::signbit(d0)) {
        s = 0.0;
    } else if (std::signbit(d0) != std::signbit(d1) && std::abs(s) > 3.0 * std::abs(d0)) {
        s = 3.0 * d0;
    }
    return s;
}

}  // namespace

MonotoneCubic::MonotoneCubic(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), slope_(x.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2) {
        throw Error(ErrorKind::InvalidArgument, "interpolation needs matching data, at least 2 points");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "interpolation abscissae must increase");
        }
    }
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
        slope_[0] = slope_[1] = d[0];
        return;
    }
    // Three-point parabolic slopes, clipped so no interval overshoots its data.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            slope_[i] = 0.0;
            continue;
        }
        const double s = (h[i] * d[i - 1] + h[i - 1] * d[i]) / (h[i - 1] + h[i]);
        const double cap = 3.0 * std::min(std::abs(d[i - 1]), std::abs(d[i]));
        slope_[i] = std::abs(s) > cap ? std::copysign(cap, s) : s;
    }
    slope_[0] = end_slope(h[0], h[1], d[0], d[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

double MonotoneCubic::operator()(double x, double outside) const {
    if (x < x_.front() || x > x_.back() || std::isnan(x)) return outside;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

}  // namespace fraglab
