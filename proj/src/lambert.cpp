#include "cloudcluster/lambert.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cloudcluster {

namespace {

constexpr int kMaxHalley = 100;

double residual(double w, double x) { return w * std::exp(w) - x; }

// Monotone bisection on [-1, inf); used only if Halley misbehaves.
double bisect(double x) {
    double lo = -1.0;
    double hi = 1.0;
    while (residual(hi, x) < 0.0) hi = hi * 2.0 + 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (residual(mid, x) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double initial_guess(double x) {
    if (x > std::exp(1.0)) {
        const double l1 = std::log(x);
        return l1 - std::log(l1);
    }
    if (x >= 0.0) return x / (1.0 + x);
    // branch-point series in p = sqrt(2(1 + e*x))
    const double p = std::sqrt(std::max(0.0, 2.0 * (1.0 + std::exp(1.0) * x)));
    return -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0;
}

}  // namespace

double lambert_w0(double x) {
    const double branch = -std::exp(-1.0);
    if (std::isnan(x) || x < branch) throw std::domain_error("lambert_w0: x below -1/e");
    if (x == 0.0) return 0.0;
    if (x == branch) return -1.0;

    const double tol = 1e-13 * std::max(1.0, std::fabs(x));
    double w = initial_guess(x);
    for (int i = 0; i < kMaxHalley; ++i) {
        if (w < -1.0) w = -1.0 + 1e-12;
        if (w > 710.0) w = 710.0;
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (std::fabs(f) <= tol) return w;
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0));
        if (!std::isfinite(denom) || denom == 0.0) break;
        const double step = f / denom;
        if (!std::isfinite(step)) break;
        w -= step;
        if (!std::isfinite(w)) break;
    }
    if (std::isfinite(w) && std::fabs(residual(w, x)) <= tol) return w;
    return bisect(x);
}

double lambert_w0_exp(double t) {
    if (t <= 700.0) return lambert_w0(std::exp(t));
    // w + ln w = t, Newton from the asymptotic start
    double w = t - std::log(t);
    for (int i = 0; i < kMaxHalley; ++i) {
        const double g = w + std::log(w) - t;
        if (std::fabs(g) <= 1e-14 * t) break;
        w -= g * w / (w + 1.0);
    }
    return w;
}

}  // namespace cloudcluster
