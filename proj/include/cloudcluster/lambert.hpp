#pragma once

namespace cloudcluster {

/// Principal branch of the Lambert W function: the w >= -1 with w*e^w = x.
/// Defined for x >= -1/e; Halley iteration with a bisection fallback.
/// Residual |w*e^w - x| <= 1e-12 * max(1, |x|).
double lambert_w0(double x);

/// W0(e^t) without forming e^t, usable for arguments far beyond the double
/// range. Solves w + ln(w) = t for t > ~1, falls back to lambert_w0
/// otherwise.
double lambert_w0_exp(double t);

}  // namespace cloudcluster
