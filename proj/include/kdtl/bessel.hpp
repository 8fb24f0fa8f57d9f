#pragma once

namespace kdtl {

/// Bessel function of the first kind of order two.
///
/// Ascending power series for |x| < 12; normalized Miller backward
/// recurrence above that. Absolute error is below 1e-13 on [0, 40].
double bessel_j2(double x);

}  // namespace kdtl
