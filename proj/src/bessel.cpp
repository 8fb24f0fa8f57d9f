#include "kdtl/bessel.hpp"

#include <cmath>

namespace kdtl {
namespace {

constexpr double kSeriesLimit = 12.0;

double j2_series(double x) {
  const double q = 0.25 * x * x;
  double term = 0.5 * q;  // (x/2)^2 / 2!
  double sum = term;
  for (int k = 0; k < 200; ++k) {
    term *= -q / ((k + 1.0) * (k + 3.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > 2) break;
  }
  return sum;
}

// Downward recurrence J_{n-1} = (2n/x) J_n - J_{n+1}, normalized with
// J_0 + 2 sum_k J_{2k} = 1.
double j2_miller(double x) {
  int start = static_cast<int>(x + 15.0 + std::sqrt(40.0 * x));
  start += start % 2;  // even, so the normalization sum picks up J_start
  double next = 0.0;
  double cur = 1e-30;
  double norm = 0.0;
  double j2 = 0.0;
  for (int n = start; n > 0; --n) {
    if (n % 2 == 0) norm += 2.0 * cur;
    if (n == 2) j2 = cur;
    const double prev = (2.0 * n / x) * cur - next;
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      j2 *= 1e-250;
    }
  }
  norm += cur;  // J_0
  return j2 / norm;
}

}  // namespace

double bessel_j2(double x) {
  const double ax = std::abs(x);  // J2 is even
  if (ax < kSeriesLimit) return j2_series(ax);
  return j2_miller(ax);
}

}  // namespace kdtl
