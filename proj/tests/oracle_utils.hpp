// Test-only oracles, independent of the library's evaluation paths.
#pragma once

#include <complex>

#include "scatpole/specfun.hpp"

namespace scatpole::testing {

/// Direct finite sum of the closed polynomial-times-exponential form
/// h_n^{(1)}(z) = (-i)^{n+1} (e^{iz}/z) sum_k (n+k)!/(k!(n-k)!) (-2iz)^{-k}.
inline Complex hankel1_series(int n, Complex z) {
  Complex sum = 0.0;
  double a = 1.0;  // (n+k)!/(k!(n-k)!)
  Complex term(1.0, 0.0);
  Complex q = -1.0 / (2.0 * kImag * z);
  for (int k = 0; k <= n; ++k) {
    if (k > 0) {
      a *= double(n + k) * double(n - k + 1) / double(k);
      term *= q;
    }
    sum += a * term;
  }
  Complex phase(1.0, 0.0);
  for (int k = 0; k < (n + 1) % 4; ++k) phase *= -kImag;
  return phase * std::exp(kImag * z) / z * sum;
}

inline Complex z1_series(int n, Complex z) {
  Complex hm1 = n >= 1 ? hankel1_series(n - 1, z) : kImag * hankel1_series(0, z);
  return -double(n) * hankel1_series(n, z) + z * hm1;
}

}  // namespace scatpole::testing
