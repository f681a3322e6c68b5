#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "scatpole/errors.hpp"
#include "scatpole/sim.hpp"
#include "scatpole/specfun.hpp"

namespace scatpole {

/// Exact unit-ball resonances: zeros of d_n(kappa) = h_n(kappa) z_n(kappa),
/// handled factor by factor so each root knows its kind.
enum class RootKind { HZero, ZZero };

inline const char* to_string(RootKind k) { return k == RootKind::HZero ? "H-zero" : "Z-zero"; }

struct OracleRoot {
  int n;
  RootKind kind;
  Complex kappa;
  int multiplicity;  // 2n + 1
};

namespace detail {

struct AnalyticFn {
  std::function<Complex(Complex)> f;
  std::function<Complex(Complex)> df;
};

inline AnalyticFn hankel_factor(int n) {
  return {[n](Complex z) { return hankel1_sph(n, z).h; },
          [n](Complex z) { return hankel1_sph(n, z).hp; }};
}

inline AnalyticFn zfun_factor(int n) {
  // z_n' = n(n+1)/z h_n - (2n-1) h_{n-1} + z h_{n-2}, with h_{-1} = i h_0
  return {[n](Complex z) { return z1_sph(n, z); },
          [n](Complex z) {
            HankelPair p = hankel1_sph(n, z);
            Complex hnm1 = p.hp + (double(n + 1) / z) * p.h;
            Complex hnm2 = n >= 2 ? hankel1_sph(n - 2, z).h : kImag * hankel1_sph(0, z).h;
            return double(n) * double(n + 1) / z * p.h - double(2 * n - 1) * hnm1 + z * hnm2;
          }};
}

struct Rect {
  double x0, x1, y0, y1;
  Complex center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  double diam() const { return std::hypot(x1 - x0, y1 - y0); }
};

/// Winding number of f around the rectangle boundary. Edges are sampled
/// adaptively until consecutive phase steps stay below pi/2.
inline int winding_number(const AnalyticFn& fn, const Rect& r) {
  std::vector<Complex> corners = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
  // bisects while any phase step exceeds pi/2
  std::function<double(Complex, Complex, Complex, Complex, int)> seg =
      [&](Complex za, Complex zb, Complex va, Complex vb, int depth) -> double {
    if (va == 0.0 || vb == 0.0) throw ValidationError("winding_number: zero on the contour");
    double d = std::arg(vb / va);
    if (std::abs(d) <= 1.5707963267948966) return d;
    if (depth > 48)
      throw ValidationError("winding_number: phase did not settle (root on contour?)");
    Complex zm = 0.5 * (za + zb);
    Complex vm = fn.f(zm);
    return seg(za, zm, va, vm, depth + 1) + seg(zm, zb, vm, vb, depth + 1);
  };
  double total = 0;
  const int pre = 12;  // initial samples per edge guard against phase aliasing
  for (int e = 0; e < 4; ++e) {
    Complex a = corners[e], b = corners[(e + 1) % 4];
    Complex za = a, va = fn.f(a);
    for (int s = 1; s <= pre; ++s) {
      Complex zb = a + (b - a) * (double(s) / pre);
      Complex vb = fn.f(zb);
      total += seg(za, zb, va, vb, 0);
      za = zb;
      va = vb;
    }
  }
  double w = total / 6.28318530717958647692;
  long rounded = std::lround(w);
  if (std::abs(w - double(rounded)) > 0.1)
    throw ValidationError("winding_number: non-integer winding (root on contour?)");
  return int(rounded);
}

inline Complex polish_root(const AnalyticFn& fn, const Rect& r, int max_iter = 50) {
  Complex z = r.center();
  Rect bounds = r;
  for (int it = 0; it < max_iter; ++it) {
    Complex f = fn.f(z);
    Complex df = fn.df(z);
    if (df == 0.0) break;
    Complex step = f / df;
    Complex znew = z - step;
    // keep Newton inside the isolating rectangle; bisect toward it otherwise
    int guard = 0;
    while ((znew.real() < bounds.x0 || znew.real() > bounds.x1 || znew.imag() < bounds.y0 ||
            znew.imag() > bounds.y1) &&
           guard++ < 60) {
      step *= 0.5;
      znew = z - step;
    }
    if (std::abs(znew - z) <= 1e-16 * (1.0 + std::abs(z))) return znew;
    z = znew;
  }
  return z;
}

inline void isolate_roots(const AnalyticFn& fn, Rect r, std::vector<Complex>& out, int depth = 0) {
  int w = winding_number(fn, r);
  if (w == 0) return;
  if ((w == 1 && r.diam() < 1e-3) || depth > 60) {
    out.push_back(polish_root(fn, r));
    return;
  }
  double xm = 0.5 * (r.x0 + r.x1), ym = 0.5 * (r.y0 + r.y1);
  isolate_roots(fn, {r.x0, xm, r.y0, ym}, out, depth + 1);
  isolate_roots(fn, {xm, r.x1, r.y0, ym}, out, depth + 1);
  isolate_roots(fn, {r.x0, xm, ym, r.y1}, out, depth + 1);
  isolate_roots(fn, {xm, r.x1, ym, r.y1}, out, depth + 1);
}

}  // namespace detail

/// All zeros of h_n and z_n, n <= n_max, inside the region (half-open edge
/// convention). The rectangle is padded slightly before applying the
/// argument principle so roots sitting exactly on an edge are still found,
/// then membership is decided on the polished root.
inline std::vector<OracleRoot> exact_ball_resonances(const SearchRegion& region, int n_max) {
  if (!region.valid()) throw DomainError("exact_ball_resonances: empty region");
  if (n_max < 1) throw DomainError("exact_ball_resonances: n_max must be >= 1");
  double pad = 3.7e-7 * std::max(1.0, std::max(region.a_max - region.a_min,
                                               region.b_max - region.b_min));
  detail::Rect r{region.a_min - pad, region.a_max + pad, region.b_min - pad, region.b_max + pad};
  std::vector<OracleRoot> roots;
  for (int n = 1; n <= n_max; ++n) {
    for (int kind = 0; kind < 2; ++kind) {
      auto fn = kind == 0 ? detail::hankel_factor(n) : detail::zfun_factor(n);
      std::vector<Complex> found;
      detail::isolate_roots(fn, r, found);
      for (Complex z : found) {
        if (!region.contains(z)) continue;
        // snap a near-axis real part so the reported root is clean
        if (std::abs(z.real()) < 1e-13) z = Complex(0.0, z.imag());
        roots.push_back({n, kind == 0 ? RootKind::HZero : RootKind::ZZero, z, 2 * n + 1});
      }
    }
  }
  std::sort(roots.begin(), roots.end(), [](const OracleRoot& a, const OracleRoot& b) {
    return std::abs(a.kappa) < std::abs(b.kappa);
  });
  return roots;
}

/// Convergence orders r_l = -log(e_l / e_{l-1}) / log((N_l / N_{l-1})^{1/3}).
/// With a reference value the error is |kappa_l - kappa|; otherwise the
/// successive-difference form |kappa_l - kappa_{l-1}| is used (defined from
/// the third row on). Rows without a defined order get nullopt.
inline std::vector<std::optional<double>> convergence_orders(
    const std::vector<std::pair<double, Complex>>& rows, std::optional<Complex> reference) {
  const std::size_t L = rows.size();
  std::vector<std::optional<double>> orders(L);
  std::size_t min_rows = reference ? 2 : 3;
  if (L < min_rows) throw DomainError("convergence_orders: not enough rows");
  for (std::size_t l = 1; l < L; ++l)
    if (rows[l].first <= rows[l - 1].first)
      throw DomainError("convergence_orders: DOF counts must increase");
  auto err = [&](std::size_t l) -> std::optional<double> {
    if (reference) return std::abs(rows[l].second - *reference);
    if (l == 0) return std::nullopt;
    return std::abs(rows[l].second - rows[l - 1].second);
  };
  for (std::size_t l = reference ? 1 : 2; l < L; ++l) {
    auto el = err(l), ep = err(l - 1);
    if (!el || !ep || *ep == 0.0 || *el == 0.0) continue;  // undefined
    double ratio = std::log(rows[l].first / rows[l - 1].first) / 3.0;
    orders[l] = -std::log(*el / *ep) / ratio;
  }
  return orders;
}

}  // namespace scatpole
