#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "scatpole/errors.hpp"

namespace scatpole {

using Complex = std::complex<double>;

inline constexpr Complex kImag{0.0, 1.0};

/// Spherical Hankel function of the first kind together with its derivative.
/// h' is obtained from h_{n-1}(z) - (n+1)/z * h_n(z).
struct HankelPair {
  int n;
  Complex z;
  Complex h;
  Complex hp;
};

namespace detail {

inline Complex hankel_h0(Complex z) { return -kImag * std::exp(kImag * z) / z; }

inline Complex hankel_h1(Complex z) {
  return -std::exp(kImag * z) * (z + kImag) / (z * z);
}

inline bool finite(Complex v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

}  // namespace detail

/// h_n^{(1)}(z) by upward recurrence from the closed forms of h_0, h_1.
/// Upward is the stable direction: h_n^{(1)} is the dominant solution.
inline HankelPair hankel1_sph(int n, Complex z) {
  if (n < 0) throw DomainError("hankel1_sph: order must be >= 0");
  if (z == 0.0) throw DomainError("hankel1_sph: z = 0");
  Complex h0 = detail::hankel_h0(z);
  Complex h1 = detail::hankel_h1(z);
  if (n == 0) return {0, z, h0, -h1};
  Complex hm1 = h0, h = h1;
  for (int k = 1; k < n; ++k) {
    Complex hp1 = (double(2 * k + 1) / z) * h - hm1;
    if (!detail::finite(hp1))
      throw OverflowError(k + 1, "hankel1_sph: overflow at order " + std::to_string(k + 1));
    hm1 = h;
    h = hp1;
  }
  Complex hp = hm1 - (double(n + 1) / z) * h;
  return {n, z, h, hp};
}

/// z_n^{(1)}(z) = h_n^{(1)}(z) + z h_n^{(1)'}(z), evaluated through the
/// equivalent form -n h_n + z h_{n-1} (with h_{-1} = i h_0 for n = 0).
inline Complex z1_sph(int n, Complex z) {
  if (z == 0.0) throw DomainError("z1_sph: z = 0");
  if (n == 0) return kImag * z * detail::hankel_h0(z);
  HankelPair p = hankel1_sph(n, z);
  // h_{n-1} = hp + (n+1)/z * h
  Complex hnm1 = p.hp + (double(n + 1) / z) * p.h;
  return -double(n) * p.h + z * hnm1;
}

/// delta_n(kappa) = z_n^{(1)}(kappa R) / h_n^{(1)}(kappa R) and its
/// kappa-derivative. Evaluated through the ratio rho_k = h_{k-1}/h_k with a
/// rescaled recurrence, so orders in the hundreds neither overflow nor lose
/// the pole information (the magnitude of h_n is tracked in log space).
struct DtnRatio {
  int n;
  Complex kR;
  Complex delta;
  Complex delta_prime;
};

inline DtnRatio dtn_ratio(int n, Complex kappa, double R) {
  if (n < 1) throw DomainError("dtn_ratio: order must be >= 1");
  if (R <= 0.0) throw DomainError("dtn_ratio: R must be positive");
  Complex z = kappa * R;
  if (z == 0.0) throw DomainError("dtn_ratio: kappa R = 0");

  // Pair (a, b) = scaled (h_{k-1}, h_k); log_scale recovers log|h_k|.
  Complex a = detail::hankel_h0(z);
  Complex b = detail::hankel_h1(z);
  double log_scale = 0.0;
  auto rescale = [&] {
    double s = std::max(std::abs(a), std::abs(b));
    if (s > 0.0 && std::isfinite(s)) {
      a /= s;
      b /= s;
      log_scale += std::log(s);
    }
  };
  rescale();
  Complex rho_prev = kImag;  // h_{-1}/h_0
  for (int k = 1; k < n; ++k) {
    rho_prev = a / b;
    Complex next = (double(2 * k + 1) / z) * b - a;
    a = b;
    b = next;
    rescale();
  }
  Complex rho = a / b;  // h_{n-1}/h_n
  double log_abs_hn = std::log(std::abs(b)) + log_scale;
  if (!detail::finite(rho) || log_abs_hn < -640.0)
    throw CoefficientPoleError(n, 'h',
                               "dtn_ratio: h_n(kappa R) vanishes at n = " + std::to_string(n));

  Complex delta = -double(n) + z * rho;
  // h_n'/h_n and z_n'/h_n in ratio space; z_n' from
  // n(n+1)/z h_n - (2n-1) h_{n-1} + z h_{n-2}.
  Complex hp_over_h = rho - double(n + 1) / z;
  Complex zp_over_h =
      double(n) * double(n + 1) / z - double(2 * n - 1) * rho + z * rho * rho_prev;
  Complex ddelta_dz = zp_over_h - delta * hp_over_h;
  return {n, z, delta, R * ddelta_dz};
}

/// Plain cross product of a real direction with a complex vector. Eigen's
/// cross() conjugates complex components, which is not the bilinear product
/// V = x_hat x U needs.
inline Eigen::Vector3cd cross_rc(const Eigen::Vector3d& a, const Eigen::Vector3cd& b) {
  return {a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
          a.x() * b.y() - a.y() * b.x()};
}

/// Scalar and tangential vector spherical harmonics at a unit direction.
///
/// Convention: fully orthonormal harmonics without the Condon-Shortley
/// phase, so conj(Y_n^m) = Y_n^{-m} and conj(U_n^m) = U_n^{-m} hold exactly.
struct VecHarmonicSample {
  int n, m;
  Eigen::Vector3d dir;
  Complex Y;
  Eigen::Vector3cd U;
  Eigen::Vector3cd V;
};

/// All harmonics with 1 <= n <= n_max, |m| <= n at one direction.
///
/// The theta-derivative and m/sin(theta) terms are evaluated through the
/// recurrences for tau_n^m = d P_n^m(cos t)/dt and pi_n^m = m P_n^m(cos t)/
/// sin t, both of which stay finite at the poles, so directions arbitrarily
/// close to (0,0,+-1) need no special casing.
class HarmonicTable {
 public:
  HarmonicTable(int n_max, const Eigen::Vector3d& dir) : n_max_(n_max), dir_(dir) {
    if (n_max < 1) throw DomainError("HarmonicTable: n_max must be >= 1");
    if (std::abs(dir.norm() - 1.0) > 1e-12)
      throw DomainError("HarmonicTable: direction must be a unit vector");
    build();
  }

  static int index(int n, int m) { return n * n - 1 + (m + n); }
  int size() const { return n_max_ * (n_max_ + 2); }
  int n_max() const { return n_max_; }
  const Eigen::Vector3d& dir() const { return dir_; }

  Complex Y(int n, int m) const { return Y_[check(n, m)]; }
  const Eigen::Vector3cd& U(int n, int m) const { return U_[check(n, m)]; }
  const Eigen::Vector3cd& V(int n, int m) const { return V_[check(n, m)]; }

  VecHarmonicSample sample(int n, int m) const {
    int i = check(n, m);
    return {n, m, dir_, Y_[i], U_[i], V_[i]};
  }

 private:
  int check(int n, int m) const {
    if (n < 1 || n > n_max_ || m < -n || m > n)
      throw DomainError("HarmonicTable: index out of range");
    return index(n, m);
  }

  void build() {
    const double four_pi = 12.566370614359172954;
    double ct = dir_.z();
    double st = std::hypot(dir_.x(), dir_.y());
    double cp = 1.0, sp = 0.0;
    if (st > 0.0) {
      cp = dir_.x() / st;
      sp = dir_.y() / st;
    }
    Eigen::Vector3d e_theta(ct * cp, ct * sp, -st);
    Eigen::Vector3d e_phi(-sp, cp, 0.0);
    Complex eiphi(cp, sp);

    int nn = n_max_;
    Y_.assign(size(), Complex(0));
    U_.assign(size(), Eigen::Vector3cd::Zero());
    V_.assign(size(), Eigen::Vector3cd::Zero());

    // P_n^m for the active m, plus pi/tau; sweep m = 0..n_max.
    std::vector<double> P(nn + 1, 0.0), Pi(nn + 1, 0.0), Tau(nn + 1, 0.0);
    std::vector<double> P1(nn + 1, 0.0);  // m = 1 values, for tau_n^0
    {
      // m = 1 pass first: tau_n^0 = -P_n^1.
      double s = 1.0;  // (2m-1)!! st^{m-1} at m = 1
      P1[1] = s * st;
      if (nn >= 2) P1[2] = 3.0 * ct * P1[1];
      for (int n = 3; n <= nn; ++n)
        P1[n] = ((2 * n - 1) * ct * P1[n - 1] - n * P1[n - 2]) / double(n - 1);
    }

    double sfac = 1.0;  // (2m-1)!! st^{m-1}, maintained across m
    for (int m = 0; m <= nn; ++m) {
      if (m == 0) {
        P[0] = 1.0;
        if (nn >= 1) P[1] = ct;
        for (int n = 2; n <= nn; ++n)
          P[n] = ((2 * n - 1) * ct * P[n - 1] - (n - 1) * P[n - 2]) / double(n);
        for (int n = 1; n <= nn; ++n) {
          Pi[n] = 0.0;
          Tau[n] = -P1[n];
        }
      } else {
        if (m > 1) sfac *= (2 * m - 1) * st;
        std::fill(P.begin(), P.end(), 0.0);
        std::fill(Pi.begin(), Pi.end(), 0.0);
        Pi[m] = m * sfac;
        P[m] = sfac * st;
        if (m + 1 <= nn) {
          Pi[m + 1] = (2 * m + 1) * ct * Pi[m];
          P[m + 1] = (2 * m + 1) * ct * P[m];
        }
        for (int n = m + 2; n <= nn; ++n) {
          Pi[n] = ((2 * n - 1) * ct * Pi[n - 1] - (n + m - 1) * Pi[n - 2]) / double(n - m);
          P[n] = ((2 * n - 1) * ct * P[n - 1] - (n + m - 1) * P[n - 2]) / double(n - m);
        }
        for (int n = m; n <= nn; ++n) {
          double pim1 = (n - 1 >= m) ? Pi[n - 1] : 0.0;
          Tau[n] = (n * ct * Pi[n] - (n + m) * pim1) / double(m);
        }
      }

      Complex eimp(1.0, 0.0);
      for (int k = 0; k < m; ++k) eimp *= eiphi;
      for (int n = std::max(1, m); n <= nn; ++n) {
        double norm = std::sqrt((2 * n + 1) / four_pi *
                                std::exp(std::lgamma(n - m + 1.0) - std::lgamma(n + m + 1.0)));
        double us = norm / std::sqrt(double(n) * (n + 1));
        Complex y = norm * P[n] * eimp;
        Eigen::Vector3cd u =
            us * eimp *
            (Tau[n] * e_theta.cast<Complex>() + kImag * Pi[n] * e_phi.cast<Complex>());
        int ip = index(n, m);
        Y_[ip] = y;
        U_[ip] = u;
        V_[ip] = cross_rc(dir_, u);
        if (m > 0) {
          int im = index(n, -m);
          Y_[im] = std::conj(y);
          U_[im] = u.conjugate();
          V_[im] = cross_rc(dir_, U_[im]);
        }
      }
    }
  }

  int n_max_;
  Eigen::Vector3d dir_;
  std::vector<Complex> Y_;
  std::vector<Eigen::Vector3cd, Eigen::aligned_allocator<Eigen::Vector3cd>> U_, V_;
};

inline VecHarmonicSample vec_sph_harm(int n, int m, const Eigen::Vector3d& dir) {
  if (n < 1 || std::abs(m) > n) throw DomainError("vec_sph_harm: invalid (n, m)");
  HarmonicTable table(n, dir);
  return table.sample(n, m);
}

}  // namespace scatpole
