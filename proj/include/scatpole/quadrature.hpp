#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

namespace scatpole {

struct QuadPoint1D {
  double x;  // node in [-1, 1]
  double w;
};

/// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on P_k.
inline std::vector<QuadPoint1D> gauss_legendre(int k) {
  std::vector<QuadPoint1D> rule(k);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < k; ++i) {
    double x = std::cos(pi * (i + 0.75) / (k + 0.5));
    double p0 = 0, p1 = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = x;
      for (int j = 2; j <= k; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = k * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = x;
    for (int j = 2; j <= k; ++j) {
      double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = k * (x * p1 - p0) / (x * x - 1.0);
    rule[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
  }
  return rule;
}

struct TriQuadPoint {
  double l0, l1, l2;  // barycentric
  double w;           // weights sum to 1; multiply by triangle area
};

/// Dunavant 7-point rule, exact for degree 5 on the triangle.
inline const std::array<TriQuadPoint, 7>& triangle_rule_deg5() {
  static const double a1 = 0.059715871789770, b1 = 0.470142064105115;
  static const double a2 = 0.797426985353087, b2 = 0.101286507323456;
  static const double w0 = 0.225;
  static const double w1 = 0.132394152788506;
  static const double w2 = 0.125939180544827;
  static const std::array<TriQuadPoint, 7> rule = {{
      {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w0},
      {a1, b1, b1, w1},
      {b1, a1, b1, w1},
      {b1, b1, a1, w1},
      {a2, b2, b2, w2},
      {b2, a2, b2, w2},
      {b2, b2, a2, w2},
  }};
  return rule;
}

struct SpherePoint {
  Eigen::Vector3d dir;
  double w;  // weights sum to 4*pi
};

/// Product rule (Gauss-Legendre in cos(theta) x uniform in phi); integrates
/// spherical harmonics exactly up to degree min(2*n_theta - 1, n_phi - 1).
inline std::vector<SpherePoint> sphere_product_rule(int n_theta, int n_phi) {
  auto gl = gauss_legendre(n_theta);
  std::vector<SpherePoint> pts;
  pts.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  const double two_pi = 6.28318530717958647692;
  for (int i = 0; i < n_theta; ++i) {
    double ct = gl[i].x;
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      double phi = two_pi * j / n_phi;
      Eigen::Vector3d d(st * std::cos(phi), st * std::sin(phi), ct);
      pts.push_back({d, gl[i].w * two_pi / n_phi});
    }
  }
  return pts;
}

}  // namespace scatpole
