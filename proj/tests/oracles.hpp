#pragma once

// Independent reference computations for the test suite. Nothing here calls
// into the library's integrator or eigen-solver.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Classical fixed-step RK4 from t0 to t1 with n steps; calls `observe`
/// after every step.
inline Vec rk4(const std::function<Vec(const Vec&)>& f, Vec y, double t0, double t1, int n,
               const std::function<void(double, const Vec&)>& observe = {}) {
  const double h = (t1 - t0) / n;
  for (int i = 0; i < n; ++i) {
    const Vec k1 = f(y);
    const Vec k2 = f(y + 0.5 * h * k1);
    const Vec k3 = f(y + 0.5 * h * k2);
    const Vec k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (observe) observe(t0 + (i + 1) * h, y);
  }
  return y;
}

/// Unreduced spring pendulum, state (r, theta, rdot, thetadot):
/// r'' = r thetadot^2 - (k/m) r, theta'' = -2 rdot thetadot / r.
inline Vec full_pendulum(double m, double k, const Vec& s) {
  Vec out(4);
  out << s[2], s[3], s[0] * s[3] * s[3] - k / m * s[0], -2.0 * s[2] * s[3] / s[0];
  return out;
}

/// Coefficients c_0..c_n (c_n = 1) of det(lambda I - A) by Faddeev-LeVerrier.
inline std::vector<double> characteristic_polynomial(const Mat& A) {
  const Eigen::Index n = A.rows();
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[static_cast<std::size_t>(n)] = 1.0;
  Mat M = Mat::Zero(n, n);
  const Mat I = Mat::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    M = A * M + c[static_cast<std::size_t>(n - k + 1)] * I;
    c[static_cast<std::size_t>(n - k)] = -(A * M).trace() / static_cast<double>(k);
  }
  return c;
}

inline std::pair<Complex, Complex> horner(const std::vector<double>& c, Complex z) {
  Complex p = c.back(), dp = 0.0;
  for (std::size_t i = c.size() - 1; i-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[i];
  }
  return {p, dp};
}

/// All roots of the monic polynomial sum c_i z^i by Aberth-Ehrlich
/// iteration, each polished with a few Newton steps.
inline std::vector<Complex> polynomial_roots(const std::vector<double>& c) {
  const std::size_t n = c.size() - 1;
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) bound = std::max(bound, std::abs(c[i]));
  const double radius = 1.0 + bound;
  std::vector<Complex> z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = std::polar(0.5 * radius, 2.0 * M_PI * (static_cast<double>(i) + 0.25) / n + 0.4);

  for (int iter = 0; iter < 500; ++iter) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [p, dp] = horner(c, z[i]);
      if (p == 0.0) continue;
      const Complex ratio = p / dp;
      Complex sum = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) sum += 1.0 / (z[i] - z[j]);
      const Complex w = ratio / (1.0 - ratio * sum);
      z[i] -= w;
      change = std::max(change, std::abs(w));
    }
    if (change < 1e-15) break;
  }
  for (auto& r : z) {
    for (int k = 0; k < 3; ++k) {
      const auto [p, dp] = horner(c, r);
      if (dp == 0.0) break;
      r -= p / dp;
    }
  }
  return z;
}

/// Smallest achievable max |a_i - b_pi(i)| over permutations pi.
inline double matched_distance(std::vector<Complex> a, const std::vector<Complex>& b) {
  std::vector<std::size_t> idx(b.size());
  std::iota(idx.begin(), idx.end(), 0);
  double best = INFINITY;
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[idx[i]]));
    best = std::min(best, worst);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

/// Stance SLIP field written out by hand, state (xi, phi, xidot, phidot).
inline Vec slip_stance(double m, double g, double kappa, double l0, const Vec& s) {
  Vec out(4);
  out << s[2], s[3], s[0] * s[3] * s[3] - g * std::cos(s[1]) - kappa * (s[0] - l0) / m,
      g * std::sin(s[1]) / s[0] - 2.0 * s[3] * s[2] / s[0];
  return out;
}

/// First upward crossing of xi = l0 located on a fixed RK4 grid, then
/// bisected with RK4 sub-steps from the bracketing grid point.
inline double slip_crossing_time(double m, double g, double kappa, double l0, Vec y, double h,
                                 double t_max) {
  const auto f = [&](const Vec& s) { return slip_stance(m, g, kappa, l0, s); };
  double t = 0.0;
  while (t < t_max) {
    const Vec next = rk4(f, y, t, t + h, 1);
    if (y[0] - l0 < 0.0 && next[0] - l0 >= 0.0) {
      double a = 0.0, b = h;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (a + b);
        const Vec ym = rk4(f, y, 0.0, mid, 4);
        (ym[0] - l0 < 0.0 ? a : b) = mid;
      }
      return t + 0.5 * (a + b);
    }
    y = next;
    t += h;
  }
  return INFINITY;
}

}  // namespace oracle
