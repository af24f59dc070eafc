#pragma once

// Test-side ground truth, independent of the library's solvers: closed forms, a dense
// finite-difference eigensolver and an RK4 shooting code for scalar potentials.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double sech(double x) { return 1.0 / std::cosh(x); }

// Pöschl–Teller V = c - m(m+1) sech^2 x: bound levels c - (m - j)^2, 0 <= j < m.
inline std::vector<double> pt_levels(double c, double m) {
  std::vector<double> out;
  for (int j = 0; j < m; ++j) out.push_back(c - (m - j) * (m - j));
  return out;
}

inline int pt_negative_count(double c, double m) {
  int k = 0;
  for (double l : pt_levels(c, m)) k += l < 0.0;
  return k;
}

// φ = (3/2) sech^2(x/2) solves φ'' = φ - φ^2.
inline double pulse(double x) { return 1.5 * sech(x / 2) * sech(x / 2); }
inline double pulse_x(double x) { return -1.5 * sech(x / 2) * sech(x / 2) * std::tanh(x / 2); }
inline double pulse_xx(double x) { return pulse(x) - pulse(x) * pulse(x); }

// Spectrum {-5/4, 0} below the essential floor 1 for V = 1 - 3 sech^2(x/2).
inline double pulse_V(double x) { return 1.0 - 3.0 * sech(x / 2) * sech(x / 2); }

// Dense second-order FD for -u'' + V u on [a, b], Dirichlet ends; sorted eigenvalues.
inline Eigen::VectorXd dense_fd(const std::function<double(double)>& V, double a, double b, double h) {
  const int n = static_cast<int>(std::lround((b - a) / h)) - 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 2.0 / (h * h) + V(a + (i + 1) * h);
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -1.0 / (h * h);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

// Richardson over h, h/2 of the j-th eigenvalue (0-based).
inline double dense_fd_richardson(const std::function<double(double)>& V, double a, double b, double h, int j) {
  const double c = dense_fd(V, a, b, h)(j);
  const double f = dense_fd(V, a, b, h / 2)(j);
  return (4.0 * f - c) / 3.0;
}

// Zeros of the solution of u'' = (V - λ) u decaying at -∞, on (a, L]. Classic RK4 with
// cubic Hermite location of each sign change.
inline std::vector<double> shooting_nodes(const std::function<double(double)>& V, double v_minus, double lambda,
                                          double a, double L, double h = 1e-3) {
  const double nu = std::sqrt(v_minus - lambda);
  double x = a, u = 1e-8, w = nu * 1e-8;
  auto f = [&](double xx, double uu, double ww, double& du, double& dw) {
    du = ww;
    dw = (V(xx) - lambda) * uu;
  };
  std::vector<double> nodes;
  const int steps = static_cast<int>(std::ceil((L - a) / h));
  const double dx = (L - a) / steps;
  for (int i = 0; i < steps; ++i) {
    double k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w;
    f(x, u, w, k1u, k1w);
    f(x + dx / 2, u + dx / 2 * k1u, w + dx / 2 * k1w, k2u, k2w);
    f(x + dx / 2, u + dx / 2 * k2u, w + dx / 2 * k2w, k3u, k3w);
    f(x + dx, u + dx * k3u, w + dx * k3w, k4u, k4w);
    const double u1 = u + dx / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
    const double w1 = w + dx / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
    if (u == 0.0 || (u > 0) != (u1 > 0)) {
      // Hermite cubic on [x, x + dx], bisected
      auto H = [&](double t) {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * u + (t3 - 2 * t2 + t) * dx * w + (-2 * t3 + 3 * t2) * u1 +
               (t3 - t2) * dx * w1;
      };
      double lo = 0, hi = 1;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((H(lo) > 0) == (H(mid) > 0) ? lo : hi) = mid;
      }
      nodes.push_back(x + 0.5 * (lo + hi) * dx);
    }
    // keep magnitudes bounded; zeros are scale-invariant
    const double s = std::max(std::abs(u1), std::abs(w1));
    u = u1 / s;
    w = w1 / s;
    x += dx;
  }
  return nodes;
}

}  // namespace oracle
