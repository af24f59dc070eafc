#pragma once

// Propagation of the unstable subspace E^u_-(x, λ) of p' = A(x, λ) p along x.

#include <vector>

#include "maslov/problem.hpp"
#include "maslov/symplectic.hpp"

namespace maslov {

struct OdeControls {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_max = 0.1;
  double h_init = 1e-3;
  double tol_lag = 1e-8;
  long max_steps = 5'000'000;
};

/// A(x, λ) = [[0, D^{-1}], [V(x) - λ I, 0]].
Mat system_matrix(const Problem& p, double x, double lambda);

/// Limit system at one end: A_±(λ) and its decaying/growing eigenstructure.
struct AsymptoticSystem {
  Mat matrix;   // A_±(λ), 2n x 2n
  Vec mu;       // generalized eigenvalues of (V_± - λ) U = μ D U, ascending, all > 0
  Mat U;        // matching eigenvectors (columns), D-orthonormal
  Mat unstable; // columns (U_j,  sqrt(μ_j) D U_j)
  Mat stable;   // columns (U_j, -sqrt(μ_j) D U_j)
};

AsymptoticSystem asymptotic_system(const Problem& p, Side side, double lambda);

/// Orthonormal frame of E^u_-(-∞, λ), oriented so that det X > 0.
LagrangianFrame unstable_subspace_at_minus_infinity(const Problem& p, double lambda, double x_min);

/// Orthonormal frame of E^s_+(+∞, λ), oriented so that det X > 0.
LagrangianFrame stable_subspace_at_plus_infinity(const Problem& p, double lambda, double x_max);

/// Truncation point for one end: the smallest-magnitude x (≤ 0 for Minus, ≥ 0 for Plus) with
/// sup beyond it of ||V - V_±|| <= tol_asym under the fitted tail model.
double truncation_point(const Problem& p, double tol_asym = 1e-10, Side side = Side::Minus);

struct PropagationTrace {
  double lambda = 0.0;
  std::vector<double> xs;
  std::vector<Mat> frames;     // orthonormal 2n x n frames
  std::vector<Mat> r_factors;  // raw step result = frames[i] * r_factors[i]; identity at i = 0
  std::vector<double> det_x;
  std::vector<double> sigma_min;
  std::vector<double> lagrangian_residual;

  // Kernel-stabilised traces (see propagate_stabilized): beyond match_index the frame is
  // [kernel_parts | complement_parts], carried by the backward-stable trace from +∞.
  int kernel_dim = 0;
  std::size_t match_index = 0;
  std::vector<Mat> kernel_parts;
  std::vector<Mat> complement_parts;

  std::size_t size() const noexcept { return xs.size(); }
  bool stabilized() const noexcept { return kernel_dim > 0; }
  LagrangianFrame frame(std::size_t i) const { return {frames[i], xs[i], lambda}; }
  double max_lagrangian_residual() const;
};

/// Integrates F' = A(x, λ) F from x_start to x_end (either direction) with adaptive RK 5(4),
/// re-orthonormalising by positive-diagonal QR after every accepted step.
PropagationTrace propagate(const Problem& p, double lambda, const Mat& initial, double x_start,
                           double x_end, const OdeControls& controls = {});

/// E^u_-(x, λ) on [x_min, x_end], initialised from the asymptotic unstable subspace at x_min.
PropagationTrace propagate_frame(const Problem& p, double lambda, double x_min, double x_end,
                                 const OdeControls& controls = {});

/// E^u_-(x, λ) on [x_min, x_end] for a λ that may be an eigenvalue of H on the line.
/// Forward shooting amplifies round-off along growing modes, which destroys the decaying
/// solutions of E^u_- ∩ E^s_+ beyond match_x and fakes crossings there. This variant matches
/// the forward frame against E^s_+ (integrated backward from x_max) at match_x, carries the
/// intersection by the backward trace and only the complement forward.
PropagationTrace propagate_stabilized(const Problem& p, double lambda, double x_min, double x_end,
                                      double x_max, double match_x, double kernel_tol = 1e-6,
                                      const OdeControls& controls = {});

/// Intersection of two n-dimensional subspaces: right singular vectors of (Ω B)^T A with
/// singular value <= tol, i.e. directions of span(A) lying in span(B).
struct SubspaceIntersection {
  int dimension = 0;
  Vec singular_values;  // sines of principal angles, descending
  Mat in_a;             // n x dimension coefficients: A * in_a spans the intersection
  Mat complement;       // n x (n - dimension)
};
SubspaceIntersection lagrangian_intersection(const Mat& a, const Mat& b, double tol);

/// One-shot integration of an orthonormal frame from x0 to x1; returns the orthonormalised result.
Mat advance(const Problem& p, double lambda, const Mat& frame, double x0, double x1,
            const OdeControls& controls = {});

/// Frame at any x inside the trace, re-integrated from the nearest stored sample.
Mat frame_at(const Problem& p, const PropagationTrace& trace, double x, const OdeControls& controls = {});

/// Index i of the stored sample that starts the interval containing x.
std::size_t locate(const PropagationTrace& trace, double x);

}  // namespace maslov
