#pragma once

// Symplectic linear algebra on R^{2n}: the standard form, Lagrangian frames and
// their intersection with the Dirichlet plane {p1 = 0}.

#include <Eigen/Dense>

namespace maslov {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// omega(v, w) = <v, Omega w> with Omega = [[0, -I], [I, 0]].
class SymplecticForm {
 public:
  explicit SymplecticForm(int n);

  int n() const noexcept { return n_; }
  const Mat& matrix() const noexcept { return omega_; }

  double operator()(const Vec& v1, const Vec& v2) const;

 private:
  int n_;
  Mat omega_;
};

/// A 2n x n frame whose columns span an n-dimensional subspace of R^{2n}.
/// `x` and `lambda` record where on the (s, lambda) rectangle the frame lives.
class LagrangianFrame {
 public:
  LagrangianFrame() = default;
  LagrangianFrame(Mat columns, double x, double lambda);
  LagrangianFrame(const Mat& top, const Mat& bottom, double x, double lambda);

  int n() const noexcept { return static_cast<int>(columns_.cols()); }
  const Mat& columns() const noexcept { return columns_; }
  auto top() const { return columns_.topRows(n()); }
  auto bottom() const { return columns_.bottomRows(n()); }
  double x() const noexcept { return x_; }
  double lambda() const noexcept { return lambda_; }

 private:
  Mat columns_;
  double x_ = 0.0;
  double lambda_ = 0.0;
};

struct LagrangianCheck {
  bool lagrangian = false;
  double residual = 0.0;   // ||X^T Y - Y^T X||_2
  double sigma_min = 0.0;  // smallest singular value of the stacked frame
  double sigma_max = 0.0;
};

/// True iff the frame has full rank and X^T Y - Y^T X vanishes, both relative to sigma_max^2.
LagrangianCheck is_lagrangian(const LagrangianFrame& frame, double tol = 1e-8);

/// Canonical frame (X = 0, Y = I) of the Dirichlet plane.
LagrangianFrame dirichlet_frame(int n, double x = 0.0, double lambda = 0.0);

struct Intersection {
  int dimension = 0;
  Mat kernel_basis;  // n x dimension, orthonormal columns spanning ker X
  Vec singular_values;  // of X, descending
};

/// dim(frame ∩ Dirichlet plane) = n - rank(X), rank by singular-value thresholding.
/// A negative tol_rank selects the default 1e-8 * sigma_max(X; Y).
Intersection dirichlet_intersection(const LagrangianFrame& frame, double tol_rank = -1.0);

/// Thin QR re-orthonormalisation with a positive-diagonal R factor.
/// Returns Q (2n x n) and writes R (n x n) if requested. Preserves span and sign(det X).
Mat orthonormalize(const Mat& frame, Mat* r_factor = nullptr);

/// Orthonormal frame of the graph {(u, S u)} of a symmetric matrix S; det X > 0.
Mat graph_frame(const Mat& s);

/// Largest principal angle between two n-dimensional subspaces (gap metric), in radians.
double subspace_gap(const Mat& a, const Mat& b);

}  // namespace maslov
