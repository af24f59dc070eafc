#include "maslov/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maslov/error.hpp"

namespace maslov {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::HypothesisViolation: return "hypothesis-violation";
    case ErrorKind::SteadyStateResidual: return "steady-state-residual";
    case ErrorKind::IntegrationFailure: return "integration-failure";
    case ErrorKind::MonotonicityViolated: return "monotonicity-violated";
    case ErrorKind::ConsistencyFailure: return "consistency-failure";
    case ErrorKind::NonStabilization: return "non-stabilization";
    case ErrorKind::Precondition: return "precondition";
  }
  return "unknown";
}

SymplecticForm::SymplecticForm(int n) : n_(n) {
  if (n <= 0) throw Error(ErrorKind::InvalidArgument, "symplectic form needs n >= 1");
  omega_ = Mat::Zero(2 * n, 2 * n);
  omega_.topRightCorner(n, n) = -Mat::Identity(n, n);
  omega_.bottomLeftCorner(n, n) = Mat::Identity(n, n);
}

double SymplecticForm::operator()(const Vec& v1, const Vec& v2) const {
  if (v1.size() != 2 * n_ || v2.size() != 2 * n_) {
    throw Error(ErrorKind::InvalidArgument,
                "symplectic_product: expected vectors of length " + std::to_string(2 * n_));
  }
  // <v1, Omega v2> = <v1_top, -v2_bot> + <v1_bot, v2_top>
  return -v1.head(n_).dot(v2.tail(n_)) + v1.tail(n_).dot(v2.head(n_));
}

LagrangianFrame::LagrangianFrame(Mat columns, double x, double lambda)
    : columns_(std::move(columns)), x_(x), lambda_(lambda) {
  if (columns_.rows() != 2 * columns_.cols() || columns_.cols() == 0) {
    throw Error(ErrorKind::InvalidArgument, "frame must be 2n x n with n >= 1");
  }
}

LagrangianFrame::LagrangianFrame(const Mat& top, const Mat& bottom, double x, double lambda)
    : x_(x), lambda_(lambda) {
  if (top.rows() != top.cols() || bottom.rows() != top.rows() || bottom.cols() != top.cols() ||
      top.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "frame blocks must both be n x n");
  }
  columns_.resize(2 * top.rows(), top.cols());
  columns_ << top, bottom;
}

LagrangianCheck is_lagrangian(const LagrangianFrame& frame, double tol) {
  LagrangianCheck out;
  const Mat& f = frame.columns();
  Eigen::JacobiSVD<Mat> svd(f);
  const Vec& s = svd.singularValues();
  out.sigma_max = s(0);
  out.sigma_min = s(s.size() - 1);
  const Mat x = frame.top();
  const Mat y = frame.bottom();
  const Mat skew = x.transpose() * y - y.transpose() * x;
  out.residual = skew.size() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(skew).singularValues()(0);
  const double scale = out.sigma_max * out.sigma_max;
  out.lagrangian = out.sigma_min > tol * out.sigma_max && out.residual <= tol * scale;
  return out;
}

LagrangianFrame dirichlet_frame(int n, double x, double lambda) {
  return LagrangianFrame(Mat::Zero(n, n), Mat::Identity(n, n), x, lambda);
}

Intersection dirichlet_intersection(const LagrangianFrame& frame, double tol_rank) {
  const int n = frame.n();
  if (tol_rank < 0.0) {
    Eigen::JacobiSVD<Mat> full(frame.columns());
    tol_rank = 1e-8 * full.singularValues()(0);
  }
  Eigen::JacobiSVD<Mat> svd(Mat(frame.top()), Eigen::ComputeFullV);
  Intersection out;
  out.singular_values = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < n; ++i) {
    if (out.singular_values(i) > tol_rank) ++rank;
  }
  out.dimension = n - rank;
  out.kernel_basis = svd.matrixV().rightCols(out.dimension);
  return out;
}

Mat orthonormalize(const Mat& frame, Mat* r_factor) {
  const auto rows = frame.rows();
  const auto cols = frame.cols();
  Eigen::HouseholderQR<Mat> qr(frame);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  Mat r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < cols; ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) = -q.col(i);
      r.row(i) = -r.row(i);
    }
  }
  if (r_factor != nullptr) *r_factor = std::move(r);
  return q;
}

Mat graph_frame(const Mat& s) {
  const auto n = s.rows();
  Mat f(2 * n, n);
  f << Mat::Identity(n, n), s;
  return orthonormalize(f);
}

double subspace_gap(const Mat& a, const Mat& b) {
  const Mat qa = orthonormalize(a);
  const Mat qb = orthonormalize(b);
  const Mat resid = qb - qa * (qa.transpose() * qb);
  const double s = Eigen::JacobiSVD<Mat>(resid).singularValues()(0);
  return std::asin(std::clamp(s, 0.0, 1.0));
}

}  // namespace maslov
