#include "maslov/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "maslov/error.hpp"

namespace maslov {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

struct FrameSystem {
  const Problem* problem;
  double lambda;
  int n;
  Vec inv_d;

  void operator()(const State& f, State& dfdx, double x) const {
    const Eigen::Index cols = static_cast<Eigen::Index>(f.size()) / (2 * n);
    const Eigen::Map<const Mat> frame(f.data(), 2 * n, cols);
    Eigen::Map<Mat> out(dfdx.data(), 2 * n, cols);
    Mat vl = problem->V(x);
    vl.diagonal().array() -= lambda;
    out.topRows(n) = inv_d.asDiagonal() * frame.bottomRows(n);
    out.bottomRows(n) = vl * frame.topRows(n);
  }
};

double det_top(const Mat& frame) {
  const auto n = frame.cols();
  return Mat(frame.topRows(n)).determinant();
}

double sigma_min_top(const Mat& frame) {
  const auto n = frame.cols();
  if (n == 1) return std::abs(frame(0, 0));
  return Eigen::JacobiSVD<Mat>(Mat(frame.topRows(n))).singularValues()(n - 1);
}

double lagrangian_residual(const Mat& frame) {
  const auto n = frame.cols();
  const Mat x = frame.topRows(n);
  const Mat y = frame.bottomRows(n);
  const Mat skew = x.transpose() * y - y.transpose() * x;
  if (n == 1) return 0.0;
  return Eigen::JacobiSVD<Mat>(skew).singularValues()(0);
}

// Symmetric square root of the generalized problem, scaled back: D^{1/2} M^{1/2} D^{1/2}.
Mat asymptotic_graph(const Problem& p, Side side, double lambda) {
  const AsymptoticSystem sys = asymptotic_system(p, side, lambda);
  const Vec sqrt_d = p.diffusion().array().sqrt();
  // U is D-orthonormal: U^T D U = I, so W = D^{1/2} U is orthogonal.
  const Mat w = sqrt_d.asDiagonal() * sys.U;
  const Mat root = w * sys.mu.array().sqrt().matrix().asDiagonal() * w.transpose();
  Mat s = sqrt_d.asDiagonal() * root * sqrt_d.asDiagonal();
  return 0.5 * (s + s.transpose());
}

void append_sample(PropagationTrace& trace, double x, const Mat& q, Mat r) {
  trace.xs.push_back(x);
  trace.det_x.push_back(det_top(q));
  trace.sigma_min.push_back(sigma_min_top(q));
  trace.lagrangian_residual.push_back(lagrangian_residual(q));
  trace.frames.push_back(q);
  trace.r_factors.push_back(std::move(r));
}

}  // namespace

Mat system_matrix(const Problem& p, double x, double lambda) {
  const int n = p.n();
  Mat a = Mat::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = p.diffusion().cwiseInverse().asDiagonal();
  Mat vl = p.V(x);
  vl.diagonal().array() -= lambda;
  a.bottomLeftCorner(n, n) = vl;
  return a;
}

AsymptoticSystem asymptotic_system(const Problem& p, Side side, double lambda) {
  const int n = p.n();
  const Vec inv_sqrt_d = p.diffusion().array().sqrt().inverse();
  Mat shifted = p.limit(side);
  shifted.diagonal().array() -= lambda;
  const Mat reduced = inv_sqrt_d.asDiagonal() * shifted * inv_sqrt_d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (reduced + reduced.transpose()));
  AsymptoticSystem sys;
  sys.mu = es.eigenvalues();
  if (!(sys.mu(0) > 0.0)) {
    std::ostringstream msg;
    msg << "asymptotic system at " << (side == Side::Minus ? "-inf" : "+inf") << " for lambda=" << lambda
        << " has generalized eigenvalue " << sys.mu(0) << " <= 0; V_± - λ is not positive definite";
    throw Error(ErrorKind::HypothesisViolation, msg.str());
  }
  sys.U = inv_sqrt_d.asDiagonal() * es.eigenvectors();
  const Vec nu = sys.mu.array().sqrt();
  const Mat du = p.diffusion().asDiagonal() * sys.U;
  sys.unstable.resize(2 * n, n);
  sys.unstable << sys.U, du * nu.asDiagonal();
  sys.stable.resize(2 * n, n);
  sys.stable << sys.U, -(du * nu.asDiagonal());
  sys.matrix = Mat::Zero(2 * n, 2 * n);
  sys.matrix.topRightCorner(n, n) = p.diffusion().cwiseInverse().asDiagonal();
  sys.matrix.bottomLeftCorner(n, n) = shifted;
  return sys;
}

LagrangianFrame unstable_subspace_at_minus_infinity(const Problem& p, double lambda, double x_min) {
  return {graph_frame(asymptotic_graph(p, Side::Minus, lambda)), x_min, lambda};
}

LagrangianFrame stable_subspace_at_plus_infinity(const Problem& p, double lambda, double x_max) {
  return {graph_frame(-asymptotic_graph(p, Side::Plus, lambda)), x_max, lambda};
}

double truncation_point(const Problem& p, double tol_asym, Side side) {
  const TailModel& t = p.tail(side);
  const Mat lim = p.limit(side);
  if (t.exact_from && t.probe) {
    if (spectral_norm(p.V(*t.probe) - lim) <= tol_asym) return *t.exact_from;
    throw Error(ErrorKind::Precondition,
                "tabulated tail has not converged to its limit within tol_asym at the table end; "
                "extend the table or pass an explicit x_min");
  }
  if (std::isinf(t.rate)) return t.exact_from.value_or(0.0);
  if (!t.fitted || !(t.rate > 0.0)) {
    throw Error(ErrorKind::Precondition,
                "could not fit an exponential decay to the potential tail; pass an explicit x_min/x_max");
  }
  const double dist = std::max(0.0, (t.log_amplitude - std::log(tol_asym)) / t.rate);
  return side == Side::Minus ? -dist : dist;
}

double PropagationTrace::max_lagrangian_residual() const {
  double m = 0.0;
  for (double r : lagrangian_residual) m = std::max(m, r);
  return m;
}

PropagationTrace propagate(const Problem& p, double lambda, const Mat& initial, double x_start,
                           double x_end, const OdeControls& controls) {
  const int n = p.n();
  if (initial.rows() != 2 * n || initial.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "initial frame has the wrong shape");
  }
  PropagationTrace trace;
  trace.lambda = lambda;
  auto record = [&](double x, const Mat& q, Mat r) { append_sample(trace, x, q, std::move(r)); };
  Mat q0 = orthonormalize(initial);
  record(x_start, q0, Mat::Identity(n, n));
  if (x_end == x_start) return trace;

  FrameSystem sys{&p, lambda, n, p.diffusion().cwiseInverse()};
  auto stepper = odeint::make_controlled(controls.atol, controls.rtol, odeint::runge_kutta_dopri5<State>());
  const double dir = x_end > x_start ? 1.0 : -1.0;
  double x = x_start;
  double dt = dir * std::min(controls.h_init, std::abs(x_end - x_start));
  State state(q0.data(), q0.data() + q0.size());
  long steps = 0;
  while (dir * (x_end - x) > 0.0) {
    if (++steps > controls.max_steps) {
      throw Error(ErrorKind::IntegrationFailure, "step budget exhausted at x=" + std::to_string(x));
    }
    const double remaining = x_end - x;
    if (std::abs(dt) > controls.h_max) dt = dir * controls.h_max;
    const bool last = std::abs(dt) >= std::abs(remaining);
    if (last) dt = remaining;
    const auto result = stepper.try_step(sys, state, x, dt);
    if (result == odeint::fail) {
      if (std::abs(dt) < 1e-13 * std::max(1.0, std::abs(x))) {
        std::ostringstream msg;
        msg << "step size underflow at x=" << x << " (lambda=" << lambda << ")";
        throw Error(ErrorKind::IntegrationFailure, msg.str());
      }
      continue;
    }
    if (last) x = x_end;

    const Eigen::Map<const Mat> raw(state.data(), 2 * n, n);
    Mat r;
    Mat q = orthonormalize(raw, &r);
    // sign(det X) must survive renormalisation: det R > 0 by construction.
    for (int i = 0; i < n; ++i) {
      if (!(r(i, i) > 0.0)) {
        throw Error(ErrorKind::IntegrationFailure, "frame lost rank at x=" + std::to_string(x));
      }
    }
    const double det_raw = Mat(raw.topRows(n)).determinant();
    const double det_q = det_top(q);
    if (std::abs(det_q) > 1e-8 && std::signbit(det_raw) != std::signbit(det_q)) {
      throw Error(ErrorKind::IntegrationFailure,
                  "det X changed sign under renormalisation at x=" + std::to_string(x));
    }
    record(x, q, r);
    if (trace.lagrangian_residual.back() > 100.0 * controls.tol_lag) {
      std::ostringstream msg;
      msg << "Lagrangian residual " << trace.lagrangian_residual.back() << " at x=" << x
          << " exceeds 100*tol_lag; integration unreliable";
      throw Error(ErrorKind::IntegrationFailure, msg.str());
    }
    std::copy(q.data(), q.data() + q.size(), state.begin());
    stepper.reset();  // FSAL derivative is stale after the state rewrite
  }
  return trace;
}

PropagationTrace propagate_frame(const Problem& p, double lambda, double x_min, double x_end,
                                 const OdeControls& controls) {
  const LagrangianFrame init = unstable_subspace_at_minus_infinity(p, lambda, x_min);
  return propagate(p, lambda, init.columns(), x_min, x_end, controls);
}

Mat advance(const Problem& p, double lambda, const Mat& frame, double x0, double x1,
            const OdeControls& controls) {
  if (x0 == x1) return frame;
  const int n = p.n();
  if (frame.cols() == 0) return frame;
  FrameSystem sys{&p, lambda, n, p.diffusion().cwiseInverse()};
  auto stepper = odeint::make_controlled(controls.atol, controls.rtol, odeint::runge_kutta_dopri5<State>());
  State state(frame.data(), frame.data() + frame.size());
  const double dir = x1 > x0 ? 1.0 : -1.0;
  double x = x0;
  double dt = dir * std::min(controls.h_init, std::abs(x1 - x0));
  long steps = 0;
  while (dir * (x1 - x) > 0.0) {
    if (++steps > controls.max_steps) throw Error(ErrorKind::IntegrationFailure, "step budget exhausted");
    if (std::abs(dt) > controls.h_max) dt = dir * controls.h_max;
    const bool last = std::abs(dt) >= std::abs(x1 - x);
    if (last) dt = x1 - x;
    if (stepper.try_step(sys, state, x, dt) == odeint::fail) {
      if (std::abs(dt) < 1e-13 * std::max(1.0, std::abs(x))) {
        throw Error(ErrorKind::IntegrationFailure, "step size underflow at x=" + std::to_string(x));
      }
      continue;
    }
    if (last) x = x1;
    const Eigen::Map<const Mat> raw(state.data(), 2 * n, frame.cols());
    const Mat q = orthonormalize(raw);
    std::copy(q.data(), q.data() + q.size(), state.begin());
    stepper.reset();
  }
  return Eigen::Map<const Mat>(state.data(), 2 * n, frame.cols());
}

std::size_t locate(const PropagationTrace& trace, double x) {
  const auto& xs = trace.xs;
  if (xs.size() < 2) return 0;
  const bool forward = xs.back() > xs.front();
  std::size_t i;
  if (forward) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  } else {
    auto it = std::upper_bound(xs.begin(), xs.end(), x, [](double a, double b) { return a > b; });
    i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  }
  return std::min(i, xs.size() - 1);
}

Mat frame_at(const Problem& p, const PropagationTrace& trace, double x, const OdeControls& controls) {
  const std::size_t i = locate(trace, x);
  if (trace.xs[i] == x) return trace.frames[i];
  if (trace.stabilized() && i >= trace.match_index && i + 1 < trace.size()) {
    const Mat k = advance(p, trace.lambda, trace.kernel_parts[i + 1], trace.xs[i + 1], x, controls);
    const Mat c = advance(p, trace.lambda, trace.complement_parts[i], trace.xs[i], x, controls);
    Mat both(k.rows(), k.cols() + c.cols());
    both << k, c;
    return orthonormalize(both);
  }
  return advance(p, trace.lambda, trace.frames[i], trace.xs[i], x, controls);
}

SubspaceIntersection lagrangian_intersection(const Mat& a, const Mat& b, double tol) {
  const auto n = a.cols();
  const SymplecticForm form(static_cast<int>(n));
  const Mat m = (form.matrix() * b).transpose() * a;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  SubspaceIntersection out;
  out.singular_values = svd.singularValues();
  int dim = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.singular_values(i) <= tol) ++dim;
  }
  out.dimension = dim;
  out.in_a = svd.matrixV().rightCols(dim);
  out.complement = svd.matrixV().leftCols(n - dim);
  return out;
}

PropagationTrace propagate_stabilized(const Problem& p, double lambda, double x_min, double x_end,
                                      double x_max, double match_x, double kernel_tol,
                                      const OdeControls& controls) {
  if (!(match_x > x_min) || !(x_end > match_x)) return propagate_frame(p, lambda, x_min, x_end, controls);
  PropagationTrace trace = propagate_frame(p, lambda, x_min, match_x, controls);
  const Mat a = trace.frames.back();

  const double start = std::max(x_max, x_end);
  Mat s_end = stable_subspace_at_plus_infinity(p, lambda, start).columns();
  s_end = advance(p, lambda, s_end, start, x_end, controls);
  const PropagationTrace bwd = propagate(p, lambda, s_end, x_end, match_x, controls);
  const Mat& b = bwd.frames.back();

  const SubspaceIntersection inter = lagrangian_intersection(a, b, kernel_tol);
  if (inter.dimension == 0) {
    const PropagationTrace rest = propagate(p, lambda, a, match_x, x_end, controls);
    for (std::size_t i = 1; i < rest.size(); ++i) {
      append_sample(trace, rest.xs[i], rest.frames[i], rest.r_factors[i]);
    }
    return trace;
  }

  const int n = p.n();
  const int k = inter.dimension;
  Mat in_a = inter.in_a;
  Mat comp = inter.complement;
  // keep det X continuous across the match point: [in_a | comp] must be orientation preserving
  Mat basis(n, n);
  basis << in_a, comp;
  if (basis.determinant() < 0.0) {
    if (comp.cols() > 0) {
      comp.col(0) = -comp.col(0);
    } else {
      in_a.col(0) = -in_a.col(0);
    }
  }

  // kernel directions in the coefficients of the backward trace; bwd index 0 is x_end
  const std::size_t last = bwd.size() - 1;
  std::vector<Mat> coeff(bwd.size());
  coeff[last] = orthonormalize(b.transpose() * (a * in_a));
  for (std::size_t i = last; i-- > 0;) {
    const Mat& r = bwd.r_factors[i + 1];
    coeff[i] = orthonormalize(r.triangularView<Eigen::Upper>().solve(coeff[i + 1]));
  }

  trace.kernel_dim = k;
  trace.match_index = trace.size() - 1;
  trace.kernel_parts.assign(trace.size(), Mat());
  trace.complement_parts.assign(trace.size(), Mat());
  Mat c = a * comp;
  trace.kernel_parts.back() = orthonormalize(bwd.frames[last] * coeff[last]);
  trace.complement_parts.back() = c;
  for (std::size_t i = last; i-- > 0;) {
    const Mat kpart = orthonormalize(bwd.frames[i] * coeff[i]);
    c = advance(p, lambda, c, bwd.xs[i + 1], bwd.xs[i], controls);
    Mat both(2 * n, n);
    both << kpart, c;
    append_sample(trace, bwd.xs[i], orthonormalize(both), Mat::Identity(n, n));
    trace.kernel_parts.push_back(kpart);
    trace.complement_parts.push_back(c);
  }
  return trace;
}

}  // namespace maslov
