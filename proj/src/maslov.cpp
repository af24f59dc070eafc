#include "maslov/maslov.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "maslov/error.hpp"
#include "maslov/numerics.hpp"

namespace maslov {

const char* to_string(Axis a) { return a == Axis::S ? "s" : "lambda"; }

namespace {

double det_top(const Mat& f) {
  const auto n = f.cols();
  return f.topRows(n).determinant();
}

double sigma_top(const Mat& f) {
  const auto n = f.cols();
  Eigen::JacobiSVD<Mat> svd(f.topRows(n));
  return svd.singularValues()(n - 1);
}

// ker X at a refined crossing; a sign change guarantees at least one direction even if
// the refined point sits slightly above tol_rank.
Mat crossing_kernel(const Mat& f, double tol_rank, bool sign_change) {
  const auto n = f.cols();
  Eigen::JacobiSVD<Mat> svd(f.topRows(n), Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  Eigen::Index dim = 0;
  for (Eigen::Index i = 0; i < n; ++i) dim += s(i) <= tol_rank ? 1 : 0;
  if (dim == 0 && sign_change) dim = 1;
  return svd.matrixV().rightCols(dim);
}

int signature_of(const Vec& ev) {
  int sig = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) sig += ev(i) > 0.0 ? 1 : (ev(i) < 0.0 ? -1 : 0);
  return sig;
}

Vec sym_eigenvalues(const Mat& q) {
  if (q.size() == 0) return Vec();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (q + q.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double refine_root(const std::function<double(double)>& g, double a, double b, double fa, double fb, double xtol,
                   double* err) {
  std::uintmax_t iters = 100;
  auto tol = [xtol](double l, double r) { return std::abs(r - l) <= xtol; };
  const auto r = boost::math::tools::toms748_solve(g, a, b, fa, fb, tol, iters);
  *err = 0.5 * std::abs(r.second - r.first);
  return 0.5 * (r.first + r.second);
}

// Candidate zeros of a sampled (det, σ_min) curve: sign changes plus local σ_min minima that
// do not sit next to a sign change.
struct Candidates {
  std::vector<std::size_t> sign_intervals;  // i: bracket [t_{i-1}, t_i]
  std::vector<std::size_t> dips;            // i: local minimum at t_i
};

Candidates scan(const std::vector<double>& det, const std::vector<double>& sigma) {
  Candidates c;
  const std::size_t m = det.size();
  for (std::size_t i = 1; i < m; ++i) {
    if ((det[i - 1] < 0.0) != (det[i] < 0.0)) c.sign_intervals.push_back(i);
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (sigma[i] <= sigma[i - 1] && sigma[i] <= sigma[i + 1]) {
      const bool near_sign = (det[i - 1] < 0.0) != (det[i] < 0.0) || (det[i] < 0.0) != (det[i + 1] < 0.0);
      if (!near_sign) c.dips.push_back(i);
    }
  }
  return c;
}

// Merge refined crossings closer than min_sep (duplicates of one root seen from adjacent
// intervals); keeps the better-resolved one.
void merge_close(std::vector<Crossing>& xs, double min_sep) {
  std::sort(xs.begin(), xs.end(), [](const Crossing& a, const Crossing& b) { return a.location < b.location; });
  std::vector<Crossing> out;
  for (auto& x : xs) {
    if (!out.empty() && std::abs(x.location - out.back().location) <= min_sep) {
      if (x.sigma_min < out.back().sigma_min) out.back() = x;
      continue;
    }
    out.push_back(x);
  }
  xs = std::move(out);
}

// k right singular directions of X with the smallest singular values.
Mat smallest_directions(const Mat& f, int k) {
  const auto n = f.cols();
  Eigen::JacobiSVD<Mat> svd(f.topRows(n), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(k);
}

// Phase data of the unitary W = (X + iY)(X - iY)^{-1}; ker X ≠ 0 exactly when -1 ∈ Sp(W).
struct Phase {
  double argdet = 0.0;  // arg det W
  double sum = 0.0;     // Σ principal arguments of the eigenvalues
};

Phase phase_of(const Mat& f) {
  using CMat = Eigen::MatrixXcd;
  const auto n = f.cols();
  const CMat x = f.topRows(n).cast<std::complex<double>>();
  const CMat y = f.bottomRows(n).cast<std::complex<double>>();
  const std::complex<double> i(0.0, 1.0);
  const CMat w = (x + i * y) * (x - i * y).inverse();
  Eigen::ComplexEigenSolver<CMat> es(w, false);
  Phase ph;
  for (Eigen::Index k = 0; k < n; ++k) ph.sum += std::arg(es.eigenvalues()(k));
  ph.argdet = std::arg(w.determinant());
  return ph;
}

// Eigenvalues of W rotate clockwise as s or λ increases (positive crossing forms). For a short
// step the total rotation is below 2π and the number passing -1 follows from the phases.
int phase_crossings(const Phase& a, const Phase& b) {
  const double two_pi = 2.0 * std::numbers::pi;
  double turn = std::fmod(a.argdet - b.argdet, two_pi);
  if (turn < 0.0) turn += two_pi;
  return static_cast<int>(std::lround((turn - (a.sum - b.sum)) / two_pi));
}

// Steps whose bases differ by at most this keep every eigenvalue of W within π/n of its start.
double close_threshold(Eigen::Index n) { return std::sin(std::numbers::pi / (4.0 * static_cast<double>(n))); }

// Columns reversed between two bases of (numerically) the same subspace.
int reflections(const Mat& fa, const Mat& fb) {
  const Mat r = fa.transpose() * fb;
  Eigen::EigenSolver<Mat> es(r, false);
  int k = 0;
  for (Eigen::Index j = 0; j < r.rows(); ++j) k += es.eigenvalues()(j).real() < 0.0 ? 1 : 0;
  return k;
}

struct SweepHit {
  double location = 0.0;
  double half_width = 0.0;
  int multiplicity = 0;
};

// Crossings of the λ-path of frames on [a, b]. Resolved rotation is counted from W phases;
// below `floor` an unresolved step is a window narrower than double precision (an eigenvalue
// of H_L exponentially close to one of H), seen only as reflected basis columns.
void count_between(const std::function<Mat(double)>& frame, double a, const Mat& fa, double b, const Mat& fb,
                   double floor, std::vector<SweepHit>& out) {
  const bool close = (fa - fb).norm() <= close_threshold(fa.cols());
  if (close) {
    const int k = phase_crossings(phase_of(fa), phase_of(fb));
    if (k <= 0) return;
    if (b - a <= floor) {
      out.push_back({0.5 * (a + b), 0.5 * (b - a), k});
      return;
    }
  } else if (b - a <= floor) {
    const int k = reflections(fa, fb);
    if (k > 0) out.push_back({0.5 * (a + b), 0.5 * (b - a), k});
    return;
  }
  const double mid = 0.5 * (a + b);
  const Mat fm = frame(mid);
  count_between(frame, a, fa, mid, fm, floor, out);
  count_between(frame, mid, fm, b, fb, floor, out);
}

}  // namespace

Domain resolve_domain(const Problem& p, const MaslovControls& c) {
  Domain d;
  d.x_min = c.x_min ? *c.x_min : truncation_point(p, c.tol_asym, Side::Minus);
  d.x_max = c.x_max ? *c.x_max : truncation_point(p, c.tol_asym, Side::Plus);
  if (!(d.x_max > d.x_min)) d.x_max = d.x_min + 1.0;
  d.match_x = 0.5 * (d.x_min + d.x_max);
  return d;
}

Mat crossing_form_s(const Problem& p, const Mat& frame, const Mat& kernel_basis) {
  const auto n = frame.cols();
  const Mat yc = frame.bottomRows(n) * kernel_basis;
  const Mat q = yc.transpose() * p.diffusion().cwiseInverse().asDiagonal() * yc;
  return 0.5 * (q + q.transpose());
}

Mat crossing_form_lambda(const Problem& p, const PropagationTrace& trace, const Mat& kernel_basis) {
  const std::size_t m = trace.size();
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "empty trace");
  const auto n = static_cast<Eigen::Index>(p.n());
  const auto k = kernel_basis.cols();
  const Vec dinv = p.diffusion().cwiseInverse();
  // coefficients along the trace: a_{i-1} = R_i^{-1} a_i
  std::vector<Mat> a(m);
  a[m - 1] = kernel_basis;
  for (std::size_t i = m - 1; i > 0; --i) {
    a[i - 1] = trace.r_factors[i].triangularView<Eigen::Upper>().solve(a[i]);
  }
  auto p1 = [&](std::size_t i) -> Mat { return trace.frames[i].topRows(n) * a[i]; };
  auto dp1 = [&](std::size_t i) -> Mat { return dinv.asDiagonal() * (trace.frames[i].bottomRows(n) * a[i]); };
  Mat q = Mat::Zero(k, k);
  Mat u0 = p1(0), du0 = dp1(0);
  for (std::size_t i = 1; i < m; ++i) {
    const Mat u1 = p1(i), du1 = dp1(i);
    const double h = trace.xs[i] - trace.xs[i - 1];
    const Mat f0 = u0.transpose() * u0, f1 = u1.transpose() * u1;
    const Mat g0 = du0.transpose() * u0 + u0.transpose() * du0;
    const Mat g1 = du1.transpose() * u1 + u1.transpose() * du1;
    // Hermite-corrected trapezoid, fourth order
    q += 0.5 * h * (f0 + f1) + h * h / 12.0 * (g0 - g1);
    u0 = u1;
    du0 = du1;
  }
  // tail beyond the left end: decays like exp(μ_min x)
  const AsymptoticSystem as = asymptotic_system(p, Side::Minus, trace.lambda);
  const Mat first = p1(0);
  q += first.transpose() * first / (2.0 * std::sqrt(as.mu(0)));
  return 0.5 * (q + q.transpose());
}

std::vector<Crossing> find_conjugate_points(const Problem& p, double L, const MaslovControls& c,
                                            PropagationTrace* trace_out) {
  const Domain d = resolve_domain(p, c);
  if (!(L > d.x_min)) throw Error(ErrorKind::InvalidArgument, "L must exceed x_min");
  PropagationTrace trace = propagate_stabilized(p, 0.0, d.x_min, L, d.x_max, d.match_x, c.kernel_tol, c.ode);

  auto frame = [&](double x) { return frame_at(p, trace, x, c.ode); };
  auto g = [&](double x) { return det_top(frame(x)); };
  auto sig = [&](double x) { return sigma_top(frame(x)); };
  const double xtol = std::min(c.tol_s, 1e-3) * 1e-2;

  auto make = [&](double x, double err, bool sign_change) {
    const Mat f = frame(x);
    Crossing cr;
    cr.axis = Axis::S;
    cr.location = x;
    cr.location_error = err;
    cr.sign_change = sign_change;
    cr.sigma_min = sigma_top(f);
    const Mat ker = crossing_kernel(f, c.tol_rank, sign_change);
    cr.multiplicity = static_cast<int>(ker.cols());
    cr.form_eigenvalues = sym_eigenvalues(crossing_form_s(p, f, ker));
    cr.signature = signature_of(cr.form_eigenvalues);
    return cr;
  };

  std::vector<Crossing> found;
  const Candidates cand = scan(trace.det_x, trace.sigma_min);
  for (std::size_t i : cand.sign_intervals) {
    double err = 0.0;
    const double x = refine_root(g, trace.xs[i - 1], trace.xs[i], trace.det_x[i - 1], trace.det_x[i], xtol, &err);
    found.push_back(make(x, err, true));
  }
  for (std::size_t i : cand.dips) {
    const MinimumBracket mb = golden_section_minimize(sig, trace.xs[i - 1], trace.xs[i + 1], xtol);
    if (mb.value <= c.tol_rank) found.push_back(make(mb.x, mb.half_width, false));
  }
  // crossing exactly at the right end (no sample beyond it)
  const std::size_t last = trace.size() - 1;
  if (trace.sigma_min[last] <= c.tol_rank) {
    Crossing cr = make(trace.xs[last], 0.0, false);
    cr.at_endpoint = true;
    found.push_back(cr);
  }
  merge_close(found, 10.0 * c.tol_s);
  found.erase(std::remove_if(found.begin(), found.end(), [](const Crossing& x) { return x.multiplicity == 0; }),
              found.end());

  for (const auto& cr : found) {
    for (Eigen::Index j = 0; j < cr.form_eigenvalues.size(); ++j) {
      if (!(cr.form_eigenvalues(j) > 0.0)) {
        std::ostringstream os;
        os << "crossing form at s = " << cr.location << " is not positive definite (eigenvalue "
           << cr.form_eigenvalues(j) << ")";
        throw Error(ErrorKind::MonotonicityViolated, os.str());
      }
    }
  }
  if (trace_out) *trace_out = std::move(trace);
  return found;
}

bool MaslovReport::oracle_agrees() const {
  if (!oracle) return true;
  const int count = -a3;
  return count >= oracle->nonpositive_count && count <= oracle->nonpositive_with_ambiguous() &&
         (oracle->kernel_ambiguous.empty() ? count == oracle->nonpositive_count : true);
}

MaslovReport maslov_rectangle(const Problem& p, double L, const MaslovControls& c) {
  MaslovReport rep;
  rep.L = L;
  rep.domain = resolve_domain(p, c);
  const Domain& d = rep.domain;
  if (!(L > d.x_min)) throw Error(ErrorKind::InvalidArgument, "L must exceed x_min");
  rep.lambda_inf = c.lambda_inf ? *c.lambda_inf : choose_lambda_inf(p, c.lambda_margin);
  const double sup = sup_norm_V(p, default_grid(p));
  if (!(rep.lambda_inf > sup)) {
    throw Error(ErrorKind::InvalidArgument, "lambda_inf must exceed sup ||V|| = " + std::to_string(sup));
  }
  const int m = std::max(c.lambda_grid, 3);
  const std::vector<double> lambdas = linspace(-rep.lambda_inf, 0.0, m);

  // Γ1: s = x_min. The asymptotic frame is a graph over the Dirichlet-complement, so X is invertible.
  {
    const std::vector<double> sig = parallel_map<double>(lambdas.size(), c.jobs, [&](std::size_t j) {
      return sigma_top(unstable_subspace_at_minus_infinity(p, lambdas[j], d.x_min).columns());
    });
    rep.gamma1_min_sigma = *std::min_element(sig.begin(), sig.end());
    rep.a1 = 0;
    for (double s : sig) rep.a1 += s <= c.tol_rank ? 1 : 0;
  }

  // Γ2: λ = 0, conjugate points.
  PropagationTrace zero_trace;
  rep.s_crossings = find_conjugate_points(p, L, c, &zero_trace);
  for (const auto& cr : rep.s_crossings) rep.a2 += cr.multiplicity;
  rep.max_lagrangian_residual = zero_trace.max_lagrangian_residual();

  // Γ3: s = L, λ sweep. Counting runs on [-λ∞, -ε] with plain forward frames whose basis is
  // continuous in λ; λ = 0 itself is judged by the stabilised frame.
  auto end_frame = [&](double lam) {
    const Mat f0 = unstable_subspace_at_minus_infinity(p, lam, d.x_min).columns();
    return advance(p, lam, f0, d.x_min, L, c.ode);
  };
  const Mat zero_end = zero_trace.frames.back();
  const double eps = 1e-9 * std::max(1.0, rep.lambda_inf);
  std::vector<double> grid = linspace(-rep.lambda_inf, -eps, m - 1);
  std::vector<Mat> frames = parallel_map<Mat>(grid.size(), c.jobs, [&](std::size_t j) { return end_frame(grid[j]); });
  rep.sweep_lambda = grid;
  rep.sweep_lambda.push_back(0.0);
  for (const auto& f : frames) {
    rep.sweep_det.push_back(det_top(f));
    rep.sweep_sigma.push_back(sigma_top(f));
  }
  rep.sweep_det.push_back(det_top(zero_end));
  rep.sweep_sigma.push_back(sigma_top(zero_end));

  const double ltol = 1e-12 * std::max(1.0, rep.lambda_inf);
  std::vector<SweepHit> hits;
  const std::vector<SweepHit> per = [&] {
    std::vector<std::vector<SweepHit>> parts = parallel_map<std::vector<SweepHit>>(
        grid.size() - 1, c.jobs, [&](std::size_t j) {
          std::vector<SweepHit> out;
          count_between(end_frame, grid[j], frames[j], grid[j + 1], frames[j + 1], ltol, out);
          return out;
        });
    std::vector<SweepHit> all;
    for (auto& v : parts) all.insert(all.end(), v.begin(), v.end());
    return all;
  }();
  hits = per;

  auto make_lambda = [&](double lam, double err, int mult, bool sign_change) {
    const PropagationTrace tr = propagate_frame(p, lam, d.x_min, L, c.ode);
    const Mat f = tr.frames.back();
    Crossing cr;
    cr.axis = Axis::Lambda;
    cr.location = lam;
    cr.location_error = err;
    cr.sign_change = sign_change;
    cr.sigma_min = sigma_top(f);
    cr.multiplicity = mult;
    cr.resolved = cr.sigma_min <= c.tol_rank;
    const Mat ker = smallest_directions(f, mult);
    cr.form_eigenvalues = sym_eigenvalues(crossing_form_lambda(p, tr, ker));
    cr.signature = signature_of(cr.form_eigenvalues);
    return cr;
  };

  std::vector<Crossing> lam_found;
  for (const auto& h : hits) lam_found.push_back(make_lambda(h.location, h.half_width, h.multiplicity, h.multiplicity % 2 == 1));
  if (sigma_top(zero_end) <= c.tol_rank) {
    Crossing cr;
    cr.axis = Axis::Lambda;
    cr.location = 0.0;
    cr.at_endpoint = true;
    cr.sign_change = false;
    cr.sigma_min = sigma_top(zero_end);
    const Mat ker = crossing_kernel(zero_end, c.tol_rank, false);
    cr.multiplicity = static_cast<int>(ker.cols());
    cr.resolved = true;
    // the stabilised trace carries no step factors past the match point; the form uses a plain one
    const PropagationTrace plain = propagate_frame(p, 0.0, d.x_min, L, c.ode);
    cr.form_eigenvalues = sym_eigenvalues(crossing_form_lambda(p, plain, smallest_directions(plain.frames.back(), cr.multiplicity)));
    cr.signature = signature_of(cr.form_eigenvalues);
    lam_found.push_back(cr);
    rep.endpoint_crossing_at_L = true;
    // the corner belongs to both edges
    const bool seen = std::any_of(rep.s_crossings.begin(), rep.s_crossings.end(),
                                  [&](const Crossing& x) { return std::abs(x.location - L) <= 10.0 * c.tol_s; });
    if (!seen) {
      Crossing sc = cr;
      sc.axis = Axis::S;
      sc.location = L;
      sc.form_eigenvalues = sym_eigenvalues(crossing_form_s(p, zero_end, ker));
      sc.signature = signature_of(sc.form_eigenvalues);
      rep.s_crossings.push_back(sc);
      rep.a2 += sc.multiplicity;
    }
  } else {
    rep.endpoint_crossing_at_L = std::any_of(rep.s_crossings.begin(), rep.s_crossings.end(),
                                             [&](const Crossing& x) { return std::abs(x.location - L) <= 10.0 * c.tol_s; });
  }
  for (const auto& cr : lam_found) {
    if (cr.multiplicity > 0 && cr.signature != cr.multiplicity) {
      std::ostringstream os;
      os << "λ-crossing form at λ = " << cr.location << " is not positive definite";
      throw Error(ErrorKind::MonotonicityViolated, os.str());
    }
    rep.a3 -= cr.multiplicity;
  }
  rep.lambda_crossings = std::move(lam_found);
  // Γ4: λ = -λ∞, no crossings expected.
  {
    const PropagationTrace t4 = propagate_frame(p, -rep.lambda_inf, d.x_min, L, c.ode);
    rep.gamma4_min_sigma = *std::min_element(t4.sigma_min.begin(), t4.sigma_min.end());
    const Candidates c4 = scan(t4.det_x, t4.sigma_min);
    rep.a4 = static_cast<int>(c4.sign_intervals.size());
    for (std::size_t i : c4.dips) {
      const MinimumBracket mb = golden_section_minimize(
          [&](double x) { return sigma_top(frame_at(p, t4, x, c.ode)); }, t4.xs[i - 1], t4.xs[i + 1], c.tol_s);
      if (mb.value <= c.tol_rank) rep.a4 += 2;
    }
  }

  if (c.run_oracle) rep.oracle = eigenvalues_HL(p, L, c.oracle);

  if (c.throw_on_inconsistency && !rep.identity_holds()) {
    std::ostringstream os;
    os << "Maslov box does not close: A1=" << rep.a1 << " A2=" << rep.a2 << " A3=" << rep.a3 << " A4=" << rep.a4
       << " at L=" << L;
    throw Error(ErrorKind::ConsistencyFailure, os.str());
  }
  return rep;
}

MorseResult morse_index_via_maslov(const Problem& p, const MaslovControls& c) {
  const Domain d = resolve_domain(p, c);
  MorseResult out;
  double L = std::max({d.x_max, d.match_x + 5.0, 5.0});
  for (int k = 0; k <= c.max_doublings; ++k) {
    std::vector<Crossing> cr = find_conjugate_points(p, L, c);
    int count = 0;
    for (const auto& x : cr) count += x.multiplicity;
    out.Ls.push_back(L);
    out.counts.push_back(count);
    out.crossings = std::move(cr);
    const std::size_t m = out.counts.size();
    if (m >= 2 && out.counts[m - 1] == out.counts[m - 2]) {
      out.morse = count;
      return out;
    }
    L = d.x_min + 2.0 * (L - d.x_min);
  }
  throw Error(ErrorKind::NonStabilization, "conjugate-point count did not stabilise under doubling of L");
}

}  // namespace maslov
