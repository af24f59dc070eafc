#include "maslov/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maslov/error.hpp"
#include "maslov/numerics.hpp"

namespace maslov {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Unstable: return "unstable";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::UnstableEssential: return "unstable-essential-spectrum";
  }
  return "?";
}

SymmetryResult detect_symmetry_point(const PulseProblem& pp, const std::vector<double>& grid,
                                     std::optional<double> tol_sym) {
  if (grid.size() < 5) throw Error(ErrorKind::InvalidArgument, "symmetry grid needs at least 5 points");
  const double lo = grid.front();
  const double hi = grid.back();
  std::size_t peak = 0;
  double sup = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = pp.pulse(grid[i]).cwiseAbs().maxCoeff();
    if (v > sup) {
      sup = v;
      peak = i;
    }
  }
  SymmetryResult r;
  r.tol_sym = tol_sym ? *tol_sym : 1e-6 * sup;
  const std::size_t offsets = grid.size() / 2;
  auto residual = [&](double c) {
    const double span = std::min(c - lo, hi - c);
    if (!(span > 0.0)) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t k = 1; k <= offsets; ++k) {
      const double t = span * static_cast<double>(k) / static_cast<double>(offsets);
      worst = std::max(worst, (pp.pulse(c + t) - pp.pulse(c - t)).cwiseAbs().maxCoeff());
    }
    return worst;
  };
  const std::size_t a = peak >= 2 ? peak - 2 : 0;
  const std::size_t b = std::min(grid.size() - 1, peak + 2);
  const MinimumBracket mb = golden_section_minimize(residual, grid[a], grid[b], 1e-12);
  r.x0 = mb.x;
  r.residual = mb.value;
  r.symmetric = r.residual <= r.tol_sym;
  r.derivative_norm = pp.pulse_x(r.x0).cwiseAbs().maxCoeff();
  return r;
}

CertifiedCrossing certify_conjugate_point(const PulseProblem& pp, double x0, const PulseControls& c) {
  const std::vector<double> grid = linspace(c.build.grid_min, c.build.grid_max, c.build.grid_points);
  double dx_sup = 0.0;
  for (double x : grid) dx_sup = std::max(dx_sup, pp.pulse_x(x).cwiseAbs().maxCoeff());
  const double tol_dx = c.tol_dx ? *c.tol_dx : 1e-6 * dx_sup;
  const double dx0 = pp.pulse_x(x0).cwiseAbs().maxCoeff();
  if (dx0 > tol_dx) {
    std::ostringstream os;
    os << "phi_x(x0) = " << dx0 << " exceeds " << tol_dx << "; x0 is not a critical point of the pulse";
    throw Error(ErrorKind::Precondition, os.str());
  }

  const Problem p = build_from_gradient_rd(pp, c.build);
  const Domain d = resolve_domain(p, c.maslov);
  const double L = std::max(x0 + 1.0, d.match_x + 1.0);
  PropagationTrace trace;
  const std::vector<Crossing> found = find_conjugate_points(p, L, c.maslov, &trace);

  CertifiedCrossing out;
  const int n = p.n();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double x = trace.xs[i];
    Vec w(2 * n);
    w << pp.pulse_x(x), p.diffusion().cwiseProduct(pp.second_derivative(x));
    const double norm = w.norm();
    if (!(norm > 1e-290)) continue;
    const Mat& f = trace.frames[i];
    const double angle = std::asin(std::min(1.0, (w - f * (f.transpose() * w)).norm() / norm));
    if (angle > out.max_span_angle) {
      out.max_span_angle = angle;
      out.span_angle_at = x;
    }
  }
  if (out.max_span_angle > c.tol_span) {
    std::ostringstream os;
    os << "kernel solution (phi_x, D phi_xx) leaves the propagated frame: angle " << out.max_span_angle << " at x = "
       << out.span_angle_at;
    throw Error(ErrorKind::ConsistencyFailure, os.str());
  }

  const Crossing* best = nullptr;
  for (const auto& cr : found) {
    if (!best || std::abs(cr.location - x0) < std::abs(best->location - x0)) best = &cr;
  }
  if (!best || std::abs(best->location - x0) > c.tol_x0) {
    std::ostringstream os;
    os << "no conjugate point within " << c.tol_x0 << " of x0 = " << x0;
    throw Error(ErrorKind::ConsistencyFailure, os.str());
  }
  out.crossing = *best;
  return out;
}

InstabilityVerdict instability_verdict(const PulseProblem& pp, const PulseControls& c) {
  InstabilityVerdict v;
  const Vec zero = Vec::Zero(pp.n());
  const Mat hess0 = pp.hess_f(zero);
  const Mat dmat = pp.diffusion.asDiagonal();
  v.essential_min = std::numeric_limits<double>::infinity();
  for (double k : linspace(0.0, c.k_max, c.k_points)) {
    const Mat m = k * k * dmat - 0.5 * (hess0 + hess0.transpose());
    v.essential_min = std::min(v.essential_min, min_eigenvalue(m));
  }
  if (!(v.essential_min > 0.0) || !(pp.diffusion.minCoeff() > 0.0)) {
    v.verdict = Verdict::UnstableEssential;
    v.reason = "background state fails k^2 D - hess F(0) > 0: already unstable due to the essential spectrum";
    return v;
  }

  const Problem p = build_from_gradient_rd(pp, c.build);
  const std::vector<double> grid = linspace(c.build.grid_min, c.build.grid_max, c.build.grid_points);
  v.symmetry = detect_symmetry_point(pp, grid, c.tol_sym);

  if (c.full) {
    v.full_morse = morse_index_via_maslov(p, c.maslov).morse;
    v.whole_line_morse = morse_whole_line(p, c.oracle).morse;
  }

  if (v.symmetry->symmetric) {
    v.conjugate_point_at_x0 = certify_conjugate_point(pp, v.symmetry->x0, c);
    const Crossing& cr = v.conjugate_point_at_x0->crossing;
    if (cr.signature == cr.multiplicity && cr.multiplicity > 0) {
      v.morse_lower_bound = cr.multiplicity;
      v.verdict = Verdict::Unstable;
      v.reason = "even pulse forces a conjugate point at its centre";
    }
  } else {
    v.reason = "pulse is not even about any point within tol_sym";
  }
  if (v.verdict != Verdict::Unstable && v.full_morse && *v.full_morse >= 1) {
    v.verdict = Verdict::Unstable;
    v.morse_lower_bound = *v.full_morse;
    v.reason += "; conjugate-point count gives Mor(H) >= 1";
  }
  if (v.full_morse && v.morse_lower_bound > *v.full_morse) {
    throw Error(ErrorKind::ConsistencyFailure, "conjugate-point lower bound exceeds the Morse index");
  }
  return v;
}

}  // namespace maslov
