#include "maslov/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "maslov/error.hpp"
#include "maslov/propagation.hpp"

namespace maslov {

namespace {

struct Grid {
  int nodes = 0;  // interior nodes
  double h = 0.0;
  double a = 0.0;
};

Grid make_grid(double a, double b, double h) {
  if (!(b > a) || !(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "need a < b and h > 0");
  const long cells = std::lround(std::ceil((b - a) / h - 1e-9));
  if (cells < 2) throw Error(ErrorKind::InvalidArgument, "interval too short for the grid spacing");
  if (cells > 50'000'000) throw Error(ErrorKind::InvalidArgument, "grid too large");
  return {static_cast<int>(cells - 1), (b - a) / static_cast<double>(cells), a};
}

// Upper band storage, column-major, ldab = n + 1 (kd = n).
std::vector<double> band_matrix(const Problem& p, const Grid& g) {
  const int n = p.n();
  const int kd = n;
  const int ldab = kd + 1;
  const long N = static_cast<long>(g.nodes) * n;
  std::vector<double> ab(static_cast<std::size_t>(ldab * N), 0.0);
  auto at = [&](long i, long j) -> double& { return ab[static_cast<std::size_t>((kd + i - j) + j * ldab)]; };
  const Vec& d = p.diffusion();
  const double ih2 = 1.0 / (g.h * g.h);
  for (int k = 0; k < g.nodes; ++k) {
    const double x = g.a + (k + 1) * g.h;
    const Mat v = p.V(x);
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r <= c; ++r) at(static_cast<long>(k) * n + r, static_cast<long>(k) * n + c) = 0.5 * (v(r, c) + v(c, r));
      at(static_cast<long>(k) * n + c, static_cast<long>(k) * n + c) += 2.0 * d(c) * ih2;
      if (k + 1 < g.nodes) at(static_cast<long>(k) * n + c, static_cast<long>(k + 1) * n + c) = -d(c) * ih2;
    }
  }
  return ab;
}

double essential_floor(const Problem& p) {
  return std::min(min_eigenvalue(p.limit(Side::Minus)), min_eigenvalue(p.limit(Side::Plus)));
}

double lower_bound(const Problem& p, const std::vector<double>& xs) {
  double lo = essential_floor(p);
  for (double x : xs) lo = std::min(lo, min_eigenvalue(p.V(x)));
  return lo - 1.0;
}

struct BandResult {
  std::vector<double> values;
  Mat vectors;
};

BandResult solve_band(const Problem& p, double a, double b, double h, double cutoff, bool want_vectors) {
  const Grid g = make_grid(a, b, h);
  const int n = p.n();
  const lapack_int N = static_cast<lapack_int>(g.nodes) * n;
  std::vector<double> ab = band_matrix(p, g);
  // Gershgorin-free lower bound: min over nodes of λ_min(V) (the Laplacian part is ≥ 0).
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(g.nodes));
  for (int k = 0; k < g.nodes; ++k) xs.push_back(g.a + (k + 1) * g.h);
  const double vl = lower_bound(p, xs);
  if (!(cutoff > vl)) return {};
  std::vector<double> w(static_cast<std::size_t>(N));
  std::vector<lapack_int> ifail(static_cast<std::size_t>(N));
  std::vector<double> q(want_vectors ? static_cast<std::size_t>(N) * N : 1);
  lapack_int m = 0;
  // Eigenvectors are requested only for small systems; the count below the floor is tiny,
  // so z is sized by an upper bound obtained from a values-only pass first.
  std::vector<double> z;
  lapack_int ldz = 1;
  if (want_vectors) {
    const BandResult count = solve_band(p, a, b, h, cutoff, false);
    const lapack_int mmax = std::max<lapack_int>(1, static_cast<lapack_int>(count.values.size()));
    z.assign(static_cast<std::size_t>(N) * mmax, 0.0);
    ldz = N;
  } else {
    z.assign(1, 0.0);
  }
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'V', 'U', N, n, ab.data(), n + 1,
                                         q.data(), want_vectors ? N : 1, vl, cutoff, 0, 0, abstol, &m, w.data(),
                                         z.data(), ldz, ifail.data());
  if (info != 0) throw Error(ErrorKind::IntegrationFailure, "dsbevx failed with info " + std::to_string(info));
  BandResult out;
  out.values.assign(w.begin(), w.begin() + m);
  if (want_vectors) {
    out.vectors = Eigen::Map<Mat>(z.data(), N, std::max<lapack_int>(m, 0)).leftCols(m);
  }
  return out;
}

}  // namespace

std::vector<double> fd_eigenvalues(const Problem& p, double a, double b, double h, double cutoff) {
  std::vector<double> v = solve_band(p, a, b, h, cutoff, false).values;
  std::sort(v.begin(), v.end());
  return v;
}

FdEigenpairs fd_eigenpairs(const Problem& p, double a, double b, double h, double cutoff) {
  const Grid g = make_grid(a, b, h);
  BandResult r = solve_band(p, a, b, h, cutoff, true);
  FdEigenpairs out;
  for (int k = 0; k < g.nodes; ++k) out.nodes.push_back(g.a + (k + 1) * g.h);
  out.values = Eigen::Map<Vec>(r.values.data(), static_cast<Eigen::Index>(r.values.size()));
  out.vectors = std::move(r.vectors);
  return out;
}

Mat fd_matrix(const Problem& p, double a, double b, double h) {
  const Grid g = make_grid(a, b, h);
  const int n = p.n();
  const long N = static_cast<long>(g.nodes) * n;
  if (N > 4000) throw Error(ErrorKind::InvalidArgument, "fd_matrix is for small grids only");
  const std::vector<double> ab = band_matrix(p, g);
  Mat m = Mat::Zero(N, N);
  for (long j = 0; j < N; ++j) {
    for (long i = std::max(0L, j - n); i <= j; ++i) {
      m(i, j) = ab[static_cast<std::size_t>((n + i - j) + j * (n + 1))];
      m(j, i) = m(i, j);
    }
  }
  return m;
}

SpectrumReport spectrum_on_interval(const Problem& p, double a, double b, const DiscretizationControls& c) {
  SpectrumReport r;
  r.x_left = a;
  r.x_right = b;
  r.h = c.h;
  r.floor = essential_floor(p);
  r.coarse = fd_eigenvalues(p, a, b, c.h, r.floor);
  r.fine = fd_eigenvalues(p, a, b, 0.5 * c.h, r.floor);
  // Eigenvalues crossing the floor between the two grids have no partner; drop them.
  const std::size_t count = std::min(r.coarse.size(), r.fine.size());
  double vmax = 0.0;
  for (double x : linspace(a, b, 201)) vmax = std::max(vmax, spectral_norm(p.V(x)));
  const double roundoff =
      100.0 * std::numeric_limits<double>::epsilon() * (4.0 * p.diffusion().maxCoeff() / (0.25 * c.h * c.h) + vmax);
  for (std::size_t j = 0; j < count; ++j) {
    const double value = (4.0 * r.fine[j] - r.coarse[j]) / 3.0;
    const double err = std::abs(r.fine[j] - r.coarse[j]) / 3.0;
    const double tol = std::max(c.zero_tol_factor * err, roundoff);
    r.eigenvalues.push_back(value);
    r.richardson_error.push_back(err);
    r.zero_tol.push_back(tol);
    if (std::abs(value) <= tol) {
      r.kernel_ambiguous.push_back(static_cast<int>(j));
    } else if (value < 0.0) {
      ++r.morse;
      ++r.nonpositive_count;
    }
  }
  return r;
}

double oracle_left_end(const Problem& p, const DiscretizationControls& c) {
  if (c.x_left) return *c.x_left;
  const double trunc = truncation_point(p, c.tol_asym, Side::Minus);
  const double rate = p.decay_rate();
  const double margin = std::isfinite(rate) && rate > 0.0 ? c.left_margin_decays / rate : c.left_margin_decays;
  return trunc - margin;
}

SpectrumReport eigenvalues_HL(const Problem& p, double L, const DiscretizationControls& c) {
  const double a = oracle_left_end(p, c);
  if (!(L - a > 4.0 * c.h)) {
    throw Error(ErrorKind::InvalidArgument, "L must lie to the right of the oracle's left end");
  }
  return spectrum_on_interval(p, a, L, c);
}

WholeLineMorse morse_whole_line(const Problem& p, const DiscretizationControls& c) {
  double w = 0.0;
  if (c.half_width) {
    w = *c.half_width;
  } else {
    const double rate = p.decay_rate();
    const double margin = std::isfinite(rate) && rate > 0.0 ? c.left_margin_decays / rate : c.left_margin_decays;
    w = std::max(-truncation_point(p, c.tol_asym, Side::Minus), truncation_point(p, c.tol_asym, Side::Plus)) + margin;
  }
  WholeLineMorse out;
  for (int k = 0; k <= c.max_doublings; ++k) {
    out.runs.push_back(spectrum_on_interval(p, -w, w, c));
    const std::size_t m = out.runs.size();
    if (m >= 2 && out.runs[m - 1].morse == out.runs[m - 2].morse) {
      out.morse = out.runs.back().morse;
      return out;
    }
    w *= 2.0;
  }
  throw Error(ErrorKind::NonStabilization, "whole-line Morse count did not stabilise under interval doubling");
}

bool MonotonicityTable::monotone() const {
  return std::all_of(strictly_decreasing.begin(), strictly_decreasing.end(), [](bool b) { return b; });
}

MonotonicityTable eigenvalue_monotonicity(const Problem& p, int j, const std::vector<double>& Ls,
                                          const DiscretizationControls& c) {
  if (j < 1) throw Error(ErrorKind::InvalidArgument, "eigenvalue index is 1-based");
  MonotonicityTable t;
  t.index = j;
  std::vector<double> sorted = Ls;
  std::sort(sorted.begin(), sorted.end());
  for (double L : sorted) {
    const SpectrumReport r = eigenvalues_HL(p, L, c);
    if (static_cast<int>(r.eigenvalues.size()) < j) {
      throw Error(ErrorKind::InvalidArgument, "H_L has fewer than " + std::to_string(j) +
                                                  " eigenvalues below the essential floor at L = " + std::to_string(L));
    }
    t.rows.push_back({L, r.eigenvalues[static_cast<std::size_t>(j - 1)], r.richardson_error[static_cast<std::size_t>(j - 1)]});
  }
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& a = t.rows[i - 1];
    const auto& b = t.rows[i];
    t.strictly_decreasing.push_back(b.lambda < a.lambda - (a.error + b.error));
  }
  return t;
}

}  // namespace maslov
