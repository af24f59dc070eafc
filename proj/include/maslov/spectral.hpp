#pragma once

// Direct finite-difference spectrum of H_L (and H on a large interval): the independent
// eigenvalue-count oracle for the Maslov machinery.

#include <optional>
#include <vector>

#include "maslov/problem.hpp"

namespace maslov {

struct DiscretizationControls {
  double h = 0.02;                    // coarse spacing; Richardson partner uses h/2
  std::optional<double> x_left;       // default: truncation point - 5 / decay_rate
  double tol_asym = 1e-10;
  double left_margin_decays = 5.0;
  double zero_tol_factor = 10.0;      // eig_zero_tol = factor * Richardson error
  std::optional<double> half_width;   // whole-line runs: symmetric interval [-w, w]
  int max_doublings = 3;
};

/// Eigenvalues of the second-order central-difference operator on [a, b] with Dirichlet
/// ends, restricted to (-inf, cutoff). Uses the banded symmetric storage of the
/// block-tridiagonal matrix (unknowns interleaved per node, bandwidth n).
std::vector<double> fd_eigenvalues(const Problem& p, double a, double b, double h, double cutoff);

struct FdEigenpairs {
  std::vector<double> nodes;  // interior nodes
  Vec values;
  Mat vectors;  // (nodes * n) x count, interleaved, Euclidean-normalised
};
FdEigenpairs fd_eigenpairs(const Problem& p, double a, double b, double h, double cutoff);

/// Dense copy of the discretisation matrix (small problems / tests only).
Mat fd_matrix(const Problem& p, double a, double b, double h);

struct SpectrumReport {
  double x_left = 0.0;
  double x_right = 0.0;
  double h = 0.0;
  double floor = 0.0;                    // essential-spectrum floor min Sp(V_±)
  std::vector<double> coarse;            // grid h
  std::vector<double> fine;              // grid h/2
  std::vector<double> eigenvalues;       // Richardson-extrapolated, sorted
  std::vector<double> richardson_error;  // |fine - coarse| / 3 per eigenvalue
  std::vector<double> zero_tol;          // eig_zero_tol per eigenvalue
  std::vector<int> kernel_ambiguous;     // indices with |λ| <= zero_tol
  int morse = 0;                         // λ < -zero_tol
  int nonpositive_count = 0;             // λ <= 0 excluding kernel-ambiguous ones

  /// Nonpositive count including the flagged near-zero eigenvalues.
  int nonpositive_with_ambiguous() const {
    return nonpositive_count + static_cast<int>(kernel_ambiguous.size());
  }
};

/// Spectrum of the discretised operator on [a, b] below the essential floor.
SpectrumReport spectrum_on_interval(const Problem& p, double a, double b, const DiscretizationControls& c = {});

/// H_L: Dirichlet at L, left end pushed into the tail (proxy for decay at -∞).
SpectrumReport eigenvalues_HL(const Problem& p, double L, const DiscretizationControls& c = {});

/// Left end used by eigenvalues_HL.
double oracle_left_end(const Problem& p, const DiscretizationControls& c = {});

struct WholeLineMorse {
  int morse = 0;
  std::vector<SpectrumReport> runs;  // one per interval doubling
};

/// Negative-eigenvalue count of H on a symmetric interval, stabilised under doubling.
WholeLineMorse morse_whole_line(const Problem& p, const DiscretizationControls& c = {});

struct MonotonicityRow {
  double L = 0.0;
  double lambda = 0.0;
  double error = 0.0;
};
struct MonotonicityTable {
  int index = 1;  // 1-based eigenvalue index j
  std::vector<MonotonicityRow> rows;
  std::vector<bool> strictly_decreasing;  // per consecutive pair, beyond combined error bars
  bool monotone() const;
};

/// λ_j(L) over a grid of L values; each consecutive pair must decrease by more than the
/// combined Richardson error bars.
MonotonicityTable eigenvalue_monotonicity(const Problem& p, int j, const std::vector<double>& Ls,
                                          const DiscretizationControls& c = {});

}  // namespace maslov
