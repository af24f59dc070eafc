#pragma once

// Conjugate points, crossing forms and the Maslov box [-λ∞, 0] x [x_min, L].

#include <optional>
#include <vector>

#include "maslov/propagation.hpp"
#include "maslov/spectral.hpp"

namespace maslov {

enum class Axis { S, Lambda };

const char* to_string(Axis a);

struct Crossing {
  Axis axis = Axis::S;
  double location = 0.0;  // s* on the s-axis, λ* on the λ-axis
  double location_error = 0.0;
  int multiplicity = 0;
  Vec form_eigenvalues;   // crossing-form eigenvalues on the kernel
  int signature = 0;      // #positive - #negative form eigenvalues
  double sigma_min = 0.0; // σ_min(X) at the refined location
  bool sign_change = true;  // false: found as an even-order σ_min dip
  bool at_endpoint = false;
  bool resolved = true;     // ker X visible at the refined location (σ_min <= tol_rank)
};

struct MaslovControls {
  OdeControls ode;
  double tol_s = 1e-8;
  double tol_rank = 1e-8;
  double tol_asym = 1e-10;
  double kernel_tol = 1e-6;
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::optional<double> lambda_inf;
  double lambda_margin = 1.0;
  int lambda_grid = 200;
  int jobs = 1;
  bool run_oracle = true;
  DiscretizationControls oracle;
  bool throw_on_inconsistency = true;
  // morse_index_via_maslov
  int max_doublings = 6;
};

struct Domain {
  double x_min = 0.0;
  double x_max = 0.0;
  double match_x = 0.0;
};
Domain resolve_domain(const Problem& p, const MaslovControls& c);

/// Crossing form on the s-axis at a conjugate point: Q = (Y c)^T D^{-1} (Y c), c ∈ ker X.
Mat crossing_form_s(const Problem& p, const Mat& frame, const Mat& kernel_basis);

/// Crossing form on the λ-axis: Q = ∫ p1^T p1 dx over the solutions p = F c reaching the
/// Dirichlet subspace at the end of `trace`; kernel_basis holds coefficients in the final frame.
Mat crossing_form_lambda(const Problem& p, const PropagationTrace& trace, const Mat& kernel_basis);

/// Conjugate points s ∈ (x_min, L] of the λ = 0 unstable frame.
std::vector<Crossing> find_conjugate_points(const Problem& p, double L, const MaslovControls& c = {},
                                            PropagationTrace* trace_out = nullptr);

struct MaslovReport {
  double L = 0.0;
  double lambda_inf = 0.0;
  Domain domain;
  int a1 = 0;  // bottom edge s = x_min
  int a2 = 0;  // λ = 0 edge, conjugate points
  int a3 = 0;  // s = L edge, negative of the eigenvalue crossings
  int a4 = 0;  // λ = -λ∞ edge
  std::vector<Crossing> s_crossings;
  std::vector<Crossing> lambda_crossings;
  bool endpoint_crossing_at_L = false;
  double gamma1_min_sigma = 0.0;
  double gamma4_min_sigma = 0.0;
  std::vector<double> sweep_lambda;
  std::vector<double> sweep_det;
  std::vector<double> sweep_sigma;
  double max_lagrangian_residual = 0.0;
  std::optional<SpectrumReport> oracle;

  bool identity_holds() const { return a1 + a2 + a3 + a4 == 0; }
  bool a2_matches_a3() const { return a2 == -a3; }
  /// |A3| against the oracle: exact nonpositive count, or within the kernel-ambiguous slack.
  bool oracle_agrees() const;
};

MaslovReport maslov_rectangle(const Problem& p, double L, const MaslovControls& c = {});

struct MorseResult {
  int morse = 0;
  std::vector<double> Ls;
  std::vector<int> counts;
  std::vector<Crossing> crossings;  // of the final L
};

/// Mor(H) as the number of conjugate points, doubling L until the count stabilises.
MorseResult morse_index_via_maslov(const Problem& p, const MaslovControls& c = {});

}  // namespace maslov
