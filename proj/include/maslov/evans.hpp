#pragma once

// Evans function E(λ) = det[E^s_+(x0, λ) | E^u_-(x0, λ)] on the real axis and its negative zeros.

#include <optional>
#include <string>
#include <vector>

#include "maslov/propagation.hpp"

namespace maslov {

struct EvansControls {
  OdeControls ode;
  double tol_asym = 1e-10;
  double tol_rank = 1e-8;
  std::optional<double> x_min;
  std::optional<double> x_max;
  double x_eval = 0.0;  // matching point of the two frames
  std::optional<double> lambda_inf;
  double lambda_margin = 1.0;
  double eps = 1e-6;  // excluded neighbourhood of λ = 0 (translational kernel)
  int grid = 200;
  int jobs = 1;
};

/// E^s_+(x_at, λ): stable eigenframe of A_+(λ) at x_max integrated backward to x_at.
LagrangianFrame stable_subspace_from_plus_infinity(const Problem& p, double lambda, double x_max,
                                                   double x_at = 0.0, const OdeControls& controls = {});

struct EvansValue {
  double lambda = 0.0;
  double value = 0.0;
  double sigma_min = 0.0;  // smallest singular value of (Ω B)^T A: sine of the smallest principal angle
  int intersection_dim = 0;
};

EvansValue evans_value(const Problem& p, double lambda, const EvansControls& c = {});

struct EvansZero {
  double lambda = 0.0;
  int multiplicity = 0;
  double bracket_error = 0.0;
  bool sign_change = true;
};

struct EvansTrace {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<double> sigma_min;
  std::string normalization;
  std::vector<EvansZero> zeros;
  double lambda_inf = 0.0;
  double eps = 0.0;
  double x_eval = 0.0;
  bool boundary_flag = false;  // a zero within ε of 0, or ker H ≠ 0 (intersection at λ = 0)
  int count = 0;               // Σ multiplicities of zeros in [-λ∞, -ε]
};

EvansTrace count_negative_evans_zeros(const Problem& p, const EvansControls& c = {});

/// CSV: lambda, E_value, sigma_min_intersection.
std::string evans_trace_csv(const EvansTrace& t);

}  // namespace maslov
