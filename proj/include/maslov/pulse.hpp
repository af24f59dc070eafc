#pragma once

// Instability of symmetric pulses of gradient reaction-diffusion systems: an even pulse forces a
// conjugate point at its centre, hence a negative eigenvalue of H.

#include <optional>
#include <string>
#include <vector>

#include "maslov/maslov.hpp"

namespace maslov {

struct SymmetryResult {
  bool symmetric = false;
  double x0 = 0.0;
  double residual = 0.0;         // sup_t ||φ(x0 + t) - φ(x0 - t)||_∞
  double tol_sym = 0.0;
  double derivative_norm = 0.0;  // ||φ_x(x0)||_∞
};

/// x0 minimising the even-symmetry residual of the pulse over the grid (golden section around
/// the peak). `tol_sym` defaults to 1e-6 ||φ||_∞.
SymmetryResult detect_symmetry_point(const PulseProblem& pp, const std::vector<double>& grid,
                                     std::optional<double> tol_sym = std::nullopt);

struct PulseControls {
  MaslovControls maslov;
  DiscretizationControls oracle;
  BuildOptions build;
  std::optional<double> tol_sym;
  std::optional<double> tol_dx;  // default 1e-6 ||φ_x||_∞
  double tol_span = 1e-6;        // max angle between (φ_x, Dφ_xx) and the frame span
  double tol_x0 = 1e-6;          // conjugate point must sit this close to x0
  bool full = false;             // also compute Mor(H) by Maslov and by the oracle
  double k_max = 10.0;
  int k_points = 201;
};

struct CertifiedCrossing {
  Crossing crossing;
  double max_span_angle = 0.0;
  double span_angle_at = 0.0;
};

/// Verifies that x0 is a conjugate point of the λ = 0 frame and that the kernel solution
/// (φ_x, Dφ_xx) stays inside the propagated frame.
CertifiedCrossing certify_conjugate_point(const PulseProblem& pp, double x0, const PulseControls& c = {});

enum class Verdict { Unstable, Inconclusive, UnstableEssential };
const char* to_string(Verdict v);

struct InstabilityVerdict {
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  double essential_min = 0.0;  // min over sampled k of λ_min(k² D - ∇²F(0))
  std::optional<SymmetryResult> symmetry;
  std::optional<CertifiedCrossing> conjugate_point_at_x0;
  int morse_lower_bound = 0;
  std::optional<int> full_morse;        // by conjugate points
  std::optional<int> whole_line_morse;  // by the FD oracle
};

InstabilityVerdict instability_verdict(const PulseProblem& pp, const PulseControls& c = {});

}  // namespace maslov
