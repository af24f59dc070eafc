#pragma once

// Operator data for H u = -D u'' + V(x) u on the line.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maslov/symplectic.hpp"

namespace maslov {

using PotentialFn = std::function<Mat(double)>;

enum class Side { Minus, Plus };

/// Exponential model ||V(x) - V_±|| ≈ exp(log_amplitude - rate |x|) for the tail on one side.
struct TailModel {
  double rate = 0.0;           // +inf when the tail is identically the limit
  double log_amplitude = 0.0;
  std::optional<double> exact_from;  // V == V_± beyond this x (tabulated / constant tails)
  std::optional<double> probe;       // first tabulated sample inside exact_from
  bool fitted = false;
  int samples_used = 0;
};

/// Immutable operator data. Potential callables must be pure.
class Problem {
 public:
  /// Validates shapes, D > 0 and symmetric limits; fits the tail models.
  /// `shift` adds C*I to V everywhere (off by default).
  static Problem make(std::string name, Vec diffusion, PotentialFn potential, Mat v_minus, Mat v_plus,
                      double shift = 0.0);

  /// Marks V as exactly equal to its limit beyond `edge` on `side`; `probe` is the nearest sample inside.
  Problem with_exact_tail(Side side, double edge, double probe) const;

  int n() const noexcept { return static_cast<int>(diffusion_.size()); }
  const Vec& diffusion() const noexcept { return diffusion_; }
  const std::string& name() const noexcept { return name_; }
  double shift() const noexcept { return shift_; }

  Mat V(double x) const;
  Mat limit(Side side) const;
  const TailModel& tail(Side side) const { return side == Side::Minus ? tail_minus_ : tail_plus_; }

  /// Smallest of the two fitted decay rates.
  double decay_rate() const;

  /// Same data with V(x) -> V(x - a).
  Problem translated(double a) const;

  const PotentialFn& raw_potential() const noexcept { return potential_; }

 private:
  Problem() = default;

  std::string name_;
  Vec diffusion_;
  PotentialFn potential_;
  Mat v_minus_;
  Mat v_plus_;
  double shift_ = 0.0;
  TailModel tail_minus_;
  TailModel tail_plus_;
};

TailModel fit_tail(const PotentialFn& potential, const Mat& limit, Side side);

// ---- builtin potential families -------------------------------------------------------------

/// V(x) = c - m(m+1) sech^2(x - center), n = 1.
Problem poeschl_teller(double c, double m, double center = 0.0, double diffusion = 1.0);

/// V(x) = 1 - 3 sech^2((x - center)/2), the linearisation about the scalar pulse of u_t = u_xx - u + u^2.
Problem sech_pulse_potential(double center = 0.0);

/// V ≡ value.
Problem constant_potential(const Mat& value, const Vec& diffusion);

/// Block-diagonal assembly; D and V concatenate in block order.
Problem block_diagonal(const std::vector<Problem>& blocks);

/// Cubic (monotone Hermite) interpolation of tabulated samples, constant beyond the table.
Problem tabulated_potential(std::string name, const Vec& diffusion, std::vector<double> grid,
                            const std::vector<Mat>& samples);

/// Reads the tabulated CSV format: x, then n^2 row-major entries of V(x) per line.
Problem tabulated_potential_from_csv(const std::string& path, const Vec& diffusion);

// ---- gradient reaction-diffusion systems ------------------------------------------------------

/// u_t = D u_xx + ∇F(u) together with a steady pulse φ*.
struct PulseProblem {
  std::string name;
  Vec diffusion;
  std::function<Vec(const Vec&)> grad_f;
  std::function<Mat(const Vec&)> hess_f;
  std::function<Vec(double)> pulse;
  std::function<Vec(double)> pulse_x;
  std::function<Vec(double)> pulse_xx;  // optional; finite differences of pulse_x otherwise

  int n() const noexcept { return static_cast<int>(diffusion.size()); }
  Vec second_derivative(double x) const;
};

/// Decoupled copies of F(u) = -k u^2/2 + u^3/3 with pulses φ_i = (3k/2) sech^2(sqrt(k/d_i)(x - center)/2).
/// For k <= 0 no pulse exists and φ* ≡ 0 is returned.
PulseProblem scalar_pulse_system(const Vec& diffusion, double k = 1.0, double center = 0.0);

struct BuildOptions {
  double grid_min = -40.0;
  double grid_max = 40.0;
  int grid_points = 8001;
  std::optional<double> tol_steady;  // default 1e-6 (1 + ||φ*||_∞)
};

/// V(x) = -∇²F(φ*(x)), V_± = -∇²F(0); rejects pulses that are not steady states.
Problem build_from_gradient_rd(const PulseProblem& pp, const BuildOptions& options = {});

// ---- hypotheses -----------------------------------------------------------------------------

struct HypothesisTolerances {
  double symmetry = 1e-12;       // relative ||V - V^T|| / ||V||
  double essential_k_max = 10.0;
  int essential_k_points = 201;
};

struct HypothesisReport {
  bool h1_symmetric = false;
  double h1_max_residual = 0.0;
  bool h2_positive_limits = false;
  double h2_min_eig_minus = 0.0;
  double h2_min_eig_plus = 0.0;
  bool h3_integrable = false;
  double h3_tail_integral_minus = 0.0;
  double h3_tail_integral_plus = 0.0;
  double h3_grid_integral = 0.0;
  double decay_rate_minus = 0.0;
  double decay_rate_plus = 0.0;
  bool essential_positive = false;
  double essential_min = 0.0;  // min over sampled k of λ_min(k² D + V_±)

  bool all_pass() const { return h1_symmetric && h2_positive_limits && h3_integrable && essential_positive; }
};

/// Evaluates (H1)-(H3) and essential-spectrum positivity on the grid. Never throws.
HypothesisReport evaluate_hypotheses(const Problem& p, const std::vector<double>& grid,
                                     const HypothesisTolerances& tols = {});

/// As evaluate_hypotheses, but throws HypothesisViolation when the limits are not positive definite.
HypothesisReport check_hypotheses(const Problem& p, const std::vector<double>& grid,
                                  const HypothesisTolerances& tols = {});

std::vector<double> linspace(double a, double b, int count);

/// Working grid spanning both truncation points.
std::vector<double> default_grid(const Problem& p, int points = 4001);

/// max over the grid of ||V(x)||_2 (limits included), polished locally around the best sample.
double sup_norm_V(const Problem& p, const std::vector<double>& grid);

/// λ_∞ = ||V||_∞ + margin; the grid is refined until the sup changes by less than 1%.
double choose_lambda_inf(const Problem& p, double margin = 1.0);

double spectral_norm(const Mat& m);
double min_eigenvalue(const Mat& symmetric);

}  // namespace maslov
