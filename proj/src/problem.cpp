#include "maslov/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

// Boost 1.74's pchip calls unqualified isnan.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "maslov/error.hpp"
#include "maslov/numerics.hpp"

namespace maslov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sech2(double y) {
  const double c = std::cosh(y);
  return 1.0 / (c * c);
}

void require_square(const Mat& m, int n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be " + std::to_string(n) +
                                                " x " + std::to_string(n));
  }
}

bool is_symmetric(const Mat& m, double rel) {
  return (m - m.transpose()).norm() <= rel * std::max(1.0, m.norm());
}

// Inverts the tail model: the x beyond which ||V - V_±|| <= tol, or nullopt without a model.
std::optional<double> model_cutoff(const TailModel& t, Side side, double tol) {
  if (std::isinf(t.rate)) return 0.0;
  if (!t.fitted || t.rate <= 0.0) return std::nullopt;
  const double dist = std::max(0.0, (t.log_amplitude - std::log(tol)) / t.rate);
  return side == Side::Minus ? -dist : dist;
}

}  // namespace

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

double min_eigenvalue(const Mat& symmetric) {
  if (symmetric.rows() == 1) return symmetric(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 2)));
  const double h = (b - a) / static_cast<double>(out.size() - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a + h * static_cast<double>(i);
  out.back() = b;
  return out;
}

TailModel fit_tail(const PotentialFn& potential, const Mat& limit, Side side) {
  const double sign = side == Side::Minus ? -1.0 : 1.0;
  const double floor = 1e-13 * (1.0 + spectral_norm(limit));
  std::vector<double> ts;
  std::vector<double> logs;
  for (double t = 1.0; t <= 80.0; t += 0.5) {
    const double r = spectral_norm(potential(sign * t) - limit);
    if (std::isfinite(r) && r > floor) {
      ts.push_back(t);
      logs.push_back(std::log(r));
    }
  }
  TailModel model;
  if (ts.empty()) {
    model.rate = kInf;
    model.exact_from = 0.0;
    model.fitted = true;
    return model;
  }
  // deepest half of the resolvable tail
  const std::size_t start = ts.size() / 2;
  const std::size_t count = ts.size() - start;
  if (count < 3) return model;
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = start; i < ts.size(); ++i) {
    st += ts[i];
    sl += logs[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * logs[i];
  }
  const double m = static_cast<double>(count);
  const double denom = m * stt - st * st;
  if (denom <= 0.0) return model;
  const double slope = (m * stl - st * sl) / denom;
  model.rate = -slope;
  model.log_amplitude = (sl - slope * st) / m;
  model.samples_used = static_cast<int>(count);
  model.fitted = model.rate > 0.0;
  return model;
}

Problem Problem::make(std::string name, Vec diffusion, PotentialFn potential, Mat v_minus, Mat v_plus,
                      double shift) {
  const int n = static_cast<int>(diffusion.size());
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "problem dimension must be >= 1");
  for (int i = 0; i < n; ++i) {
    if (!(diffusion(i) > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "diffusion entries must be positive (D > 0)");
    }
  }
  require_square(v_minus, n, "V_minus");
  require_square(v_plus, n, "V_plus");
  if (!is_symmetric(v_minus, 1e-12) || !is_symmetric(v_plus, 1e-12)) {
    throw Error(ErrorKind::InvalidArgument, "limit matrices V_± must be symmetric");
  }
  if (!potential) throw Error(ErrorKind::InvalidArgument, "potential callable is empty");
  require_square(potential(0.0), n, "V(x)");

  Problem p;
  p.name_ = std::move(name);
  p.diffusion_ = std::move(diffusion);
  p.potential_ = std::move(potential);
  p.v_minus_ = std::move(v_minus);
  p.v_plus_ = std::move(v_plus);
  p.shift_ = shift;
  p.tail_minus_ = fit_tail(p.potential_, p.v_minus_, Side::Minus);
  p.tail_plus_ = fit_tail(p.potential_, p.v_plus_, Side::Plus);
  return p;
}

Problem Problem::with_exact_tail(Side side, double edge, double probe) const {
  Problem p = *this;
  TailModel& t = side == Side::Minus ? p.tail_minus_ : p.tail_plus_;
  t.exact_from = edge;
  t.probe = probe;
  return p;
}

Mat Problem::V(double x) const {
  Mat v = potential_(x);
  if (shift_ != 0.0) v.diagonal().array() += shift_;
  return v;
}

Mat Problem::limit(Side side) const {
  Mat v = side == Side::Minus ? v_minus_ : v_plus_;
  if (shift_ != 0.0) v.diagonal().array() += shift_;
  return v;
}

double Problem::decay_rate() const { return std::min(tail_minus_.rate, tail_plus_.rate); }

Problem Problem::translated(double a) const {
  PotentialFn base = potential_;
  Problem p = make(name_, diffusion_, [base, a](double x) { return base(x - a); }, v_minus_, v_plus_,
                   shift_);
  for (Side side : {Side::Minus, Side::Plus}) {
    const TailModel& old = tail(side);
    if (old.exact_from && old.probe) p = p.with_exact_tail(side, *old.exact_from + a, *old.probe + a);
  }
  return p;
}

// ---- builtin families -------------------------------------------------------------------------

Problem poeschl_teller(double c, double m, double center, double diffusion) {
  const double depth = m * (m + 1.0);
  std::ostringstream name;
  name << "poeschl-teller(c=" << c << ", m=" << m << ")";
  Mat lim = Mat::Constant(1, 1, c);
  return Problem::make(
      name.str(), Vec::Constant(1, diffusion),
      [c, depth, center](double x) { return Mat::Constant(1, 1, c - depth * sech2(x - center)); }, lim,
      lim);
}

Problem sech_pulse_potential(double center) {
  Mat lim = Mat::Constant(1, 1, 1.0);
  return Problem::make(
      "shifted-sech-pulse", Vec::Constant(1, 1.0),
      [center](double x) { return Mat::Constant(1, 1, 1.0 - 3.0 * sech2(0.5 * (x - center))); }, lim, lim);
}

Problem constant_potential(const Mat& value, const Vec& diffusion) {
  return Problem::make("constant", diffusion, [value](double) { return value; }, value, value);
}

Problem block_diagonal(const std::vector<Problem>& blocks) {
  if (blocks.empty()) throw Error(ErrorKind::InvalidArgument, "block-diagonal needs at least one block");
  int n = 0;
  for (const auto& b : blocks) n += b.n();
  Vec d(n);
  Mat vm = Mat::Zero(n, n);
  Mat vp = Mat::Zero(n, n);
  std::string name = "block-diagonal(";
  int off = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    d.segment(off, b.n()) = b.diffusion();
    vm.block(off, off, b.n(), b.n()) = b.limit(Side::Minus);
    vp.block(off, off, b.n(), b.n()) = b.limit(Side::Plus);
    name += (i ? ", " : "") + b.name();
    off += b.n();
  }
  name += ")";
  return Problem::make(name, d,
                       [blocks, n](double x) {
                         Mat v = Mat::Zero(n, n);
                         int o = 0;
                         for (const auto& b : blocks) {
                           v.block(o, o, b.n(), b.n()) = b.V(x);
                           o += b.n();
                         }
                         return v;
                       },
                       vm, vp);
}

Problem tabulated_potential(std::string name, const Vec& diffusion, std::vector<double> grid,
                            const std::vector<Mat>& samples) {
  const int n = static_cast<int>(diffusion.size());
  if (grid.size() != samples.size() || grid.size() < 4) {
    throw Error(ErrorKind::InvalidArgument, "tabulated potential needs >= 4 samples, one per grid point");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "tabulated grid must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_square(samples[i], n, "tabulated sample");
    if (!is_symmetric(samples[i], 1e-12)) {
      throw Error(ErrorKind::InvalidArgument,
                  "tabulated sample at x=" + std::to_string(grid[i]) + " is not symmetric");
    }
  }
  using Interp = boost::math::interpolators::pchip<std::vector<double>>;
  struct Entry {
    int i, j;
    std::shared_ptr<Interp> f;
  };
  std::vector<Entry> entries;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<double> xs = grid;
      std::vector<double> ys(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) ys[k] = samples[k](i, j);
      entries.push_back({i, j, std::make_shared<Interp>(std::move(xs), std::move(ys))});
    }
  }
  const double lo = grid.front();
  const double hi = grid.back();
  const Mat first = samples.front();
  const Mat last = samples.back();
  PotentialFn fn = [entries, n, lo, hi, first, last](double x) -> Mat {
    if (x <= lo) return first;
    if (x >= hi) return last;
    Mat v(n, n);
    for (const auto& e : entries) {
      const double val = (*e.f)(x);
      v(e.i, e.j) = val;
      v(e.j, e.i) = val;
    }
    return v;
  };
  Problem p = Problem::make(std::move(name), diffusion, fn, first, last);
  return p.with_exact_tail(Side::Minus, lo, grid[1]).with_exact_tail(Side::Plus, hi, grid[grid.size() - 2]);
}

Problem tabulated_potential_from_csv(const std::string& path, const Vec& diffusion) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open tabulated potential CSV: " + path);
  const int n = static_cast<int>(diffusion.size());
  std::vector<double> grid;
  std::vector<Mat> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (grid.empty() && samples.empty()) continue;  // header row
      throw Error(ErrorKind::InvalidArgument, path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    if (static_cast<int>(vals.size()) != 1 + n * n) {
      throw Error(ErrorKind::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected " +
                                                  std::to_string(1 + n * n) + " columns");
    }
    grid.push_back(vals[0]);
    Mat v(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v(i, j) = vals[1 + i * n + j];
    samples.push_back(v);
  }
  return tabulated_potential("tabulated(" + path + ")", diffusion, std::move(grid), samples);
}

// ---- gradient reaction-diffusion --------------------------------------------------------------

Vec PulseProblem::second_derivative(double x) const {
  if (pulse_xx) return pulse_xx(x);
  const double h = 1e-5 * std::max(1.0, std::abs(x));
  return (pulse_x(x + h) - pulse_x(x - h)) / (2.0 * h);
}

PulseProblem scalar_pulse_system(const Vec& diffusion, double k, double center) {
  const int n = static_cast<int>(diffusion.size());
  PulseProblem pp;
  pp.name = n == 1 ? "scalar-pulse" : "decoupled-scalar-pulses(" + std::to_string(n) + ")";
  pp.diffusion = diffusion;
  pp.grad_f = [k](const Vec& u) -> Vec { return (-k * u.array() + u.array().square()).matrix(); };
  pp.hess_f = [k](const Vec& u) -> Mat { return (-k + 2.0 * u.array()).matrix().asDiagonal(); };
  if (k <= 0.0) {
    pp.pulse = [n](double) -> Vec { return Vec::Zero(n); };
    pp.pulse_x = pp.pulse;
    pp.pulse_xx = pp.pulse;
    return pp;
  }
  const Vec beta = (k / diffusion.array()).sqrt().matrix() * 0.5;
  const double amp = 1.5 * k;
  pp.pulse = [beta, amp, center](double x) -> Vec {
    Vec out(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) out(i) = amp * sech2(beta(i) * (x - center));
    return out;
  };
  pp.pulse_x = [beta, amp, center](double x) -> Vec {
    Vec out(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      const double y = beta(i) * (x - center);
      out(i) = -2.0 * amp * beta(i) * sech2(y) * std::tanh(y);
    }
    return out;
  };
  pp.pulse_xx = [beta, amp, center](double x) -> Vec {
    Vec out(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      const double y = beta(i) * (x - center);
      const double s2 = sech2(y);
      const double t = std::tanh(y);
      out(i) = -2.0 * amp * beta(i) * beta(i) * s2 * (s2 - 2.0 * t * t);
    }
    return out;
  };
  return pp;
}

Problem build_from_gradient_rd(const PulseProblem& pp, const BuildOptions& options) {
  const int n = pp.n();
  if (!pp.grad_f || !pp.hess_f || !pp.pulse || !pp.pulse_x) {
    throw Error(ErrorKind::InvalidArgument, "pulse problem is missing a callable");
  }
  const auto grid = linspace(options.grid_min, options.grid_max, options.grid_points);
  double sup_pulse = 0.0;
  for (double x : grid) sup_pulse = std::max(sup_pulse, pp.pulse(x).lpNorm<Eigen::Infinity>());
  const double tol_steady = options.tol_steady.value_or(1e-6 * (1.0 + sup_pulse));

  double worst = 0.0;
  double worst_x = grid.front();
  for (double x : grid) {
    const Vec r = pp.diffusion.asDiagonal() * pp.second_derivative(x) + pp.grad_f(pp.pulse(x));
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (rn > worst) {
      worst = rn;
      worst_x = x;
    }
  }
  if (worst > tol_steady) {
    std::ostringstream msg;
    msg << "pulse is not a steady state: max residual " << worst << " at x=" << worst_x
        << " exceeds tol_steady " << tol_steady;
    throw Error(ErrorKind::SteadyStateResidual, msg.str());
  }
  const double tail = std::max(pp.pulse(grid.front()).lpNorm<Eigen::Infinity>(),
                               pp.pulse(grid.back()).lpNorm<Eigen::Infinity>());
  if (tail > tol_steady) {
    throw Error(ErrorKind::Precondition,
                "pulse does not decay on the grid tails (|φ*| = " + std::to_string(tail) + ")");
  }

  const Mat v_inf = -pp.hess_f(Vec::Zero(n));
  auto hess = pp.hess_f;
  auto pulse = pp.pulse;
  Problem p = Problem::make(pp.name, pp.diffusion, [hess, pulse](double x) -> Mat { return -hess(pulse(x)); },
                            v_inf, v_inf);
  check_hypotheses(p, grid);
  return p;
}

// ---- hypotheses -------------------------------------------------------------------------------

HypothesisReport evaluate_hypotheses(const Problem& p, const std::vector<double>& grid,
                                     const HypothesisTolerances& tols) {
  HypothesisReport r;
  double worst = 0.0;
  for (double x : grid) {
    const Mat v = p.V(x);
    worst = std::max(worst, (v - v.transpose()).norm() / std::max(1e-300, v.norm()));
  }
  r.h1_max_residual = worst;
  r.h1_symmetric = worst <= tols.symmetry;

  r.h2_min_eig_minus = min_eigenvalue(p.limit(Side::Minus));
  r.h2_min_eig_plus = min_eigenvalue(p.limit(Side::Plus));
  r.h2_positive_limits = r.h2_min_eig_minus > 0.0 && r.h2_min_eig_plus > 0.0;

  const TailModel& tm = p.tail(Side::Minus);
  const TailModel& tp = p.tail(Side::Plus);
  r.decay_rate_minus = tm.rate;
  r.decay_rate_plus = tp.rate;
  auto tail_integral = [](const TailModel& t, double dist) {
    if (std::isinf(t.rate)) return 0.0;
    if (!t.fitted) return kInf;
    return std::exp(t.log_amplitude - t.rate * std::max(dist, 0.0)) / t.rate;
  };
  if (!grid.empty()) {
    r.h3_tail_integral_minus = tail_integral(tm, -grid.front());
    r.h3_tail_integral_plus = tail_integral(tp, grid.back());
    const Mat vm = p.limit(Side::Minus);
    const Mat vp = p.limit(Side::Plus);
    double integral = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      auto dev = [&](double x) { return spectral_norm(p.V(x) - (x < 0.0 ? vm : vp)); };
      integral += 0.5 * (grid[i] - grid[i - 1]) * (dev(grid[i - 1]) + dev(grid[i]));
    }
    r.h3_grid_integral = integral;
  }
  r.h3_integrable = std::isfinite(r.h3_tail_integral_minus) && std::isfinite(r.h3_tail_integral_plus) &&
                    std::isfinite(r.h3_grid_integral);

  const Mat d = p.diffusion().asDiagonal();
  double emin = kInf;
  for (double k : linspace(0.0, tols.essential_k_max, tols.essential_k_points)) {
    for (Side side : {Side::Minus, Side::Plus}) {
      emin = std::min(emin, min_eigenvalue(k * k * d + p.limit(side)));
    }
  }
  r.essential_min = emin;
  // D > 0 makes k^2 D dominate for |k| beyond the sampled range.
  r.essential_positive = emin > 0.0;
  return r;
}

HypothesisReport check_hypotheses(const Problem& p, const std::vector<double>& grid,
                                  const HypothesisTolerances& tols) {
  HypothesisReport r = evaluate_hypotheses(p, grid, tols);
  if (!r.h2_positive_limits) {
    std::ostringstream msg;
    msg << "(H2) violated for " << p.name() << ": min eig V_- = " << r.h2_min_eig_minus
        << ", min eig V_+ = " << r.h2_min_eig_plus
        << "; the state is already unstable due to the essential spectrum";
    throw Error(ErrorKind::HypothesisViolation, msg.str());
  }
  return r;
}

std::vector<double> default_grid(const Problem& p, int points) {
  const double lo = model_cutoff(p.tail(Side::Minus), Side::Minus, 1e-10).value_or(-40.0);
  const double hi = model_cutoff(p.tail(Side::Plus), Side::Plus, 1e-10).value_or(40.0);
  return linspace(std::min(lo, -1.0), std::max(hi, 1.0), points);
}

double sup_norm_V(const Problem& p, const std::vector<double>& grid) {
  double best = std::max(spectral_norm(p.limit(Side::Minus)), spectral_norm(p.limit(Side::Plus)));
  std::size_t arg = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = spectral_norm(p.V(grid[i]));
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  if (arg < grid.size() && grid.size() > 2) {
    const double a = grid[arg == 0 ? 0 : arg - 1];
    const double b = grid[std::min(arg + 1, grid.size() - 1)];
    const auto polished =
        golden_section_minimize([&](double x) { return -spectral_norm(p.V(x)); }, a, b, 1e-12);
    best = std::max(best, -polished.value);
  }
  return best;
}

double choose_lambda_inf(const Problem& p, double margin) {
  int points = 1001;
  double sup = sup_norm_V(p, default_grid(p, points));
  for (int it = 0; it < 6; ++it) {
    points = 2 * points - 1;
    const double refined = sup_norm_V(p, default_grid(p, points));
    const bool settled = std::abs(refined - sup) <= 0.01 * std::max(refined, 1e-300);
    sup = std::max(sup, refined);
    if (settled) break;
  }
  return sup + margin;
}

}  // namespace maslov
