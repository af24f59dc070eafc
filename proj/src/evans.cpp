#include "maslov/evans.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "maslov/error.hpp"
#include "maslov/numerics.hpp"

namespace maslov {

namespace {

struct Ends {
  double x_min, x_max, x_eval;
};

Ends ends(const Problem& p, const EvansControls& c) {
  Ends e;
  e.x_min = c.x_min ? *c.x_min : truncation_point(p, c.tol_asym, Side::Minus);
  e.x_max = c.x_max ? *c.x_max : truncation_point(p, c.tol_asym, Side::Plus);
  e.x_eval = c.x_eval;
  if (!(e.x_min < e.x_eval && e.x_eval < e.x_max)) {
    e.x_min = std::min(e.x_min, e.x_eval - 1.0);
    e.x_max = std::max(e.x_max, e.x_eval + 1.0);
  }
  return e;
}

}  // namespace

LagrangianFrame stable_subspace_from_plus_infinity(const Problem& p, double lambda, double x_max, double x_at,
                                                   const OdeControls& controls) {
  const Mat s = stable_subspace_at_plus_infinity(p, lambda, x_max).columns();
  return {advance(p, lambda, s, x_max, x_at, controls), x_at, lambda};
}

EvansValue evans_value(const Problem& p, double lambda, const EvansControls& c) {
  const Ends e = ends(p, c);
  const Mat a = advance(p, lambda, unstable_subspace_at_minus_infinity(p, lambda, e.x_min).columns(), e.x_min,
                        e.x_eval, c.ode);
  const Mat b = stable_subspace_from_plus_infinity(p, lambda, e.x_max, e.x_eval, c.ode).columns();
  Mat m(a.rows(), a.cols() + b.cols());
  m << b, a;
  const SubspaceIntersection inter = lagrangian_intersection(a, b, c.tol_rank);
  EvansValue v;
  v.lambda = lambda;
  v.value = m.determinant();
  v.sigma_min = inter.singular_values(inter.singular_values.size() - 1);
  v.intersection_dim = inter.dimension;
  return v;
}

EvansTrace count_negative_evans_zeros(const Problem& p, const EvansControls& c) {
  EvansTrace t;
  t.lambda_inf = c.lambda_inf ? *c.lambda_inf : choose_lambda_inf(p, c.lambda_margin);
  t.eps = c.eps;
  t.x_eval = c.x_eval;
  if (!(t.lambda_inf > c.eps)) throw Error(ErrorKind::InvalidArgument, "lambda_inf must exceed eps");
  t.normalization =
      "columns: orthonormal E^s_+ then E^u_- at x_eval; each frame starts in graph form (det X > 0) at its "
      "truncation point and is carried by positive-diagonal QR, so E is continuous in lambda";
  t.lambdas = linspace(-t.lambda_inf, -c.eps, std::max(c.grid, 3));
  const std::vector<EvansValue> vals =
      parallel_map<EvansValue>(t.lambdas.size(), c.jobs, [&](std::size_t j) { return evans_value(p, t.lambdas[j], c); });
  for (const auto& v : vals) {
    t.values.push_back(v.value);
    t.sigma_min.push_back(v.sigma_min);
  }

  auto E = [&](double l) { return evans_value(p, l, c).value; };
  auto S = [&](double l) { return evans_value(p, l, c).sigma_min; };
  const double ltol = 1e-12 * std::max(1.0, t.lambda_inf);
  auto record = [&](double lam, double err, bool sign_change) {
    const EvansValue v = evans_value(p, lam, c);
    EvansZero z;
    z.lambda = lam;
    z.bracket_error = err;
    z.sign_change = sign_change;
    z.multiplicity = std::max(v.intersection_dim, sign_change ? 1 : 0);
    if (z.multiplicity > 0) t.zeros.push_back(z);
  };

  const std::size_t m = t.lambdas.size();
  for (std::size_t i = 1; i < m; ++i) {
    if ((t.values[i - 1] < 0.0) != (t.values[i] < 0.0)) {
      std::uintmax_t iters = 100;
      const auto r = boost::math::tools::toms748_solve(
          E, t.lambdas[i - 1], t.lambdas[i], t.values[i - 1], t.values[i],
          [ltol](double a, double b) { return std::abs(b - a) <= ltol; }, iters);
      record(0.5 * (r.first + r.second), 0.5 * std::abs(r.second - r.first), true);
    }
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const bool near_sign = (t.values[i - 1] < 0.0) != (t.values[i] < 0.0) ||
                           (t.values[i] < 0.0) != (t.values[i + 1] < 0.0);
    if (near_sign || !(t.sigma_min[i] <= t.sigma_min[i - 1] && t.sigma_min[i] <= t.sigma_min[i + 1])) continue;
    const MinimumBracket mb = golden_section_minimize(S, t.lambdas[i - 1], t.lambdas[i + 1], ltol);
    if (mb.value <= c.tol_rank) record(mb.x, mb.half_width, false);
  }
  std::sort(t.zeros.begin(), t.zeros.end(), [](const EvansZero& a, const EvansZero& b) { return a.lambda < b.lambda; });

  for (const auto& z : t.zeros) {
    t.count += z.multiplicity;
    if (z.lambda >= -2.0 * c.eps) t.boundary_flag = true;
  }
  if (t.sigma_min.back() <= c.tol_rank) t.boundary_flag = true;
  // λ = 0 itself (excluded from the count): a kernel there is reported, not counted
  if (evans_value(p, 0.0, c).sigma_min <= c.tol_rank) t.boundary_flag = true;
  return t;
}

std::string evans_trace_csv(const EvansTrace& t) {
  std::ostringstream os;
  os << "lambda,E_value,sigma_min_intersection\n" << std::setprecision(17);
  for (std::size_t i = 0; i < t.lambdas.size(); ++i) {
    os << t.lambdas[i] << ',' << t.values[i] << ',' << t.sigma_min[i] << '\n';
  }
  return os.str();
}

}  // namespace maslov
