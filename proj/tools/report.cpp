#include "report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "maslov/error.hpp"

namespace maslov::cli {

using nlohmann::json;

namespace {

// JSON has no inf/nan; they become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace

json to_json(const HypothesisReport& r) {
  return {
      {"h1_symmetric", {{"pass", r.h1_symmetric}, {"max_residual", number(r.h1_max_residual)}}},
      {"h2_positive_limits",
       {{"pass", r.h2_positive_limits},
        {"min_eig_minus", number(r.h2_min_eig_minus)},
        {"min_eig_plus", number(r.h2_min_eig_plus)}}},
      {"h3_integrable",
       {{"pass", r.h3_integrable},
        {"tail_integral_minus", number(r.h3_tail_integral_minus)},
        {"tail_integral_plus", number(r.h3_tail_integral_plus)},
        {"grid_integral", number(r.h3_grid_integral)},
        {"decay_rate_minus", number(r.decay_rate_minus)},
        {"decay_rate_plus", number(r.decay_rate_plus)}}},
      {"essential_spectrum", {{"pass", r.essential_positive}, {"min", number(r.essential_min)}}},
      {"all_pass", r.all_pass()},
  };
}

json to_json(const Crossing& c) {
  return {
      {"axis", to_string(c.axis)},
      {"location", number(c.location)},
      {"location_error", number(c.location_error)},
      {"multiplicity", c.multiplicity},
      {"form_eigenvalues", vec(c.form_eigenvalues)},
      {"signature", c.signature},
      {"sigma_min", number(c.sigma_min)},
      {"sign_change", c.sign_change},
      {"at_endpoint", c.at_endpoint},
      {"resolved", c.resolved},
  };
}

json to_json(const SpectrumReport& r) {
  json amb = json::array();
  for (int i : r.kernel_ambiguous) amb.push_back(i);
  return {
      {"x_left", number(r.x_left)},
      {"x_right", number(r.x_right)},
      {"h", number(r.h)},
      {"essential_floor", number(r.floor)},
      {"eigenvalues", vec(r.eigenvalues)},
      {"richardson_error", vec(r.richardson_error)},
      {"eig_zero_tol", vec(r.zero_tol)},
      {"kernel_ambiguous", amb},
      {"morse", r.morse},
      {"nonpositive_count", r.nonpositive_count},
  };
}

json to_json(const MaslovReport& r) {
  json s = json::array(), l = json::array();
  for (const auto& c : r.s_crossings) s.push_back(to_json(c));
  for (const auto& c : r.lambda_crossings) l.push_back(to_json(c));
  json j = {
      {"L", number(r.L)},
      {"lambda_inf", number(r.lambda_inf)},
      {"x_min", number(r.domain.x_min)},
      {"x_max", number(r.domain.x_max)},
      {"match_x", number(r.domain.match_x)},
      {"A1", r.a1},
      {"A2", r.a2},
      {"A3", r.a3},
      {"A4", r.a4},
      {"s_crossings", s},
      {"lambda_crossings", l},
      {"endpoint_crossing_at_L", r.endpoint_crossing_at_L},
      {"gamma1_min_sigma", number(r.gamma1_min_sigma)},
      {"gamma4_min_sigma", number(r.gamma4_min_sigma)},
      {"max_lagrangian_residual", number(r.max_lagrangian_residual)},
      {"checks",
       {{"identity", r.identity_holds()}, {"a2_equals_abs_a3", r.a2_matches_a3()}, {"oracle_agrees", r.oracle_agrees()}}},
  };
  j["oracle"] = r.oracle ? to_json(*r.oracle) : json(nullptr);
  return j;
}

json to_json(const EvansTrace& t) {
  json z = json::array();
  for (const auto& e : t.zeros) {
    z.push_back({{"lambda", number(e.lambda)},
                 {"multiplicity", e.multiplicity},
                 {"bracket_error", number(e.bracket_error)},
                 {"sign_change", e.sign_change}});
  }
  return {
      {"lambda_inf", number(t.lambda_inf)},
      {"eps", number(t.eps)},
      {"x_eval", number(t.x_eval)},
      {"normalization", t.normalization},
      {"grid_points", t.lambdas.size()},
      {"zeros", z},
      {"count", t.count},
      {"boundary_flag", t.boundary_flag},
  };
}

json to_json(const SymmetryResult& s) {
  return {{"symmetric", s.symmetric},
          {"x0", number(s.x0)},
          {"residual", number(s.residual)},
          {"tol_sym", number(s.tol_sym)},
          {"derivative_norm", number(s.derivative_norm)}};
}

json to_json(const InstabilityVerdict& v) {
  json j = {
      {"verdict", to_string(v.verdict)},
      {"reason", v.reason},
      {"essential_min", number(v.essential_min)},
      {"morse_lower_bound", v.morse_lower_bound},
  };
  j["symmetry"] = v.symmetry ? to_json(*v.symmetry) : json(nullptr);
  if (v.conjugate_point_at_x0) {
    j["crossing"] = to_json(v.conjugate_point_at_x0->crossing);
    j["max_span_angle"] = number(v.conjugate_point_at_x0->max_span_angle);
  } else {
    j["crossing"] = nullptr;
    j["max_span_angle"] = nullptr;
  }
  j["full_morse"] = v.full_morse ? json(*v.full_morse) : json(nullptr);
  j["whole_line_morse"] = v.whole_line_morse ? json(*v.whole_line_morse) : json(nullptr);
  json checks = json::object();
  if (v.conjugate_point_at_x0) {
    const Crossing& c = v.conjugate_point_at_x0->crossing;
    checks["form_positive_definite"] = c.signature == c.multiplicity;
  }
  if (v.full_morse) checks["lower_bound_le_full"] = v.morse_lower_bound <= *v.full_morse;
  if (v.full_morse && v.whole_line_morse) checks["maslov_equals_oracle"] = *v.full_morse == *v.whole_line_morse;
  j["checks"] = checks;
  return j;
}

std::string trace_csv(const PropagationTrace& t) {
  std::ostringstream os;
  os << "x,det_x,sigma_min,lagrangian_residual\n" << std::setprecision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t.xs[i] << ',' << t.det_x[i] << ',' << t.sigma_min[i] << ',' << t.lagrangian_residual[i] << '\n';
  }
  return os.str();
}

std::string sweep_csv(const MaslovReport& r) {
  std::ostringstream os;
  os << "lambda,det_x,sigma_min\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.sweep_lambda.size(); ++i) {
    os << r.sweep_lambda[i] << ',' << r.sweep_det[i] << ',' << r.sweep_sigma[i] << '\n';
  }
  return os.str();
}

std::string spectrum_csv(const SpectrumReport& r) {
  std::ostringstream os;
  os << "index,eigenvalue,coarse,fine,richardson_error,kernel_ambiguous\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    const bool amb = std::find(r.kernel_ambiguous.begin(), r.kernel_ambiguous.end(), static_cast<int>(i)) !=
                     r.kernel_ambiguous.end();
    os << i + 1 << ',' << r.eigenvalues[i] << ',' << r.coarse[i] << ',' << r.fine[i] << ',' << r.richardson_error[i]
       << ',' << (amb ? 1 : 0) << '\n';
  }
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace maslov::cli
