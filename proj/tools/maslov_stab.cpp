// maslov-stab: spectral stability of steady states via conjugate points.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "config.hpp"
#include "maslov/error.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace maslov;
using namespace maslov::cli;

namespace {

// Exit-code contract.
constexpr int kOk = 0;
constexpr int kHypothesis = 2;
constexpr int kInconclusive = 3;
constexpr int kConsistency = 4;
constexpr int kUsage = 64;

struct Options {
  std::string problem;
  std::optional<double> L;
  std::optional<double> lambda_inf;
  std::optional<double> x_min;
  std::optional<double> tol_s;
  std::optional<double> tol_rank;
  int jobs = 1;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return kUsage;
    case ErrorKind::HypothesisViolation:
    case ErrorKind::SteadyStateResidual:
    case ErrorKind::Precondition: return kHypothesis;
    default: return kConsistency;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("maslov-stab");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("MASLOV_STAB_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

json header(const std::string& command, const RunConfig& cfg, const Options& o) {
  return {{"tool", "maslov-stab"},
          {"command", command},
          {"problem", cfg.name},
          {"problem_file", fs::path(cfg.source).filename().string()},
          {"n", cfg.n},
          {"seed", o.seed}};
}

void emit(const Options& o, const std::string& file, const std::string& content) {
  const fs::path path = fs::path(o.out_dir) / file;
  write_atomic(path.string(), content);
  spdlog::info("wrote {}", path.string());
}

MaslovControls maslov_controls(const RunConfig& cfg, const Options& o) {
  MaslovControls c;
  const auto& t = cfg.tolerances;
  if (t.tol_s) c.tol_s = *t.tol_s;
  if (t.tol_rank) c.tol_rank = *t.tol_rank;
  if (t.tol_asym) c.tol_asym = *t.tol_asym;
  if (t.kernel_tol) c.kernel_tol = *t.kernel_tol;
  if (t.rtol) c.ode.rtol = *t.rtol;
  if (t.atol) c.ode.atol = *t.atol;
  if (t.h_max) c.ode.h_max = *t.h_max;
  if (t.tol_lag) c.ode.tol_lag = *t.tol_lag;
  if (t.h_fd) c.oracle.h = *t.h_fd;
  c.oracle.tol_asym = c.tol_asym;
  if (o.tol_s) c.tol_s = *o.tol_s;
  if (o.tol_rank) c.tol_rank = *o.tol_rank;
  if (o.x_min) c.x_min = *o.x_min;
  if (o.lambda_inf) c.lambda_inf = *o.lambda_inf;
  c.jobs = o.jobs;
  return c;
}

EvansControls evans_controls(const MaslovControls& m) {
  EvansControls e;
  e.ode = m.ode;
  e.tol_asym = m.tol_asym;
  e.tol_rank = m.tol_rank;
  e.x_min = m.x_min;
  e.x_max = m.x_max;
  e.lambda_inf = m.lambda_inf;
  e.jobs = m.jobs;
  return e;
}

Problem operator_of(const RunConfig& cfg) {
  if (cfg.problem) return *cfg.problem;
  BuildOptions b;
  if (cfg.grid.given) {
    b.grid_min = cfg.grid.x_min;
    b.grid_max = cfg.grid.x_max;
    b.grid_points = cfg.grid.n_points;
  }
  return build_from_gradient_rd(*cfg.pulse, b);
}

std::vector<double> working_grid(const RunConfig& cfg, const Problem& p) {
  return cfg.grid.given ? linspace(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points) : default_grid(p);
}

std::string fmt6(double x) {
  std::ostringstream os;
  // no "-0.000000" for values that round to zero
  if (std::abs(x) < 5e-7) x = 0.0;
  os << std::fixed << std::setprecision(6) << x;
  return os.str();
}

// ---- commands ----------------------------------------------------------------------------------

int cmd_check(const RunConfig& cfg, const Options& o) {
  Problem p = [&] {
    if (cfg.problem) return *cfg.problem;
    // hypothesis failures of a gradient-rd operator are reported, not thrown
    PulseProblem pp = *cfg.pulse;
    const Vec zero = Vec::Zero(pp.n());
    const Mat lim = -pp.hess_f(zero);
    return Problem::make(cfg.name, pp.diffusion, [pp](double x) -> Mat { return -pp.hess_f(pp.pulse(x)); }, lim, lim);
  }();
  const HypothesisReport r = evaluate_hypotheses(p, working_grid(cfg, p));
  json j = header("check", cfg, o);
  j["report"] = to_json(r);
  emit(o, "hypotheses.json", dump(j));
  std::ostringstream os;
  os << "hypotheses: H1 " << (r.h1_symmetric ? "pass" : "FAIL") << ", H2 "
     << (r.h2_positive_limits ? "pass" : "FAIL (limits not positive definite: min eig " +
                                             fmt6(std::min(r.h2_min_eig_minus, r.h2_min_eig_plus)) + ")")
     << ", H3 " << (r.h3_integrable ? "pass" : "FAIL") << ", essential spectrum "
     << (r.essential_positive ? "positive" : "FAIL (already unstable due to the essential spectrum)");
  std::cout << os.str() << "\n";
  return r.all_pass() ? kOk : kHypothesis;
}

int cmd_conjugate_points(const RunConfig& cfg, const Options& o) {
  const Problem p = operator_of(cfg);
  check_hypotheses(p, working_grid(cfg, p));
  const MaslovControls c = maslov_controls(cfg, o);
  const Domain d = resolve_domain(p, c);
  const double L = o.L ? *o.L : d.x_max;
  PropagationTrace trace;
  const std::vector<Crossing> cr = find_conjugate_points(p, L, c, &trace);
  json j = header("conjugate-points", cfg, o);
  j["L"] = L;
  j["x_min"] = d.x_min;
  j["x_max"] = d.x_max;
  j["match_x"] = d.match_x;
  j["crossings"] = json::array();
  int total = 0;
  for (const auto& x : cr) {
    j["crossings"].push_back(to_json(x));
    total += x.multiplicity;
  }
  j["count"] = total;
  j["max_lagrangian_residual"] = trace.max_lagrangian_residual();
  emit(o, "conjugate_points.json", dump(j));
  emit(o, "frame_trace.csv", trace_csv(trace));
  std::ostringstream os;
  os << total << " conjugate point(s) in (" << fmt6(d.x_min) << ", " << fmt6(L) << "]";
  for (const auto& x : cr) os << "; s=" << fmt6(x.location) << " (mult " << x.multiplicity << ")";
  std::cout << os.str() << "\n";
  return kOk;
}

int cmd_maslov_rect(const RunConfig& cfg, const Options& o) {
  const Problem p = operator_of(cfg);
  check_hypotheses(p, working_grid(cfg, p));
  MaslovControls c = maslov_controls(cfg, o);
  c.throw_on_inconsistency = false;
  const double L = o.L ? *o.L : resolve_domain(p, c).x_max;
  const MaslovReport r = maslov_rectangle(p, L, c);
  json j = header("maslov-rect", cfg, o);
  j["report"] = to_json(r);
  emit(o, "maslov_rect.json", dump(j));
  emit(o, "lambda_sweep.csv", sweep_csv(r));
  if (r.oracle) emit(o, "oracle_spectrum.csv", spectrum_csv(*r.oracle));
  const bool ok = r.identity_holds() && r.a2_matches_a3() && r.oracle_agrees();
  std::ostringstream os;
  os << "A=(" << r.a1 << "," << r.a2 << "," << r.a3 << "," << r.a4 << "); identity "
     << (r.identity_holds() ? "holds" : "VIOLATED") << "; A2 = |A3| " << (r.a2_matches_a3() ? "yes" : "NO");
  if (r.oracle) {
    os << "; oracle nonpositive count " << r.oracle->nonpositive_count;
    if (!r.oracle->kernel_ambiguous.empty()) os << " (+" << r.oracle->kernel_ambiguous.size() << " kernel-ambiguous)";
    os << (r.oracle_agrees() ? " agrees" : " DISAGREES");
  }
  if (r.endpoint_crossing_at_L) os << "; crossing at the corner s = L";
  std::cout << os.str() << "\n";
  return ok ? kOk : kConsistency;
}

int cmd_morse(const RunConfig& cfg, const Options& o) {
  const Problem p = operator_of(cfg);
  check_hypotheses(p, working_grid(cfg, p));
  const MaslovControls c = maslov_controls(cfg, o);
  const MorseResult m = morse_index_via_maslov(p, c);
  const WholeLineMorse w = morse_whole_line(p, c.oracle);
  const EvansTrace e = count_negative_evans_zeros(p, evans_controls(c));
  json j = header("morse", cfg, o);
  json ms = {{"morse", m.morse}, {"L", m.Ls}, {"counts", m.counts}, {"crossings", json::array()}};
  for (const auto& x : m.crossings) ms["crossings"].push_back(to_json(x));
  json runs = json::array();
  for (const auto& r : w.runs) runs.push_back(to_json(r));
  j["maslov"] = ms;
  j["oracle"] = {{"morse", w.morse}, {"runs", runs}};
  j["evans"] = to_json(e);
  // an oracle eigenvalue within its error of 0 may go either way
  const int amb = w.runs.empty() ? 0 : static_cast<int>(w.runs.back().kernel_ambiguous.size());
  auto within = [&](int k) { return k >= w.morse && k <= w.morse + amb; };
  const bool agree = within(m.morse) && within(e.count) && m.morse == e.count;
  j["oracle"]["kernel_ambiguous"] = amb;
  j["agree"] = agree;
  emit(o, "morse.json", dump(j));
  emit(o, "evans_trace.csv", evans_trace_csv(e));
  std::cout << "Mor(H)=" << m.morse << " (maslov) " << (within(m.morse) ? "=" : "!=") << " " << w.morse
            << " (oracle) " << (within(e.count) ? "=" : "!=") << " " << e.count << " (evans)"
            << (amb ? "; oracle eigenvalue(s) within error of 0: " + std::to_string(amb) : "")
            << (e.boundary_flag ? "; Evans zero within eps of 0 flagged" : "") << "\n";
  return agree ? kOk : kConsistency;
}

int cmd_evans(const RunConfig& cfg, const Options& o) {
  const Problem p = operator_of(cfg);
  check_hypotheses(p, working_grid(cfg, p));
  const EvansTrace e = count_negative_evans_zeros(p, evans_controls(maslov_controls(cfg, o)));
  json j = header("evans", cfg, o);
  j["report"] = to_json(e);
  emit(o, "evans.json", dump(j));
  emit(o, "evans_trace.csv", evans_trace_csv(e));
  std::ostringstream os;
  os << "Evans: " << e.count << " negative zero(s) counting multiplicity";
  for (const auto& z : e.zeros) os << "; lambda=" << fmt6(z.lambda) << " (mult " << z.multiplicity << ")";
  if (e.boundary_flag) os << "; zero within eps of 0 flagged";
  std::cout << os.str() << "\n";
  return kOk;
}

int cmd_pulse(const RunConfig& cfg, const Options& o) {
  if (!cfg.pulse) throw ConfigError("the pulse command needs a gradient-rd problem");
  PulseControls c;
  c.maslov = maslov_controls(cfg, o);
  c.oracle = c.maslov.oracle;
  c.full = true;
  if (cfg.grid.given) {
    c.build.grid_min = cfg.grid.x_min;
    c.build.grid_max = cfg.grid.x_max;
    c.build.grid_points = cfg.grid.n_points;
  }
  const InstabilityVerdict v = instability_verdict(*cfg.pulse, c);
  json j = header("pulse", cfg, o);
  j["report"] = to_json(v);
  emit(o, "verdict.json", dump(j));
  std::ostringstream os;
  switch (v.verdict) {
    case Verdict::Unstable:
      os << "UNSTABLE: ";
      if (v.conjugate_point_at_x0) {
        const Crossing& x = v.conjugate_point_at_x0->crossing;
        os << "conjugate point at s=" << fmt6(x.location) << " (mult " << x.multiplicity << ")";
      } else {
        os << "no symmetry point, conjugate-point count";
      }
      if (v.full_morse) os << "; Mor(H)=" << *v.full_morse;
      break;
    case Verdict::Inconclusive: os << "INCONCLUSIVE: " << v.reason; break;
    case Verdict::UnstableEssential: os << "UNSTABLE (essential spectrum): " << v.reason; break;
  }
  std::cout << os.str() << "\n";
  switch (v.verdict) {
    case Verdict::Unstable: return kOk;
    case Verdict::Inconclusive: return kInconclusive;
    case Verdict::UnstableEssential: return kHypothesis;
  }
  return kConsistency;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"maslov-stab: spectral stability of steady states via the Maslov index"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool takes_L) {
    sub->add_option("--problem", o.problem, "problem definition file (TOML or JSON)")->required();
    if (takes_L) sub->add_option("--L", o.L, "right end of the truncated domain");
    sub->add_option("--lambda-inf", o.lambda_inf, "bottom of the Maslov box (default ||V||_inf + 1)");
    sub->add_option("--x-min", o.x_min, "left truncation point (default: from the tail fit)");
    sub->add_option("--tol-s", o.tol_s, "conjugate-point location tolerance");
    sub->add_option("--tol-rank", o.tol_rank, "singular-value threshold for ker X");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", o.out_dir, "directory for reports");
    sub->add_option("--seed", o.seed, "seed recorded in reports");
  };
  struct Cmd {
    const char* name;
    const char* help;
    bool takes_L;
    int (*fn)(const RunConfig&, const Options&);
  };
  const Cmd cmds[] = {
      {"check", "verify the standing hypotheses", false, cmd_check},
      {"conjugate-points", "conjugate points of the lambda = 0 frame on (x_min, L]", true, cmd_conjugate_points},
      {"maslov-rect", "Maslov box identity with the finite-difference oracle", true, cmd_maslov_rect},
      {"morse", "Mor(H) by conjugate points, finite differences and the Evans function", false, cmd_morse},
      {"evans", "negative zeros of the Evans function", false, cmd_evans},
      {"pulse", "instability verdict for a pulse of a gradient RD system", false, cmd_pulse},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    common(sub, c.takes_L);
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const Cmd* chosen = nullptr;
  for (const auto& [sub, c] : subs) {
    if (sub->parsed()) chosen = c;
  }
  const std::string command = chosen->name;
  auto fail = [&](const std::string& kind, const std::string& message, int code) {
    std::cerr << "error (" << kind << "): " << message << "\n";
    try {
      const json j = {{"tool", "maslov-stab"}, {"command", command}, {"error", kind}, {"message", message},
                      {"exit_code", code}, {"seed", o.seed}};
      write_atomic((fs::path(o.out_dir) / "error.json").string(), dump(j));
    } catch (...) {
    }
    return code;
  };
  try {
    const RunConfig cfg = load_config(o.problem);
    return chosen->fn(cfg, o);
  } catch (const ConfigError& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), exit_code_for(e.kind()));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kConsistency);
  }
}
