#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace maslov::cli {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a table");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

double num(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing '" + key + "' in " + where);
  if (!obj.at(key).is_number()) throw ConfigError("'" + key + "' in " + where + " must be a number");
  return obj.at(key).get<double>();
}

double num_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? num(obj, key, where) : fallback;
}

Vec vec_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + " must contain numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Mat mat_of(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw ConfigError(where + " must be an n x n array");
  Mat m(n, n);
  for (int r = 0; r < n; ++r) {
    const Vec row = vec_of(j[static_cast<std::size_t>(r)], where);
    if (row.size() != n) throw ConfigError(where + " must be an n x n array");
    m.row(r) = row.transpose();
  }
  return m;
}

Problem with_diffusion(const Problem& p, const Vec& d) {
  if (d.size() != p.n()) throw ConfigError("diffusion length does not match block dimension");
  if ((d.array() == p.diffusion().array()).all()) return p;
  return Problem::make(p.name(), d, p.raw_potential(), p.limit(Side::Minus), p.limit(Side::Plus));
}

Problem build_potential(const json& spec, const Vec& d, const std::string& base_dir, const std::string& where);

Problem builtin(const std::string& kind, const json& params, const Vec& d, const std::string& base_dir,
                const std::string& where) {
  if (kind == "poeschl-teller") {
    only_keys(params, {"c", "m", "center"}, where + ".params");
    if (d.size() != 1) throw ConfigError("poeschl-teller is scalar (n = 1)");
    return poeschl_teller(num(params, "c", where), num(params, "m", where), num_or(params, "center", 0.0, where), d(0));
  }
  if (kind == "shifted-sech-pulse") {
    only_keys(params, {"center"}, where + ".params");
    if (d.size() != 1) throw ConfigError("shifted-sech-pulse is scalar (n = 1)");
    return with_diffusion(sech_pulse_potential(num_or(params, "center", 0.0, where)), d);
  }
  if (kind == "constant") {
    only_keys(params, {"value"}, where + ".params");
    if (!params.contains("value")) throw ConfigError("missing 'value' in " + where);
    return constant_potential(mat_of(params.at("value"), static_cast<int>(d.size()), where + ".value"), d);
  }
  if (kind == "block-diagonal") {
    only_keys(params, {"blocks"}, where + ".params");
    if (!params.contains("blocks") || !params.at("blocks").is_array() || params.at("blocks").empty()) {
      throw ConfigError(where + ".params.blocks must be a non-empty array");
    }
    std::vector<Problem> blocks;
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < params.at("blocks").size(); ++i) {
      const json& b = params.at("blocks")[i];
      const std::string w = where + ".blocks[" + std::to_string(i) + "]";
      const int bn = b.contains("n") ? b.at("n").get<int>() : 1;
      if (offset + bn > d.size()) throw ConfigError("block dimensions exceed n");
      json inner = b;
      inner.erase("n");
      blocks.push_back(build_potential(inner, d.segment(offset, bn), base_dir, w));
      offset += bn;
    }
    if (offset != d.size()) throw ConfigError("block dimensions do not add up to n");
    return block_diagonal(blocks);
  }
  (void)base_dir;
  throw ConfigError("unknown potential kind '" + kind + "' in " + where);
}

Problem build_potential(const json& spec, const Vec& d, const std::string& base_dir, const std::string& where) {
  only_keys(spec, {"kind", "params", "csv_path", "grid", "samples"}, where);
  if (!spec.contains("kind") || !spec.at("kind").is_string()) throw ConfigError("missing 'kind' in " + where);
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "tabulated") {
    if (spec.contains("csv_path")) {
      std::filesystem::path path = spec.at("csv_path").get<std::string>();
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      return tabulated_potential_from_csv(path.string(), d);
    }
    if (!spec.contains("grid") || !spec.contains("samples")) {
      throw ConfigError("tabulated potential needs csv_path or grid + samples in " + where);
    }
    const Vec g = vec_of(spec.at("grid"), where + ".grid");
    const json& s = spec.at("samples");
    if (!s.is_array() || s.size() != static_cast<std::size_t>(g.size())) {
      throw ConfigError(where + ".samples must hold one matrix per grid point");
    }
    std::vector<Mat> samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
      samples.push_back(s[i].is_number() ? Mat::Constant(1, 1, s[i].get<double>())
                                         : mat_of(s[i], static_cast<int>(d.size()), where + ".samples"));
    }
    return tabulated_potential("tabulated", d, std::vector<double>(g.data(), g.data() + g.size()), samples);
  }
  if (kind == "gradient-rd") throw ConfigError("gradient-rd may only appear at top level");
  const json params = spec.value("params", json::object());
  return builtin(kind, params, d, base_dir, where);
}

}  // namespace

RunConfig config_from_json(const json& doc, const std::string& base_dir, const std::string& source) {
  only_keys(doc, {"name", "n", "D", "shift", "potential", "grid", "tolerances"}, "problem file");
  RunConfig c;
  c.source = source;
  c.name = doc.value("name", std::filesystem::path(source).stem().string());
  if (!doc.contains("D")) throw ConfigError("missing 'D'");
  c.diffusion = vec_of(doc.at("D"), "D");
  c.n = doc.contains("n") ? doc.at("n").get<int>() : static_cast<int>(c.diffusion.size());
  if (c.n != c.diffusion.size()) throw ConfigError("'n' does not match the length of 'D'");
  c.shift = num_or(doc, "shift", 0.0, "problem file");
  if (!doc.contains("potential")) throw ConfigError("missing 'potential'");
  c.potential = doc.at("potential");

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    only_keys(g, {"x_min", "x_max", "n_points"}, "grid");
    c.grid.x_min = num_or(g, "x_min", c.grid.x_min, "grid");
    c.grid.x_max = num_or(g, "x_max", c.grid.x_max, "grid");
    c.grid.n_points = g.contains("n_points") ? g.at("n_points").get<int>() : c.grid.n_points;
    c.grid.given = true;
    if (!(c.grid.x_max > c.grid.x_min) || c.grid.n_points < 5) throw ConfigError("grid must have x_min < x_max, n_points >= 5");
  }
  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    only_keys(t, {"tol_s", "tol_rank", "tol_asym", "kernel_tol", "rtol", "atol", "h_max", "tol_lag", "h_fd"}, "tolerances");
    auto opt = [&](const char* k) -> std::optional<double> {
      if (!t.contains(k)) return std::nullopt;
      return num(t, k, "tolerances");
    };
    c.tolerances = {opt("tol_s"), opt("tol_rank"), opt("tol_asym"), opt("kernel_tol"), opt("rtol"),
                    opt("atol"),  opt("h_max"),    opt("tol_lag"),  opt("h_fd")};
  }

  const json& pot = c.potential;
  if (pot.is_object() && pot.value("kind", "") == "gradient-rd") {
    only_keys(pot, {"kind", "params"}, "potential");
    const json params = pot.value("params", json::object());
    only_keys(params, {"model", "k", "center"}, "potential.params");
    const std::string model = params.value("model", "scalar-pulse-system");
    if (model != "scalar-pulse-system") throw ConfigError("unknown gradient-rd model '" + model + "'");
    c.pulse = scalar_pulse_system(c.diffusion, num_or(params, "k", 1.0, "potential.params"),
                                  num_or(params, "center", 0.0, "potential.params"));
    c.pulse->name = c.name;
    // the operator is built by the commands (steady-state and hypothesis checks may fail)
    return c;
  }
  Problem p = build_potential(pot, c.diffusion, base_dir, "potential");
  if (c.shift != 0.0) {
    p = Problem::make(p.name(), p.diffusion(), p.raw_potential(), p.limit(Side::Minus), p.limit(Side::Plus), c.shift);
  }
  c.problem = std::move(p);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  const std::string base = std::filesystem::path(path).parent_path().string();
  json doc;
  if (std::filesystem::path(path).extension() == ".json") {
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
  } else {
    try {
      const toml::table tbl = toml::parse(in, path);
      std::ostringstream os;
      os << toml::json_formatter{tbl};
      doc = json::parse(os.str());
    } catch (const toml::parse_error& e) {
      std::ostringstream os;
      os << "TOML parse error at " << e.source().begin << ": " << e.description();
      throw ConfigError(os.str());
    }
  }
  try {
    return config_from_json(doc, base, path);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed problem file: ") + e.what());
  }
}

}  // namespace maslov::cli
