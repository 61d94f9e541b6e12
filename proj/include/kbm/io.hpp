#pragma once

// Config parsing (strict JSON), atomic artifact writing, digests, CSV with
// fixed 17-significant-digit floats, and the golden comparison machinery.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbm/block.hpp"
#include "kbm/errors.hpp"
#include "kbm/sweep.hpp"

namespace kbm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "kbmlab 1.0.0";

// ------------------------------------------------------------------ digest

inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string digest_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DegenerateInput("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// temp + rename so partially written artifacts never appear
inline void atomic_write(const std::filesystem::path& p,
                         const std::string& bytes) {
  std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DegenerateInput("cannot write " + tmp.string());
    os << bytes;
  }
  std::filesystem::rename(tmp, p);
}

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// -------------------------------------------------------------- run config

struct EpsGrid {
  double max = 0.2, min = 1e-3, ratio = 0.8;
};

struct NRule {
  bool fixed = false;
  int value = 0;  // fixed truncation when fixed == true
  int resolve(double eps) const {
    return fixed ? value : default_mode_truncation(eps);
  }
};

struct RunConfig {
  std::string subcommand;
  std::string model = "flat_torus";
  std::vector<double> profile_poly;
  std::optional<double> eps;
  std::optional<EpsGrid> eps_grid;
  std::vector<Momentum> k_list;
  NRule n_rule;
  std::optional<Window> window;
  uint64_t seed = 1;
  std::string out_dir = "out";
  // monte carlo
  std::optional<double> dt, horizon;
  std::optional<int> paths;
  std::string observable_f, observable_g, observable_g2;
  // projector
  std::optional<Complex> lambda0;
  std::optional<double> radius;
  int quadrature = 64;
  // probe
  int probe_points = 9;
  // verification
  int trials = 50;
  // tolerance overrides, all positive
  std::map<std::string, double> tolerances;

  double tol(const std::string& name, double fallback) const {
    auto it = tolerances.find(name);
    return it == tolerances.end() ? fallback : it->second;
  }
};

struct ConfigParse {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

namespace detail_io {

inline void reject_unknown(const Json& j, const std::vector<std::string>& keys,
                           const std::string& where,
                           std::vector<std::string>& errors) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto& k : keys)
      if (it.key() == k) known = true;
    if (!known)
      errors.push_back("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail_io

inline ConfigParse parse_config(const std::string& text) {
  ConfigParse out;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    out.errors.push_back(std::string("malformed JSON: ") + e.what());
    return out;
  }
  if (!j.is_object()) {
    out.errors.push_back("config root must be an object");
    return out;
  }
  auto& errors = out.errors;
  detail_io::reject_unknown(
      j,
      {"schema", "subcommand", "model", "profile_poly", "eps", "eps_grid",
       "k", "n_rule", "window", "seed", "out_dir", "dt", "T", "paths",
       "observable_f", "observable_g", "observable_g2", "lambda0", "radius",
       "quadrature", "probe_points", "trials", "tolerances"},
      "config", errors);
  RunConfig cfg;
  if (!j.contains("schema") || !j["schema"].is_number_integer() ||
      j["schema"].get<int>() != 1)
    errors.push_back("field 'schema' must be the integer 1");
  if (j.contains("subcommand") && j["subcommand"].is_string())
    cfg.subcommand = j["subcommand"].get<std::string>();
  if (j.contains("model")) {
    if (!j["model"].is_string())
      errors.push_back("field 'model' must be a string");
    else {
      cfg.model = j["model"].get<std::string>();
      if (cfg.model != "flat_torus" && cfg.model != "sphere" &&
          cfg.model != "revolution" && cfg.model != "revolution_poly")
        errors.push_back("field 'model': unknown model '" + cfg.model + "'");
    }
  }
  if (j.contains("profile_poly")) {
    if (!j["profile_poly"].is_array())
      errors.push_back("field 'profile_poly' must be an array of numbers");
    else
      for (auto& v : j["profile_poly"]) cfg.profile_poly.push_back(v.get<double>());
  }
  if (j.contains("eps")) {
    if (!j["eps"].is_number() || j["eps"].get<double>() < 0)
      errors.push_back("field 'eps' must be a number >= 0");
    else
      cfg.eps = j["eps"].get<double>();
  }
  if (j.contains("eps_grid")) {
    auto& g = j["eps_grid"];
    if (!g.is_object()) {
      errors.push_back("field 'eps_grid' must be an object");
    } else {
      detail_io::reject_unknown(g, {"max", "min", "ratio"}, "eps_grid", errors);
      EpsGrid eg;
      if (g.contains("max")) eg.max = g["max"].get<double>();
      if (g.contains("min")) eg.min = g["min"].get<double>();
      if (g.contains("ratio")) eg.ratio = g["ratio"].get<double>();
      if (!(eg.min > 0)) errors.push_back("field 'eps_grid.min' must be > 0");
      if (!(eg.max > eg.min))
        errors.push_back("field 'eps_grid.max' must exceed eps_grid.min");
      if (!(eg.ratio > 0.0 && eg.ratio < 1.0))
        errors.push_back("field 'eps_grid.ratio' must lie in (0,1)");
      cfg.eps_grid = eg;
    }
  }
  if (j.contains("k")) {
    if (!j["k"].is_array())
      errors.push_back("field 'k' must be an array of [k1,k2] pairs");
    else
      for (auto& kk : j["k"]) {
        if (!kk.is_array() || kk.size() != 2)
          errors.push_back("field 'k': entries must be [k1,k2] pairs");
        else
          cfg.k_list.push_back({kk[0].get<int>(), kk[1].get<int>()});
      }
  }
  if (j.contains("n_rule")) {
    auto& n = j["n_rule"];
    if (!n.is_object())
      errors.push_back("field 'n_rule' must be an object");
    else {
      detail_io::reject_unknown(n, {"mode", "value"}, "n_rule", errors);
      std::string mode = n.value("mode", "default");
      if (mode == "fixed") {
        cfg.n_rule.fixed = true;
        cfg.n_rule.value = n.value("value", 0);
        if (cfg.n_rule.value < 1)
          errors.push_back("field 'n_rule.value' must be >= 1 for fixed mode");
      } else if (mode != "default") {
        errors.push_back("field 'n_rule.mode' must be 'default' or 'fixed'");
      }
    }
  }
  if (j.contains("window")) {
    auto& w = j["window"];
    if (!w.is_object())
      errors.push_back("field 'window' must be an object");
    else {
      detail_io::reject_unknown(w, {"re_min", "re_max", "im_min", "im_max"},
                                "window", errors);
      Window win;
      win.re_min = w.value("re_min", -1e300);
      win.re_max = w.value("re_max", 1e300);
      win.im_min = w.value("im_min", -1e300);
      win.im_max = w.value("im_max", 1e300);
      if (win.re_min >= win.re_max || win.im_min >= win.im_max)
        errors.push_back("field 'window' must have positive extent");
      cfg.window = win;
    }
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("dt")) {
    cfg.dt = j["dt"].get<double>();
    if (!(*cfg.dt > 0)) errors.push_back("field 'dt' must be > 0");
  }
  if (j.contains("T")) {
    cfg.horizon = j["T"].get<double>();
    if (!(*cfg.horizon > 0)) errors.push_back("field 'T' must be > 0");
  }
  if (j.contains("paths")) {
    cfg.paths = j["paths"].get<int>();
    if (*cfg.paths < 100) errors.push_back("field 'paths' must be >= 100");
  }
  if (j.contains("observable_f"))
    cfg.observable_f = j["observable_f"].get<std::string>();
  if (j.contains("observable_g"))
    cfg.observable_g = j["observable_g"].get<std::string>();
  if (j.contains("observable_g2"))
    cfg.observable_g2 = j["observable_g2"].get<std::string>();
  if (j.contains("lambda0")) {
    auto& l = j["lambda0"];
    if (!l.is_array() || l.size() != 2)
      errors.push_back("field 'lambda0' must be [re, im]");
    else
      cfg.lambda0 = Complex(l[0].get<double>(), l[1].get<double>());
  }
  if (j.contains("radius")) {
    cfg.radius = j["radius"].get<double>();
    if (!(*cfg.radius > 0)) errors.push_back("field 'radius' must be > 0");
  }
  if (j.contains("quadrature")) {
    cfg.quadrature = j["quadrature"].get<int>();
    if (cfg.quadrature < 4) errors.push_back("field 'quadrature' must be >= 4");
  }
  if (j.contains("probe_points")) {
    cfg.probe_points = j["probe_points"].get<int>();
    if (cfg.probe_points < 4)
      errors.push_back("field 'probe_points' must be >= 4");
  }
  if (j.contains("trials")) {
    cfg.trials = j["trials"].get<int>();
    if (cfg.trials < 1) errors.push_back("field 'trials' must be >= 1");
  }
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object())
      errors.push_back("field 'tolerances' must be an object");
    else
      for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
        double v = it.value().get<double>();
        if (!(v > 0))
          errors.push_back("tolerance '" + it.key() + "' must be positive");
        cfg.tolerances[it.key()] = v;
      }
  }
  if (!errors.empty()) return out;
  out.config = std::move(cfg);
  return out;
}

inline Json serialize_config(const RunConfig& c) {
  Json j;
  j["schema"] = 1;
  j["subcommand"] = c.subcommand;
  j["model"] = c.model;
  if (!c.profile_poly.empty()) j["profile_poly"] = c.profile_poly;
  if (c.eps) j["eps"] = *c.eps;
  if (c.eps_grid)
    j["eps_grid"] = {{"max", c.eps_grid->max},
                     {"min", c.eps_grid->min},
                     {"ratio", c.eps_grid->ratio}};
  if (!c.k_list.empty()) {
    Json arr = Json::array();
    for (auto& k : c.k_list) arr.push_back({k.k1, k.k2});
    j["k"] = arr;
  }
  if (c.n_rule.fixed)
    j["n_rule"] = {{"mode", "fixed"}, {"value", c.n_rule.value}};
  else
    j["n_rule"] = {{"mode", "default"}};
  if (c.window)
    j["window"] = {{"re_min", c.window->re_min},
                   {"re_max", c.window->re_max},
                   {"im_min", c.window->im_min},
                   {"im_max", c.window->im_max}};
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  if (c.dt) j["dt"] = *c.dt;
  if (c.horizon) j["T"] = *c.horizon;
  if (c.paths) j["paths"] = *c.paths;
  if (!c.observable_f.empty()) j["observable_f"] = c.observable_f;
  if (!c.observable_g.empty()) j["observable_g"] = c.observable_g;
  if (!c.observable_g2.empty()) j["observable_g2"] = c.observable_g2;
  if (c.lambda0) j["lambda0"] = {c.lambda0->real(), c.lambda0->imag()};
  if (c.radius) j["radius"] = *c.radius;
  j["quadrature"] = c.quadrature;
  j["probe_points"] = c.probe_points;
  j["trials"] = c.trials;
  if (!c.tolerances.empty()) {
    Json t;
    for (auto& [k, v] : c.tolerances) t[k] = v;
    j["tolerances"] = t;
  }
  return j;
}

// --------------------------------------------------------------- CSV table

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string dump() const {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i)
      os << (i ? "," : "") << header[i];
    os << "\n";
    for (auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

  static CsvTable parse(const std::string& text) {
    CsvTable t;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (first) {
        t.header = cells;
        first = false;
      } else {
        t.rows.push_back(cells);
      }
    }
    return t;
  }
};

// -------------------------------------------------------------- golden diff

struct DiffEntry {
  std::string where;
  std::string detail;
};

struct DiffReport {
  std::vector<DiffEntry> entries;
  bool schema_drift = false;
  bool empty() const { return entries.empty() && !schema_drift; }
};

// per-column numeric comparison with absolute+relative tolerance; string and
// integer columns must match exactly
inline DiffReport golden_compare_csv(const std::string& got,
                                     const std::string& want, double abstol,
                                     double reltol) {
  DiffReport rep;
  auto a = CsvTable::parse(got), b = CsvTable::parse(want);
  if (a.header != b.header) {
    rep.schema_drift = true;
    rep.entries.push_back({"header", "column names differ"});
    return rep;
  }
  if (a.rows.size() != b.rows.size()) {
    rep.schema_drift = true;
    rep.entries.push_back({"rows", "row counts differ: " +
                                       std::to_string(a.rows.size()) + " vs " +
                                       std::to_string(b.rows.size())});
    return rep;
  }
  for (size_t r = 0; r < a.rows.size(); ++r) {
    if (a.rows[r].size() != b.rows[r].size()) {
      rep.schema_drift = true;
      rep.entries.push_back({"row " + std::to_string(r), "cell counts differ"});
      return rep;
    }
    for (size_t c = 0; c < a.rows[r].size(); ++c) {
      const std::string &xa = a.rows[r][c], &xb = b.rows[r][c];
      if (xa == xb) continue;
      char* enda = nullptr;
      char* endb = nullptr;
      double va = std::strtod(xa.c_str(), &enda);
      double vb = std::strtod(xb.c_str(), &endb);
      bool numa = enda && *enda == '\0' && !xa.empty();
      bool numb = endb && *endb == '\0' && !xb.empty();
      bool int_a = xa.find_first_not_of("-0123456789") == std::string::npos;
      bool int_b = xb.find_first_not_of("-0123456789") == std::string::npos;
      std::string where = a.header[c] + "[" + std::to_string(r) + "]";
      if (!numa || !numb || (int_a && int_b)) {
        rep.entries.push_back({where, xa + " != " + xb + " (exact column)"});
        continue;
      }
      double diff = std::abs(va - vb);
      if (diff > abstol + reltol * std::abs(vb))
        rep.entries.push_back(
            {where, fmt17(va) + " vs " + fmt17(vb) + " (|diff|=" + fmt17(diff) + ")"});
    }
  }
  return rep;
}

// ----------------------------------------------------------------- manifest

struct ManifestWriter {
  Json manifest;
  std::filesystem::path dir;

  explicit ManifestWriter(const std::filesystem::path& out_dir,
                          const RunConfig& cfg)
      : dir(out_dir) {
    manifest["schema"] = 1;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = serialize_config(cfg);
    manifest["config_digest"] = digest_hex(serialize_config(cfg).dump(2));
    manifest["outputs"] = Json::array();
    manifest["checks"] = Json::array();
    manifest["started_unix"] = double(std::time(nullptr));
  }

  void add_artifact(const std::string& name, const std::string& bytes) {
    atomic_write(dir / name, bytes);
    manifest["outputs"].push_back(
        {{"path", name}, {"digest", digest_hex(bytes)}});
  }

  void add_check(const std::string& name, bool pass, double value,
                 double threshold) {
    manifest["checks"].push_back({{"name", name},
                                  {"pass", pass},
                                  {"value", value},
                                  {"threshold", threshold}});
  }

  bool all_pass() const {
    for (auto& c : manifest["checks"])
      if (!c["pass"].get<bool>()) return false;
    return true;
  }

  void finalize() {
    manifest["finished_unix"] = double(std::time(nullptr));
    manifest["pass"] = all_pass();
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
  }

  // verify every listed digest against the files on disk
  bool verify_digests() const {
    for (auto& o : manifest["outputs"]) {
      auto bytes = read_file(dir / o["path"].get<std::string>());
      if (digest_hex(bytes) != o["digest"].get<std::string>()) return false;
    }
    return true;
  }
};

}  // namespace kbm
