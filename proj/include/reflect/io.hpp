#pragma once
// Flat key=value run configuration with canonical serialization and a stable
// 64-bit content hash, plus deterministic CSV/text emission and read-back.
// Every emitted file starts with a column-naming header and the hash of the
// configuration that produced it.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "reflect/errors.hpp"
#include "reflect/iteration.hpp"
#include "reflect/verify.hpp"

namespace reflect {

struct RunConfig {
  // Gas and incident shock.
  double gamma = 2.0;
  double rho0 = 1.0;
  double rho1 = 2.0;

  // Wedge: sigma > 0 selects theta_w = pi/2 - sigma; setting theta_w (in
  // radians) uses it literally.  The two keys are mutually exclusive in a
  // config file.
  double sigma = 0.01;
  double theta_w = 0.0;

  // Numerics.
  int resolution = 64;
  double epsilon = 0.0;  // 0: 0.1 * (c2bar - |xibar|)
  double omega = 0.7;
  double tol_fb = 0.0;  // 0: 1e-8 * c2bar
  int max_outer = 200;
  double sigma_max = 0.15;
  double delta0 = 0.1;
  int delta_levels = 11;
  double picard_tol = 1e-9;
  int picard_max = 60;
  int picard_relax_after = 20;
  double picard_relax = 0.5;

  // Emission.
  std::string out_dir = "out";
  bool emit_psi_field = true;
  bool emit_global_field = true;
  bool emit_polyline = true;
  int global_nx = 96;
  int global_ny = 64;
  // All four zero: box chosen from the state geometry.
  double global_xi_min = 0, global_xi_max = 0;
  double global_eta_min = 0, global_eta_max = 0;

  GasSetup<double> gas() const { return incident_shock(gamma, rho0, rho1); }

  double wedge_angle() const {
    return theta_w != 0.0 ? theta_w : std::numbers::pi / 2 - sigma;
  }

  IterationConfig iteration() const {
    IterationConfig it;
    it.resolution = resolution;
    it.epsilon = epsilon;
    it.omega = omega;
    it.tol_fb = tol_fb;
    it.max_outer = max_outer;
    it.sigma_max = sigma_max;
    it.delta_schedule = make_delta_schedule(delta0, delta_levels);
    it.picard.tol = picard_tol;
    it.picard.max_iterations = picard_max;
    it.picard.relax_after = picard_relax_after;
    it.picard.relax = picard_relax;
    return it;
  }
};

namespace detail {

// Shortest decimal form that parses back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline double to_double(const std::string& key, const std::string& val) {
  const char* p = val.c_str();
  char* end = nullptr;
  const double v = std::strtod(p, &end);
  if (end == p || *end != '\0') {
    throw ParseError("config: bad numeric value for " + key + ": " + val);
  }
  return v;
}

inline int to_int(const std::string& key, const std::string& val) {
  const double v = to_double(key, val);
  const int n = static_cast<int>(v);
  if (n != v) throw ParseError("config: expected integer for " + key);
  return n;
}

inline bool to_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1") return true;
  if (val == "false" || val == "0") return false;
  throw ParseError("config: expected true/false for " + key);
}

}  // namespace detail

// Canonical form: fixed key order, shortest round-trip numbers, exactly one
// of sigma / theta_w.  Hashing and the parse-serialize identity both run
// over this text.
inline std::string serialize(const RunConfig& c) {
  using detail::fmt;
  std::string s;
  auto put = [&s](std::string_view k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  put("gamma", fmt(c.gamma));
  put("rho0", fmt(c.rho0));
  put("rho1", fmt(c.rho1));
  if (c.theta_w != 0.0) {
    put("theta_w", fmt(c.theta_w));
  } else {
    put("sigma", fmt(c.sigma));
  }
  put("resolution", fmt(c.resolution));
  put("epsilon", fmt(c.epsilon));
  put("omega", fmt(c.omega));
  put("tol_fb", fmt(c.tol_fb));
  put("max_outer", fmt(c.max_outer));
  put("sigma_max", fmt(c.sigma_max));
  put("delta0", fmt(c.delta0));
  put("delta_levels", fmt(c.delta_levels));
  put("picard_tol", fmt(c.picard_tol));
  put("picard_max", fmt(c.picard_max));
  put("picard_relax_after", fmt(c.picard_relax_after));
  put("picard_relax", fmt(c.picard_relax));
  put("out_dir", c.out_dir);
  put("emit_psi_field", fmt(c.emit_psi_field));
  put("emit_global_field", fmt(c.emit_global_field));
  put("emit_polyline", fmt(c.emit_polyline));
  put("global_nx", fmt(c.global_nx));
  put("global_ny", fmt(c.global_ny));
  put("global_xi_min", fmt(c.global_xi_min));
  put("global_xi_max", fmt(c.global_xi_max));
  put("global_eta_min", fmt(c.global_eta_min));
  put("global_eta_max", fmt(c.global_eta_max));
  return s;
}

inline RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected key=value");
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string val = detail::trim(stripped.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw ParseError("config line " + std::to_string(lineno) +
                       ": empty key or value");
    }
    if (!kv.emplace(key, val).second) {
      throw ParseError("config: duplicate key " + key);
    }
  }
  if (kv.count("sigma") && kv.count("theta_w")) {
    throw ParseError("config: set either sigma or theta_w, not both");
  }

  RunConfig c;
  for (const auto& [key, val] : kv) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    if (key == "gamma") c.gamma = to_double(key, val);
    else if (key == "rho0") c.rho0 = to_double(key, val);
    else if (key == "rho1") c.rho1 = to_double(key, val);
    else if (key == "sigma") { c.sigma = to_double(key, val); c.theta_w = 0.0; }
    else if (key == "theta_w") c.theta_w = to_double(key, val);
    else if (key == "resolution") c.resolution = to_int(key, val);
    else if (key == "epsilon") c.epsilon = to_double(key, val);
    else if (key == "omega") c.omega = to_double(key, val);
    else if (key == "tol_fb") c.tol_fb = to_double(key, val);
    else if (key == "max_outer") c.max_outer = to_int(key, val);
    else if (key == "sigma_max") c.sigma_max = to_double(key, val);
    else if (key == "delta0") c.delta0 = to_double(key, val);
    else if (key == "delta_levels") c.delta_levels = to_int(key, val);
    else if (key == "picard_tol") c.picard_tol = to_double(key, val);
    else if (key == "picard_max") c.picard_max = to_int(key, val);
    else if (key == "picard_relax_after") c.picard_relax_after = to_int(key, val);
    else if (key == "picard_relax") c.picard_relax = to_double(key, val);
    else if (key == "out_dir") c.out_dir = val;
    else if (key == "emit_psi_field") c.emit_psi_field = to_bool(key, val);
    else if (key == "emit_global_field") c.emit_global_field = to_bool(key, val);
    else if (key == "emit_polyline") c.emit_polyline = to_bool(key, val);
    else if (key == "global_nx") c.global_nx = to_int(key, val);
    else if (key == "global_ny") c.global_ny = to_int(key, val);
    else if (key == "global_xi_min") c.global_xi_min = to_double(key, val);
    else if (key == "global_xi_max") c.global_xi_max = to_double(key, val);
    else if (key == "global_eta_min") c.global_eta_min = to_double(key, val);
    else if (key == "global_eta_max") c.global_eta_max = to_double(key, val);
    else throw ParseError("config: unknown key " + key);
  }
  return c;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t config_hash(const RunConfig& c) {
  return fnv1a64(serialize(c));
}

// ---------------------------------------------------------------------------
// Emission.  Every writer builds the full file in memory with locale-free
// formatting, so identical inputs give identical bytes.

namespace detail {

inline std::string csv_header(std::string_view columns, std::uint64_t hash) {
  std::string s = "# columns: ";
  s += columns;
  s += "\n# config_hash=";
  s += hash_hex(hash);
  s += '\n';
  return s;
}

}  // namespace detail

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open for writing: " + path.string());
  f << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Solved patch: node indices, shifted coordinates, sonic-frame coordinates,
// and the correction to the outer state.
inline std::string field_csv(const ReflectionDomain& dom, const ArrayXXd& psi,
                             std::uint64_t hash) {
  std::string s = detail::csv_header("i,j,xi,eta,x,y,psi", hash);
  using detail::fmt;
  for (int i = 0; i <= dom.na; ++i) {
    for (int j = 0; j <= dom.nb; ++j) {
      s += fmt(i);
      s += ',';
      s += fmt(j);
      s += ',';
      s += fmt(dom.xi(i, j));
      s += ',';
      s += fmt(dom.eta(i, j));
      s += ',';
      s += fmt(dom.x(i, j));
      s += ',';
      s += fmt(dom.y(i, j));
      s += ',';
      s += fmt(psi(i, j));
      s += '\n';
    }
  }
  return s;
}

// Half-plane sample: physical coordinates, sonic-frame coordinates of the
// shifted point, the pseudo-potential, and its deviation from the uniform
// reflected state.  Wedge-interior points carry nan.
inline std::string global_csv(const GlobalField& g, const StateTwo<double>& st,
                              std::uint64_t hash) {
  std::string s = detail::csv_header("i,j,xi,eta,x,y,psi,phi", hash);
  using detail::fmt;
  const int nx = static_cast<int>(g.xi.size()) - 1;
  const int ny = static_cast<int>(g.eta.size()) - 1;
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      const double xu = g.xi[i], yu = g.eta[j];
      const Vec2<double> sh{xu - st.u2, yu - st.v2};
      const double r = sh.norm();
      const double x = st.c2 - r;
      const double y = std::atan2(sh[1], sh[0]) - st.theta_w;
      const double phi = g.phi(i, j);
      const double psi =
          std::isnan(phi) ? phi
                          : phi - background_potentials(st, sh).phi2;
      s += fmt(i);
      s += ',';
      s += fmt(j);
      s += ',';
      s += fmt(xu);
      s += ',';
      s += fmt(yu);
      s += ',';
      s += fmt(x);
      s += ',';
      s += fmt(y);
      s += ',';
      s += fmt(psi);
      s += ',';
      s += fmt(phi);
      s += '\n';
    }
  }
  return s;
}

inline std::string polyline_csv(const std::vector<Vec2<double>>& pts,
                                std::uint64_t hash) {
  std::string s = detail::csv_header("eta,xi", hash);
  for (const auto& p : pts) {
    s += detail::fmt(p[1]);
    s += ',';
    s += detail::fmt(p[0]);
    s += '\n';
  }
  return s;
}

inline std::string curve_csv(const FreeBoundaryCurve& fb, std::uint64_t hash) {
  std::string s = detail::csv_header("eta,xi", hash);
  const int m = static_cast<int>(fb.samples_eta().size());
  for (int k = 0; k < m; ++k) {
    s += detail::fmt(fb.samples_eta()[k]);
    s += ',';
    s += detail::fmt(fb.samples_val()[k]);
    s += '\n';
  }
  return s;
}

// Sigma study rows.
inline std::string study_csv(const LimitStudy& study, std::uint64_t hash) {
  std::string s = detail::csv_header(
      "sigma,theta_w,sup_f_deviation,w11_distance,endpoint_error,"
      "outer_iterations,converged",
      hash);
  using detail::fmt;
  for (const auto& r : study.rows) {
    s += fmt(r.sigma);
    s += ',';
    s += fmt(r.theta_w);
    s += ',';
    s += fmt(r.sup_f_deviation);
    s += ',';
    s += fmt(r.w11_distance);
    s += ',';
    s += fmt(r.endpoint_error);
    s += ',';
    s += fmt(r.outer_iterations);
    s += ',';
    s += (r.converged ? '1' : '0');
    s += '\n';
  }
  return s;
}

// Run summary: key=value lines, fully determined by the configuration.
inline std::string summary_text(const RunConfig& cfg,
                                const ReflectionSolution& sol,
                                const VerificationReport& rep) {
  using detail::fmt;
  std::string s;
  auto put = [&s](std::string_view k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  const auto& st = sol.st;
  put("config_hash", hash_hex(config_hash(cfg)));
  put("gamma", fmt(st.gas.gamma));
  put("rho0", fmt(st.gas.rho0));
  put("rho1", fmt(st.gas.rho1));
  put("theta_w", fmt(st.theta_w));
  put("sigma", fmt(st.sigma));
  put("rho2bar", fmt(st.nr.rho2bar));
  put("xibar", fmt(st.nr.xibar));
  put("c2bar", fmt(st.nr.c2bar));
  put("rho2", fmt(st.rho2));
  put("theta_s", fmt(st.theta_s));
  put("xitilde", fmt(st.xitilde));
  put("u2", fmt(st.u2));
  put("v2", fmt(st.v2));
  put("c2", fmt(st.c2));
  put("xihat", fmt(st.xihat));
  put("converged", fmt(sol.converged));
  put("outer_iterations", fmt(sol.outer_iterations));
  put("fb_residual", fmt(sol.fb_residual));
  put("sup_f_minus_l", fmt(sol.sup_f_minus_l));
  put("shock_trace_gap", fmt(sol.shock_trace_gap));
  put("norm_parabolic", fmt(sol.norms.parabolic));
  put("norm_weighted", fmt(sol.norms.weighted));
  put("barrier_sigma", fmt(sol.barrier_sigma));
  put("barrier_sonic", fmt(sol.barrier_sonic));
  int total_picard = 0;
  bool stalled = false;
  for (const auto& r : sol.reports) {
    total_picard += r.total_picard;
    stalled = stalled || r.delta_zero_stalled;
  }
  put("total_picard", fmt(total_picard));
  put("delta_zero_stalled", fmt(stalled));
  put("verification_pass", fmt(rep.all_pass()));
  for (const auto& c : rep.checks) {
    put("check_" + c.name, c.pass ? "pass" : "fail");
    put("check_" + c.name + "_measured", fmt(c.measured));
    put("check_" + c.name + "_threshold", fmt(c.threshold));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Read-back for re-verification.

struct CsvTable {
  std::vector<std::string> columns;
  std::string config_hash;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    if (stripped[0] == '#') {
      static constexpr std::string_view col_tag = "# columns: ";
      static constexpr std::string_view hash_tag = "# config_hash=";
      if (stripped.rfind(col_tag, 0) == 0) {
        std::istringstream cols(stripped.substr(col_tag.size()));
        std::string c;
        while (std::getline(cols, c, ',')) t.columns.push_back(detail::trim(c));
      } else if (stripped.rfind(hash_tag, 0) == 0) {
        t.config_hash = stripped.substr(hash_tag.size());
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream cells(stripped);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      row.push_back(detail::to_double(path.string(), detail::trim(cell)));
    }
    if (!t.columns.empty() && row.size() != t.columns.size()) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) +
                       ": expected " + std::to_string(t.columns.size()) +
                       " cells");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) {
    throw ParseError(path.string() + ": missing '# columns:' header");
  }
  return t;
}

}  // namespace reflect
