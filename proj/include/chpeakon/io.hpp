#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chpeakon/errors.hpp"
#include "chpeakon/hamiltonian_dynamics.hpp"
#include "chpeakon/peakon_field.hpp"
#include "chpeakon/transport_metric.hpp"

namespace chpeakon::io {

using Json = nlohmann::json;

/// 17 significant digits, enough to round-trip a double.
inline std::string format(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline Json to_json(const MultipeakonState& s) {
  Json peakons = Json::array();
  for (const auto& pk : s.peakons) peakons.push_back({{"q", pk.q}, {"p", pk.p}});
  return {{"t", s.t}, {"peakons", std::move(peakons)}};
}

inline MultipeakonState state_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("peakons") || !j["peakons"].is_array()) {
    throw ConfigError("a state needs a \"peakons\" array");
  }
  MultipeakonState s;
  if (j.contains("t")) {
    if (!j["t"].is_number()) throw ConfigError("state field \"t\" must be a number");
    s.t = j["t"].get<double>();
  }
  for (const auto& pk : j["peakons"]) {
    if (!pk.is_object() || !pk.contains("q") || !pk.contains("p") || !pk["q"].is_number() || !pk["p"].is_number()) {
      throw ConfigError("each peakon needs numeric \"q\" and \"p\"");
    }
    s.peakons.push_back({pk["q"].get<double>(), pk["p"].get<double>()});
  }
  try {
    s.validate();
  } catch (const InvalidState& e) {
    throw ConfigError(std::string("invalid state: ") + e.what());
  }
  return s;
}

inline Json to_json(const TransportPlan& plan) {
  Json knots = Json::array();
  for (const auto& [x, y] : plan.knots) knots.push_back({x, y});
  return {{"knots", std::move(knots)}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Inline JSON when the text starts with '{', otherwise a file path.
inline Json json_argument(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("argument is not valid JSON: ") + e.what());
    }
  }
  return read_json_file(text);
}

/// Initial datum: an explicit state or a profile approximated to `eps`.
struct InitialData {
  std::optional<MultipeakonState> state;
  std::string profile;  ///< built-in name or path to an (x, f, f_x) CSV table
  double eps = 0.0;
  double rate = 1.0;    ///< extrapolation rate for tables
};

struct ScenarioConfig {
  InitialData initial_u;
  std::optional<InitialData> initial_v;
  double alpha = 0.5;
  double t_end = 0.0;
  double sample_dt = 0.0;
  IntegratorSettings integrator;
  std::size_t metric_budget = 8;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string outputs = "out";
  bool perturb_ties = false;  ///< shift the first crest by 1e-9 before simulating
};

namespace detail {

inline void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
  }
}

inline double number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing \"" + std::string(key) + "\" in " + where);
  if (!j[key].is_number()) throw ConfigError("\"" + std::string(key) + "\" in " + where + " must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ConfigError("\"" + std::string(key) + "\" in " + where + " must be finite");
  return v;
}

inline double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

inline std::uint64_t count(const Json& j, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
    throw ConfigError("\"" + std::string(key) + "\" in " + where + " must be a non-negative integer");
  }
  return j[key].get<std::uint64_t>();
}

inline InitialData initial_data(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  InitialData d;
  if (j.contains("peakons")) {
    only_keys(j, {"t", "peakons"}, where);
    d.state = state_from_json(j);
    return d;
  }
  only_keys(j, {"profile", "eps", "rate"}, where);
  if (!j.contains("profile") || !j["profile"].is_string()) {
    throw ConfigError(where + " needs either \"peakons\" or a \"profile\" string");
  }
  d.profile = j["profile"].get<std::string>();
  d.eps = number(j, "eps", where);
  d.rate = number_or(j, "rate", 1.0, where);
  if (!(d.eps > 0.0)) throw ConfigError("\"eps\" in " + where + " must be positive");
  if (!(d.rate > 0.0)) throw ConfigError("\"rate\" in " + where + " must be positive");
  return d;
}

}  // namespace detail

/// Parses and validates a scenario; every error is a ConfigError.
inline ScenarioConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  detail::only_keys(j,
                    {"initial_u", "initial_v", "alpha", "t_end", "sample_dt", "integrator", "metric_budget", "seed",
                     "threads", "outputs", "perturb_ties"},
                    "config");
  ScenarioConfig c;
  if (!j.contains("initial_u")) throw ConfigError("missing \"initial_u\" in config");
  c.initial_u = detail::initial_data(j["initial_u"], "initial_u");
  if (j.contains("initial_v")) c.initial_v = detail::initial_data(j["initial_v"], "initial_v");
  c.alpha = detail::number(j, "alpha", "config");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("\"alpha\" must lie in (0, 1)");
  c.t_end = detail::number(j, "t_end", "config");
  if (!(c.t_end > 0.0)) throw ConfigError("\"t_end\" must be positive");
  c.sample_dt = detail::number(j, "sample_dt", "config");
  if (!(c.sample_dt > 0.0)) throw ConfigError("\"sample_dt\" must be positive");
  if (j.contains("integrator")) {
    const auto& ij = j["integrator"];
    if (!ij.is_object()) throw ConfigError("\"integrator\" must be an object");
    detail::only_keys(ij, {"rel_tol", "abs_tol", "max_step", "handoff_gap", "strength_blowup"}, "integrator");
    auto& s = c.integrator;
    s.rel_tol = detail::number_or(ij, "rel_tol", s.rel_tol, "integrator");
    s.abs_tol = detail::number_or(ij, "abs_tol", s.abs_tol, "integrator");
    s.max_step = detail::number_or(ij, "max_step", s.max_step, "integrator");
    s.handoff_gap = detail::number_or(ij, "handoff_gap", s.handoff_gap, "integrator");
    s.strength_blowup = detail::number_or(ij, "strength_blowup", s.strength_blowup, "integrator");
  }
  c.integrator.validate();
  c.metric_budget = detail::count(j, "metric_budget", c.metric_budget, "config");
  c.seed = detail::count(j, "seed", c.seed, "config");
  c.threads = static_cast<unsigned>(detail::count(j, "threads", c.threads, "config"));
  if (c.threads == 0) throw ConfigError("\"threads\" must be at least 1");
  if (j.contains("outputs")) {
    if (!j["outputs"].is_string()) throw ConfigError("\"outputs\" must be a directory path string");
    c.outputs = j["outputs"].get<std::string>();
  }
  if (j.contains("perturb_ties")) {
    if (!j["perturb_ties"].is_boolean()) throw ConfigError("\"perturb_ties\" must be true or false");
    c.perturb_ties = j["perturb_ties"].get<bool>();
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

/// Minimal CSV writer: a header row, then rows of numbers at 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format(values[i]);
    out_ << '\n';
  }

  /// A row whose leading columns are text.
  void row(const std::vector<std::string>& text, const std::vector<double>& values) {
    std::size_t i = 0;
    for (const auto& s : text) out_ << (i++ ? "," : "") << s;
    for (double v : values) out_ << (i++ ? "," : "") << format(v);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace chpeakon::io
