#ifndef DAUCTION_IO_HPP
#define DAUCTION_IO_HPP

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dauction/scenario.hpp"
#include "json.hpp"

namespace dauction::io {

using json = nlohmann::json;

inline constexpr std::string_view kSchemaVersion = "1";

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

inline void only_keys(const json& j, const std::string& path,
                      std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw InputError(path + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw InputError(path + "." + key + ": unknown field");
  }
}

inline const json& field(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw InputError(path + "." + key + ": missing field");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(path + ": must be finite");
  return v;
}

inline std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw InputError(path + ": expected a string");
  return j.get<std::string>();
}

// Rethrows construction errors from the spec factories with a location.
template <typename F>
auto at_path(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace detail

inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ":" + detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                     ": malformed JSON (" + e.what() + ")");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline PayoffSpec payoff_from_json(const json& j, const std::string& path) {
  detail::only_keys(j, path, {"family", "params"});
  const std::string family = detail::text(detail::field(j, path, "family"), path + ".family");
  const json& params = detail::field(j, path, "params");
  const std::string ppath = path + ".params";
  if (family == "linear") {
    detail::only_keys(params, ppath, {"c"});
    const double c = detail::number(detail::field(params, ppath, "c"), ppath + ".c");
    return detail::at_path(ppath, [&] { return PayoffSpec::linear(c); });
  }
  if (family == "shifted_log") {
    detail::only_keys(params, ppath, {"b"});
    const double b = detail::number(detail::field(params, ppath, "b"), ppath + ".b");
    return detail::at_path(ppath, [&] { return PayoffSpec::shifted_log(b); });
  }
  throw InputError(path + ".family: unknown payoff family '" + family + "'");
}

inline CostSpec cost_from_json(const json& j, const std::string& path,
                               std::initializer_list<std::string_view> allowed = {"family",
                                                                                  "params"}) {
  detail::only_keys(j, path, allowed);
  const std::string family = detail::text(detail::field(j, path, "family"), path + ".family");
  const json& params = detail::field(j, path, "params");
  const std::string ppath = path + ".params";
  if (family == "polynomial") {
    detail::only_keys(params, ppath, {"b", "n"});
    const double b = detail::number(detail::field(params, ppath, "b"), ppath + ".b");
    const json& n = detail::field(params, ppath, "n");
    if (!n.is_number_integer()) throw InputError(ppath + ".n: expected an integer");
    return detail::at_path(ppath, [&] { return CostSpec::polynomial(b, n.get<int>()); });
  }
  if (family == "piecewise_marginal") {
    detail::only_keys(params, ppath, {"breakpoints"});
    const json& bps = detail::field(params, ppath, "breakpoints");
    const std::string bpath = ppath + ".breakpoints";
    if (!bps.is_array()) throw InputError(bpath + ": expected an array");
    std::vector<Breakpoint> points;
    for (std::size_t i = 0; i < bps.size(); ++i) {
      const std::string ipath = bpath + "[" + std::to_string(i) + "]";
      if (!bps[i].is_array() || bps[i].size() != 2)
        throw InputError(ipath + ": expected [rate, marginal]");
      points.push_back({detail::number(bps[i][0], ipath + "[0]"),
                        detail::number(bps[i][1], ipath + "[1]")});
    }
    return detail::at_path(bpath, [&] { return CostSpec::piecewise_marginal(points); });
  }
  throw InputError(path + ".family: unknown cost family '" + family + "'");
}

inline void check_version(const json& j) {
  const std::string v = detail::text(detail::field(j, "$", "schema_version"), "$.schema_version");
  if (v != kSchemaVersion)
    throw InputError("$.schema_version: unsupported version '" + v + "' (expected '" +
                     std::string(kSchemaVersion) + "')");
}

inline Scenario scenario_from_json(const json& j) {
  detail::only_keys(j, "$", {"schema_version", "users", "links", "seed"});
  check_version(j);
  Scenario s;
  const json& users = detail::field(j, "$", "users");
  if (!users.is_array() || users.empty()) throw InputError("$.users: expected a nonempty array");
  for (std::size_t i = 0; i < users.size(); ++i)
    s.users.push_back(payoff_from_json(users[i], "$.users[" + std::to_string(i) + "]"));
  const json& links = detail::field(j, "$", "links");
  if (!links.is_array() || links.empty()) throw InputError("$.links: expected a nonempty array");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string path = "$.links[" + std::to_string(i) + "]";
    Link link{cost_from_json(links[i], path, {"family", "params", "capacity"})};
    const json& cap = detail::field(links[i], path, "capacity");
    if (cap.is_string()) {
      if (cap.get<std::string>() != "unbounded")
        throw InputError(path + ".capacity: expected a number or \"unbounded\"");
    } else {
      link.capacity = detail::number(cap, path + ".capacity");
      if (link.capacity < 0.0) throw InputError(path + ".capacity: must be nonnegative");
    }
    s.links.push_back(std::move(link));
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw InputError("$.seed: expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

inline json payoff_to_json(const PayoffSpec& u) {
  if (u.is_linear()) return {{"family", "linear"}, {"params", {{"c", u.parameter()}}}};
  return {{"family", "shifted_log"}, {"params", {{"b", u.parameter()}}}};
}

inline json cost_to_json(const CostSpec& v) {
  if (v.is_polynomial())
    return {{"family", "polynomial"}, {"params", {{"b", v.coefficient()}, {"n", v.degree()}}}};
  json bps = json::array();
  for (const auto& p : v.breakpoints()) bps.push_back({p.rate, p.marginal});
  return {{"family", "piecewise_marginal"}, {"params", {{"breakpoints", bps}}}};
}

inline json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["users"] = json::array();
  for (const auto& u : s.users) j["users"].push_back(payoff_to_json(u));
  j["links"] = json::array();
  for (const auto& l : s.links) {
    json link = cost_to_json(l.cost);
    if (l.bounded())
      link["capacity"] = l.capacity;
    else
      link["capacity"] = "unbounded";
    j["links"].push_back(link);
  }
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string canonical(const json& j) { return j.dump(2) + "\n"; }

inline std::string serialize_scenario(const Scenario& s) { return canonical(scenario_to_json(s)); }

inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<input>") {
  return scenario_from_json(parse_text(text, origin));
}

inline Scenario load_scenario(const std::string& path) {
  return parse_scenario(read_file(path), path);
}

/// A costs file holds {"schema_version", "costs": [...]}. A scenario file is
/// also accepted, in which case its link costs are used.
inline std::vector<CostSpec> parse_costs(const std::string& text,
                                         const std::string& origin = "<input>") {
  const json j = parse_text(text, origin);
  if (j.is_object() && !j.contains("costs")) {
    std::vector<CostSpec> out;
    for (const auto& l : scenario_from_json(j).links) out.push_back(l.cost);
    return out;
  }
  detail::only_keys(j, "$", {"schema_version", "costs"});
  check_version(j);
  const json& costs = j.at("costs");
  if (!costs.is_array() || costs.empty()) throw InputError("$.costs: expected a nonempty array");
  std::vector<CostSpec> out;
  for (std::size_t i = 0; i < costs.size(); ++i)
    out.push_back(cost_from_json(costs[i], "$.costs[" + std::to_string(i) + "]"));
  return out;
}

inline std::string serialize_costs(std::span<const CostSpec> costs) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["costs"] = json::array();
  for (const auto& c : costs) j["costs"].push_back(cost_to_json(c));
  return canonical(j);
}

inline std::vector<CostSpec> load_costs(const std::string& path) {
  return parse_costs(read_file(path), path);
}

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

inline std::string scenario_digest(const Scenario& s) { return sha256_hex(serialize_scenario(s)); }

/// Finite numbers stay numbers; +inf becomes the string "infinity".
inline json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (v > 0) return "infinity";
  if (v < 0) return "-infinity";
  return nullptr;
}

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(number_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(std::span<const double> v) {
  json out = json::array();
  for (double x : v) out.push_back(number_json(x));
  return out;
}

/// One command's machine-readable output. `payload` and `residuals` are
/// deterministic for a fixed input; only `duration_seconds` varies.
struct RunReport {
  std::string command;
  std::string digest;
  json payload = json::object();
  json residuals = json::object();
  double duration_seconds = 0.0;

  [[nodiscard]] json to_json() const {
    return {{"command", command},
            {"scenario_digest", digest},
            {"payload", payload},
            {"residuals", residuals},
            {"duration_seconds", duration_seconds}};
  }
};

/// 12 significant digits in scientific notation.
inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

/// Tolerances used by verifiers; defaults mirror the library constants.
struct ToleranceProfile {
  double verification = tol::kVerification;
  double deviation_gain = tol::kDeviationGain;
};

/// Reads DAUCTION_TOLERANCE_PROFILE: "default", "strict" (x0.01) or "loose" (x100).
inline ToleranceProfile tolerance_profile_from_env() {
  ToleranceProfile t;
  const char* raw = std::getenv("DAUCTION_TOLERANCE_PROFILE");
  const std::string name = raw ? raw : "default";
  double scale = 1.0;
  if (name == "strict")
    scale = 0.01;
  else if (name == "loose")
    scale = 100.0;
  else if (name != "default" && !name.empty())
    throw InputError("DAUCTION_TOLERANCE_PROFILE: unknown profile '" + name + "'");
  t.verification *= scale;
  t.deviation_gain *= scale;
  return t;
}

}  // namespace dauction::io

#endif  // DAUCTION_IO_HPP
