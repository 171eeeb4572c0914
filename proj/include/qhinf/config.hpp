#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhinf/hinf.hpp"
#include "qhinf/plant.hpp"
#include "qhinf/uncertainty.hpp"

namespace qhinf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OmegaGridSpec {
  double min = 1e-2;
  double max = 1e2;
  int points = 400;
};

struct AnalysisConfig {
  std::vector<double> deltas{0.0};
  OmegaGridSpec omega;
  int channel = 0;
};

/// A fully validated problem description: plant, homodyne setup, optional
/// uncertainty model and synthesis parameters, analysis settings.
struct ProblemConfig {
  QuantumPlant plant;
  Mat S;                        // homodyne matrix from thetas
  std::vector<double> thetas;   // radians
  std::optional<UncertaintyModel> uncertainty;
  std::optional<SynthesisParams> synthesis;
  AnalysisConfig analysis;
  std::optional<double> mu;     // informational uncertainty level
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& where,
                                     const std::string& what) {
  throw ConfigError("config error at " + where + ": " + what);
}

inline Complex parse_complex(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    config_fail(where, "complex entries must be [re, im] number pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

// rows/cols < 0 means "any"
inline Mat parse_matrix(const json& j, const std::string& where,
                        Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (!j.is_array() || j.empty())
    config_fail(where, "expected a non-empty array of rows");
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty())
    config_fail(where, "rows must be non-empty arrays of [re, im] pairs");
  const Eigen::Index c = static_cast<Eigen::Index>(j[0].size());
  if (rows >= 0 && r != rows)
    config_fail(where, "expected " + std::to_string(rows) + " rows, got " +
                           std::to_string(r));
  if (cols >= 0 && c != cols)
    config_fail(where, "expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(c));
  Mat out(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c)
      config_fail(where, "ragged rows in matrix");
    for (Eigen::Index k = 0; k < c; ++k)
      out(i, k) = parse_complex(j[i][k], where + "[" + std::to_string(i) + "][" +
                                             std::to_string(k) + "]");
  }
  return out;
}

inline double parse_number(const json& j, const std::string& where) {
  if (!j.is_number()) config_fail(where, "expected a number");
  return j.get<double>();
}

inline std::function<Mat(double)> parse_factor(const json& j, int dim,
                                               const std::string& where) {
  if (!j.is_object() || !j.contains("kind"))
    config_fail(where, "factor spec needs a \"kind\" field");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "delta_powers") {
    if (!j.contains("exponents") || !j["exponents"].is_array())
      config_fail(where, "delta_powers needs an \"exponents\" array");
    std::vector<int> exps;
    for (const auto& e : j["exponents"]) {
      if (!e.is_number_integer()) config_fail(where, "exponents must be integers");
      exps.push_back(e.get<int>());
    }
    if (static_cast<int>(exps.size()) != dim)
      config_fail(where, "exponent count must match the factor dimension " +
                             std::to_string(dim));
    return delta_power_factor(std::move(exps));
  }
  if (kind == "constant") {
    if (!j.contains("matrix")) config_fail(where, "constant factor needs \"matrix\"");
    return constant_factor(parse_matrix(j["matrix"], where + ".matrix", dim, dim));
  }
  config_fail(where, "unknown factor kind \"" + kind + "\"");
}

}  // namespace detail

inline ProblemConfig parse_problem_config(const nlohmann::json& j);

namespace detail {

inline ProblemConfig parse_problem_config_impl(const nlohmann::json& j) {
  using detail::config_fail;
  using detail::parse_matrix;
  using detail::parse_number;

  if (!j.is_object()) throw ConfigError("config error: top level must be an object");
  if (!j.contains("plant")) throw ConfigError("config error: missing \"plant\"");
  if (!j.contains("homodyne")) throw ConfigError("config error: missing \"homodyne\"");

  ProblemConfig pc;

  const auto& pj = j["plant"];
  if (!pj.is_object() || !pj.contains("kind"))
    config_fail("plant", "needs a \"kind\" field");
  const std::string kind = pj["kind"].get<std::string>();
  if (kind == "squeezer") {
    const double beta = parse_number(pj.at("beta"), "plant.beta");
    const double kappa = parse_number(pj.at("kappa"), "plant.kappa");
    const Complex chi = detail::parse_complex(pj.at("chi"), "plant.chi");
    const Mat l = parse_matrix(pj.at("L"), "plant.L", -1, 2);
    try {
      pc.plant = make_squeezer(beta, kappa, chi, l);
    } catch (const std::invalid_argument& e) {
      config_fail("plant", e.what());
    }
  } else if (kind == "raw") {
    const Mat a = parse_matrix(pj.at("A"), "plant.A");
    if (a.rows() != a.cols() || a.rows() % 2 != 0)
      config_fail("plant.A", "must be square with even dimension");
    const Eigen::Index n2 = a.rows();
    const Mat b = parse_matrix(pj.at("B"), "plant.B", n2, -1);
    if (b.cols() % 2 != 0) config_fail("plant.B", "must have an even column count");
    const Eigen::Index m2 = b.cols();
    const Mat c = parse_matrix(pj.at("C"), "plant.C", m2, n2);
    const Mat d = parse_matrix(pj.at("D"), "plant.D", m2, m2);
    const Mat l = parse_matrix(pj.at("L"), "plant.L", -1, n2);
    try {
      pc.plant = make_plant(a, b, c, d, l);
    } catch (const std::invalid_argument& e) {
      config_fail("plant", e.what());
    }
  } else {
    config_fail("plant.kind", "must be \"squeezer\" or \"raw\"");
  }

  const auto& hj = j["homodyne"];
  if (!hj.is_object() || !hj.contains("thetas_degrees") ||
      !hj["thetas_degrees"].is_array())
    config_fail("homodyne", "needs a \"thetas_degrees\" array");
  for (const auto& t : hj["thetas_degrees"])
    pc.thetas.push_back(parse_number(t, "homodyne.thetas_degrees") * M_PI / 180.0);
  if (static_cast<int>(pc.thetas.size()) != pc.plant.m)
    config_fail("homodyne.thetas_degrees",
                "need exactly one angle per field (m = " +
                    std::to_string(pc.plant.m) + ")");
  pc.S = homodyne_matrix({pc.thetas});

  if (j.contains("uncertainty") && !j["uncertainty"].is_null()) {
    const auto& uj = j["uncertainty"];
    UncertaintyModel u;
    u.H1 = parse_matrix(uj.at("H1"), "uncertainty.H1", 2 * pc.plant.n, -1);
    const Eigen::Index r1 = u.H1.cols();
    u.H3 = parse_matrix(uj.at("H3"), "uncertainty.H3", 2 * pc.plant.m, r1);
    u.E = parse_matrix(uj.at("E"), "uncertainty.E", r1, 2 * pc.plant.n);
    u.H2 = parse_matrix(uj.at("H2"), "uncertainty.H2", 2 * pc.plant.n, -1);
    const Eigen::Index r2 = u.H2.cols();
    u.G = parse_matrix(uj.at("G"), "uncertainty.G", r2, 2 * pc.plant.m);
    u.F1 = detail::parse_factor(uj.at("F1"), static_cast<int>(r1), "uncertainty.F1");
    u.F2 = detail::parse_factor(uj.at("F2"), static_cast<int>(r2), "uncertainty.F2");
    if (uj.contains("mu")) pc.mu = parse_number(uj["mu"], "uncertainty.mu");
    const double gain = max_factor_gain(u);
    if (gain > 1.0 + 1e-9)
      config_fail("uncertainty", "factor gain " + std::to_string(gain) +
                                     " exceeds the admissible bound 1");
    pc.uncertainty = std::move(u);
  }

  if (j.contains("synthesis") && !j["synthesis"].is_null()) {
    const auto& sj = j["synthesis"];
    SynthesisParams sp;
    sp.gamma = parse_number(sj.at("gamma"), "synthesis.gamma");
    sp.eps1 = parse_number(sj.at("eps1"), "synthesis.eps1");
    sp.eps2 = parse_number(sj.at("eps2"), "synthesis.eps2");
    if (sp.gamma <= 0 || sp.eps1 <= 0 || sp.eps2 <= 0)
      config_fail("synthesis", "gamma, eps1, eps2 must be positive");
    pc.synthesis = sp;
  }

  if (j.contains("analysis") && !j["analysis"].is_null()) {
    const auto& aj = j["analysis"];
    if (aj.contains("deltas")) {
      pc.analysis.deltas.clear();
      for (const auto& d : aj["deltas"]) {
        const double v = parse_number(d, "analysis.deltas");
        if (std::abs(v) > 1.0) config_fail("analysis.deltas", "|delta| must be <= 1");
        pc.analysis.deltas.push_back(v);
      }
      if (pc.analysis.deltas.empty())
        config_fail("analysis.deltas", "must not be empty");
    }
    if (aj.contains("omega")) {
      const auto& oj = aj["omega"];
      pc.analysis.omega.min = parse_number(oj.at("min"), "analysis.omega.min");
      pc.analysis.omega.max = parse_number(oj.at("max"), "analysis.omega.max");
      pc.analysis.omega.points = oj.at("points").get<int>();
      if (pc.analysis.omega.min <= 0 ||
          pc.analysis.omega.max <= pc.analysis.omega.min ||
          pc.analysis.omega.points < 2)
        config_fail("analysis.omega", "need 0 < min < max and points >= 2");
    }
    if (aj.contains("channel")) {
      pc.analysis.channel = aj["channel"].get<int>();
      if (pc.analysis.channel < 0 || pc.analysis.channel >= 2 * pc.plant.m)
        config_fail("analysis.channel", "out of range for 2m disturbance inputs");
    }
  }

  return pc;
}

}  // namespace detail

inline ProblemConfig parse_problem_config(const nlohmann::json& j) {
  try {
    return detail::parse_problem_config_impl(j);
  } catch (const nlohmann::json::exception& e) {
    // missing fields / wrong json types surface as library exceptions
    throw ConfigError(std::string("config error: ") + e.what());
  }
}

inline ProblemConfig load_problem_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open \"" + path + "\"");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // translate the byte offset into a line number
    size_t line = 1;
    for (size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError("config error in " + path + " (line " +
                      std::to_string(line) + "): " + e.what());
  }
  return parse_problem_config(j);
}

}  // namespace qhinf
