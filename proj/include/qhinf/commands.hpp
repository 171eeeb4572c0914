#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qhinf/config.hpp"
#include "qhinf/freq.hpp"
#include "qhinf/io.hpp"
#include "qhinf/kalman.hpp"
#include "qhinf/realizability.hpp"

namespace qhinf {

namespace exit_code {
constexpr int ok = 0;
constexpr int parse = 2;         // config/CLI parse or validation error
constexpr int precondition = 3;  // model precondition or check failure
constexpr int infeasible = 4;    // synthesis conditions not satisfiable
constexpr int numerical = 5;     // solver breakdown
}  // namespace exit_code

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::vector<double>> deltas;  // overrides analysis.deltas
  std::optional<std::string> grid;            // omega grid or sweep grid spec
  std::optional<int> channel;                 // overrides analysis.channel
  GainVariant variant = GainVariant::paper;
};

namespace detail {

inline std::vector<double> analysis_grid(const ProblemConfig& pc,
                                         const CommandOptions& opt) {
  if (opt.grid) {
    // "lo:hi:points"
    double lo, hi;
    int points;
    if (std::sscanf(opt.grid->c_str(), "%lf:%lf:%d", &lo, &hi, &points) != 3)
      throw ConfigError("config error: --grid expects lo:hi:points");
    return log_grid(lo, hi, points);
  }
  return log_grid(pc.analysis.omega.min, pc.analysis.omega.max,
                  pc.analysis.omega.points);
}

inline std::vector<double> analysis_deltas(const ProblemConfig& pc,
                                           const CommandOptions& opt) {
  const std::vector<double>& d = opt.deltas ? *opt.deltas : pc.analysis.deltas;
  for (double v : d)
    if (std::abs(v) > 1.0)
      throw ConfigError("config error: |delta| must be <= 1");
  if (d.empty()) throw ConfigError("config error: empty delta list");
  return d;
}

inline int analysis_channel(const ProblemConfig& pc, const CommandOptions& opt) {
  const int ch = opt.channel ? *opt.channel : pc.analysis.channel;
  if (ch < 0 || ch >= 2 * pc.plant.m)
    throw ConfigError("config error: channel out of range");
  return ch;
}

inline std::string out_path(const CommandOptions& opt, const std::string& name) {
  std::filesystem::create_directories(opt.out_dir);
  return (std::filesystem::path(opt.out_dir) / name).string();
}

inline Perturbation perturbation_at(const ProblemConfig& pc, double delta) {
  if (pc.uncertainty) return apply_uncertainty(pc.plant, *pc.uncertainty, delta);
  Perturbation zero;
  zero.dA = Mat::Zero(2 * pc.plant.n, 2 * pc.plant.n);
  zero.dB = Mat::Zero(2 * pc.plant.n, 2 * pc.plant.m);
  zero.dC = Mat::Zero(2 * pc.plant.m, 2 * pc.plant.n);
  return zero;
}

// Writes one response CSV per delta and returns per-delta peak metadata.
inline nlohmann::ordered_json write_error_responses(
    const ProblemConfig& pc, const CommandOptions& opt, const Estimator& est,
    const std::string& filter_name) {
  const auto grid = analysis_grid(pc, opt);
  const auto deltas = analysis_deltas(pc, opt);
  const int channel = analysis_channel(pc, opt);
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (size_t i = 0; i < deltas.size(); ++i) {
    const Perturbation pert = perturbation_at(pc, deltas[i]);
    const StateSpaceSystem err = error_system(pc.plant, pert, pc.S, est);
    const StateSpaceSystem one = select_channel(err, channel);
    const FrequencyResponse fr = freq_response(one, grid);
    const std::string file =
        "response_" + filter_name + "_delta" + std::to_string(i) + ".csv";
    write_response_csv(out_path(opt, file), fr);
    const PeakEstimate peak = peak_magnitude(one, grid);
    nlohmann::ordered_json e;
    e["delta"] = deltas[i];
    e["file"] = file;
    e["peak_db"] = peak.magnitude_db;
    e["peak_omega"] = peak.omega;
    entries.push_back(std::move(e));
  }
  return entries;
}

inline nlohmann::ordered_json care_diag_json(const CareSolution& sol,
                                             double relative_residual) {
  nlohmann::ordered_json j;
  j["residual"] = sol.residual_norm;
  j["relative_residual"] = relative_residual;
  j["is_stabilizing"] = sol.is_stabilizing;
  j["is_psd"] = sol.is_psd;
  j["closed_loop_eigs"] = vector_to_json(sol.closed_loop_eigs);
  j["matrix"] = matrix_to_json(sol.X);
  return j;
}

template <class Fn>
int run_command(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return exit_code::parse;
  } catch (const SynthesisError& e) {
    std::cerr << e.what() << "\n";
    return exit_code::infeasible;
  } catch (const CareError& e) {
    std::cerr << e.what() << "\n";
    return exit_code::numerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return exit_code::precondition;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return exit_code::numerical;
  }
}

}  // namespace detail

/// `realizability`: Theorem-style check of the nominal plant, plus residuals
/// of the uncertain constraints at each requested delta.
inline int cmd_realizability(const CommandOptions& opt) {
  return detail::run_command([&] {
    const ProblemConfig pc = load_problem_config(opt.config_path);
    const RealizabilityResult rr = check_physical_realizability(pc.plant);

    nlohmann::ordered_json out;
    out["pass"] = rr.ok;
    out["failed_condition"] = rr.failed_condition;
    out["feedthrough_deviation"] = rr.feedthrough_deviation;
    out["lyapunov_residual"] = rr.lyapunov_residual;
    out["gain_residual"] = rr.gain_residual;
    nlohmann::ordered_json inertia;
    inertia["positive"] = rr.inertia.positive;
    inertia["negative"] = rr.inertia.negative;
    inertia["zero"] = rr.inertia.zero;
    out["inertia"] = inertia;
    if (rr.theta.size() > 0) out["theta"] = matrix_to_json(rr.theta);

    if (pc.uncertainty && rr.theta.size() > 0) {
      nlohmann::ordered_json unc = nlohmann::ordered_json::array();
      for (double delta : detail::analysis_deltas(pc, opt)) {
        const Perturbation pert = apply_uncertainty(pc.plant, *pc.uncertainty, delta);
        const UncertainRealizabilityReport ur =
            check_uncertain_realizability(pc.plant, rr.theta, pert);
        nlohmann::ordered_json e;
        e["delta"] = delta;
        e["lyapunov_residual"] = ur.lyapunov_residual;
        e["gain_residual"] = ur.gain_residual;
        e["pass"] = ur.pass;
        unc.push_back(std::move(e));
      }
      out["uncertain_residuals"] = unc;
    }

    write_json_file(detail::out_path(opt, "realizability.json"), out);
    std::cout << (rr.ok ? "realizable" : "not realizable: " + rr.failed_condition)
              << "\n";
    return rr.ok ? exit_code::ok : exit_code::precondition;
  });
}

/// `kalman`: optimal filter for the nominal plant plus per-delta
/// disturbance-to-error responses of that filter on the perturbed plant.
inline int cmd_kalman(const CommandOptions& opt) {
  return detail::run_command([&] {
    const ProblemConfig pc = load_problem_config(opt.config_path);
    const Mat p = solve_kalman_riccati(pc.plant, pc.S);
    const KalmanFilter kf = kalman_filter(pc.plant, pc.S, p);

    nlohmann::ordered_json out;
    out["P"] = matrix_to_json(kf.P);
    out["A_e"] = matrix_to_json(kf.A_e);
    out["K_e"] = matrix_to_json(kf.K_e);
    out["L_e"] = matrix_to_json(kf.L_e);
    out["riccati_residual"] = kf.riccati_residual;
    Eigen::ComplexEigenSolver<Mat> es(kf.A_e, false);
    out["A_e_eigs"] = vector_to_json(es.eigenvalues());
    out["A_e_stable"] = is_stable(kf.A_e);
    out["responses"] =
        detail::write_error_responses(pc, opt, as_estimator(kf), "kalman");
    write_json_file(detail::out_path(opt, "kalman.json"), out);
    std::cout << "kalman filter synthesized; A_e stable\n";
    return exit_code::ok;
  });
}

/// `hinf`: robust estimator synthesis with assumption report, Riccati
/// diagnostics, estimator transfer function and per-delta responses.
inline int cmd_hinf(const CommandOptions& opt) {
  return detail::run_command([&] {
    const ProblemConfig pc = load_problem_config(opt.config_path);
    if (!pc.synthesis)
      throw ConfigError("config error: hinf requires a \"synthesis\" block");
    const UncertaintyModel unc =
        pc.uncertainty ? *pc.uncertainty : no_uncertainty(pc.plant);
    const SynthesisParams& params = *pc.synthesis;

    SynthesisOutcome oc = synthesize_robust(pc.plant, pc.S, unc, params, opt.variant);
    const AssumptionReport ar =
        check_assumptions(pc.plant, pc.S, unc, oc.barred, params);

    nlohmann::ordered_json out;
    out["feasible"] = oc.feasible;
    out["gamma"] = params.gamma;
    out["eps1"] = params.eps1;
    out["eps2"] = params.eps2;
    out["variant"] =
        opt.variant == GainVariant::paper ? "paper" : "scaled-coupling";
    if (!oc.feasible) {
      out["failed_condition"] = oc.failed_condition;
      out["detail"] = oc.detail;
    }

    nlohmann::ordered_json assum;
    assum["a1_stable"] = ar.a1_stable;
    assum["a1_abscissa"] = ar.a1_abscissa;
    assum["a2_margin"] = ar.a2_margin;
    assum["a3_rank"] = ar.a3_rank;
    assum["a3_full"] = ar.a3_full;
    assum["a4_ok"] = ar.a4_ok;
    assum["a4_min_sv"] = ar.a4_min_sv;
    assum["barred_rank_x"] = ar.barred_rank_x;
    assum["barred_rank_y"] = ar.barred_rank_y;
    out["assumptions"] = assum;

    if (oc.x.X.size() > 0)
      out["X"] = detail::care_diag_json(
          oc.x, x_riccati_relative_residual(oc.barred, oc.x.X, params.gamma));
    if (oc.y.X.size() > 0)
      out["Y"] = detail::care_diag_json(
          oc.y, y_riccati_relative_residual(oc.barred, oc.y.X, params.gamma));
    if (oc.x.X.size() > 0 && oc.y.X.size() > 0) {
      nlohmann::ordered_json coupling;
      coupling["rho_xy"] = oc.coupling.rho;
      coupling["margin"] = oc.coupling.margin;
      coupling["ok"] = oc.coupling.ok;
      out["coupling"] = coupling;
    }

    if (oc.feasible) {
      nlohmann::ordered_json est;
      est["A_K"] = matrix_to_json(oc.estimator.A_K);
      est["B_K"] = matrix_to_json(oc.estimator.B_K);
      est["C_K"] = matrix_to_json(oc.estimator.C_K);
      Eigen::ComplexEigenSolver<Mat> es(oc.estimator.A_K, false);
      est["A_K_eigs"] = vector_to_json(es.eigenvalues());
      est["A_K_stable"] = is_stable(oc.estimator.A_K);
      out["estimator"] = est;

      nlohmann::ordered_json tfs = nlohmann::ordered_json::array();
      for (const RationalTF& tf : estimator_tf(oc.estimator)) {
        nlohmann::ordered_json tj;
        tj["num"] = vector_to_json(tf.num);
        tj["den"] = vector_to_json(tf.den);
        tfs.push_back(std::move(tj));
      }
      out["transfer_function"] = tfs;
      out["responses"] =
          detail::write_error_responses(pc, opt, oc.estimator, "robust");
    }

    write_json_file(detail::out_path(opt, "hinf.json"), out);
    if (!oc.feasible) {
      std::cerr << "synthesis infeasible: condition (" << oc.failed_condition
                << ") " << oc.detail << "\n";
      return exit_code::infeasible;
    }
    std::cout << "robust estimator synthesized\n";
    return exit_code::ok;
  });
}

/// `response`: disturbance-to-error responses of the Kalman filter, the
/// robust estimator and the nominal central estimator, per delta.
inline int cmd_response(const CommandOptions& opt) {
  return detail::run_command([&] {
    const ProblemConfig pc = load_problem_config(opt.config_path);
    nlohmann::ordered_json out;
    out["channel"] = detail::analysis_channel(pc, opt);

    const Mat p = solve_kalman_riccati(pc.plant, pc.S);
    const KalmanFilter kf = kalman_filter(pc.plant, pc.S, p);
    out["kalman"] = detail::write_error_responses(pc, opt, as_estimator(kf), "kalman");

    if (pc.synthesis) {
      const UncertaintyModel unc =
          pc.uncertainty ? *pc.uncertainty : no_uncertainty(pc.plant);
      SynthesisOutcome robust =
          synthesize_robust(pc.plant, pc.S, unc, *pc.synthesis, opt.variant);
      if (!robust.feasible)
        throw SynthesisError(robust.failed_condition,
                             "response: synthesis infeasible, condition (" +
                                 robust.failed_condition + "): " + robust.detail);
      out["robust"] =
          detail::write_error_responses(pc, opt, robust.estimator, "robust");

      SynthesisOutcome nominal =
          synthesize_robust(pc.plant, pc.S, no_uncertainty(pc.plant),
                            *pc.synthesis, opt.variant);
      if (nominal.feasible)
        out["nominal_hinf"] = detail::write_error_responses(
            pc, opt, nominal.estimator, "nominal_hinf");
    }

    write_json_file(detail::out_path(opt, "response.json"), out);
    std::cout << "responses written\n";
    return exit_code::ok;
  });
}

namespace detail {

struct SweepAxis {
  std::vector<double> values;
};

inline SweepAxis parse_axis(const std::string& item, const std::string& name) {
  SweepAxis axis;
  const std::string prefix = name + "=";
  if (item.rfind(prefix, 0) != 0) return axis;
  const std::string body = item.substr(prefix.size());
  double lo, hi;
  int count;
  if (std::sscanf(body.c_str(), "%lf:%lf:%d", &lo, &hi, &count) == 3) {
    if (count < 1 || !(hi >= lo))
      throw ConfigError("config error: bad sweep range for " + name);
    for (int i = 0; i < count; ++i)
      axis.values.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    return axis;
  }
  char* end = nullptr;
  const double v = std::strtod(body.c_str(), &end);
  if (end == body.c_str() || *end != '\0')
    throw ConfigError("config error: bad sweep value for " + name);
  axis.values.push_back(v);
  return axis;
}

}  // namespace detail

/// `sweep`: feasibility and attenuation over a (gamma, eps1, eps2) grid.
/// Grid spec: comma-separated axes, each "name=lo:hi:count" or "name=value";
/// axes omitted from the spec fall back to the config's synthesis block.
inline int cmd_sweep(const CommandOptions& opt) {
  return detail::run_command([&] {
    const ProblemConfig pc = load_problem_config(opt.config_path);
    if (!opt.grid) throw ConfigError("config error: sweep requires --grid");

    std::vector<double> gammas, eps1s, eps2s;
    std::string spec = *opt.grid;
    for (size_t pos = 0; pos < spec.size();) {
      size_t next = spec.find(',', pos);
      if (next == std::string::npos) next = spec.size();
      const std::string item = spec.substr(pos, next - pos);
      pos = next + 1;
      if (item.empty()) continue;
      detail::SweepAxis g = detail::parse_axis(item, "gamma");
      detail::SweepAxis e1 = detail::parse_axis(item, "eps1");
      detail::SweepAxis e2 = detail::parse_axis(item, "eps2");
      if (!g.values.empty())
        gammas.insert(gammas.end(), g.values.begin(), g.values.end());
      else if (!e1.values.empty())
        eps1s.insert(eps1s.end(), e1.values.begin(), e1.values.end());
      else if (!e2.values.empty())
        eps2s.insert(eps2s.end(), e2.values.begin(), e2.values.end());
      else
        throw ConfigError("config error: unknown sweep axis in \"" + item + "\"");
    }
    if (gammas.empty() && pc.synthesis) gammas.push_back(pc.synthesis->gamma);
    if (eps1s.empty() && pc.synthesis) eps1s.push_back(pc.synthesis->eps1);
    if (eps2s.empty() && pc.synthesis) eps2s.push_back(pc.synthesis->eps2);
    if (gammas.empty() || eps1s.empty() || eps2s.empty())
      throw ConfigError("config error: empty sweep grid");

    const UncertaintyModel unc =
        pc.uncertainty ? *pc.uncertainty : no_uncertainty(pc.plant);
    const auto grid = detail::analysis_grid(pc, CommandOptions{});  // config grid
    const int channel = detail::analysis_channel(pc, opt);
    const Perturbation pert = detail::perturbation_at(pc, 1.0);

    std::ofstream os(detail::out_path(opt, "sweep.csv"), std::ios::binary);
    os << "gamma,eps1,eps2,feasible,coupling_margin,error_peak_db,hinf_norm\n";
    for (double g : gammas)
      for (double e1 : eps1s)
        for (double e2 : eps2s) {
          SynthesisOutcome oc =
              synthesize_robust(pc.plant, pc.S, unc, {g, e1, e2}, opt.variant);
          os << detail::format_double(g) << ',' << detail::format_double(e1)
             << ',' << detail::format_double(e2) << ','
             << (oc.feasible ? 1 : 0) << ',';
          if (oc.x.X.size() > 0 && oc.y.X.size() > 0)
            os << detail::format_double(oc.coupling.margin);
          else
            os << "nan";
          if (oc.feasible) {
            const StateSpaceSystem err = select_channel(
                error_system(pc.plant, pert, pc.S, oc.estimator), channel);
            const PeakEstimate peak = peak_magnitude(err, grid);
            const HinfNorm norm = hinf_norm(err);
            os << ',' << detail::format_double(peak.magnitude_db) << ','
               << detail::format_double(norm.value);
          } else {
            os << ",nan,nan";
          }
          os << "\n";
        }
    std::cout << "sweep written\n";
    return exit_code::ok;
  });
}

}  // namespace qhinf
