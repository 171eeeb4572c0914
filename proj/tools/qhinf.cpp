// Batch front-end: realizability checks, Kalman and robust estimator
// synthesis, frequency responses and parameter sweeps, driven by JSON
// problem configs.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

#include "qhinf/commands.hpp"

namespace {

std::vector<double> parse_delta_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty())
    throw qhinf::ConfigError("config error: --delta expects a comma list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust estimation toolkit for linear quantum systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", delta_list, grid_spec, variant = "paper";
  int channel = -1;
  bool have_channel = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON problem description")
        ->required();
    cmd->add_option("--out", out_dir, "output directory (default .)");
    cmd->add_option("--delta", delta_list,
                    "comma-separated override of analysis.deltas");
    cmd->add_option("--grid", grid_spec,
                    "omega grid lo:hi:points, or the sweep axes spec");
    cmd->add_option("--channel", channel, "disturbance input channel")
        ->each([&](const std::string&) { have_channel = true; });
    cmd->add_option("--variant", variant,
                    "estimator gain convention: paper | scaled-coupling")
        ->check(CLI::IsMember({"paper", "scaled-coupling"}));
  };

  CLI::App* c_rlz = app.add_subcommand("realizability", "physical-realizability check");
  CLI::App* c_kal = app.add_subcommand("kalman", "optimal filter synthesis");
  CLI::App* c_hin = app.add_subcommand("hinf", "robust estimator synthesis");
  CLI::App* c_rsp = app.add_subcommand("response", "disturbance-to-error responses");
  CLI::App* c_swp = app.add_subcommand("sweep", "feasibility sweep over gamma/eps");
  for (CLI::App* cmd : {c_rlz, c_kal, c_hin, c_rsp, c_swp}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qhinf::exit_code::parse;
  }

  qhinf::CommandOptions opt;
  opt.config_path = config_path;
  opt.out_dir = out_dir;
  try {
    if (!delta_list.empty()) opt.deltas = parse_delta_list(delta_list);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return qhinf::exit_code::parse;
  }
  if (!grid_spec.empty()) opt.grid = grid_spec;
  if (have_channel) opt.channel = channel;
  opt.variant = variant == "paper" ? qhinf::GainVariant::paper
                                   : qhinf::GainVariant::scaled_coupling;

  if (c_rlz->parsed()) return qhinf::cmd_realizability(opt);
  if (c_kal->parsed()) return qhinf::cmd_kalman(opt);
  if (c_hin->parsed()) return qhinf::cmd_hinf(opt);
  if (c_rsp->parsed()) return qhinf::cmd_response(opt);
  if (c_swp->parsed()) return qhinf::cmd_sweep(opt);
  return qhinf::exit_code::parse;
}
