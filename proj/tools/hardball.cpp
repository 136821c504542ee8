#include <CLI11.hpp>

#include "hardball/cli.hpp"

namespace cli = hardball::cli;

namespace {

void add_common(CLI::App* cmd, cli::CommonOptions& opt) {
  cmd->add_option("--out-dir", opt.out_dir, "output directory (default: $HARDBALL_OUT_DIR or ./hardball_out)");
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--precision-bits", opt.precision_bits, "53, 113 or 237 (default: auto)");
  cmd->add_option("--lambda-ratio", opt.lambda_ratio, "geometric decay of the weight vector");
  cmd->add_option("--theta", opt.theta, "angle window, radians (default: pi/8)");
  cmd->add_option("--jitter", opt.jitter, "initial-data jitter (default: auto)");
  cmd->add_option("--max-events", opt.max_events, "event cap for simulations");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exponential collision constructions for hard-ball systems"};
  app.require_subcommand(1);

  cli::ConstructOptions construct_opt;
  CLI::App* construct = app.add_subcommand("construct", "build trajectories, matrices and configurations");
  construct->add_option("--n", construct_opt.n, "number of balls");
  construct->add_option("--m", construct_opt.m, "number of walls / coordinates");
  add_common(construct, construct_opt);

  cli::VerifyOptions verify_opt;
  CLI::App* verify = app.add_subcommand("verify", "run the end-to-end collision count verification");
  verify->add_option("--n", verify_opt.range, "ball count or range, e.g. 4 or 3..6")->required();
  add_common(verify, verify_opt);

  cli::ConeDemoOptions cone_opt;
  CLI::App* cone = app.add_subcommand("cone-demo", "doubling cone with 2^m - 1 collisions");
  cone->add_option("--m", cone_opt.m, "number of cone faces")->required();
  cone->add_option("--epsilon", cone_opt.eps, "angle slack, radians (default 0.1)");
  add_common(cone, cone_opt);

  cli::ExportOptions export_opt;
  CLI::App* exp = app.add_subcommand("export", "re-emit artifacts of a recorded run");
  exp->add_option("--run", export_opt.run_dir, "run directory containing manifest.json")->required();
  exp->add_option("--format", export_opt.format, "csv or json")->required();
  exp->add_option("--out-dir", export_opt.out_dir, "destination (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  if (construct->parsed()) return cli::cmd_construct(construct_opt);
  if (verify->parsed()) return cli::cmd_verify(verify_opt);
  if (cone->parsed()) return cli::cmd_cone_demo(cone_opt);
  if (exp->parsed()) return cli::cmd_export(export_opt);
  return cli::kExitUsage;
}
