#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "hardball/io.hpp"
#include "hardball/simulator.hpp"

namespace hardball::cli {

// Exit codes: 0 verified, 1 mismatch, 2 usage, 3 numeric abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("HARDBALL_OUT_DIR")) return env;
  return "hardball_out";
}

/// "3..6" or "4" with both endpoints in [lo_min, hi_max].
inline std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      std::size_t used = 0;
      const int v = std::stoi(text, &used);
      if (used != text.size()) throw PreconditionError("trailing characters");
      return {v, v};
    }
    std::size_t used = 0;
    const int lo = std::stoi(text.substr(0, dots), &used);
    if (used != dots) throw PreconditionError("trailing characters");
    const int hi = std::stoi(text.substr(dots + 2), &used);
    if (used != text.size() - dots - 2) throw PreconditionError("trailing characters");
    if (lo > hi) throw PreconditionError("reversed range");
    return {lo, hi};
  } catch (const std::exception&) {
    throw PreconditionError("malformed range '" + text + "'; expected N or A..B");
  }
}

inline int normalize_precision_bits(int bits) {
  if (bits <= 0 || bits == 53) return 53;
  if (bits <= 113) return 113;
  return 237;
}

/// Precision policy for the verification pipeline: doubles carry n <= 5,
/// wider mantissas the near-tangential regimes beyond.
inline int auto_precision_for_n(int n) { return n <= 5 ? 53 : 113; }

/// Precision policy for de-generalizing the inductive construction: the
/// deviation amplification across the event cascade grows with m.
inline int auto_precision_for_perturb(int m) { return m <= 8 ? 53 : 113; }

struct CommonOptions {
  std::string out_dir;
  std::uint64_t seed = 20240901;
  int precision_bits = 0;  // 0: auto
  double lambda_ratio = 0.125;
  double theta = 0;   // 0: auto
  double jitter = 0;  // 0: auto
  long long max_events = 1 << 20;
};

struct RunWriter {
  std::filesystem::path dir;
  RunManifest manifest;

  RunWriter(const std::filesystem::path& d, std::string command) : dir(d) {
    manifest.command = std::move(command);
  }

  void add_text(const std::string& name, const std::string& kind, const std::string& content) {
    write_text_file(dir / name, content);
    manifest.artifacts.push_back({name, kind});
  }

  void add_json(const std::string& name, const std::string& kind, const json& j) {
    write_text_file(dir / name, j.dump(2) + "\n");
    manifest.artifacts.push_back({name, kind});
  }

  void finish() { write_json_file(dir / "manifest.json", manifest_to_json(manifest)); }
};

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

struct ConstructOptions : CommonOptions {
  int n = 0;  // exactly one of n, m set
  int m = 0;
};

namespace detail {

template <class S>
void construct_with(const ConstructOptions& opt, RunWriter& out, int m, bool with_balls) {
  const InductiveResult built = build_inductive(m);
  const AdmissibleMatrix<Rational> a_exact = build_Am<Rational>(m);
  const long long n_total = built.schedule.total();

  out.add_json("schedule.json", "schedule", schedule_to_json(built.schedule));
  out.add_json("trajectory_generalized.json", "trajectory", trajectory_to_json(built.trajectory));
  out.add_text("trajectory_generalized.csv", "trajectory", trajectory_to_csv(built.trajectory));
  out.add_json("matrix_A.json", "matrix", matrix_to_json(a_exact));

  const S jitter = opt.jitter > 0 ? S(opt.jitter)
                                  : default_jitter<S>(scalar_cast<S>(built.trajectory.min_event_gap()));
  const PLTrajectory<S> genuine =
      perturb_to_genuine<S, Rational>(built.trajectory, a_exact, jitter, opt.seed);
  out.add_json("trajectory_genuine.json", "trajectory", trajectory_to_json(genuine));
  out.add_text("trajectory_genuine.csv", "trajectory", trajectory_to_csv(genuine));
  out.manifest.outcome["jitter"] = scalar_cast<double>(jitter);
  out.manifest.outcome["collisions"] = n_total;

  // Empirical stability radius of the collision pattern under one-sided
  // matrix perturbations, recorded for reference.
  if (m >= 2 && m <= 6) {
    const S delta = find_delta<S>(m, genuine, n_total);
    out.manifest.outcome["delta_empirical"] = scalar_cast<double>(delta);
  }

  if (with_balls) {
    const int n = m + 1;
    const S theta = opt.theta > 0 ? S(opt.theta) : pi_value<S>() / S(8);
    Vec<S> lambda(m);
    S cur(1);
    for (int i = 0; i < m; ++i) {
      lambda[i] = cur;
      cur *= S(opt.lambda_ratio);
    }
    const AdmissibleMatrix<S> a_tilde = build_Atilde<S>(m, lambda);
    const AdmissibleMatrix<S> b = rescale(a_tilde, lambda);
    out.add_json("matrix_Atilde.json", "matrix", matrix_to_json(a_tilde));
    out.add_json("matrix_B.json", "matrix", matrix_to_json(b));
    const AngleAssignment<S> angles = angles_from_lambda<S>(lambda, theta);
    out.add_json("angles.json", "angles", angles_to_json(angles));
    const BallConfiguration<S> hat = hat_configuration<S>(n);
    out.add_json("config_hat.json", "config", config_to_json(hat));
    const BallConfiguration<S> q = perturbed_configuration<S>(n, angles, theta);
    out.add_json("config.json", "config", config_to_json(q));
    out.add_text("config.csv", "config", config_to_csv(q));
    out.manifest.outcome["theta"] = scalar_cast<double>(theta);
  }
}

}  // namespace detail

inline int cmd_construct(const ConstructOptions& opt) {
  if ((opt.n == 0) == (opt.m == 0)) {
    std::cerr << "construct: exactly one of --n / --m is required\n";
    return kExitUsage;
  }
  const bool with_balls = opt.n != 0;
  const int m = with_balls ? opt.n - 1 : opt.m;
  if (m < 1 || (with_balls && opt.n < 2)) {
    std::cerr << "construct: need m >= 1 (n >= 2)\n";
    return kExitUsage;
  }
  const std::filesystem::path dir = opt.out_dir.empty()
                                        ? default_out_dir() / ("construct_m" + std::to_string(m))
                                        : std::filesystem::path(opt.out_dir);
  try {
    RunWriter out(dir, "construct");
    const int bits =
        opt.precision_bits > 0 ? normalize_precision_bits(opt.precision_bits) : auto_precision_for_perturb(m);
    out.manifest.precision_bits = bits;
    out.manifest.parameters = {{"n", opt.n},       {"m", m},
                               {"seed", opt.seed}, {"lambda_ratio", opt.lambda_ratio},
                               {"theta", opt.theta}, {"jitter", opt.jitter},
                               {"precision_bits", bits}};
    if (bits <= 53)
      detail::construct_with<double>(opt, out, m, with_balls);
    else if (bits <= 113)
      detail::construct_with<Float113>(opt, out, m, with_balls);
    else
      detail::construct_with<Float237>(opt, out, m, with_balls);

    const long long n_total = out.manifest.outcome["collisions"].get<long long>();
    out.finish();
    std::cout << "N = " << n_total;
    if (m >= 2) {
      const int k = (m + 1) / 2;
      std::cout << ", bound 2^" << k << " = " << (1LL << k);
    }
    std::cout << "\n";
    std::cout << "artifacts: " << dir.string() << "\n";
    return kExitOk;
  } catch (const PreconditionError& e) {
    std::cerr << "construct: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "construct: " << e.what() << "\n";
    return kExitNumeric;
  }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyOptions : CommonOptions {
  std::string range;  // "3..6" or "4"
};

template <class S>
VerifyReport run_verify_one(int n, const VerifyOptions& opt, RunWriter& out) {
  VerifyParams params;
  params.lambda_ratio = opt.lambda_ratio;
  params.theta = opt.theta;
  params.jitter = opt.jitter;
  params.seed = opt.seed;
  params.max_events = opt.max_events;
  VerifyArtifacts<S> artifacts;
  const VerifyReport rep = verify_exponential<S>(n, params, &artifacts);
  if (rep.match) {
    const std::string tag = "verify_n" + std::to_string(n);
    out.add_json(tag + "_config.json", "config", config_to_json(artifacts.config));
    out.add_json(tag + "_state.json", "state", state_to_json(artifacts.initial_state));
    out.add_text(tag + "_ball_events.csv", "ball_events", ball_events_to_csv(artifacts.log));
  }
  return rep;
}

inline int cmd_verify(const VerifyOptions& opt) {
  std::pair<int, int> range;
  try {
    range = parse_range(opt.range);
    if (range.first < 3) throw PreconditionError("verify needs n >= 3");
  } catch (const PreconditionError& e) {
    std::cerr << "verify: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::filesystem::path dir = opt.out_dir.empty()
                                        ? default_out_dir() / ("verify_" + std::to_string(range.first) + "_" +
                                                               std::to_string(range.second))
                                        : std::filesystem::path(opt.out_dir);
  RunWriter out(dir, "verify");
  out.manifest.parameters = {{"range", opt.range},   {"seed", opt.seed},
                             {"lambda_ratio", opt.lambda_ratio}, {"theta", opt.theta},
                             {"jitter", opt.jitter}, {"precision_bits", opt.precision_bits}};

  bool any_mismatch = false;
  bool any_abort = false;
  json table = json::array();
  std::printf("%4s %12s %12s %10s %7s %9s\n", "n", "N_predicted", "N_observed", "bound", "match",
              "seconds");
  for (int n = range.first; n <= range.second; ++n) {
    VerifyReport rep;
    try {
      const int bits = opt.precision_bits > 0 ? normalize_precision_bits(opt.precision_bits)
                                              : auto_precision_for_n(n);
      if (bits <= 53)
        rep = run_verify_one<double>(n, opt, out);
      else if (bits <= 113)
        rep = run_verify_one<Float113>(n, opt, out);
      else
        rep = run_verify_one<Float237>(n, opt, out);
    } catch (const Error& e) {
      any_abort = true;
      std::printf("%4d %12s %12s %10s %7s %9s  %s\n", n, "-", "-", "-", "abort", "-", e.what());
      table.push_back({{"n", n}, {"error", e.what()}});
      continue;
    }
    if (!rep.match) any_mismatch = true;
    std::printf("%4d %12lld %12lld %10lld %7s %9.3f\n", n, rep.n_predicted, rep.observed, rep.bound,
                rep.match ? "yes" : "NO", rep.wall_seconds);
    json row = {{"n", n},
                {"n_predicted", rep.n_predicted},
                {"n_observed", rep.observed},
                {"bound", rep.bound},
                {"match", rep.match},
                {"seconds", rep.wall_seconds},
                {"precision_bits", rep.precision_bits},
                {"lambda_scale", rep.lambda_scale},
                {"lambda_ratio", rep.lambda_ratio},
                {"atilde_norm", rep.atilde_norm},
                {"theta", rep.theta},
                {"jitter", rep.jitter},
                {"attempts", rep.attempts},
                {"matched_prefix", rep.matched_prefix}};
    if (!rep.failure.empty()) row["failure"] = rep.failure;
    table.push_back(row);
  }
  out.add_json("table.json", "table", table);
  out.manifest.outcome = {{"mismatch", any_mismatch}, {"abort", any_abort}};
  out.finish();
  if (any_abort) return kExitNumeric;
  return any_mismatch ? kExitMismatch : kExitOk;
}

// ---------------------------------------------------------------------------
// cone-demo
// ---------------------------------------------------------------------------

struct ConeDemoOptions : CommonOptions {
  int m = 0;
  double eps = 0.1;
};

inline int cmd_cone_demo(const ConeDemoOptions& opt) {
  if (opt.m < 1) {
    std::cerr << "cone-demo: --m >= 1 required\n";
    return kExitUsage;
  }
  const std::filesystem::path dir = opt.out_dir.empty()
                                        ? default_out_dir() / ("cone_demo_m" + std::to_string(opt.m))
                                        : std::filesystem::path(opt.out_dir);
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const RightAngleExample<double> ex = build_right_angle_example<double>(opt.m, opt.eps);
    const long long expected = (1LL << opt.m) - 1;
    const ConeTrajectory<double> traj =
        simulate_cone(ex.cone, ex.x0, ex.v0, std::min(expected + 8, opt.max_events), ex.t0);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunWriter out(dir, "cone-demo");
    out.manifest.precision_bits = 53;
    out.manifest.parameters = {{"m", opt.m}, {"eps", opt.eps}};
    out.add_json("cone.json", "cone", cone_to_json(ex.cone));
    out.add_text("cone_events.csv", "cone_events", cone_events_to_csv(traj));
    const long long got = (long long)traj.events.size();
    out.manifest.outcome = {{"collisions", got}, {"expected", expected}, {"seconds", seconds}};
    out.finish();
    std::cout << "collisions = " << got << " (expected " << expected << "), " << seconds << " s\n";
    std::cout << "artifacts: " << dir.string() << "\n";
    return got == expected ? kExitOk : kExitMismatch;
  } catch (const PreconditionError& e) {
    std::cerr << "cone-demo: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "cone-demo: " << e.what() << "\n";
    return kExitNumeric;
  }
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

struct ExportOptions {
  std::string run_dir;
  std::string format;  // csv | json
  std::string out_dir;
};

inline int cmd_export(const ExportOptions& opt) {
  if (opt.format != "csv" && opt.format != "json") {
    std::cerr << "export: unknown format '" << opt.format << "'; supported formats: csv, json\n";
    return kExitUsage;
  }
  try {
    const std::filesystem::path run_dir = opt.run_dir;
    const RunManifest man = manifest_from_json(read_json_file(run_dir / "manifest.json"));
    const std::filesystem::path dest = opt.out_dir.empty() ? run_dir : std::filesystem::path(opt.out_dir);
    int written = 0;
    for (const auto& art : man.artifacts) {
      const std::filesystem::path src = run_dir / art.path;
      if (src.extension() != ".json") continue;
      const std::filesystem::path base = std::filesystem::path(art.path).stem();
      if (opt.format == "json") {
        // normalize / copy
        write_json_file(dest / (base.string() + ".json"), read_json_file(src));
        ++written;
        continue;
      }
      const json j = read_json_file(src);
      if (art.kind == "trajectory") {
        write_text_file(dest / (base.string() + ".csv"), trajectory_to_csv(trajectory_from_json<double>(j)));
        ++written;
      } else if (art.kind == "config") {
        write_text_file(dest / (base.string() + ".csv"), config_to_csv(config_from_json<double>(j)));
        ++written;
      }
    }
    std::cout << "exported " << written << " artifact(s) to " << dest.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "export: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace hardball::cli
