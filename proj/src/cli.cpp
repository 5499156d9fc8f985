#include "atmg/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "atmg/extension.hpp"
#include "atmg/game.hpp"
#include "atmg/game_io.hpp"
#include "atmg/ipgmax.hpp"
#include "atmg/lp.hpp"

namespace atmg::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using Logger = std::shared_ptr<spdlog::logger>;

/// Iteration counts above this need an explicit --cap-iters under the theorem schedule.
constexpr double kTheoremIterationLimit = 1e7;

Logger make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("atmg", sink);
  logger->set_pattern("[%l] %v");
  const char* level = std::getenv("ATMG_LOG");
  const std::string name = level != nullptr ? level : "info";
  if (name == "quiet") {
    logger->set_level(spdlog::level::err);
  } else if (name == "debug") {
    logger->set_level(spdlog::level::debug);
  } else {
    logger->set_level(spdlog::level::info);
  }
  return logger;
}

std::string format_g(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*g", digits, value);
  return buffer;
}

struct SolveFlags {
  std::string game_path;
  std::size_t gridworld = 0;
  double gamma = 0.9;
  IpgmaxConfig config;
  std::size_t cap_iters = 0;
  std::string init = "uniform";
  std::string out_dir;
  std::size_t jobs = 1;
  double lp_epsilon = 0.0;
  bool optimize_lp = false;
};

struct LoadedGame {
  GameSpec spec;
  RewardAffineMap map;
  std::string source;
};

/// Loads and normalizes the game. Throws FormatError or DegenerateRewardsError.
LoadedGame load_game(const SolveFlags& flags) {
  LoadedGame out;
  if (flags.gridworld != 0) {
    if (flags.gridworld < 2) throw FormatError("--gridworld needs a side length of at least 2");
    out.spec = grid_world(flags.gridworld, kDefaultRewardMargin, flags.gamma);
    out.source = "gridworld:" + std::to_string(flags.gridworld);
  } else {
    const GameSpec raw = read_game(flags.game_path);
    const auto problems = validate_structure(raw);
    if (!problems.empty()) throw FormatError(flags.game_path + ": " + problems.front().message);
    NormalizedGame normalized = normalize_rewards(raw);
    out.spec = std::move(normalized.spec);
    out.map = normalized.map;
    out.source = flags.game_path;
  }
  const auto problems = validate(out.spec);
  if (!problems.empty()) throw FormatError(problems.front().message);
  return out;
}

TeamPolicy initial_policy(const GameSpec& spec, const std::string& init, std::uint64_t seed) {
  TeamPolicy x = TeamPolicy::uniform(spec);
  if (init != "random") return x;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> draw(1.0);
  for (std::size_t k = 0; k < x.player_count(); ++k) {
    for (std::size_t s = 0; s < x.state_count(); ++s) {
      auto block = x.block(k, s);
      double total = 0.0;
      for (double& p : block) total += (p = draw(rng));
      for (double& p : block) p /= total;
    }
  }
  return x;
}

void write_trace(const fs::path& path, const RunTrace& trace, std::size_t team_count) {
  std::ofstream csv(path);
  if (!csv) throw FormatError("cannot write " + path.string());
  csv << "# team_value = -phi / n is each team member's discounted payoff; phi = rho^T v of the "
         "adversary best response\n";
  csv << "t,frobenius_norm_consecutive_joint_policies,team_value,phi\n";
  const double n = static_cast<double>(team_count);
  for (std::size_t t = 0; t < trace.phi.size(); ++t) {
    csv << t << ',' << format_g(trace.frobenius[t], 12) << ',' << format_g(-trace.phi[t] / n, 12)
        << ',' << format_g(trace.phi[t], 12) << '\n';
  }
}

ordered_json gap_json(const NashGapReport& gap, const RewardAffineMap& map) {
  ordered_json out;
  out["team_gaps"] = gap.team_gaps;
  out["adversary_gap"] = gap.adversary_gap;
  out["epsilon_certified"] = gap.epsilon_certified;
  out["value"] = gap.value;
  std::vector<double> team_original;
  for (double g : gap.team_gaps) team_original.push_back(map.gap_to_original(g));
  out["original_units"] = {{"team_gaps", team_original},
                           {"adversary_gap", map.gap_to_original(gap.adversary_gap)},
                           {"epsilon_certified", map.gap_to_original(gap.epsilon_certified)}};
  return out;
}

/// One end-to-end solve into `dir`; returns the exit code.
int solve_one(const SolveFlags& flags, const LoadedGame& game, IpgmaxConfig config,
              const fs::path& dir, const Logger& log) {
  const GameSpec& spec = game.spec;
  ordered_json report;
  report["game"] = {{"source", game.source},
                    {"states", spec.state_count},
                    {"team_sizes", spec.team_sizes},
                    {"adversary_actions", spec.adversary_actions},
                    {"gamma", spec.discount},
                    {"reward_shift", game.map.shift},
                    {"reward_scale", game.map.scale}};

  std::string theoretical;
  if (config.schedule != ScheduleMode::Manual) {
    const Schedule schedule =
        config.schedule == ScheduleMode::Theorem
            ? schedule_theorem(spec, config.epsilon, smoothness_constants(spec).mismatch_bound)
            : schedule_proposition(spec, config.epsilon);
    theoretical = schedule.iterations_text();
    if (config.schedule == ScheduleMode::Theorem && flags.cap_iters == 0 &&
        schedule.iterations > kTheoremIterationLimit) {
      log->error("theorem schedule needs T = {} iterations; pass --cap-iters to run a capped version",
                 theoretical);
      return kInvalidInput;
    }
  }
  config = apply_schedule(spec, config, flags.cap_iters);
  check_config(config);

  report["config"] = {{"epsilon", config.epsilon},
                      {"eta", config.eta},
                      {"iters", config.iters},
                      {"cap_iters", flags.cap_iters},
                      {"schedule", to_string(config.schedule)},
                      {"select", to_string(config.selection)},
                      {"delta", config.delta},
                      {"seed", config.seed},
                      {"init", flags.init},
                      {"scan_stride", config.scan_stride},
                      {"prox_max_iterations", config.prox.max_iterations},
                      {"prox_tolerance", config.prox.tolerance}};
  if (!theoretical.empty()) report["config"]["theoretical_iterations"] = theoretical;

  fs::create_directories(dir);
  log->info("running IPGmax: T={} eta={} on {} states", config.iters, format_g(config.eta, 6),
            spec.state_count);
  const RunTrace trace = run(spec, initial_policy(spec, flags.init, config.seed), config);
  log->info("selected t*={} with prox gap {}", trace.selected, format_g(trace.selected_gap, 6));
  if (trace.prox_warning) log->warn("a prox evaluation hit its iteration budget");

  const fs::path trace_path = dir / "trace.csv";
  const fs::path policies_path = dir / "policies.json";
  const fs::path report_path = dir / "report.json";
  write_trace(trace_path, trace, spec.team_count());

  report["selected_index"] = trace.selected;
  report["prox_gap"] = trace.selected_gap;
  report["prox_warning"] = trace.prox_warning;
  ordered_json gaps = ordered_json::array();
  for (const auto& [t, g] : trace.prox_gaps) gaps.push_back({{"t", t}, {"gap", g}});
  report["prox_gaps"] = gaps;
  report["final_phi"] = trace.phi.back();

  const double lp_eps = flags.lp_epsilon > 0.0 ? flags.lp_epsilon : lp_adv_epsilon(trace.selected_gap);
  ordered_json lp_report = {{"epsilon", lp_eps},
                            {"rows", lp_adv_row_count(spec)},
                            {"variables", spec.state_count * spec.adversary_actions},
                            {"mode", flags.optimize_lp ? "optimize" : "feasible"}};
  int code = kOk;
  try {
    const AdvNashResult ext = adv_nash_policy(
        spec, trace.x_hat, lp_eps, flags.optimize_lp ? LpAdvMode::Optimize : LpAdvMode::Feasible);
    lp_report["status"] = lp::to_string(ext.solution.status);
    lp_report["max_residual"] = ext.solution.max_residual;
    lp_report["pivots"] = ext.solution.pivots;
    write_policies(policies_path.string(), trace.x_hat, ext.policy, &ext.lambda);

    const NashGapReport gap = nash_gap(spec, trace.x_hat, ext.policy);
    report["nash_gap"] = gap_json(gap, game.map);
    report["extension_bound"] = extension_bound(spec, lp_eps);
    report["files"] = {{"trace", trace_path.string()},
                       {"policies", policies_path.string()},
                       {"report", report_path.string()}};
    log->info("certified epsilon {}", format_g(gap.epsilon_certified, 6));
  } catch (const LpAdvInfeasibleError& e) {
    lp_report["status"] = lp::to_string(lp::Status::Infeasible);
    lp_report["infeasibility"] = e.infeasibility();
    lp_report["max_violation"] = e.max_violation();
    lp_report["message"] = e.what();
    report["files"] = {{"trace", trace_path.string()}, {"report", report_path.string()}};
    log->error("{}", e.what());
    code = kLpInfeasible;
  }
  report["lp_adv"] = lp_report;
  report["wall_seconds"] = trace.wall_seconds;

  std::ofstream json_out(report_path);
  if (!json_out) throw FormatError("cannot write " + report_path.string());
  json_out << report.dump(2) << '\n';
  return code;
}

int cmd_solve(const SolveFlags& flags, const Logger& log) {
  LoadedGame game;
  try {
    game = load_game(flags);
  } catch (const Error& e) {
    log->error("{}", e.what());
    return kInvalidInput;
  }

  if (flags.jobs <= 1) return solve_one(flags, game, flags.config, flags.out_dir, log);

  std::vector<int> codes(flags.jobs, kOk);
  std::mutex failure_mutex;
  std::string failure;
  auto work = [&](std::size_t j) {
    IpgmaxConfig config = flags.config;
    config.seed = flags.config.seed + j;
    const fs::path dir = fs::path(flags.out_dir) / ("seed-" + std::to_string(config.seed));
    try {
      codes[j] = solve_one(flags, game, config, dir, log);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failure = e.what();
      codes[j] = kInvalidInput;
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(flags.jobs, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  std::size_t next = 0;
  std::mutex next_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t j;
        {
          std::lock_guard<std::mutex> lock(next_mutex);
          if (next >= flags.jobs) return;
          j = next++;
        }
        work(j);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (!failure.empty()) log->error("{}", failure);
  return *std::max_element(codes.begin(), codes.end());
}

int cmd_verify(const std::string& game_path, const std::string& policies_path, double epsilon,
               std::ostream& out, const Logger& log) {
  try {
    const GameSpec spec = read_game(game_path);
    const auto problems = validate_structure(spec);
    if (!problems.empty()) throw FormatError(game_path + ": " + problems.front().message);
    const PolicyFile policies = read_policies(policies_path, spec);
    std::string problem = check_policy(policies.team, 1e-9);
    if (problem.empty()) problem = check_policy(policies.adversary, 1e-9);
    if (!problem.empty()) throw FormatError(policies_path + ": " + problem);

    const NashGapReport gap = nash_gap(spec, policies.team, policies.adversary);
    const bool ok = gap.epsilon_certified <= epsilon + 1e-9;
    ordered_json report;
    report["team_gaps"] = gap.team_gaps;
    report["adversary_gap"] = gap.adversary_gap;
    report["epsilon_certified"] = gap.epsilon_certified;
    report["value"] = gap.value;
    report["epsilon"] = epsilon;
    report["is_epsilon_nash"] = ok;
    out << report.dump(2) << '\n';
    return ok ? kOk : kNotEquilibrium;
  } catch (const Error& e) {
    log->error("{}", e.what());
    return kInvalidInput;
  }
}

int cmd_gridworld(std::size_t side, const std::string& path, double gamma, double delta,
                  const Logger& log) {
  if (side < 2) {
    log->error("--n must be at least 2");
    return kInvalidInput;
  }
  try {
    write_game(grid_world(side, delta, gamma), path);
  } catch (const Error& e) {
    log->error("{}", e.what());
    return kInvalidInput;
  }
  log->info("wrote {} states to {}", grid_world_state_count(side), path);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log = make_logger(err);
  CLI::App app{"Nash equilibria of adversarial team Markov games", "atmg"};
  app.require_subcommand(1);

  SolveFlags solve;
  std::string schedule = "manual";
  std::string select = "prox";
  auto* solve_cmd = app.add_subcommand("solve", "Run IPGmax and extend to an approximate equilibrium");
  auto* game_opt = solve_cmd->add_option("--game", solve.game_path, "atmg-v1 game file");
  auto* grid_opt = solve_cmd->add_option("--gridworld", solve.gridworld, "Generate the grid world of this side");
  game_opt->excludes(grid_opt);
  solve_cmd->add_option("--gamma", solve.gamma, "Discount for --gridworld")->capture_default_str();
  solve_cmd->add_option("--epsilon", solve.config.epsilon, "Target precision")->capture_default_str();
  solve_cmd->add_option("--eta", solve.config.eta, "Step size (manual schedule)")->capture_default_str();
  solve_cmd->add_option("--iters", solve.config.iters, "Iterations (manual schedule)")->capture_default_str();
  solve_cmd->add_option("--cap-iters", solve.cap_iters, "Upper limit on the iteration count");
  solve_cmd->add_option("--schedule", schedule, "Step-size schedule")
      ->check(CLI::IsMember({"theorem", "proposition", "manual"}))
      ->capture_default_str();
  solve_cmd->add_option("--select", select, "Iterate selection")
      ->check(CLI::IsMember({"prox", "random"}))
      ->capture_default_str();
  solve_cmd->add_option("--delta", solve.config.delta, "Failure probability for random selection")
      ->capture_default_str();
  solve_cmd->add_option("--seed", solve.config.seed, "Random seed")->capture_default_str();
  solve_cmd->add_option("--stride", solve.config.scan_stride, "Prox scan stride (0 = T/100)");
  solve_cmd->add_option("--prox-iters", solve.config.prox.max_iterations, "Inner prox iteration budget")
      ->capture_default_str();
  solve_cmd->add_option("--prox-tol", solve.config.prox.tolerance, "Inner prox movement tolerance")
      ->capture_default_str();
  solve_cmd->add_option("--init", solve.init, "Initial team policy")
      ->check(CLI::IsMember({"uniform", "random"}))
      ->capture_default_str();
  solve_cmd->add_option("--lp-epsilon", solve.lp_epsilon, "Override the extension program's epsilon");
  solve_cmd->add_flag("--optimize-lp", solve.optimize_lp, "Optimize the extension program's objective");
  solve_cmd->add_option("--out", solve.out_dir, "Output directory")->required();
  solve_cmd->add_option("--jobs", solve.jobs, "Independent seeds to run")->check(CLI::PositiveNumber);

  std::string verify_game;
  std::string verify_policies;
  double verify_epsilon = 0.0;
  auto* verify_cmd = app.add_subcommand("verify", "Print the Nash gaps of a policy pair");
  verify_cmd->add_option("--game", verify_game, "atmg-v1 game file")->required();
  verify_cmd->add_option("--policies", verify_policies, "Policy file")->required();
  verify_cmd->add_option("--epsilon", verify_epsilon, "Accepted gap")->required();

  std::size_t grid_side = 0;
  std::string grid_out;
  double grid_gamma = 0.9;
  double grid_delta = kDefaultRewardMargin;
  auto* grid_cmd = app.add_subcommand("gridworld", "Write the landmark grid world as a game file");
  grid_cmd->add_option("--n", grid_side, "Grid side")->required();
  grid_cmd->add_option("--out", grid_out, "Output game file")->required();
  grid_cmd->add_option("--gamma", grid_gamma, "Discount")->capture_default_str();
  grid_cmd->add_option("--delta", grid_delta, "Reward margin")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (solve_cmd->parsed()) {
      if (solve.game_path.empty() && solve.gridworld == 0) {
        log->error("solve needs --game or --gridworld");
        return kInvalidInput;
      }
      solve.config.schedule = schedule == "theorem"       ? ScheduleMode::Theorem
                              : schedule == "proposition" ? ScheduleMode::Proposition
                                                          : ScheduleMode::Manual;
      solve.config.selection = select == "random" ? SelectionMode::Random : SelectionMode::ProxScan;
      try {
        check_config(solve.config);
      } catch (const std::invalid_argument& e) {
        log->error("{}", e.what());
        return kInvalidInput;
      }
      return cmd_solve(solve, log);
    }
    if (verify_cmd->parsed()) return cmd_verify(verify_game, verify_policies, verify_epsilon, out, log);
    return cmd_gridworld(grid_side, grid_out, grid_gamma, grid_delta, log);
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kInvalidInput;
  }
}

}  // namespace atmg::cli
