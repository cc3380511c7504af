// remest: command-line front end for the stage solver, the budget DP, the
// Monte Carlo simulator and the side-channel counterexample.
//
// Exit codes: 0 success, 2 invalid parameters, 3 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "remest/io.hpp"
#include "remest/remest.hpp"

namespace fs = std::filesystem;
using remest::io::fmt;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitInvariant = 3;

int exit_code_for(remest::Errc code) {
  switch (code) {
    case remest::Errc::InvalidArgument:
    case remest::Errc::CounterexampleOutOfRange:
    case remest::Errc::TargetOutOfRange:
    case remest::Errc::InfeasibleShift:
    case remest::Errc::UnsupportedBoundary:
    case remest::Errc::ZeroProbabilityRegion:
    case remest::Errc::DegenerateRegion:
      return kExitInvalid;
    default:
      return kExitInvariant;
  }
}

// "-" or empty means stdout. Relative paths land under $REMEST_OUT_DIR when it is set.
fs::path resolve_output(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("REMEST_OUT_DIR"); dir != nullptr && *dir != '\0') p = fs::path(dir) / p;
  }
  return p;
}

bool to_stdout(const std::string& out) { return out.empty() || out == "-"; }

// Writes via a callback and returns the path written, or "" for stdout.
template <class Writer>
std::string emit(const std::string& out, Writer&& write) {
  if (to_stdout(out)) {
    write(std::cout);
    std::cout.flush();
    return {};
  }
  const fs::path path = resolve_output(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw remest::Error(remest::Errc::InvalidArgument, "cannot write " + path.string());
  write(os);
  os.close();
  if (!os) throw remest::Error(remest::Errc::InvalidArgument, "failed writing " + path.string());
  return path.string();
}

void write_json(std::ostream& os, const nlohmann::json& j) { os << j.dump(2) << '\n'; }

remest::NoiseKind parse_noise(const std::string& s) {
  if (s == "gaussian") return remest::NoiseKind::Gaussian;
  if (s == "laplace") return remest::NoiseKind::Laplace;
  return remest::NoiseKind::Uniform;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 0) {
      throw remest::Error(remest::Errc::InvalidArgument, std::string(what) + ": expected non-negative integers");
    }
    out.push_back(v);
  }
  if (out.empty()) throw remest::Error(remest::Errc::InvalidArgument, std::string(what) + ": empty list");
  return out;
}

// ---- stage ----------------------------------------------------------------

struct StageArgs {
  double lambda = 1.0;
  double gamma = 1.0;
  double c1 = 0.1;
  double c2 = 1.0;
  std::string channels = "both";
  std::string format = "text";
  std::string out;
};

void cmd_stage(const StageArgs& a) {
  const remest::CostPair costs{a.c1, a.c2};
  const remest::Availability avail{a.channels == "both" || a.channels == "noisy",
                                   a.channels == "both" || a.channels == "perfect"};
  const remest::ThresholdPolicy pol = remest::solve_thresholds_laplace(a.lambda, a.gamma, costs, avail);
  const remest::SourceModel model = remest::SourceModel::laplace(a.lambda);
  const remest::StageSolution sol =
      remest::stage_cost(model, remest::ChannelSpec::from_snr(a.gamma), costs, pol);

  std::string branch;
  double r1 = 0.0, r2 = 0.0;
  bool have_residuals = false;
  if (!avail.noisy && !avail.perfect) {
    branch = "no channel available: silence";
  } else if (!avail.noisy) {
    branch = "perfect channel only: beta1 = beta2 = sqrt(c2)";
  } else if (!avail.perfect) {
    branch = "noisy channel only: beta2 = inf";
  } else if (pol.beta1 == pol.beta2) {
    branch = "perfect channel no dearer than noisy: beta1 = beta2 = sqrt(c2), noisy channel unused";
  } else {
    branch = "interior: beta1 < beta2 from the fixed point phi(beta2 - beta1) = 1/lambda + sqrt((c2 - c1)(1 + gamma))";
    std::tie(r1, r2) = remest::foc_residuals(model, a.gamma, costs, pol, remest::MomentMethod::ClosedForm);
    have_residuals = true;
  }
  const double delta = pol.beta1 == pol.beta2 ? 0.0 : pol.beta2 - pol.beta1;

  emit(a.out, [&](std::ostream& os) {
    if (a.format == "json") {
      nlohmann::json j;
      j["meta"] = {{"version", std::string(remest::kVersion)}};
      j["params"] = {{"lambda", a.lambda}, {"gamma", a.gamma}, {"c1", a.c1}, {"c2", a.c2}, {"channels", a.channels}};
      j["beta1"] = remest::io::json_number(pol.beta1);
      j["beta2"] = remest::io::json_number(pol.beta2);
      j["delta_beta"] = remest::io::json_number(delta);
      j["cost"] = remest::io::json_number(sol.cost);
      j["distortion"] = remest::io::json_number(sol.distortion_part);
      j["communication"] = remest::io::json_number(sol.comm_part);
      j["branch"] = branch;
      if (have_residuals) j["foc_residuals"] = {remest::io::json_number(r1), remest::io::json_number(r2)};
      write_json(os, j);
      return;
    }
    os << "beta1 " << fmt(pol.beta1) << '\n'
       << "beta2 " << fmt(pol.beta2) << '\n'
       << "delta_beta " << fmt(delta) << '\n'
       << "cost " << fmt(sol.cost) << '\n'
       << "distortion " << fmt(sol.distortion_part) << '\n'
       << "communication " << fmt(sol.comm_part) << '\n';
    if (have_residuals) os << "foc_residuals " << fmt(r1) << ' ' << fmt(r2) << '\n';
    os << "branch " << branch << '\n';
  });
}

// ---- dp -------------------------------------------------------------------

struct DpArgs {
  remest::DpConfig config{100, 40, 40, 1.0, 1.0};
  std::string format = "json";
  std::string out;
  int slice_t = 1;
  bool verify = false;
};

void cmd_dp(const DpArgs& a) {
  const remest::DpTable table = remest::solve(a.config);
  const std::string path = emit(a.out, [&](std::ostream& os) {
    if (a.format == "json") {
      write_json(os, remest::io::table_to_json(table));
    } else {
      remest::io::write_slice_csv(os, table, {a.slice_t, std::nullopt, std::nullopt});
    }
  });
  if (a.verify && !path.empty()) {
    if (a.format == "json") {
      std::ifstream in(path);
      const remest::DpTable back = remest::io::table_from_json(nlohmann::json::parse(in));
      remest::io::verify_slice_csv([&] {
        std::stringstream ss;
        remest::io::write_slice_csv(ss, back, {});
        return remest::io::read_csv(ss);
      }());
    } else {
      remest::io::verify_slice_csv(remest::io::read_csv_file(path));
    }
    std::cerr << "verify: ok\n";
  }
}

// ---- simulate -------------------------------------------------------------

struct SimArgs {
  remest::DpConfig config{100, 40, 40, 1.0, 1.0};
  std::string table_path;
  std::int64_t episodes = 10000;
  std::uint64_t seed = 1;
  std::string noise = "gaussian";
  unsigned threads = 0;
  std::string out;
  std::string trace_out;
  std::string path_out;
  std::int64_t trace_episode = 0;
  bool verify = false;
};

void cmd_simulate(const SimArgs& a) {
  std::unique_ptr<remest::DpTable> table;
  if (!a.table_path.empty()) {
    std::ifstream in(resolve_output(a.table_path));
    if (!in) throw remest::Error(remest::Errc::InvalidArgument, "cannot open table " + a.table_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw remest::Error(remest::Errc::InvalidArgument, std::string("table: ") + e.what());
    }
    table = std::make_unique<remest::DpTable>(remest::io::table_from_json(j));
  } else {
    table = std::make_unique<remest::DpTable>(remest::solve(a.config));
  }
  const remest::DpConfig& cfg = table->config();
  const remest::ChannelSpec chan = remest::ChannelSpec::from_snr(cfg.gamma, parse_noise(a.noise));
  const remest::McSummary s = remest::monte_carlo(*table, chan, a.episodes, a.seed, a.threads);
  emit(a.out, [&](std::ostream& os) {
    write_json(os, remest::io::summary_to_json(s, cfg, table->value(1, cfg.N1, cfg.N2), a.seed, a.noise));
  });

  if (a.trace_out.empty() && a.path_out.empty()) return;
  const std::uint64_t ep_seed = remest::derive_seed(a.seed, static_cast<std::uint64_t>(a.trace_episode));
  const auto trace = remest::run_episode(*table, chan, ep_seed);
  remest::io::Metadata meta = remest::io::config_metadata(cfg);
  meta.emplace_back("seed", std::to_string(a.seed));
  meta.emplace_back("episode", std::to_string(a.trace_episode));
  meta.emplace_back("noise", a.noise);
  if (!a.trace_out.empty()) {
    const std::string p = emit(a.trace_out, [&](std::ostream& os) { remest::io::write_trace_csv(os, trace, meta); });
    if (a.verify && !p.empty()) {
      remest::io::verify_trace_csv(remest::io::read_csv_file(p));
      std::cerr << "verify: trace ok\n";
    }
  }
  if (!a.path_out.empty()) {
    emit(a.path_out,
         [&](std::ostream& os) { remest::io::write_path_csv(os, remest::sample_path_export(trace), meta); });
  }
}

// ---- counterexample -------------------------------------------------------

struct CexArgs {
  double L = 1.0;
  double gamma = 1.0;
  double c1 = 0.01;
  double c2 = 0.05;
  std::int64_t samples = 1000000;
  std::uint64_t seed = 1;
  std::string format = "text";
  std::string out;
};

void cmd_counterexample(const CexArgs& a) {
  const auto setup = remest::CounterexampleSetup::make(a.L, a.gamma, {a.c1, a.c2});
  const remest::SourceModel model = setup.model();
  const remest::ChannelSpec chan = remest::ChannelSpec::from_snr(a.gamma);
  const double j_sym = remest::original_cost(model, chan, setup.costs, setup.symmetric);
  const double j_fold = remest::original_cost(model, chan, setup.costs, setup.folded);
  const double gap = remest::cost_gap(setup);
  const double j_side = remest::side_channel_cost(model, chan, setup.costs, setup.symmetric);
  const remest::GapReplay rep =
      a.samples >= 2 ? remest::replay_gap(setup, a.samples, a.seed) : remest::GapReplay{};
  emit(a.out, [&](std::ostream& os) {
    if (a.format == "json") {
      nlohmann::json j;
      j["meta"] = {{"version", std::string(remest::kVersion)}, {"seed", a.seed}};
      j["params"] = {{"L", a.L}, {"gamma", a.gamma}, {"c1", a.c1}, {"c2", a.c2}};
      j["beta1"] = remest::io::json_number(setup.thresholds.beta1);
      j["beta2"] = remest::io::json_number(setup.thresholds.beta2);
      j["cost_symmetric"] = remest::io::json_number(j_sym);
      j["cost_folded"] = remest::io::json_number(j_fold);
      j["cost_symmetric_with_sign"] = remest::io::json_number(j_side);
      j["gap"] = remest::io::json_number(gap);
      j["replay"] = {{"samples", rep.samples},
                     {"mean_gap", remest::io::json_number(rep.mean_gap)},
                     {"std_err", remest::io::json_number(rep.gap_std_err)}};
      write_json(os, j);
      return;
    }
    os << "beta1 " << fmt(setup.thresholds.beta1) << '\n'
       << "beta2 " << fmt(setup.thresholds.beta2) << '\n'
       << "cost_symmetric " << fmt(j_sym) << '\n'
       << "cost_folded " << fmt(j_fold) << '\n'
       << "cost_symmetric_with_sign " << fmt(j_side) << '\n'
       << "gap " << fmt(gap) << '\n';
    if (rep.samples > 0) {
      os << "replay_samples " << rep.samples << '\n'
         << "replay_gap " << fmt(rep.mean_gap) << '\n'
         << "replay_std_err " << fmt(rep.gap_std_err) << '\n';
    }
  });
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string axis = "n1";
  std::string n1_list;
  std::string n2_list;
  int T = 100;
  int max_budget = -1;
  double lambda = 1.0;
  double gamma = 1.0;
  std::string out;
  bool verify = false;
};

void cmd_sweep(const SweepArgs& a) {
  const bool along_n1 = a.axis == "n1";
  const std::string& fixed_src = along_n1 ? a.n2_list : a.n1_list;
  if (fixed_src.empty()) {
    throw remest::Error(remest::Errc::InvalidArgument,
                        along_n1 ? "sweep --axis n1 needs --n2 <list>" : "sweep --axis n2 needs --n1 <list>");
  }
  const std::vector<int> fixed = parse_int_list(fixed_src, along_n1 ? "--n2" : "--n1");
  const int top = a.max_budget >= 0 ? a.max_budget : a.T;
  int fixed_max = 0;
  for (int f : fixed) fixed_max = std::max(fixed_max, f);
  // One table covers every budget pair inside its box.
  const remest::DpConfig cfg{a.T, along_n1 ? top : fixed_max, along_n1 ? fixed_max : top, a.lambda, a.gamma};
  const remest::DpTable table = remest::solve(cfg);

  const std::string path = emit(a.out, [&](std::ostream& os) {
    remest::io::Metadata meta{{"axis", a.axis},
                              {"T", std::to_string(a.T)},
                              {"lambda", fmt(a.lambda)},
                              {"gamma", fmt(a.gamma)},
                              {"fixed", fixed_src}};
    remest::io::write_metadata(os, meta);
    os << "n1,n2,J\n";
    for (int f : fixed) {
      for (int b = 0; b <= top; ++b) {
        const int n1 = along_n1 ? b : f;
        const int n2 = along_n1 ? f : b;
        os << n1 << ',' << n2 << ',' << fmt(table.value(1, n1, n2)) << '\n';
      }
    }
  });
  if (a.verify && !path.empty()) {
    remest::io::verify_sweep_csv(remest::io::read_csv_file(path));
    std::cerr << "verify: ok\n";
  }
}

void add_model_options(CLI::App* sub, double& lambda, double& gamma) {
  sub->add_option("--lambda", lambda, "Laplace rate (source variance 2/lambda^2)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--gamma", gamma, "noisy-channel SNR P_T / sigma_V^2")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_budget_options(CLI::App* sub, remest::DpConfig& c) {
  sub->add_option("--T", c.T, "horizon")->check(CLI::Range(1, 100000))->capture_default_str();
  sub->add_option("--N1", c.N1, "noisy-channel budget")->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--N2", c.N2, "perfect-channel budget")->check(CLI::NonNegativeNumber)->capture_default_str();
  add_model_options(sub, c.lambda, c.gamma);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote estimation over a noisy and a perfect channel: solver, DP and simulator"};
  app.set_version_flag("--version", std::string(remest::kVersion));
  app.require_subcommand(1);

  StageArgs stage;
  auto* s_stage = app.add_subcommand("stage", "optimal single-stage thresholds for a Laplace source");
  add_model_options(s_stage, stage.lambda, stage.gamma);
  s_stage->add_option("--c1", stage.c1, "noisy-channel price")->check(CLI::NonNegativeNumber)->capture_default_str();
  s_stage->add_option("--c2", stage.c2, "perfect-channel price")->check(CLI::NonNegativeNumber)->capture_default_str();
  s_stage->add_option("--channels", stage.channels, "available channels")
      ->check(CLI::IsMember({"both", "noisy", "perfect", "none"}))
      ->capture_default_str();
  s_stage->add_option("--format", stage.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  s_stage->add_option("--out", stage.out, "output file (default stdout)");

  DpArgs dp;
  auto* s_dp = app.add_subcommand("dp", "solve the finite-horizon budget DP");
  add_budget_options(s_dp, dp.config);
  s_dp->add_option("--format", dp.format, "json table or csv slice")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  s_dp->add_option("--slice-t", dp.slice_t, "stage of the csv slice")->check(CLI::PositiveNumber)->capture_default_str();
  s_dp->add_option("--out", dp.out, "output file (default stdout)");
  s_dp->add_flag("--verify", dp.verify, "re-read the written file and check its invariants");

  SimArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Monte Carlo of the pipeline under the DP policy");
  add_budget_options(s_sim, sim.config);
  auto* table_opt = s_sim->add_option("--table", sim.table_path, "previously exported DP table (json)");
  for (const char* name : {"--T", "--N1", "--N2", "--lambda", "--gamma"}) table_opt->excludes(s_sim->get_option(name));
  s_sim->add_option("--episodes", sim.episodes)->check(CLI::PositiveNumber)->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  s_sim->add_option("--noise", sim.noise)
      ->check(CLI::IsMember({"gaussian", "laplace", "uniform"}))
      ->capture_default_str();
  s_sim->add_option("--threads", sim.threads, "worker threads (0 = all cores)")->capture_default_str();
  s_sim->add_option("--out", sim.out, "summary json (default stdout)");
  s_sim->add_option("--trace", sim.trace_out, "per-step trace csv of one episode");
  s_sim->add_option("--path", sim.path_out, "remaining-budget path csv of one episode");
  s_sim->add_option("--trace-episode", sim.trace_episode, "episode index for --trace/--path")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  s_sim->add_flag("--verify", sim.verify, "re-read the trace and check its invariants");

  CexArgs cex;
  auto* s_cex = app.add_subcommand("counterexample", "side-channel counterexample on a uniform source");
  s_cex->add_option("--L", cex.L, "half-width of the uniform support")->check(CLI::PositiveNumber)->capture_default_str();
  s_cex->add_option("--gamma", cex.gamma)->check(CLI::PositiveNumber)->capture_default_str();
  s_cex->add_option("--c1", cex.c1)->check(CLI::PositiveNumber)->capture_default_str();
  s_cex->add_option("--c2", cex.c2)->check(CLI::PositiveNumber)->capture_default_str();
  s_cex->add_option("--samples", cex.samples, "Monte Carlo replay size (0 to skip)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  s_cex->add_option("--seed", cex.seed)->capture_default_str();
  s_cex->add_option("--format", cex.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  s_cex->add_option("--out", cex.out, "output file (default stdout)");

  SweepArgs sweep;
  auto* s_sweep = app.add_subcommand("sweep", "J*(1, N1, N2) along one budget axis");
  s_sweep->add_option("--axis", sweep.axis)->check(CLI::IsMember({"n1", "n2"}))->capture_default_str();
  s_sweep->add_option("--n1", sweep.n1_list, "fixed N1 values, comma separated (axis n2)");
  s_sweep->add_option("--n2", sweep.n2_list, "fixed N2 values, comma separated (axis n1)");
  s_sweep->add_option("--T", sweep.T)->check(CLI::Range(1, 100000))->capture_default_str();
  s_sweep->add_option("--max", sweep.max_budget, "largest swept budget (default T)")->check(CLI::NonNegativeNumber);
  add_model_options(s_sweep, sweep.lambda, sweep.gamma);
  s_sweep->add_option("--out", sweep.out, "output csv (default stdout)");
  s_sweep->add_flag("--verify", sweep.verify, "re-read the csv and check monotonicity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*s_stage) cmd_stage(stage);
    if (*s_dp) cmd_dp(dp);
    if (*s_sim) cmd_simulate(sim);
    if (*s_cex) cmd_counterexample(cex);
    if (*s_sweep) cmd_sweep(sweep);
  } catch (const remest::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return 0;
}
