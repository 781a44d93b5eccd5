#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mrpeval/chains.hpp"
#include "mrpeval/csv.hpp"
#include "mrpeval/estimators.hpp"
#include "mrpeval/exact.hpp"
#include "mrpeval/experiments.hpp"
#include "mrpeval/sampler.hpp"
#include "mrpeval/variance.hpp"

namespace {

using namespace mrpeval;

struct ChainCli {
  int n = 0;
  bool lazy = false;
  double denom = 0.0;  // 0: family default
  std::string mu = "uniform";
  std::string config_path;
};

void add_chain_options(CLI::App* cmd, ChainCli& c) {
  auto* n_opt = cmd->add_option("--n", c.n, "number of states (at least 4)");
  cmd->add_flag("--lazy", c.lazy, "use the lazy family (denominator 10)");
  cmd->add_option("--denom", c.denom, "override the laziness denominator");
  cmd->add_option("--mu", c.mu, "initial distribution on D")
      ->check(CLI::IsMember({"uniform", "invariant"}));
  auto* cfg_opt = cmd->add_option("--config", c.config_path, "chain config file (key=value lines)")
                      ->check(CLI::ExistingFile);
  cfg_opt->excludes(n_opt);
}

ChainSpec make_spec(const ChainCli& c) {
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ConfigError("cannot open config file " + c.config_path);
    return ChainSpec::parse(in);
  }
  if (c.n == 0) throw ConfigError("either --n or --config is required");
  ChainSpec spec;
  spec.family = c.lazy ? Family::lazy_bistable : Family::bistable;
  spec.n = c.n;
  spec.laziness_denominator = c.denom > 0.0 ? c.denom : (c.lazy ? 10.0 : 2.0);
  spec.mu_mode = c.mu == "invariant" ? MuMode::invariant_conditioned : MuMode::uniform_on_d;
  spec.validate();
  return spec;
}

Quantity parse_quantity(const std::string& q) {
  return q == "mfpt" ? Quantity::mfpt : Quantity::committor;
}

Mrp build_with_reward(const ChainSpec& spec, Quantity q) {
  Mrp m = build_chain(spec);
  return q == Quantity::mfpt ? with_mfpt_reward(std::move(m)) : with_committor_reward(std::move(m));
}

// Plain CSV emitter for subcommand output; "-" targets stdout.
void emit_csv(const std::string& out, const std::vector<std::string>& comments,
              const std::string& header, const std::vector<std::string>& lines) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (out != "-") {
    file.open(out);
    if (!file) throw ConfigError("cannot open output file " + out);
    os = &file;
  }
  *os << "# " << kToolVersion << "\n";
  for (const auto& c : comments) *os << "# " << c << "\n";
  *os << header << "\n";
  for (const auto& l : lines) *os << l << "\n";
  if (!*os) throw NumericalError("write failed for " + out);
}

std::vector<std::string> spec_comments(const ChainSpec& spec) {
  std::vector<std::string> lines;
  std::istringstream ss(spec.to_config());
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

int run(int argc, char** argv) {
  CLI::App app{"tabular policy evaluation on absorbing Markov reward processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // build-chain
  auto* cmd_build = app.add_subcommand("build-chain", "construct a chain and write its matrices");
  ChainCli bc_chain;
  std::string bc_out = "-";
  add_chain_options(cmd_build, bc_chain);
  cmd_build->add_option("--out", bc_out, "output directory ('-' prints a summary)");

  // exact
  auto* cmd_exact = app.add_subcommand("exact", "solve the lag-tau value system exactly");
  ChainCli ex_chain;
  std::string ex_quantity = "mfpt", ex_out = "-";
  int ex_tau = 1;
  add_chain_options(cmd_exact, ex_chain);
  cmd_exact->add_option("--quantity", ex_quantity, "mfpt or committor")
      ->check(CLI::IsMember({"mfpt", "committor"}));
  cmd_exact->add_option("--tau", ex_tau, "lag of the solved system (answer is lag independent)")
      ->check(CLI::PositiveNumber);
  cmd_exact->add_option("--out", ex_out, "output CSV path ('-' for stdout)");

  // sample
  auto* cmd_sample = app.add_subcommand("sample", "draw trajectories and write a dataset");
  ChainCli sm_chain;
  std::int64_t sm_m = 0, sm_cap = 100000000;
  int sm_tau = 1, sm_threads = 1;
  std::uint64_t sm_seed = 1;
  bool sm_until = false, sm_force = false;
  std::string sm_out = "-";
  add_chain_options(cmd_sample, sm_chain);
  cmd_sample->add_option("--m", sm_m, "number of trajectories")->required()->check(CLI::PositiveNumber);
  cmd_sample->add_option("--tau", sm_tau, "truncation lag")->check(CLI::PositiveNumber);
  cmd_sample->add_flag("--until-escape", sm_until, "run each trajectory to escape");
  cmd_sample->add_option("--cap", sm_cap, "step cap for until-escape runs")->check(CLI::PositiveNumber);
  cmd_sample->add_flag("--force", sm_force, "accept a cap below 10x the expected escape time");
  cmd_sample->add_option("--seed", sm_seed, "master seed");
  cmd_sample->add_option("--threads", sm_threads, "sampling threads (output is thread-count independent)")
      ->check(CLI::PositiveNumber);
  cmd_sample->add_option("--out", sm_out, "dataset path ('-' for stdout)");

  // estimate
  auto* cmd_est = app.add_subcommand("estimate", "run an estimator on a stored dataset");
  ChainCli es_chain;
  std::string es_quantity = "mfpt", es_method = "lstd", es_data, es_out = "-";
  int es_tau = 1;
  add_chain_options(cmd_est, es_chain);
  cmd_est->add_option("--quantity", es_quantity, "mfpt or committor")
      ->check(CLI::IsMember({"mfpt", "committor"}));
  cmd_est->add_option("--method", es_method, "lstd or mc")->check(CLI::IsMember({"lstd", "mc"}));
  cmd_est->add_option("--data", es_data, "dataset file")->required()->check(CLI::ExistingFile);
  cmd_est->add_option("--tau", es_tau, "lag for the lstd method")->check(CLI::PositiveNumber);
  cmd_est->add_option("--out", es_out, "output CSV path ('-' for stdout)");

  // variance
  auto* cmd_var = app.add_subcommand("variance", "exact asymptotic variance of the lag estimator");
  ChainCli va_chain;
  std::string va_quantity = "mfpt", va_out = "-";
  int va_tau = 1;
  add_chain_options(cmd_var, va_chain);
  cmd_var->add_option("--quantity", va_quantity, "mfpt or committor")
      ->check(CLI::IsMember({"mfpt", "committor"}));
  cmd_var->add_option("--tau", va_tau, "estimator lag")->check(CLI::PositiveNumber);
  cmd_var->add_option("--out", va_out, "output CSV path ('-' for stdout)");

  // bound
  auto* cmd_bound = app.add_subcommand("bound", "relative-variance upper bounds");
  ChainCli bo_chain;
  std::string bo_quantity = "mfpt", bo_q_out, bo_out;
  int bo_tau = 1;
  bool bo_fit = false;
  double bo_beta = 0.5, bo_c = kDefaultCThreshold;
  add_chain_options(cmd_bound, bo_chain);
  cmd_bound->add_option("--out", bo_out, "write the scalar report as CSV");
  cmd_bound->add_option("--quantity", bo_quantity, "mfpt or committor")
      ->check(CLI::IsMember({"mfpt", "committor"}));
  cmd_bound->add_option("--tau", bo_tau, "estimator lag")->check(CLI::PositiveNumber);
  cmd_bound->add_flag("--fit", bo_fit, "also fit the dimension-explicit constants");
  cmd_bound->add_option("--beta", bo_beta, "Gaussian-decay rate for --fit");
  cmd_bound->add_option("--c-threshold", bo_c, "minorizing edge threshold for --fit");
  cmd_bound->add_option("--q-out", bo_q_out, "write the escape-splitting matrix Q as CSV");

  // diagnose
  auto* cmd_diag = app.add_subcommand("diagnose", "spectral and closed-form cross checks");
  std::vector<int> dg_nlist{20, 40, 80};
  int dg_tau = 1;
  std::string dg_out;
  cmd_diag->add_option("--n-list", dg_nlist, "chain sizes")->delimiter(',');
  cmd_diag->add_option("--tau", dg_tau, "lag for the resolvent checks")->check(CLI::PositiveNumber);
  cmd_diag->add_option("--out", dg_out, "output directory for the CSV report");

  // experiment
  auto* cmd_exp = app.add_subcommand("experiment", "run a named experiment and write its CSV tree");
  ExperimentConfig cfg;
  cmd_exp->add_option("name", cfg.name, "fig-mfpt | fig-committor | lag-sweep | invariant-mu | diagnostics")
      ->required()
      ->check(CLI::IsMember({"fig-mfpt", "fig-committor", "lag-sweep", "invariant-mu", "diagnostics"}));
  cmd_exp->add_option("--out", cfg.out_dir, "output directory")->required();
  cmd_exp->add_option("--n-list", cfg.n_list, "chain sizes")->delimiter(',');
  cmd_exp->add_option("--tau", cfg.tau, "estimator lag")->check(CLI::PositiveNumber);
  cmd_exp->add_option("--tau-min", cfg.tau_min, "smallest lag in the sweep")->check(CLI::PositiveNumber);
  cmd_exp->add_option("--tau-max", cfg.tau_max, "largest lag in the sweep")->check(CLI::PositiveNumber);
  cmd_exp->add_option("--m", cfg.m_override, "trajectories per replica (default 10 n^3)");
  cmd_exp->add_option("--replicas", cfg.replicas, "independent replicas")->check(CLI::PositiveNumber);
  cmd_exp->add_option("--seed", cfg.master_seed, "master seed");
  cmd_exp->add_option("--threads", cfg.threads, "sampling threads")->check(CLI::PositiveNumber);
  cmd_exp->add_option("--beta", cfg.beta, "Gaussian-decay rate");
  cmd_exp->add_option("--c-threshold", cfg.c_threshold, "minorizing edge threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (cmd_build->parsed()) {
    const ChainSpec spec = make_spec(bc_chain);
    const Mrp m = build_chain(spec);
    if (bc_out == "-") {
      std::cout << spec.to_config();
      std::cout << "states_in_D=" << m.D.size() << "\n";
      std::cout << "expected_escape_time=" << fmt17(expected_escape_time(m)) << "\n";
      return 0;
    }
    std::filesystem::create_directories(bc_out);
    {
      std::ofstream cf(bc_out + "/chain.cfg");
      cf << spec.to_config();
    }
    write_matrix_csv(bc_out + "/P.csv", m.P, spec_comments(spec));
    write_vector_csv(bc_out + "/mu.csv", m.mu, spec_comments(spec), "probability");
    write_vector_csv(bc_out + "/p.csv", invariant_distribution(spec.n), spec_comments(spec),
                     "probability");
    return 0;
  }

  if (cmd_exact->parsed()) {
    const ChainSpec spec = make_spec(ex_chain);
    const Quantity q = parse_quantity(ex_quantity);
    const Mrp m = build_with_reward(spec, q);
    const ValueFunction v = solve_value(m, ex_tau, q);
    std::vector<std::string> lines;
    for (int i = 0; i < m.n; ++i) lines.push_back(std::to_string(i + 1) + "," + fmt17(v.u[i]));
    auto comments = spec_comments(spec);
    comments.push_back("quantity=" + ex_quantity);
    comments.push_back("tau=" + std::to_string(ex_tau));
    emit_csv(ex_out, comments, "state,value", lines);
    return 0;
  }

  if (cmd_sample->parsed()) {
    const ChainSpec spec = make_spec(sm_chain);
    const Mrp m = build_chain(spec);
    TrajectoryDataset ds;
    if (sm_until) {
      const double et = expected_escape_time(m);
      if (static_cast<double>(sm_cap) < 10.0 * et && !sm_force) {
        throw ConfigError("sample: cap " + std::to_string(sm_cap) +
                          " is below 10x the expected escape time " + fmt17(et) +
                          "; pass --force to proceed");
      }
      ds = sample_until_escape(m, sm_m, sm_seed, sm_cap, sm_threads);
    } else {
      ds = sample_dataset(m, sm_m, sm_tau, sm_seed, sm_threads);
    }
    if (sm_out == "-") {
      write_dataset(ds, std::cout);
    } else {
      std::ofstream out(sm_out);
      if (!out) throw ConfigError("cannot open output file " + sm_out);
      write_dataset(ds, out);
      if (!out) throw NumericalError("write failed for " + sm_out);
    }
    if (ds.unfinished > 0) {
      std::cerr << "warning: " << ds.unfinished << " trajectories hit the step cap\n";
    }
    return 0;
  }

  if (cmd_est->parsed()) {
    const ChainSpec spec = make_spec(es_chain);
    const Quantity q = parse_quantity(es_quantity);
    const Mrp m = build_with_reward(spec, q);
    std::ifstream in(es_data);
    if (!in) throw ConfigError("cannot open dataset " + es_data);
    const TrajectoryDataset ds = read_dataset(in, m);
    EstimateResult res;
    if (es_method == "lstd") {
      res = lstd_solve(empirical_kernels(ds, es_tau), m, es_tau);
    } else {
      res = mc_estimate(ds, m);
    }
    std::vector<std::string> lines;
    for (int i = 0; i < m.n; ++i) {
      lines.push_back(std::to_string(i + 1) + "," + fmt17(res.u[i]) + "," +
                      std::to_string(static_cast<int>(res.defined[static_cast<size_t>(i)])));
    }
    auto comments = spec_comments(spec);
    comments.push_back("quantity=" + es_quantity);
    comments.push_back("method=" + es_method);
    if (es_method == "lstd") comments.push_back("tau=" + std::to_string(es_tau));
    comments.push_back("failure=" + std::string(to_string(res.failure)));
    emit_csv(es_out, comments, "state,value,defined", lines);
    return 0;
  }

  if (cmd_var->parsed()) {
    const ChainSpec spec = make_spec(va_chain);
    const Quantity q = parse_quantity(va_quantity);
    const Mrp m = build_with_reward(spec, q);
    const VarianceReport rep = sigma_asymptotic(m, va_tau);
    std::vector<std::string> lines;
    for (int i = 0; i < m.n; ++i) {
      lines.push_back(std::to_string(i + 1) + "," + fmt17(rep.sigma_sq[i]) + "," +
                      fmt17(rep.rel_avar[i]) + "," + fmt17(rep.inner_expectation[i]));
    }
    auto comments = spec_comments(spec);
    comments.push_back("quantity=" + va_quantity);
    comments.push_back("tau=" + std::to_string(va_tau));
    emit_csv(va_out, comments, "state,sigma_sq,rel_avar,inner_expectation", lines);
    return 0;
  }

  if (cmd_bound->parsed()) {
    const ChainSpec spec = make_spec(bo_chain);
    const Quantity q = parse_quantity(bo_quantity);
    const Mrp m = build_with_reward(spec, q);
    const bool zero_on_d = q == Quantity::committor;
    const double b = avar_bound(m, bo_tau, zero_on_d);
    const VarianceReport rep = sigma_asymptotic(m, bo_tau);
    double max_rel = 0.0;
    for (int i : m.D.indices()) max_rel = std::max(max_rel, rep.rel_avar[i]);
    std::cout << "bound=" << fmt17(b) << "\n";
    std::cout << "max_rel_avar=" << fmt17(max_rel) << "\n";
    std::cout << "slack=" << fmt17(b / max_rel) << "\n";
    std::vector<std::string> scalar_names{"bound", "max_rel_avar"};
    std::vector<std::string> scalar_vals{fmt17(b), fmt17(max_rel)};
    if (bo_fit) {
      const AssumptionReport ar = fit_assumption_constants(m, bo_tau, bo_c, bo_beta);
      const DimensionBoundCheck chk = dimension_bound_check(m, bo_tau, ar);
      std::cout << "alpha=" << fmt17(ar.alpha) << "\n";
      std::cout << "c_fit=" << fmt17(ar.c_fit) << "\n";
      std::cout << "connected=" << (ar.connected ? 1 : 0) << "\n";
      std::cout << "dimension_bound=" << fmt17(ar.bound) << "\n";
      std::cout << "dimension_bound_zero_reward=" << fmt17(ar.bound_zero_reward) << "\n";
      std::cout << "dimension_margin=" << fmt17(chk.margin) << "\n";
      scalar_names.insert(scalar_names.end(),
                          {"alpha", "c", "beta", "c_fit", "dimension_bound", "connected"});
      scalar_vals.insert(scalar_vals.end(),
                         {fmt17(ar.alpha), fmt17(ar.c), fmt17(ar.beta), fmt17(ar.c_fit),
                          fmt17(ar.bound), ar.connected ? "1" : "0"});
    }
    if (!bo_out.empty()) {
      auto comments = spec_comments(spec);
      comments.push_back("quantity=" + bo_quantity);
      comments.push_back("tau=" + std::to_string(bo_tau));
      CsvWriter w(bo_out);
      for (const auto& c : comments) w.comment(c);
      w.columns(scalar_names);
      w.row(scalar_vals);
      w.close();
    }
    if (!bo_q_out.empty()) {
      auto comments = spec_comments(spec);
      comments.push_back("tau=" + std::to_string(bo_tau));
      comments.push_back("escape splitting probabilities Q(k,l)");
      write_matrix_csv(bo_q_out, q_tau(m, bo_tau).Q, comments);
    }
    return 0;
  }

  if (cmd_diag->parsed()) {
    ExperimentConfig dcfg;
    dcfg.name = "diagnostics";
    dcfg.n_list = dg_nlist;
    dcfg.tau = dg_tau;
    dcfg.out_dir = dg_out;
    const auto rows = run_diagnostics(dcfg);
    std::cout << "n,tau,lambda_max,e_nu_t,resolvent_inf_norm,escape_bound_margin,spectral_gap,"
              << "mfpt_mid_closed,mfpt_mid_dense,committor_u2_closed,committor_u2_dense\n";
    for (const auto& r : rows) {
      std::cout << r.n << "," << r.tau << "," << fmt17(r.lambda_max) << "," << fmt17(r.e_nu_t)
                << "," << fmt17(r.resolvent_inf_norm) << "," << fmt17(r.escape_bound_margin) << ","
                << fmt17(r.spectral_gap) << "," << fmt17(r.mfpt_mid_closed) << ","
                << fmt17(r.mfpt_mid_dense) << "," << fmt17(r.committor_u2_closed) << ","
                << fmt17(r.committor_u2_dense) << "\n";
    }
    return 0;
  }

  if (cmd_exp->parsed()) {
    run_experiment(cfg);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mrpeval::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mrpeval::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
