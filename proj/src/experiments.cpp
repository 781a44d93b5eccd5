#include "mrpeval/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "mrpeval/csv.hpp"
#include "mrpeval/sampler.hpp"

namespace mrpeval {

namespace {

ChainSpec spec_for(const ExperimentConfig& cfg, int n, Family family, MuMode mu_mode) {
  ChainSpec s;
  s.family = family;
  s.n = n;
  s.laziness_denominator = family == Family::lazy_bistable ? 10.0 : 2.0;
  s.mu_mode = mu_mode;
  (void)cfg;
  return s;
}

Mrp with_reward(Mrp m, Quantity q) {
  return q == Quantity::mfpt ? with_mfpt_reward(std::move(m)) : with_committor_reward(std::move(m));
}

std::vector<std::string> config_echo(const ChainSpec& spec, const ExperimentConfig& cfg,
                                     Quantity q, std::int64_t m_traj) {
  std::vector<std::string> lines;
  std::istringstream ss(spec.to_config());
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  lines.push_back("quantity=" + std::string(to_string(q)));
  lines.push_back("tau=" + std::to_string(cfg.tau));
  if (m_traj > 0) {
    lines.push_back("M=" + std::to_string(m_traj));
    lines.push_back("replicas=" + std::to_string(cfg.replicas));
  }
  lines.push_back("master_seed=" + std::to_string(cfg.master_seed));
  return lines;
}

std::string table_dir(const ExperimentConfig& cfg, int n) {
  const std::string dir = cfg.out_dir + "/" + cfg.name + "/n" + std::to_string(n);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_mse_table(const ExperimentConfig& cfg, const ChainSpec& spec, const MseTable& t) {
  const std::string dir = table_dir(cfg, t.n);
  const std::string q = to_string(t.quantity);
  const auto echo = config_echo(spec, cfg, t.quantity, t.m);

  {
    CsvWriter w(dir + "/" + q + "_value.csv");
    for (const auto& h : echo) w.comment(h);
    w.columns({"state", "value"});
    for (const auto& r : t.rows) w.row({std::to_string(r.state), fmt17(r.exact_u)});
    w.close();
  }
  {
    CsvWriter w(dir + "/" + q + "_lstd.csv");
    for (const auto& h : echo) w.comment(h);
    w.comment("replicas_failed=" + std::to_string(t.replicas_failed));
    w.columns({"state", "exact_value", "rel_avar_exact", "rel_mse_empirical", "failure_rate"});
    for (const auto& r : t.rows) {
      w.row({std::to_string(r.state), fmt17(r.exact_u), fmt17(r.rel_avar),
             r.mse_defined ? fmt17(r.empirical_rel_mse) : "undefined", fmt17(r.failure_rate)});
    }
    w.close();
  }
  {
    CsvWriter w(dir + "/" + q + "_mc.csv");
    for (const auto& h : echo) w.comment(h);
    w.columns({"state", "rel_avar_exact"});
    for (std::size_t a = 0; a < t.rows.size(); ++a) {
      w.row({std::to_string(t.rows[a].state), fmt17(t.mc_rel_avar[a])});
    }
    w.close();
  }
}

}  // namespace

std::vector<MseTable> run_fig_experiment(const ExperimentConfig& cfg, Quantity q,
                                         MuMode mu_mode) {
  std::vector<MseTable> out;
  for (const int n : cfg.n_list) {
    const ChainSpec spec = spec_for(cfg, n, Family::bistable, mu_mode);
    const Mrp m = with_reward(build_chain(spec), q);
    const Vector u = solve_value(m, cfg.tau, q).u;
    const VarianceReport var = sigma_asymptotic(m, cfg.tau);
    const Vector mc_ref = mc_relative_avar(m);

    MseTable t;
    t.n = n;
    t.quantity = q;
    t.m = cfg.m_for(n);
    t.replicas = cfg.replicas;

    const std::vector<int>& didx = m.D.indices();
    std::vector<double> sq_err(didx.size(), 0.0);
    std::vector<std::int64_t> ok_count(didx.size(), 0);

    for (int r = 0; r < cfg.replicas; ++r) {
      const std::uint64_t seed = replica_seed(cfg.master_seed, static_cast<std::uint64_t>(r));
      const TrajectoryDataset ds = sample_dataset(m, t.m, cfg.tau, seed, cfg.threads);
      const EmpiricalKernels ek = empirical_kernels(ds, cfg.tau);
      const EstimateResult est = lstd_solve(ek, m, cfg.tau);
      if (est.failure != FailureKind::none) {
        ++t.replicas_failed;
      }
      for (std::size_t a = 0; a < didx.size(); ++a) {
        const int i = didx[a];
        if (est.failure == FailureKind::none && est.defined[static_cast<size_t>(i)]) {
          const double e = est.u[i] - u[i];
          sq_err[a] += e * e;
          ++ok_count[a];
        }
      }
    }
    t.failure_rate = cfg.replicas > 0
                         ? static_cast<double>(t.replicas_failed) / cfg.replicas
                         : 0.0;

    for (std::size_t a = 0; a < didx.size(); ++a) {
      const int i = didx[a];
      MseRow row;
      row.state = i + 1;
      row.exact_u = u[i];
      row.rel_avar = var.rel_avar[i];
      row.mse_defined = ok_count[a] > 0;
      if (row.mse_defined) {
        const double mse = sq_err[a] / static_cast<double>(ok_count[a]);
        row.empirical_rel_mse = static_cast<double>(t.m) * mse / (u[i] * u[i]);
      }
      row.failure_rate =
          cfg.replicas > 0
              ? 1.0 - static_cast<double>(ok_count[a]) / cfg.replicas
              : 0.0;
      t.rows.push_back(row);
      t.mc_rel_avar.push_back(mc_ref[i]);
    }

    if (!cfg.out_dir.empty()) write_mse_table(cfg, spec, t);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<MseTable> run_invariant_mu(const ExperimentConfig& cfg, Quantity q) {
  return run_fig_experiment(cfg, q, MuMode::invariant_conditioned);
}

std::vector<LagRow> run_lag_sweep(const ExperimentConfig& cfg, Quantity q) {
  if (cfg.tau_min < 1 || cfg.tau_max < cfg.tau_min) {
    throw ConfigError("lag sweep: need 1 <= tau_min <= tau_max");
  }
  const int n = 40;
  const ChainSpec spec = spec_for(cfg, n, Family::lazy_bistable, MuMode::uniform_on_d);
  const Mrp m = with_reward(build_chain(spec), q);
  const bool zero_on_d = q == Quantity::committor;

  std::vector<LagRow> rows;
  for (int tau = cfg.tau_min; tau <= cfg.tau_max; ++tau) {
    LagRow r;
    r.tau = tau;
    const VarianceReport var = sigma_asymptotic(m, tau);
    for (int i : m.D.indices()) r.max_rel_avar = std::max(r.max_rel_avar, var.rel_avar[i]);
    r.bound = avar_bound(m, tau, zero_on_d);
    rows.push_back(r);
  }

  if (!cfg.out_dir.empty()) {
    const std::string dir = table_dir(cfg, n);
    CsvWriter w(dir + "/" + std::string(to_string(q)) + ".csv");
    for (const auto& h : config_echo(spec, cfg, q, 0)) w.comment(h);
    w.comment("tau range " + std::to_string(cfg.tau_min) + ".." + std::to_string(cfg.tau_max));
    w.columns({"tau", "max_rel_avar", "bound"});
    for (const auto& r : rows) {
      w.row({std::to_string(r.tau), fmt17(r.max_rel_avar), fmt17(r.bound)});
    }
    w.close();
  }
  return rows;
}

std::vector<DiagnosticsRow> run_diagnostics(const ExperimentConfig& cfg) {
  std::vector<DiagnosticsRow> rows;
  for (const int n : cfg.n_list) {
    const ChainSpec spec = spec_for(cfg, n, Family::bistable, MuMode::uniform_on_d);
    const Mrp base = build_chain(spec);

    DiagnosticsRow r;
    r.n = n;
    r.tau = cfg.tau;
    const QuasiStationaryReport qsd = quasi_stationary_report(base, cfg.tau);
    r.lambda_max = qsd.lambda_max;
    r.e_nu_t = qsd.e_nu_t;
    r.resolvent_inf_norm = qsd.resolvent_inf_norm;
    r.escape_bound_margin = qsd.escape_bound_lhs / qsd.escape_bound_rhs;
    r.spectral_gap = spectral_gap_bound(n);

    if (n % 2 == 1) {
      r.mfpt_mid_closed = mfpt_midpoint_closed_form(n);
      const Vector u = solve_value(with_mfpt_reward(base), 1, Quantity::mfpt).u;
      r.mfpt_mid_dense = u[(n - 1) / 2];
    } else {
      r.mfpt_mid_closed = std::numeric_limits<double>::quiet_NaN();
      r.mfpt_mid_dense = std::numeric_limits<double>::quiet_NaN();
    }
    r.committor_u2_closed = committor_u2_closed_form(n);
    r.committor_u2_dense = solve_value(with_committor_reward(base), 1, Quantity::committor).u[1];
    rows.push_back(r);
  }

  if (!cfg.out_dir.empty()) {
    const std::string dir = cfg.out_dir + "/" + cfg.name;
    std::filesystem::create_directories(dir);
    CsvWriter w(dir + "/diagnostics.csv");
    w.comment("family=bistable");
    w.comment("tau=" + std::to_string(cfg.tau));
    w.columns({"n", "tau", "lambda_max", "e_nu_t", "resolvent_inf_norm", "escape_bound_margin",
               "spectral_gap", "mfpt_mid_closed", "mfpt_mid_dense", "committor_u2_closed",
               "committor_u2_dense"});
    for (const auto& r : rows) {
      w.row({std::to_string(r.n), std::to_string(r.tau), fmt17(r.lambda_max), fmt17(r.e_nu_t),
             fmt17(r.resolvent_inf_norm), fmt17(r.escape_bound_margin), fmt17(r.spectral_gap),
             fmt17(r.mfpt_mid_closed), fmt17(r.mfpt_mid_dense), fmt17(r.committor_u2_closed),
             fmt17(r.committor_u2_dense)});
    }
    w.close();
  }
  return rows;
}

void run_experiment(const ExperimentConfig& cfg) {
  if (cfg.name == "fig-mfpt") {
    run_fig_experiment(cfg, Quantity::mfpt, MuMode::uniform_on_d);
  } else if (cfg.name == "fig-committor") {
    run_fig_experiment(cfg, Quantity::committor, MuMode::uniform_on_d);
  } else if (cfg.name == "lag-sweep") {
    run_lag_sweep(cfg, Quantity::mfpt);
    run_lag_sweep(cfg, Quantity::committor);
  } else if (cfg.name == "invariant-mu") {
    run_invariant_mu(cfg, Quantity::mfpt);
    run_invariant_mu(cfg, Quantity::committor);
  } else if (cfg.name == "diagnostics") {
    run_diagnostics(cfg);
  } else {
    throw ConfigError("unknown experiment '" + cfg.name + "'");
  }
}

}  // namespace mrpeval
