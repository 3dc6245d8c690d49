// cobalt command line: embed catalogs, run the optimizer and baselines,
// enumerate small problems exactly, aggregate run logs into plot data, and
// sweep sensitivity parameters.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cobalt/baselines.hpp"
#include "cobalt/errors.hpp"
#include "cobalt/loop.hpp"
#include "cobalt/manifold.hpp"
#include "cobalt/run_log.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);  // plain string value
  }
}

cobalt::RunConfig load_config_with_overrides(const std::string& path,
                                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw cobalt::ParseError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw cobalt::ParseError("config file '" + path + "': " + e.what());
  }
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw cobalt::ValidationError("override '" + kv + "' must look like key=value");
    j[kv.substr(0, eq)] = parse_override_value(kv.substr(eq + 1));
  }
  return cobalt::config_from_json(j);
}

void apply_seed_sources(cobalt::RunConfig& cfg, bool seed_flag_set, std::uint64_t seed_flag) {
  if (const char* env = std::getenv("COBALT_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  }
  if (seed_flag_set) cfg.seed = seed_flag;
}

void write_manifest(const fs::path& out, const cobalt::RunConfig& cfg,
                    const cobalt::RunResult& result, const std::vector<std::string>& outputs) {
  json m;
  m["code_version"] = cobalt::kCodeVersion;
  m["config"] = cobalt::config_to_json(cfg);
  m["config_hash"] = cobalt::config_hash(cfg);
  m["catalog_hash"] = result.catalog_hash;
  m["anchors_hash"] = result.anchors_hash;
  m["method"] = result.method;
  m["outputs"] = outputs;
  m["timestamp"] = static_cast<long long>(std::time(nullptr));
  std::ofstream f(out);
  if (!f) throw cobalt::Error("cannot write manifest '" + out.string() + "'");
  f << m.dump(2) << "\n";
}

cobalt::RunResult dispatch_run(const std::string& method, const cobalt::RunConfig& cfg) {
  if (method == "cobalt") return cobalt::run_cobalt(cfg);
  cobalt::BaselineConfig bc;
  bc.method = method;
  bc.run = cfg;
  return cobalt::run_baseline(bc);
}

// ---------------------------------------------------------------------------
// embed

int cmd_embed(const std::string& catalog_path, int k, int m, const std::string& method,
              const std::string& out) {
  cobalt::Catalog catalog = cobalt::load_catalog(catalog_path);
  cobalt::AnchorSet anchors = method == "pca" ? cobalt::embed_pca(catalog, m)
                                              : cobalt::embed_isomap(catalog, k, m);
  cobalt::save_anchors(anchors, catalog.ids, k, out);
  std::cout << "anchors " << out << " n=" << anchors.size() << " m=" << anchors.m
            << " method=" << anchors.source << "\n";
  std::cout << "residual_stress " << anchors.residual_stress << "\n";
  std::cout << "content_hash " << anchors.content_hash << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// optimize

int cmd_optimize(const cobalt::RunConfig& cfg, const std::string& method, const std::string& out,
                 const std::string& summary_path) {
  cobalt::RunResult result = dispatch_run(method, cfg);
  cobalt::write_run_log(out, cfg, result);
  cobalt::Catalog catalog = cobalt::load_catalog(cfg.catalog_path);
  json summary = cobalt::summary_json(cfg, result, catalog);
  if (!summary_path.empty()) {
    std::ofstream f(summary_path);
    if (!f) throw cobalt::Error("cannot write summary '" + summary_path + "'");
    f << summary.dump(2) << "\n";
  }
  write_manifest(out + ".manifest.json", cfg, result,
                 summary_path.empty() ? std::vector<std::string>{out}
                                      : std::vector<std::string>{out, summary_path});
  std::cout << summary.dump(2) << "\n";
  if (!result.has_feasible)
    std::cout << "note: no feasible design found within the budget\n";
  return 0;
}

// ---------------------------------------------------------------------------
// enumerate

int cmd_enumerate(const cobalt::RunConfig& cfg, double cap, const std::string& mode,
                  const std::string& out) {
  cobalt::Problem problem = cobalt::load_problem(cfg);
  const int e = problem.structure.group_count();
  const int n = problem.catalog.size();
  double total = std::pow(static_cast<double>(n), e);
  if (total > cap) {
    std::ostringstream msg;
    msg << "enumeration refused: " << total << " combinations exceed cap " << cap;
    throw cobalt::ValidationError(msg.str());
  }

  cobalt::OracleConfig oracle = cfg.oracle;
  oracle.threads = cfg.threads;
  const bool deterministic = mode != "seeded";

  std::ofstream f(out);
  if (!f) throw cobalt::Error("cannot write table '" + out + "'");
  f << "# config_hash=" << cobalt::config_hash(cfg) << " mode=" << mode << "\n";
  f << "combo";
  for (int v = 0; v < e; ++v) f << ",g" << v;
  f << ",y_obs,mass,buckling_y,buckling_z,feasible\n";

  std::vector<cobalt::Observation> table;
  cobalt::Design d(static_cast<std::size_t>(e), 0);
  long combo = 0;
  for (;;) {
    cobalt::Observation obs;
    if (deterministic) {
      Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(problem.structure.nodes.rows(),
                                                   problem.structure.nodes.cols());
      cobalt::FeaResult fr = cobalt::assemble_and_solve(
          problem.structure, problem.catalog, d, problem.structure.material.e0, zero,
          problem.structure.loads, oracle.fea);
      obs.design = d;
      obs.y_obs = fr.strain_energy;
      obs.mean_j = fr.strain_energy;
      obs.robust_constraints = {fr.mass - oracle.mass_budget, fr.buckling_margin_y.maxCoeff(),
                                fr.buckling_margin_z.maxCoeff()};
      obs.feasible = std::all_of(obs.robust_constraints.begin(), obs.robust_constraints.end(),
                                 [](double g) { return g <= 0.0; });
      obs.n_mc = 1;
    } else {
      obs = cobalt::evaluate_robust(problem.structure, problem.catalog, d, oracle,
                                    cobalt::derive_seed(cfg.seed, "enum",
                                                        static_cast<std::uint64_t>(combo)));
    }
    f << combo;
    for (int v = 0; v < e; ++v) f << "," << d[static_cast<std::size_t>(v)];
    f << "," << obs.y_obs;
    for (double g : obs.robust_constraints) f << "," << g;
    f << "," << (obs.feasible ? 1 : 0) << "\n";
    table.push_back(std::move(obs));
    ++combo;

    int v = 0;
    while (v < e && ++d[static_cast<std::size_t>(v)] == n) {
      d[static_cast<std::size_t>(v)] = 0;
      ++v;
    }
    if (v == e) break;
  }

  int best = cobalt::select_incumbent_index(table);
  const auto& bd = table[static_cast<std::size_t>(best)].design;
  std::cout << "combinations " << combo << "\n";
  std::cout << "argmin_index " << best << "\n";
  std::cout << "argmin_design";
  for (int idx : bd) std::cout << " " << idx;
  std::cout << "\n";
  std::cout << "argmin_y_obs " << table[static_cast<std::size_t>(best)].y_obs << "\n";
  std::cout << "argmin_feasible " << (table[static_cast<std::size_t>(best)].feasible ? 1 : 0)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

void write_cell(std::ofstream& f, double v) {
  if (std::isnan(v))
    f << "";
  else
    f << v;
}

int cmd_report(const std::vector<std::string>& log_paths, const std::string& out_dir) {
  if (log_paths.empty()) throw cobalt::ValidationError("report needs at least one run log");
  std::vector<cobalt::ParsedRunLog> logs;
  for (const auto& p : log_paths) logs.push_back(cobalt::parse_run_log(p));
  for (std::size_t i = 1; i < logs.size(); ++i) {
    if (logs[i].config_hash != logs[0].config_hash) {
      throw cobalt::ValidationError("run log '" + log_paths[i] +
                                    "' has a different config hash than '" + log_paths[0] +
                                    "'; refusing mixed-provenance aggregation");
    }
  }
  fs::create_directories(out_dir);
  const std::uint64_t hash = logs[0].config_hash;
  std::size_t t_max = 0;
  for (const auto& log : logs) t_max = std::max(t_max, log.evals.size());

  {  // best-feasible-so-far trajectory
    std::ofstream f(fs::path(out_dir) / "convergence.csv");
    f << "# config_hash=" << hash << "\n";
    f << "eval,median,q1,q3\n";
    for (std::size_t t = 0; t < t_max; ++t) {
      std::vector<double> vals;
      for (const auto& log : logs) {
        if (t >= log.evals.size()) continue;
        int inc = log.evals[t].incumbent;
        const auto& best = log.evals[static_cast<std::size_t>(inc)];
        if (best.feasible) vals.push_back(best.y_obs);
      }
      f << t << ",";
      write_cell(f, quantile(vals, 0.5));
      f << ",";
      write_cell(f, quantile(vals, 0.25));
      f << ",";
      write_cell(f, quantile(vals, 0.75));
      f << "\n";
    }
  }

  {  // constraint values of the evaluated design per iteration
    std::ofstream f(fs::path(out_dir) / "constraints.csv");
    f << "# config_hash=" << hash << "\n";
    f << "eval,mass_median,buckling_y_median,buckling_z_median\n";
    for (std::size_t t = 0; t < t_max; ++t) {
      std::vector<double> c0, c1, c2;
      for (const auto& log : logs) {
        if (t >= log.evals.size() || log.evals[t].failed) continue;
        const auto& c = log.evals[t].constraints;
        if (c.size() == 3) {
          c0.push_back(c[0]);
          c1.push_back(c[1]);
          c2.push_back(c[2]);
        }
      }
      f << t << ",";
      write_cell(f, quantile(c0, 0.5));
      f << ",";
      write_cell(f, quantile(c1, 0.5));
      f << ",";
      write_cell(f, quantile(c2, 0.5));
      f << "\n";
    }
  }

  {  // latent coordinates visited (per log)
    std::ofstream f(fs::path(out_dir) / "latent.csv");
    f << "# config_hash=" << hash << "\n";
    std::size_t dim = logs[0].evals.empty() ? 0 : logs[0].evals[0].latent.size();
    f << "log,eval";
    for (std::size_t d = 0; d < dim; ++d) f << ",z" << (d + 1);
    f << "\n";
    for (std::size_t l = 0; l < logs.size(); ++l) {
      for (const auto& ev : logs[l].evals) {
        f << l << "," << ev.index;
        for (double z : ev.latent) f << "," << z;
        f << "\n";
      }
    }
  }

  {  // trust-region length per surrogate iteration
    std::ofstream f(fs::path(out_dir) / "tr_length.csv");
    f << "# config_hash=" << hash << "\n";
    f << "eval,median,q1,q3\n";
    std::size_t n_iter = 0;
    for (const auto& log : logs) n_iter = std::max(n_iter, log.iterations.size());
    for (std::size_t t = 0; t < n_iter; ++t) {
      std::vector<double> vals;
      int eval_index = -1;
      for (const auto& log : logs) {
        if (t >= log.iterations.size()) continue;
        vals.push_back(log.iterations[t].tr_length);
        eval_index = log.iterations[t].eval_index;
      }
      f << eval_index << ",";
      write_cell(f, quantile(vals, 0.5));
      f << ",";
      write_cell(f, quantile(vals, 0.25));
      f << ",";
      write_cell(f, quantile(vals, 0.75));
      f << "\n";
    }
  }

  std::cout << "report written to " << out_dir << " from " << logs.size() << " log(s)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, int seeds, const std::string& method,
              const std::string& out_dir) {
  std::vector<std::string> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(item);
  if (values.empty()) throw cobalt::ValidationError("sweep needs at least one value");

  fs::create_directories(out_dir);
  std::ofstream table(fs::path(out_dir) / "sweep.csv");
  table << "param,value,seed,best_y_obs,feasible\n";

  for (const auto& value : values) {
    for (int s = 0; s < seeds; ++s) {
      cobalt::RunConfig cfg =
          load_config_with_overrides(config_path, {param + "=" + value});
      cfg.seed = cobalt::derive_seed(cfg.seed, "sweep", static_cast<std::uint64_t>(s));
      cobalt::RunResult result = dispatch_run(method, cfg);
      std::string tag = param;
      std::replace(tag.begin(), tag.end(), '.', '_');
      fs::path log_path =
          fs::path(out_dir) / ("sweep_" + tag + "_" + value + "_seed" + std::to_string(s) +
                               ".jsonl");
      cobalt::write_run_log(log_path, cfg, result);
      const auto& best = result.observations[static_cast<std::size_t>(result.best_index)];
      table << param << "," << value << "," << s << "," << best.y_obs << ","
            << (best.feasible ? 1 : 0) << "\n";
    }
  }
  std::cout << "sweep written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"categorical Bayesian optimization over anchored latent catalogs"};
  app.require_subcommand(1);

  // embed
  auto* embed = app.add_subcommand("embed", "embed a catalog and lock the anchor set");
  std::string em_catalog, em_out = "anchors.csv", em_method = "isomap";
  int em_k = 6, em_m = 2;
  embed->add_option("--catalog", em_catalog, "catalog CSV")->required();
  embed->add_option("--k", em_k, "neighbor count");
  embed->add_option("--m", em_m, "latent dimension");
  embed->add_option("--method", em_method, "isomap | pca")
      ->check(CLI::IsMember({"isomap", "pca"}));
  embed->add_option("--out", em_out, "output anchors CSV");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "run the optimizer or a baseline");
  std::string op_config, op_method = "cobalt", op_out = "run.jsonl", op_summary;
  std::vector<std::string> op_sets;
  std::uint64_t op_seed = 0;
  bool op_seed_set = false;
  int op_threads = 0, op_budget = 0;
  optimize->add_option("--config", op_config, "run config JSON")->required();
  optimize->add_option("--method", op_method, "cobalt | rs | ga | crbo")
      ->check(CLI::IsMember({"cobalt", "rs", "ga", "crbo"}));
  optimize->add_option("--out", op_out, "run log path (JSONL)");
  optimize->add_option("--summary", op_summary, "summary JSON path");
  optimize->add_option("--set", op_sets, "config override key=value (repeatable)");
  auto* seed_opt = optimize->add_option("--seed", op_seed, "master seed override");
  optimize->add_option("--threads", op_threads, "worker thread cap");
  optimize->add_option("--budget", op_budget, "evaluation budget override");

  // enumerate
  auto* enumerate = app.add_subcommand("enumerate", "exhaustively evaluate a small problem");
  std::string en_config, en_mode = "deterministic", en_out = "table.csv";
  double en_cap = 1e6;
  enumerate->add_option("--config", en_config, "run config JSON")->required();
  enumerate->add_option("--cap", en_cap, "max combinations");
  enumerate->add_option("--mode", en_mode, "deterministic | seeded")
      ->check(CLI::IsMember({"deterministic", "seeded"}));
  enumerate->add_option("--out", en_out, "output table CSV");

  // report
  auto* report = app.add_subcommand("report", "emit plot-ready CSVs from run logs");
  std::vector<std::string> rp_logs;
  std::string rp_out = "report";
  report->add_option("logs", rp_logs, "run logs (same config hash)")->required();
  report->add_option("--out-dir", rp_out, "output directory");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "sensitivity grid over one config key");
  std::string sw_config, sw_param, sw_values, sw_method = "cobalt", sw_out = "sweep";
  int sw_seeds = 3;
  sweep->add_option("--config", sw_config, "run config JSON")->required();
  sweep->add_option("--param", sw_param, "config key, e.g. acq.kappa or saas_tau0")->required();
  sweep->add_option("--values", sw_values, "comma-separated values")->required();
  sweep->add_option("--seeds", sw_seeds, "seeds per value");
  sweep->add_option("--method", sw_method, "cobalt | rs | ga | crbo");
  sweep->add_option("--out-dir", sw_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (embed->parsed()) return cmd_embed(em_catalog, em_k, em_m, em_method, em_out);
    if (optimize->parsed()) {
      cobalt::RunConfig cfg = load_config_with_overrides(op_config, op_sets);
      op_seed_set = seed_opt->count() > 0;
      apply_seed_sources(cfg, op_seed_set, op_seed);
      if (op_threads > 0) cfg.threads = op_threads;
      if (op_budget > 0) cfg.budget = op_budget;
      return cmd_optimize(cfg, op_method, op_out, op_summary);
    }
    if (enumerate->parsed()) {
      cobalt::RunConfig cfg = load_config_with_overrides(en_config, {});
      return cmd_enumerate(cfg, en_cap, en_mode, en_out);
    }
    if (report->parsed()) return cmd_report(rp_logs, rp_out);
    if (sweep->parsed()) return cmd_sweep(sw_config, sw_param, sw_values, sw_seeds, sw_method, sw_out);
  } catch (const cobalt::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cobalt::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
