#include "cobalt/run_log.hpp"

#include <fstream>
#include <sstream>

#include "cobalt/errors.hpp"
#include "cobalt/rng.hpp"

namespace cobalt {

using nlohmann::json;

json config_to_json(const RunConfig& cfg) {
  json j;
  j["structure"] = cfg.structure_path;
  j["catalog"] = cfg.catalog_path;
  j["embed.method"] = cfg.embed_method;
  j["embed.k"] = cfg.embed_k;
  j["embed.m"] = cfg.embed_m;
  j["graph.k"] = cfg.graph_k;
  j["budget"] = cfg.budget;
  j["init"] = cfg.init_count;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["oracle.n_mc"] = cfg.oracle.n_mc;
  j["oracle.gamma"] = cfg.oracle.gamma;
  j["oracle.beta"] = cfg.oracle.beta;
  j["oracle.mass_budget"] = cfg.oracle.mass_budget;
  j["oracle.bootstrap"] = cfg.oracle.bootstrap_resamples;
  j["oracle.effective_length_factor"] = cfg.oracle.fea.effective_length_factor;
  j["uncertainty.cov_e"] = cfg.oracle.uncertainty.cov_e;
  j["uncertainty.cov_load"] = cfg.oracle.uncertainty.cov_load;
  j["uncertainty.geo_sigma_frac"] = cfg.oracle.uncertainty.geo_sigma_frac;
  j["acq.kappa"] = cfg.kappa;
  j["tr.init_frac"] = cfg.tr.init_frac;
  j["tr.min_spacing_mult"] = cfg.tr.min_spacing_mult;
  j["tr.max_frac"] = cfg.tr.max_frac;
  j["tr.success_tolerance"] = cfg.tr.success_tolerance;
  j["tr.fail_tolerance"] = cfg.tr.fail_tolerance;
  j["evo.population"] = cfg.evo.population;
  j["evo.generations"] = cfg.evo.generations;
  j["evo.p_mut"] = cfg.evo.p_mut;
  j["mcmc.warmup"] = cfg.mcmc.warmup;
  j["mcmc.draws"] = cfg.mcmc.draws;
  j["mcmc.thin"] = cfg.mcmc.thin;
  j["mcmc.chains"] = cfg.mcmc.chains;
  j["mcmc.max_depth"] = cfg.mcmc.max_depth;
  j["mcmc.target_accept"] = cfg.mcmc.target_accept;
  j["mcmc.noise_floor_scale"] = cfg.mcmc.noise_floor_scale;
  j["saas_tau0"] = cfg.mcmc.tau0;
  j["rs.dedupe"] = cfg.rs_dedupe;
  j["ga.population"] = cfg.ga.population;
  j["ga.crossover_rate"] = cfg.ga.crossover_rate;
  j["ga.mutation_rate"] = cfg.ga.mutation_rate;
  j["ga.penalty_weight"] = cfg.ga.penalty_weight;
  j["crbo.restarts"] = cfg.crbo.restarts;
  j["crbo.steps"] = cfg.crbo.steps;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    try {
      if (key == "structure") cfg.structure_path = v.get<std::string>();
      else if (key == "catalog") cfg.catalog_path = v.get<std::string>();
      else if (key == "embed.method") cfg.embed_method = v.get<std::string>();
      else if (key == "embed.k") cfg.embed_k = v.get<int>();
      else if (key == "embed.m") cfg.embed_m = v.get<int>();
      else if (key == "graph.k") cfg.graph_k = v.get<int>();
      else if (key == "budget") cfg.budget = v.get<int>();
      else if (key == "init") cfg.init_count = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "threads") cfg.threads = v.get<int>();
      else if (key == "oracle.n_mc") cfg.oracle.n_mc = v.get<int>();
      else if (key == "oracle.gamma") cfg.oracle.gamma = v.get<double>();
      else if (key == "oracle.beta") {
        if (v.is_array()) cfg.oracle.beta = v.get<std::vector<double>>();
        else cfg.oracle.beta = {v.get<double>(), v.get<double>(), v.get<double>()};
      }
      else if (key == "oracle.mass_budget") cfg.oracle.mass_budget = v.get<double>();
      else if (key == "oracle.bootstrap") cfg.oracle.bootstrap_resamples = v.get<int>();
      else if (key == "oracle.effective_length_factor")
        cfg.oracle.fea.effective_length_factor = v.get<double>();
      else if (key == "uncertainty.cov_e") cfg.oracle.uncertainty.cov_e = v.get<double>();
      else if (key == "uncertainty.cov_load") cfg.oracle.uncertainty.cov_load = v.get<double>();
      else if (key == "uncertainty.geo_sigma_frac")
        cfg.oracle.uncertainty.geo_sigma_frac = v.get<double>();
      else if (key == "acq.kappa") cfg.kappa = v.get<double>();
      else if (key == "tr.init_frac") cfg.tr.init_frac = v.get<double>();
      else if (key == "tr.min_spacing_mult") cfg.tr.min_spacing_mult = v.get<double>();
      else if (key == "tr.max_frac") cfg.tr.max_frac = v.get<double>();
      else if (key == "tr.success_tolerance") cfg.tr.success_tolerance = v.get<int>();
      else if (key == "tr.fail_tolerance") cfg.tr.fail_tolerance = v.get<int>();
      else if (key == "evo.population") cfg.evo.population = v.get<int>();
      else if (key == "evo.generations") cfg.evo.generations = v.get<int>();
      else if (key == "evo.p_mut") cfg.evo.p_mut = v.get<double>();
      else if (key == "mcmc.warmup") cfg.mcmc.warmup = v.get<int>();
      else if (key == "mcmc.draws") cfg.mcmc.draws = v.get<int>();
      else if (key == "mcmc.thin") cfg.mcmc.thin = v.get<int>();
      else if (key == "mcmc.chains") cfg.mcmc.chains = v.get<int>();
      else if (key == "mcmc.max_depth") cfg.mcmc.max_depth = v.get<int>();
      else if (key == "mcmc.target_accept") cfg.mcmc.target_accept = v.get<double>();
      else if (key == "mcmc.noise_floor_scale") cfg.mcmc.noise_floor_scale = v.get<double>();
      else if (key == "saas_tau0") cfg.mcmc.tau0 = v.get<double>();
      else if (key == "rs.dedupe") cfg.rs_dedupe = v.get<bool>();
      else if (key == "ga.population") cfg.ga.population = v.get<int>();
      else if (key == "ga.crossover_rate") cfg.ga.crossover_rate = v.get<double>();
      else if (key == "ga.mutation_rate") cfg.ga.mutation_rate = v.get<double>();
      else if (key == "ga.penalty_weight") cfg.ga.penalty_weight = v.get<double>();
      else if (key == "crbo.restarts") cfg.crbo.restarts = v.get<int>();
      else if (key == "crbo.steps") cfg.crbo.steps = v.get<int>();
      else throw ValidationError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ValidationError("config key '" + key + "': " + e.what());
    }
  }
  if (cfg.oracle.beta.size() < 3) throw ValidationError("oracle.beta needs three entries");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config file '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  RunConfig canonical = cfg;
  canonical.seed = 0;
  return fnv1a64(config_to_json(canonical).dump());
}

namespace {

json eval_record(const RunResult& result, std::size_t i, int init) {
  const Observation& o = result.observations[i];
  json rec;
  rec["record"] = "eval";
  rec["index"] = static_cast<int>(i);
  rec["phase"] = static_cast<int>(i) < init ? "init" : "search";
  rec["design"] = o.design;
  const auto& z = result.latent_visits[i];
  rec["latent"] = std::vector<double>(z.data(), z.data() + z.size());
  rec["y_obs"] = o.y_obs;
  rec["noise_var"] = o.noise_var;
  rec["mean_j"] = o.mean_j;
  rec["std_j"] = o.std_j;
  rec["constraints"] = o.robust_constraints;
  rec["feasible"] = o.feasible;
  rec["failed"] = o.failed;
  rec["n_mc"] = o.n_mc;
  rec["seed"] = o.seed;
  rec["incumbent"] = result.incumbent_trajectory[i];
  return rec;
}

json iteration_record(const IterationRecord& it, const std::string& method) {
  json rec;
  rec["record"] = "iteration";
  rec["eval_index"] = it.eval_index;
  json edges = json::array();
  for (const auto& [u, v] : it.tree.edges) edges.push_back({u, v});
  rec["tree"] = edges;
  rec["tr_length"] = it.tr_length;
  rec["acq_value"] = it.acq_value;
  rec["stalled"] = it.stalled;
  rec["fit_fallback"] = it.fit_fallback;
  rec["max_rhat"] = it.max_rhat;
  rec["mean_accept"] = it.mean_accept;
  rec["divergences"] = it.divergences;
  if (method == "crbo") rec["rounding_displacement"] = it.rounding_displacement;
  return rec;
}

}  // namespace

std::string run_log_string(const RunConfig& cfg, const RunResult& result) {
  std::ostringstream out;
  json header;
  header["record"] = "header";
  header["code_version"] = kCodeVersion;
  header["method"] = result.method;
  header["config"] = config_to_json(cfg);
  header["config_hash"] = config_hash(cfg);
  header["catalog_hash"] = result.catalog_hash;
  header["anchors_hash"] = result.anchors_hash;
  header["residual_stress"] = result.residual_stress;
  out << header.dump() << "\n";

  const int init = static_cast<int>(result.observations.size()) -
                   static_cast<int>(result.iterations.size());
  std::size_t next_iter = 0;
  int last_incumbent = -1;
  for (std::size_t i = 0; i < result.observations.size(); ++i) {
    if (next_iter < result.iterations.size() &&
        result.iterations[next_iter].eval_index == static_cast<int>(i)) {
      out << iteration_record(result.iterations[next_iter], result.method).dump() << "\n";
      ++next_iter;
    }
    out << eval_record(result, i, init).dump() << "\n";
    int inc = result.incumbent_trajectory[i];
    if (inc != last_incumbent) {
      const Observation& o = result.observations[static_cast<std::size_t>(inc)];
      json rec;
      rec["record"] = "incumbent";
      rec["eval_index"] = static_cast<int>(i);
      rec["observation"] = inc;
      rec["y_obs"] = o.y_obs;
      rec["feasible"] = o.feasible;
      out << rec.dump() << "\n";
      last_incumbent = inc;
    }
  }

  json summary;
  summary["record"] = "summary";
  summary["evaluations"] = static_cast<int>(result.observations.size());
  summary["best_index"] = result.best_index;
  if (result.best_index >= 0) {
    const Observation& best = result.observations[static_cast<std::size_t>(result.best_index)];
    summary["best_design"] = best.design;
    summary["best_y_obs"] = best.y_obs;
    summary["best_feasible"] = best.feasible;
    summary["best_constraints"] = best.robust_constraints;
  }
  summary["feasible_found"] = result.has_feasible;
  out << summary.dump() << "\n";
  return out.str();
}

void write_run_log(const std::filesystem::path& path, const RunConfig& cfg,
                   const RunResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write run log '" + path.string() + "'");
  out << run_log_string(cfg, result);
}

json summary_json(const RunConfig& cfg, const RunResult& result, const Catalog& catalog) {
  json j;
  j["config_hash"] = config_hash(cfg);
  j["method"] = result.method;
  j["evaluations"] = static_cast<int>(result.observations.size());
  j["feasible_found"] = result.has_feasible;
  if (result.best_index >= 0) {
    const Observation& best = result.observations[static_cast<std::size_t>(result.best_index)];
    j["best_index"] = result.best_index;
    j["best_design"] = best.design;
    j["best_y_obs"] = best.y_obs;
    j["best_feasible"] = best.feasible;
    j["best_constraints"] = best.robust_constraints;
    json attrs = json::array();
    for (int idx : best.design) {
      json row;
      row["id"] = catalog.ids[static_cast<std::size_t>(idx)];
      for (int a = 0; a < catalog.dim(); ++a)
        row[catalog.attribute_names[static_cast<std::size_t>(a)]] = catalog.attributes(idx, a);
      attrs.push_back(std::move(row));
    }
    j["best_attributes"] = std::move(attrs);
  }
  return j;
}

ParsedRunLog parse_run_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open run log '" + path.string() + "'");
  ParsedRunLog log;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("run log '" + path.string() + "' record " + std::to_string(lineno) + ": " +
                       e.what());
    }
    try {
      const std::string kind = rec.at("record").get<std::string>();
      if (kind == "header") {
        log.config_hash = rec.at("config_hash").get<std::uint64_t>();
        log.method = rec.at("method").get<std::string>();
        have_header = true;
      } else if (kind == "eval") {
        ParsedRunLog::Eval ev;
        ev.index = rec.at("index").get<int>();
        ev.design = rec.at("design").get<Design>();
        ev.latent = rec.at("latent").get<std::vector<double>>();
        ev.y_obs = rec.at("y_obs").is_number() ? rec.at("y_obs").get<double>()
                                               : std::numeric_limits<double>::infinity();
        ev.noise_var = rec.at("noise_var").get<double>();
        ev.constraints = rec.at("constraints").get<std::vector<double>>();
        ev.feasible = rec.at("feasible").get<bool>();
        ev.failed = rec.at("failed").get<bool>();
        ev.incumbent = rec.at("incumbent").get<int>();
        log.evals.push_back(std::move(ev));
      } else if (kind == "iteration") {
        ParsedRunLog::Iteration it;
        it.eval_index = rec.at("eval_index").get<int>();
        it.tr_length = rec.value("tr_length", 0.0);
        it.acq_value = rec.value("acq_value", 0.0);
        it.rounding_displacement = rec.value("rounding_displacement", 0.0);
        log.iterations.push_back(std::move(it));
      }
    } catch (const json::exception& e) {
      throw ParseError("run log '" + path.string() + "' record " + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  if (!have_header)
    throw ParseError("run log '" + path.string() + "' has no header record");
  return log;
}

}  // namespace cobalt
