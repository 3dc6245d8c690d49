#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobalt/loop.hpp"

namespace cobalt {

inline constexpr const char* kCodeVersion = "cobalt 0.1.0";

/// Flat dotted-key JSON view of a run configuration (the config file
/// format). Unknown keys in the input are rejected.
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Hash of the canonical config dump with the seed zeroed, so runs that
/// differ only by seed share provenance and can be aggregated.
std::uint64_t config_hash(const RunConfig& cfg);

/// JSONL run log: a header record with the config snapshot and hashes, one
/// record per evaluation, per surrogate iteration and per incumbent change,
/// and a closing summary. Contains no timestamps: identical config and seed
/// reproduce the log byte-for-byte.
std::string run_log_string(const RunConfig& cfg, const RunResult& result);
void write_run_log(const std::filesystem::path& path, const RunConfig& cfg,
                   const RunResult& result);

nlohmann::json summary_json(const RunConfig& cfg, const RunResult& result,
                            const Catalog& catalog);

/// Minimal structured view of a run log, as read back for reporting.
struct ParsedRunLog {
  std::uint64_t config_hash = 0;
  std::string method;
  struct Eval {
    int index = 0;
    Design design;
    std::vector<double> latent;
    double y_obs = 0.0;
    double noise_var = 0.0;
    std::vector<double> constraints;
    bool feasible = false;
    bool failed = false;
    int incumbent = 0;  // incumbent observation index after this evaluation
  };
  std::vector<Eval> evals;
  struct Iteration {
    int eval_index = 0;
    double tr_length = 0.0;
    double acq_value = 0.0;
    double rounding_displacement = 0.0;
  };
  std::vector<Iteration> iterations;
};
ParsedRunLog parse_run_log(const std::filesystem::path& path);

}  // namespace cobalt
