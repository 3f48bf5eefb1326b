#pragma once
// Experiment configuration plumbing: a single JSON schema with defaults,
// strict unknown-key rejection, dotted-path --set overrides, config hashing,
// and manifest writing.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdw/dataset.hpp"
#include "bdw/harness.hpp"

namespace bdw {

// The complete schema with default values. Every key a config file or a
// --set override may touch appears here.
nlohmann::json default_config_json();

// Deep-merges `user` over the schema defaults. Unknown keys and type
// mismatches throw std::invalid_argument naming the offending dotted path.
// Elements of the "attacks" array are each validated against the "attack"
// schema. Idempotent on its own output.
nlohmann::json resolve_config(const nlohmann::json& user);

// Applies one `key.path=value` assignment. The path must already exist in
// `config` (unknown keys are rejected, not ignored); the value is parsed as
// JSON when possible and treated as a string otherwise. Paths cannot step
// into array elements — assign the whole array instead.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Stable 16-hex-digit hash of the resolved config.
std::string config_hash(const nlohmann::json& resolved);

// One-line-per-key schema listing: `path (type, default: value)`.
std::string config_schema_help();

struct LoadedExperiment {
  BlobData data;
  Classifier classifier;
  ExperimentConfig experiment;
};

// Materializes dataset + classifier + harness config from a resolved config.
// sweep_grid=false uses the single `defense` point; true crosses
// grid.thetas x grid.sigmas. defense.mode must be "auto" or agree with every
// configured attack family.
LoadedExperiment load_experiment(const nlohmann::json& resolved, bool sweep_grid);

// Builds the dataset alone (generate or load CSVs per the data section).
BlobData load_data(const nlohmann::json& resolved);
// Trains or loads the classifier per the model section.
Classifier load_model(const nlohmann::json& resolved, const Dataset& train_set);

// AttackPlan from one attack JSON object (already schema-validated).
AttackPlan attack_plan_from_json(const nlohmann::json& attack);

// Writes <out_dir>/manifest.json: command, resolved config + hash, seeds,
// output file list, and any extra fields (e.g. calibrated values).
void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& resolved,
                    const std::vector<std::string>& outputs,
                    const nlohmann::json& extra);

}  // namespace bdw
