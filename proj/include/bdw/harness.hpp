#pragma once
// Experiment orchestration: per-sample attack runs over a defense grid,
// metric aggregation (ASR, ASR2, median l2, defended ACC), untargeted
// distortion-threshold calibration, and report persistence.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdw/attacks.hpp"
#include "bdw/classifier.hpp"
#include "bdw/defense.hpp"
#include "bdw/types.hpp"

namespace bdw {

// Fraction of test samples whose defended hard-label answer equals the true
// label; one query per sample (query counter = sample index).
double measure_acc(const Classifier& clf, const DefenseConfig& defense,
                   const Dataset& test_set);

// Fraction of outcomes with success=true. Throws on an empty list.
double compute_asr(const std::vector<AttackOutcome>& outcomes, bool targeted);
// Fraction with success=true AND l2_distortion < L. Throws on empty / L < 0.
double compute_asr2(const std::vector<AttackOutcome>& outcomes, double L);
// Median l2_distortion over all outcomes or over successes only; absent when
// the selected subset is empty (the "-" table convention).
std::optional<double> median_l2(const std::vector<AttackOutcome>& outcomes,
                                bool successes_only);

// Runs the attack undefended on every sample (per-sample seeds derived from
// spec.seed), checks undefended ASR >= 0.9 (else calibration_failed), finds
// the minimal distortion threshold with ASR2 >= 0.95 and returns 10x that.
double calibrate_L(const AttackSpec& spec, const Classifier& clf,
                   const std::vector<Sample>& samples);
// The rank rule behind calibrate_L, as a pure function of the successful
// distortions and the evaluated sample count.
double calibrate_L_quantile(std::vector<double> success_distortions,
                            std::size_t n_samples);

struct DefensePoint {
  double theta = 0.0;
  double sigma = 0.0;
};

// One attack entry of an experiment. For targeted attacks the concrete
// target class comes from target_rule: "next_class" (t = (c+1) mod N),
// "fixed:K" (constant K; samples with c == K are excluded from the run),
// or "random" (seeded uniform class != c).
struct AttackPlan {
  AttackSpec spec;
  std::string target_rule = "next_class";
};

struct ExperimentConfig {
  Dataset test_set;  // evaluation pool; also used for defended-ACC
  Classifier classifier;
  std::vector<DefensePoint> grid;
  std::vector<AttackPlan> attacks;
  int n_eval = 50;  // correctly-classified samples drawn from test_set
  std::vector<double> distortion_thresholds;  // ASR2 L values (may be empty)
  std::uint64_t master_seed = 0;
  int jobs = 1;  // parallel run width; results independent of scheduling
};

// Everything needed to recompute the aggregates for one attack run.
struct RunRecord {
  int defense_idx = 0;
  int attack_idx = 0;
  int sample_idx = 0;  // position in the eval-sample list
  std::uint64_t run_seed = 0;
  bool targeted = false;
  int target = -1;  // resolved target class (-1 when untargeted)
  bool success = false;       // defended verdict of the confirming query
  bool init_failed = false;   // hard-label init exhausted (counts as failure)
  long long queries = 0;
  double l2 = 0.0;
  int clean_label = -1;  // noiseless model label at the final sample
};

struct ReportRow {
  double theta = 0.0;
  double sigma = 0.0;
  std::string attack;
  bool targeted = false;
  double asr = 0.0;
  std::map<double, double> asr2;  // L -> ASR2
  std::optional<double> median_l2_success;
  double mean_queries = 0.0;
  double acc = 0.0;  // defended ACC at this (theta, sigma)
};

struct ExperimentReport {
  std::vector<DefensePoint> grid;
  std::vector<std::string> attack_names;
  std::vector<int> eval_indices;  // test_set indices of the eval samples
  std::vector<RunRecord> runs;
  std::vector<ReportRow> rows;      // one per (defense point, attack)
  std::vector<double> acc_per_defense;
  std::uint64_t master_seed = 0;
  long long budget = 0;  // max budget across attack entries (for reference)
};

// Deterministic in config.master_seed for any jobs value. Per-run seeds:
// run_seed = hash(master, defense_idx, attack_idx, sample_idx); the oracle
// and the attack get separate sub-seeds. Hard-label init failures are
// recorded as unsuccessful runs; other domain errors propagate with run
// context prepended.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Persistence. summary.csv: `theta,sigma,attack,targeted,asr,median_l2,
// mean_queries,acc` (empty median field when absent). asr2.csv:
// `theta,sigma,attack,L,asr2`. report.json holds the full structure plus
// provenance (config hash, seeds, timestamp); the CSVs carry no timestamps.
void write_summary_csv(const ExperimentReport& report, const std::string& path);
void write_asr2_csv(const ExperimentReport& report, const std::string& path);
void write_report_json(const ExperimentReport& report,
                       const std::string& config_hash, const std::string& path);

}  // namespace bdw
