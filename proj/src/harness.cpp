#include "bdw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "bdw/rng.hpp"

namespace bdw {
namespace {

using nlohmann::json;

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Aggregate helpers work on (success, distortion) pairs; adapt RunRecords.
std::vector<AttackOutcome> to_outcomes(const std::vector<const RunRecord*>& rs) {
  std::vector<AttackOutcome> out;
  out.reserve(rs.size());
  for (const RunRecord* r : rs) {
    AttackOutcome o;
    o.success = r->success;
    o.l2_distortion = r->l2;
    o.queries_used = r->queries;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace

double measure_acc(const Classifier& clf, const DefenseConfig& defense,
                   const Dataset& test_set) {
  require(!test_set.samples.empty(), "measure_acc: empty test set");
  DefendedOracle oracle(clf, defense);
  const int n = static_cast<int>(test_set.samples.size());
  long long correct = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : correct)
#endif
  for (int i = 0; i < n; ++i) {
    const Sample& s = test_set.samples[i];
    // Query counter = sample index: deterministic and scheduling-independent.
    const int label = oracle.query_hard_at(s.features, static_cast<std::uint64_t>(i));
    correct += label == s.label ? 1 : 0;
  }
  oracle.add_queries(static_cast<std::uint64_t>(n));
  return static_cast<double>(correct) / n;
}

double compute_asr(const std::vector<AttackOutcome>& outcomes, bool /*targeted*/) {
  require(!outcomes.empty(), "compute_asr: empty outcome list");
  long long hits = 0;
  for (const AttackOutcome& o : outcomes) hits += o.success ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double compute_asr2(const std::vector<AttackOutcome>& outcomes, double L) {
  require(!outcomes.empty(), "compute_asr2: empty outcome list");
  require(L >= 0.0, "compute_asr2: L must be >= 0");
  long long hits = 0;
  for (const AttackOutcome& o : outcomes)
    hits += (o.success && o.l2_distortion < L) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

std::optional<double> median_l2(const std::vector<AttackOutcome>& outcomes,
                                bool successes_only) {
  std::vector<double> ds;
  for (const AttackOutcome& o : outcomes) {
    if (!successes_only || o.success) ds.push_back(o.l2_distortion);
  }
  if (ds.empty()) return std::nullopt;
  std::sort(ds.begin(), ds.end());
  const std::size_t n = ds.size();
  if (n % 2 == 1) return ds[n / 2];
  return 0.5 * (ds[n / 2 - 1] + ds[n / 2]);
}

double calibrate_L(const AttackSpec& spec, const Classifier& clf,
                   const std::vector<Sample>& samples) {
  require(!samples.empty(), "calibrate_L: empty sample list");
  DefenseConfig undefended;
  undefended.theta = 0.0;
  undefended.sigma = 0.0;
  undefended.seed = 0;
  undefended.mode =
      family_is_soft(spec.family) ? OracleMode::soft : OracleMode::hard;
  std::vector<double> success_dists;
  const int n = static_cast<int>(samples.size());
  for (int i = 0; i < n; ++i) {
    DefendedOracle oracle(clf, undefended);
    AttackSpec s = spec;
    s.seed = hash_mix(spec.seed, static_cast<std::uint64_t>(i));
    const AttackOutcome out = run_attack(oracle, samples[i], s);
    if (out.success) success_dists.push_back(out.l2_distortion);
  }
  const double asr = static_cast<double>(success_dists.size()) / n;
  if (asr < 0.9) {
    throw calibration_failed(
        "calibrate_L: undefended attack success rate " + fmt_g(asr) +
        " is below the required 0.9");
  }
  return calibrate_L_quantile(std::move(success_dists), samples.size());
}

double calibrate_L_quantile(std::vector<double> success_distortions,
                            std::size_t n_samples) {
  require(!success_distortions.empty() && n_samples >= success_distortions.size(),
          "calibrate_L_quantile: bad inputs");
  std::sort(success_distortions.begin(), success_distortions.end());
  // Minimal threshold with ASR2 >= 0.95: the (floor(0.95 n)+1)-th smallest
  // successful distortion, capped at the success count. The strict-<
  // boundary case is absorbed by the documented one-sort-step tolerance.
  std::size_t k = static_cast<std::size_t>(std::floor(0.95 * n_samples)) + 1;
  k = std::min(k, success_distortions.size());
  return 10.0 * success_distortions[k - 1];
}

namespace {

struct Job {
  int defense_idx = 0;
  int attack_idx = 0;
  int sample_idx = 0;
  int target = -1;
  std::uint64_t run_seed = 0;
};

int resolve_target(const AttackPlan& plan, int sample_class, int num_classes,
                   std::uint64_t master_seed, int attack_idx, int sample_idx,
                   bool* eligible) {
  *eligible = true;
  if (!plan.spec.targeted) return -1;
  const std::string& rule = plan.target_rule;
  if (rule == "next_class") return (sample_class + 1) % num_classes;
  if (rule.rfind("fixed:", 0) == 0) {
    int k = -1;
    try {
      k = std::stoi(rule.substr(6));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad target_rule: " + rule);
    }
    require(k >= 0 && k < num_classes, "target_rule class out of range: " + rule);
    if (k == sample_class) *eligible = false;  // no valid target for this sample
    return k;
  }
  if (rule == "random") {
    const std::uint64_t h = hash_mix(master_seed, 0x7A,
                                     static_cast<std::uint64_t>(attack_idx),
                                     static_cast<std::uint64_t>(sample_idx));
    const int r = static_cast<int>(h % static_cast<std::uint64_t>(num_classes - 1));
    return r >= sample_class ? r + 1 : r;
  }
  throw std::invalid_argument("unknown target_rule: " + rule +
                              " (expected next_class, fixed:K, or random)");
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  require(!config.test_set.samples.empty(), "experiment: empty test set");
  require(config.classifier.num_classes == config.test_set.num_classes &&
              config.classifier.dim == config.test_set.dim,
          "experiment: classifier and test set disagree on N or M");
  require(!config.grid.empty(), "experiment: empty defense grid");
  require(!config.attacks.empty(), "experiment: no attacks configured");
  require(config.n_eval >= 1, "experiment: n_eval must be >= 1");
  require(config.jobs >= 1, "experiment: jobs must be >= 1");
  for (const DefensePoint& p : config.grid) {
    require(p.theta >= 0.0 && p.theta <= 1.0, "experiment: grid theta in [0,1]");
    require(p.sigma >= 0.0, "experiment: grid sigma >= 0");
  }
  for (const double L : config.distortion_thresholds)
    require(L > 0.0, "experiment: distortion thresholds must be > 0");
  const Classifier& clf = config.classifier;
  const int num_classes = clf.num_classes;

  // Evaluation pool: the first n_eval correctly classified test samples.
  std::vector<int> eval_indices;
  for (int i = 0; i < static_cast<int>(config.test_set.samples.size()); ++i) {
    const Sample& s = config.test_set.samples[i];
    if (predict_hard(clf, s.features) == s.label) {
      eval_indices.push_back(i);
      if (static_cast<int>(eval_indices.size()) == config.n_eval) break;
    }
  }
  require(static_cast<int>(eval_indices.size()) == config.n_eval,
          "experiment: not enough correctly classified test samples for n_eval");

  // Validate attack specs up front (fail before any work). The concrete
  // target comes from target_rule per sample, so stand in a valid one.
  for (const AttackPlan& plan : config.attacks) {
    AttackSpec probe = plan.spec;
    if (probe.targeted && probe.target < 0) probe.target = 0;
    resolve_spec(probe, num_classes);
  }

  const int n_def = static_cast<int>(config.grid.size());
  const int n_att = static_cast<int>(config.attacks.size());
  std::vector<Job> jobs;
  for (int di = 0; di < n_def; ++di) {
    for (int ai = 0; ai < n_att; ++ai) {
      for (int si = 0; si < config.n_eval; ++si) {
        const Sample& s = config.test_set.samples[eval_indices[si]];
        bool eligible = true;
        const int target =
            resolve_target(config.attacks[ai], s.label, num_classes,
                           config.master_seed, ai, si, &eligible);
        if (!eligible) continue;
        Job j;
        j.defense_idx = di;
        j.attack_idx = ai;
        j.sample_idx = si;
        j.target = target;
        j.run_seed = hash_mix(config.master_seed, static_cast<std::uint64_t>(di),
                              static_cast<std::uint64_t>(ai),
                              static_cast<std::uint64_t>(si));
        jobs.push_back(j);
      }
    }
  }

  const int n_jobs = static_cast<int>(jobs.size());
  std::vector<RunRecord> records(n_jobs);
  std::vector<int> err_code(n_jobs, 0);
  std::vector<std::string> err_msg(n_jobs);

  auto run_one = [&](int r) {
    const Job& j = jobs[r];
    const AttackPlan& plan = config.attacks[j.attack_idx];
    const Sample& x0 = config.test_set.samples[eval_indices[j.sample_idx]];
    RunRecord rec;
    rec.defense_idx = j.defense_idx;
    rec.attack_idx = j.attack_idx;
    rec.sample_idx = j.sample_idx;
    rec.run_seed = j.run_seed;
    rec.targeted = plan.spec.targeted;
    rec.target = j.target;
    DefenseConfig dcfg;
    dcfg.theta = config.grid[j.defense_idx].theta;
    dcfg.sigma = config.grid[j.defense_idx].sigma;
    dcfg.seed = hash_mix(j.run_seed, 1);
    dcfg.mode =
        family_is_soft(plan.spec.family) ? OracleMode::soft : OracleMode::hard;
    DefendedOracle oracle(clf, dcfg);
    AttackSpec spec = plan.spec;
    spec.seed = hash_mix(j.run_seed, 2);
    spec.target = j.target;
    try {
      const AttackOutcome out = run_attack(oracle, x0, spec);
      rec.success = out.success;
      rec.queries = out.queries_used;
      rec.l2 = out.l2_distortion;
      rec.clean_label = predict_hard(clf, out.final_sample);
    } catch (const init_not_found&) {
      // No adversarial initialization: counts as a failed attack, with the
      // probes it spent on record.
      rec.success = false;
      rec.init_failed = true;
      rec.queries = static_cast<long long>(oracle.ledger().count);
      rec.l2 = 0.0;
      rec.clean_label = predict_hard(clf, x0.features);
    } catch (const domain_error& e) {
      err_code[r] = 1;
      err_msg[r] = e.what();
    } catch (const std::invalid_argument& e) {
      err_code[r] = 2;
      err_msg[r] = e.what();
    }
    records[r] = std::move(rec);
  };

  if (config.jobs > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(config.jobs)
#endif
    for (int r = 0; r < n_jobs; ++r) run_one(r);
  } else {
    for (int r = 0; r < n_jobs; ++r) run_one(r);
  }

  for (int r = 0; r < n_jobs; ++r) {
    if (err_code[r] == 0) continue;
    const Job& j = jobs[r];
    std::ostringstream ctx;
    ctx << "run (theta=" << config.grid[j.defense_idx].theta
        << ", sigma=" << config.grid[j.defense_idx].sigma << ", attack "
        << family_name(config.attacks[j.attack_idx].spec.family) << ", sample "
        << j.sample_idx << "): " << err_msg[r];
    if (err_code[r] == 1) throw domain_error(ctx.str());
    throw std::invalid_argument(ctx.str());
  }

  ExperimentReport report;
  report.grid = config.grid;
  report.eval_indices = eval_indices;
  report.runs = std::move(records);
  report.master_seed = config.master_seed;
  for (const AttackPlan& plan : config.attacks) {
    report.attack_names.push_back(family_name(plan.spec.family));
    report.budget = std::max(report.budget, plan.spec.budget);
  }

  for (int di = 0; di < n_def; ++di) {
    DefenseConfig dcfg;
    dcfg.theta = config.grid[di].theta;
    dcfg.sigma = config.grid[di].sigma;
    dcfg.seed = hash_mix(config.master_seed, 0xACC,
                         static_cast<std::uint64_t>(di));
    dcfg.mode = OracleMode::hard;
    report.acc_per_defense.push_back(measure_acc(clf, dcfg, config.test_set));
  }

  for (int di = 0; di < n_def; ++di) {
    for (int ai = 0; ai < n_att; ++ai) {
      std::vector<const RunRecord*> rs;
      for (const RunRecord& rec : report.runs) {
        if (rec.defense_idx == di && rec.attack_idx == ai) rs.push_back(&rec);
      }
      const std::vector<AttackOutcome> outs = to_outcomes(rs);
      ReportRow row;
      row.theta = config.grid[di].theta;
      row.sigma = config.grid[di].sigma;
      row.attack = report.attack_names[ai];
      row.targeted = config.attacks[ai].spec.targeted;
      row.asr = compute_asr(outs, row.targeted);
      for (const double L : config.distortion_thresholds)
        row.asr2[L] = compute_asr2(outs, L);
      row.median_l2_success = median_l2(outs, /*successes_only=*/true);
      double qsum = 0.0;
      for (const AttackOutcome& o : outs) qsum += static_cast<double>(o.queries_used);
      row.mean_queries = outs.empty() ? 0.0 : qsum / outs.size();
      row.acc = report.acc_per_defense[di];
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_summary_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  out << "theta,sigma,attack,targeted,asr,median_l2,mean_queries,acc\n";
  for (const ReportRow& row : report.rows) {
    out << fmt_g(row.theta) << ',' << fmt_g(row.sigma) << ',' << row.attack
        << ',' << (row.targeted ? 1 : 0) << ',' << fmt_g(row.asr) << ','
        << (row.median_l2_success ? fmt_g(*row.median_l2_success) : "") << ','
        << fmt_g(row.mean_queries) << ',' << fmt_g(row.acc) << '\n';
  }
}

void write_asr2_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  out << "theta,sigma,attack,L,asr2\n";
  for (const ReportRow& row : report.rows) {
    for (const auto& [L, v] : row.asr2) {
      out << fmt_g(row.theta) << ',' << fmt_g(row.sigma) << ',' << row.attack
          << ',' << fmt_g(L) << ',' << fmt_g(v) << '\n';
    }
  }
}

void write_report_json(const ExperimentReport& report,
                       const std::string& config_hash, const std::string& path) {
  json j;
  j["provenance"]["config_hash"] = config_hash;
  j["provenance"]["master_seed"] = report.master_seed;
  {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    j["provenance"]["generated_at"] = buf;
  }
  j["budget"] = report.budget;
  j["grid"] = json::array();
  for (const DefensePoint& p : report.grid)
    j["grid"].push_back({{"theta", p.theta}, {"sigma", p.sigma}});
  j["attacks"] = report.attack_names;
  j["eval_indices"] = report.eval_indices;
  j["acc_per_defense"] = report.acc_per_defense;
  j["runs"] = json::array();
  for (const RunRecord& r : report.runs) {
    j["runs"].push_back({{"defense_idx", r.defense_idx},
                         {"attack_idx", r.attack_idx},
                         {"sample_idx", r.sample_idx},
                         {"run_seed", r.run_seed},
                         {"targeted", r.targeted},
                         {"target", r.target},
                         {"success", r.success},
                         {"init_failed", r.init_failed},
                         {"queries", r.queries},
                         {"l2", r.l2},
                         {"clean_label", r.clean_label}});
  }
  j["rows"] = json::array();
  for (const ReportRow& row : report.rows) {
    json jr = {{"theta", row.theta},
               {"sigma", row.sigma},
               {"attack", row.attack},
               {"targeted", row.targeted},
               {"asr", row.asr},
               {"mean_queries", row.mean_queries},
               {"acc", row.acc}};
    jr["median_l2"] = row.median_l2_success
                          ? json(*row.median_l2_success)
                          : json(nullptr);
    json ja = json::array();
    for (const auto& [L, v] : row.asr2) ja.push_back({{"L", L}, {"asr2", v}});
    jr["asr2"] = ja;
    j["rows"].push_back(std::move(jr));
  }
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace bdw
