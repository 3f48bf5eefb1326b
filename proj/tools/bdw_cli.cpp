// bdw — boundary-defense workbench CLI.
//
// Subcommands: make-data, train, eval-acc, theory, attack, sweep.
// Exit codes: 0 success, 1 domain errors (calibration failures, missing
// adversarial initializations), 2 usage/config errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdw/classifier.hpp"
#include "bdw/config.hpp"
#include "bdw/dataset.hpp"
#include "bdw/harness.hpp"
#include "bdw/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  int jobs = 0;        // 0 = keep config value
  long long seed = -1;  // <0 = keep config value
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (defaults used when omitted)");
  cmd->add_option("--out", o.out_dir, "output directory, created if missing")
      ->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "parallel attack runs (0 = logical cores)");
  cmd->add_option("--seed", o.seed, "master seed override");
  cmd->add_option("--set", o.sets,
                  "config override key.path=value (repeatable; unknown keys rejected)");
  cmd->footer(bdw::config_schema_help());
}

json load_resolved(const CommonOpts& o) {
  json user = json::object();
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path);
    if (!f.good())
      throw std::invalid_argument("config file not found: " + o.config_path);
    user = json::parse(f);
  }
  json resolved = bdw::resolve_config(user);
  for (const std::string& kv : o.sets) bdw::apply_override(resolved, kv);
  resolved = bdw::resolve_config(resolved);  // re-validate after overrides
  if (o.seed >= 0) resolved["seed"] = o.seed;
  if (o.jobs >= 1) resolved["jobs"] = o.jobs;
  return resolved;
}

std::string out_file(const CommonOpts& o, const std::string& name) {
  return (fs::path(o.out_dir) / name).string();
}

void cmd_make_data(const CommonOpts& o) {
  const json resolved = load_resolved(o);
  fs::create_directories(o.out_dir);
  const bdw::BlobData data = bdw::load_data(resolved);
  bdw::save_csv(data.train, out_file(o, "train.csv"));
  bdw::save_csv(data.test, out_file(o, "test.csv"));
  bdw::write_manifest(o.out_dir, "make-data", resolved,
                      {"train.csv", "test.csv"},
                      json{{"n_train", data.train.samples.size()},
                           {"n_test", data.test.samples.size()},
                           {"classes", data.train.num_classes},
                           {"dim", data.train.dim}});
  std::cout << "wrote " << out_file(o, "train.csv") << " ("
            << data.train.samples.size() << " samples) and "
            << out_file(o, "test.csv") << " (" << data.test.samples.size()
            << " samples)\n";
}

void cmd_train(const CommonOpts& o) {
  const json resolved = load_resolved(o);
  fs::create_directories(o.out_dir);
  const bdw::BlobData data = bdw::load_data(resolved);
  const bdw::Classifier clf = bdw::load_model(resolved, data.train);
  bdw::save_classifier(clf, out_file(o, "model.json"));
  const double train_acc = bdw::accuracy(clf, data.train);
  const double test_acc = bdw::accuracy(clf, data.test);
  bdw::write_manifest(o.out_dir, "train", resolved, {"model.json"},
                      json{{"train_acc", train_acc}, {"test_acc", test_acc}});
  std::cout << "model.json written; train acc " << train_acc << ", test acc "
            << test_acc << "\n";
}

void cmd_eval_acc(const CommonOpts& o) {
  const json resolved = load_resolved(o);
  fs::create_directories(o.out_dir);
  const bdw::BlobData data = bdw::load_data(resolved);
  const bdw::Classifier clf = bdw::load_model(resolved, data.train);
  bdw::DefenseConfig dc;
  dc.theta = resolved.at("defense").at("theta");
  dc.sigma = resolved.at("defense").at("sigma");
  dc.seed = resolved.at("defense").at("seed").get<std::uint64_t>();
  dc.mode = bdw::OracleMode::hard;
  const double undefended = bdw::accuracy(clf, data.test);
  const double defended = bdw::measure_acc(clf, dc, data.test);
  const json result{{"theta", dc.theta},
                    {"sigma", dc.sigma},
                    {"acc_undefended", undefended},
                    {"acc_defended", defended},
                    {"drop", undefended - defended}};
  std::ofstream f(out_file(o, "acc.json"));
  bdw::require(f.good(), "cannot open for writing: " + out_file(o, "acc.json"));
  f << result.dump(2) << '\n';
  bdw::write_manifest(o.out_dir, "eval-acc", resolved, {"acc.json"}, result);
  std::cout << "theta=" << dc.theta << " sigma=" << dc.sigma
            << " acc_undefended=" << undefended << " acc_defended=" << defended
            << "\n";
}

struct TheoryOpts {
  int n = 1000;
  double clean_acc_target = 0.90;
  int grid_points = 2001;
  std::string out_dir = ".";
};

void cmd_theory(const TheoryOpts& t) {
  fs::create_directories(t.out_dir);
  const bdw::QuadratureSpec quad{t.grid_points};
  const double nu = bdw::calibrate_nu(t.clean_acc_target, t.n, quad);
  const double clean = bdw::clean_acc(nu, t.n, quad);

  {
    std::ofstream f(fs::path(t.out_dir) / "fig2a.csv");
    bdw::require(f.good(), "cannot open fig2a.csv for writing");
    f << "s,p_acc\n";
    const int steps = 500;
    for (int i = 0; i <= steps; ++i) {
      const double s = static_cast<double>(i) / steps;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", s,
                    bdw::p_acc_given_s(s, t.n));
      f << buf;
    }
  }
  {
    std::ofstream f(fs::path(t.out_dir) / "fig2b.csv");
    bdw::require(f.good(), "cannot open fig2b.csv for writing");
    f << "theta,sigma,acc\n";
    const std::vector<double> sigmas{0.05, 0.1, 0.2, 0.3};
    for (int i = 0; i <= 20; ++i) {
      const double theta = i * 0.05;
      for (const double sigma : sigmas) {
        bdw::TheoryParams p{t.n, nu, theta, sigma};
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", theta, sigma,
                      bdw::defended_acc(p, quad));
        f << buf;
      }
    }
  }
  const json resolved{{"n", t.n},
                      {"clean_acc", t.clean_acc_target},
                      {"grid_points", t.grid_points}};
  bdw::write_manifest(t.out_dir, "theory", resolved, {"fig2a.csv", "fig2b.csv"},
                      json{{"nu", nu}, {"clean_acc_at_nu", clean}});
  std::cout << "nu=" << nu << " (clean_acc " << clean << "); wrote fig2a.csv, "
            << "fig2b.csv\n";
}

void cmd_experiment(const CommonOpts& o, const std::string& name, bool sweep) {
  const json resolved = load_resolved(o);
  fs::create_directories(o.out_dir);
  bdw::LoadedExperiment loaded = bdw::load_experiment(resolved, sweep);
  const bdw::ExperimentReport report = bdw::run_experiment(loaded.experiment);
  bdw::write_report_json(report, bdw::config_hash(resolved),
                         out_file(o, "report.json"));
  bdw::write_summary_csv(report, out_file(o, "summary.csv"));
  std::vector<std::string> outputs{"report.json", "summary.csv"};
  if (!loaded.experiment.distortion_thresholds.empty()) {
    bdw::write_asr2_csv(report, out_file(o, "asr2.csv"));
    outputs.push_back("asr2.csv");
  }
  bdw::write_manifest(o.out_dir, name, resolved, outputs,
                      json{{"rows", report.rows.size()},
                           {"runs", report.runs.size()}});
  std::cout << "theta sigma attack targeted asr median_l2 mean_queries acc\n";
  for (const bdw::ReportRow& row : report.rows) {
    std::cout << row.theta << ' ' << row.sigma << ' ' << row.attack << ' '
              << (row.targeted ? 1 : 0) << ' ' << row.asr << ' ';
    if (row.median_l2_success) {
      std::cout << *row.median_l2_success;
    } else {
      std::cout << '-';
    }
    std::cout << ' ' << row.mean_queries << ' ' << row.acc << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bdw: boundary-defense attack/defense workbench"};
  app.require_subcommand(1);

  CommonOpts make_data_opts, train_opts, eval_opts, attack_opts, sweep_opts;
  TheoryOpts theory_opts;

  CLI::App* c_make = app.add_subcommand(
      "make-data", "generate (or re-export) the synthetic blob dataset CSVs");
  add_common(c_make, make_data_opts);
  c_make->callback([&] { cmd_make_data(make_data_opts); });

  CLI::App* c_train = app.add_subcommand(
      "train", "train (or load) the victim classifier and save model.json");
  add_common(c_train, train_opts);
  c_train->callback([&] { cmd_train(train_opts); });

  CLI::App* c_eval = app.add_subcommand(
      "eval-acc", "measure defended vs undefended test accuracy");
  add_common(c_eval, eval_opts);
  c_eval->callback([&] { cmd_eval_acc(eval_opts); });

  CLI::App* c_theory = app.add_subcommand(
      "theory", "closed-form accuracy model curves (fig2a.csv, fig2b.csv)");
  c_theory->add_option("--n", theory_opts.n, "number of classes N")
      ->capture_default_str();
  c_theory
      ->add_option("--clean-acc", theory_opts.clean_acc_target,
                   "target clean accuracy for nu calibration")
      ->capture_default_str();
  c_theory
      ->add_option("--grid-points", theory_opts.grid_points,
                   "quadrature grid points (odd, >= 3)")
      ->capture_default_str();
  c_theory->add_option("--out", theory_opts.out_dir, "output directory")
      ->capture_default_str();
  c_theory->callback([&] { cmd_theory(theory_opts); });

  CLI::App* c_attack = app.add_subcommand(
      "attack", "run the configured attack(s) at the single defense point");
  add_common(c_attack, attack_opts);
  c_attack->callback([&] { cmd_experiment(attack_opts, "attack", false); });

  CLI::App* c_sweep = app.add_subcommand(
      "sweep", "run the configured attack(s) over the grid.thetas x grid.sigmas");
  add_common(c_sweep, sweep_opts);
  c_sweep->callback([&] { cmd_experiment(sweep_opts, "sweep", true); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const bdw::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
