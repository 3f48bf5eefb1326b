#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kRoot = "/tmp/bdw_cli_test";

// Baked in by CMake; a nonempty env var of the same name wins for manual runs.
std::string cli_path() {
  const char* p = std::getenv("BDW_CLI_PATH");
  if (p != nullptr && *p != '\0') return p;
  return BDW_CLI_PATH;
}

int run(const std::string& args) {
  const std::string cmd =
      cli_path() + " " + args + " > " + kRoot + "/last_stdout.txt 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

struct Fixture {
  Fixture() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

// Small, fast end-to-end task: 3-class prototype blobs.
std::string write_base_config() {
  const json cfg = {
      {"seed", 42},
      {"data",
       {{"classes", 3}, {"dim", 4}, {"spread", 0.05}, {"per_class", 40}, {"seed", 7}}},
      {"model", {{"kind", "prototype"}}},
      {"defense", {{"theta", 0.6}, {"sigma", 0.1}, {"seed", 3}}},
      {"attack", {{"family", "simba"}, {"budget", 400}}},
      {"eval", {{"n_samples", 6}}}};
  const std::string path = kRoot + "/config.json";
  std::ofstream f(path);
  f << cfg.dump(2);
  return path;
}

}  // namespace

TEST_CASE("theory subcommand writes the model curves and manifest") {
  Fixture fx;
  const std::string out = kRoot + "/theory";
  REQUIRE(run("theory --out " + out) == 0);

  const std::string fig2a = slurp(out + "/fig2a.csv");
  CHECK(count_lines(fig2a) == 502);  // header + 501 s values
  CHECK(fig2a.rfind("s,p_acc\n", 0) == 0);
  const std::string fig2b = slurp(out + "/fig2b.csv");
  CHECK(count_lines(fig2b) == 85);  // header + 21 thetas x 4 sigmas
  CHECK(fig2b.rfind("theta,sigma,acc\n", 0) == 0);

  const json manifest = read_json(out + "/manifest.json");
  CHECK(manifest.at("command") == "theory");
  const double nu = manifest.at("extra").at("nu").get<double>();
  CHECK(nu > 0.40);
  CHECK(nu < 0.42);
  const double clean = manifest.at("extra").at("clean_acc_at_nu").get<double>();
  CHECK(std::abs(clean - 0.90) <= 1e-4);
}

TEST_CASE("theory rejects unachievable targets and bad grids") {
  Fixture fx;
  CHECK(run("theory --clean-acc 0.00001 --out " + kRoot + "/t1") == 1);
  CHECK(run("theory --grid-points 4 --out " + kRoot + "/t2") == 2);
}

TEST_CASE("usage and config errors exit with code 2") {
  Fixture fx;
  CHECK(run("") == 2);  // a subcommand is required
  CHECK(run("attack --config /tmp/bdw_cli_test/does_not_exist.json") == 2);

  const std::string cfg = write_base_config();
  CHECK(run("attack --config " + cfg + " --set nope.x=1 --out " + kRoot) == 2);
  CHECK(run("attack --config " + cfg + " --set defense.theta=2 --out " + kRoot) == 2);

  const std::string bad = kRoot + "/bad.json";
  {
    std::ofstream f(bad);
    f << "{ not json";
  }
  CHECK(run("attack --config " + bad) == 2);

  // A soft-label attack cannot run against a hard-label oracle.
  CHECK(run("attack --config " + cfg + " --set defense.mode=hard --out " + kRoot) == 2);
}

TEST_CASE("make-data, train, eval-acc and attack chain together") {
  Fixture fx;
  const std::string cfg = write_base_config();
  const std::string d1 = kRoot + "/data";

  REQUIRE(run("make-data --config " + cfg + " --out " + d1) == 0);
  CHECK(count_lines(slurp(d1 + "/train.csv")) == 1 + 96);  // 80% of 120
  CHECK(count_lines(slurp(d1 + "/test.csv")) == 1 + 24);
  const json m1 = read_json(d1 + "/manifest.json");
  CHECK(m1.at("extra").at("n_train") == 96);
  CHECK(m1.at("extra").at("classes") == 3);

  // Re-point the config at the exported CSVs for the rest of the chain.
  json cfg2 = json::parse(slurp(cfg));
  cfg2["data"]["train_csv"] = d1 + "/train.csv";
  cfg2["data"]["test_csv"] = d1 + "/test.csv";
  const std::string cfg2_path = kRoot + "/config2.json";
  {
    std::ofstream f(cfg2_path);
    f << cfg2.dump(2);
  }

  const std::string d2 = kRoot + "/model";
  REQUIRE(run("train --config " + cfg2_path + " --out " + d2) == 0);
  CHECK(fs::exists(d2 + "/model.json"));
  const json m2 = read_json(d2 + "/manifest.json");
  CHECK(m2.at("extra").at("test_acc").get<double>() >= 0.9);

  const std::string d3 = kRoot + "/acc";
  REQUIRE(run("eval-acc --config " + cfg2_path + " --out " + d3) == 0);
  const json acc = read_json(d3 + "/acc.json");
  CHECK(acc.at("theta") == 0.6);
  CHECK(acc.at("sigma") == 0.1);
  const double undefended = acc.at("acc_undefended").get<double>();
  const double defended = acc.at("acc_defended").get<double>();
  CHECK(undefended >= 0.9);
  CHECK(defended >= 0.0);
  CHECK(defended <= 1.0);
  CHECK(acc.at("drop").get<double>() ==
        doctest::Approx(undefended - defended).epsilon(1e-12));

  const std::string d4 = kRoot + "/attack";
  REQUIRE(run("attack --config " + cfg2_path + " --out " + d4) == 0);
  const std::string summary = slurp(d4 + "/summary.csv");
  CHECK(summary.rfind("theta,sigma,attack,targeted,asr,median_l2,mean_queries,acc\n",
                      0) == 0);
  CHECK(count_lines(summary) == 2);  // one defense point x one attack
  CHECK(summary.find(",simba,0,") != std::string::npos);
  CHECK(fs::exists(d4 + "/report.json"));
  CHECK(!fs::exists(d4 + "/asr2.csv"));  // no thresholds configured
  const json report = read_json(d4 + "/report.json");
  CHECK(report.at("runs").size() == 6);
  CHECK(report.at("provenance").at("config_hash") ==
        read_json(d4 + "/manifest.json").at("config_hash"));
}

TEST_CASE("a one-point sweep equals the attack command at that point") {
  Fixture fx;
  const std::string cfg = write_base_config();

  const std::string ds = kRoot + "/sweep";
  REQUIRE(run("sweep --config " + cfg + " --out " + ds +
              " --set grid.thetas=[0] --set grid.sigmas=[0]") == 0);
  const std::string da = kRoot + "/point";
  REQUIRE(run("attack --config " + cfg + " --out " + da +
              " --set defense.theta=0 --set defense.sigma=0") == 0);
  CHECK(slurp(ds + "/summary.csv") == slurp(da + "/summary.csv"));

  // Byte-identical artifacts on a rerun: summary and manifest carry no
  // timestamps.
  const std::string ds2 = kRoot + "/sweep2";
  REQUIRE(run("sweep --config " + cfg + " --out " + ds2 +
              " --set grid.thetas=[0] --set grid.sigmas=[0]") == 0);
  CHECK(slurp(ds2 + "/summary.csv") == slurp(ds + "/summary.csv"));
  CHECK(slurp(ds2 + "/manifest.json") == slurp(ds + "/manifest.json"));
}

TEST_CASE("sweep crosses the grid and honors asr2 thresholds") {
  Fixture fx;
  const std::string cfg = write_base_config();
  const std::string out = kRoot + "/grid";
  REQUIRE(run("sweep --config " + cfg + " --out " + out +
              " --set grid.thetas=[0,0.8] --set grid.sigmas=[0,0.2]"
              " --set thresholds=[0.3,0.6]") == 0);
  const std::string summary = slurp(out + "/summary.csv");
  CHECK(count_lines(summary) == 1 + 4);  // 2 thetas x 2 sigmas, one attack
  const std::string asr2 = slurp(out + "/asr2.csv");
  CHECK(asr2.rfind("theta,sigma,attack,L,asr2\n", 0) == 0);
  CHECK(count_lines(asr2) == 1 + 4 * 2);
}

TEST_CASE("seed and jobs overrides change the manifest, help lists the schema") {
  Fixture fx;
  const std::string cfg = write_base_config();
  const std::string out = kRoot + "/seeded";
  REQUIRE(run("attack --config " + cfg + " --out " + out + " --seed 99 --jobs 2") == 0);
  const json manifest = read_json(out + "/manifest.json");
  CHECK(manifest.at("seed") == 99);
  CHECK(manifest.at("config").at("jobs") == 2);

  REQUIRE(run("attack --help") == 0);
  const std::string help = slurp(kRoot + "/last_stdout.txt");
  CHECK(help.find("data.classes") != std::string::npos);
  CHECK(help.find("attack.budget") != std::string::npos);
  CHECK(help.find("grid.thetas") != std::string::npos);
  CHECK(help.find("defense.theta") != std::string::npos);
}
