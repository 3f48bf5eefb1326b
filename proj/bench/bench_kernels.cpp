// Benchmarks the OpenMP kernels against their serial references and checks
// the results are bit-identical: the Monte-Carlo accuracy oracle and a small
// harness sweep.

#include <chrono>
#include <cstdio>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bdw/classifier.hpp"
#include "bdw/dataset.hpp"
#include "bdw/harness.hpp"
#include "bdw/theory.hpp"

using namespace bdw;
using Clock = std::chrono::steady_clock;

static double secs(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main() {
#ifdef _OPENMP
  std::printf("openmp: enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled (serial build)\n");
#endif

  {
    const TheoryParams p{1000, 0.405, 0.6, 0.1};
    const long long trials = 400000;
    const auto t0 = Clock::now();
    const auto serial = mc_defended_acc_serial(p, trials, 42);
    const auto t1 = Clock::now();
    const auto parallel = mc_defended_acc(p, trials, 42);
    const auto t2 = Clock::now();
    std::printf(
        "mc_defended_acc  N=1000 trials=%lld  serial %.3fs  openmp %.3fs  "
        "identical=%s\n",
        trials, secs(t0, t1), secs(t1, t2), serial == parallel ? "yes" : "NO");
  }

  {
    const BlobData data = gen_blobs(10, 16, 0.12, 60, 1);
    const Classifier clf = train(data.train, ClassifierKind::mlp, 30, 0.05, 2);
    ExperimentConfig cfg;
    cfg.test_set = data.test;
    cfg.classifier = clf;
    cfg.grid = {{0.5, 0.1}};
    AttackPlan plan;
    plan.spec.family = AttackFamily::simba;
    plan.spec.targeted = true;
    plan.spec.budget = 3000;
    cfg.attacks = {plan};
    cfg.n_eval = 10;
    cfg.master_seed = 7;

    cfg.jobs = 1;
    const auto t0 = Clock::now();
    const ExperimentReport r1 = run_experiment(cfg);
    const auto t1 = Clock::now();
    cfg.jobs = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    const ExperimentReport r2 = run_experiment(cfg);
    const auto t2 = Clock::now();

    bool same = r1.runs.size() == r2.runs.size();
    for (std::size_t i = 0; same && i < r1.runs.size(); ++i) {
      same = r1.runs[i].success == r2.runs[i].success &&
             r1.runs[i].queries == r2.runs[i].queries &&
             r1.runs[i].l2 == r2.runs[i].l2;
    }
    std::printf(
        "harness %zu runs   jobs=1 %.3fs  jobs=%d %.3fs  identical=%s\n",
        r1.runs.size(), secs(t0, t1), cfg.jobs, secs(t1, t2),
        same ? "yes" : "NO");
  }
  return 0;
}
