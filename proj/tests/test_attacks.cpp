#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "bdw/attacks.hpp"
#include "bdw/classifier.hpp"
#include "bdw/defense.hpp"
#include "bdw/types.hpp"

using namespace bdw;

namespace {

// Two prototypes on the x axis; the decision boundary is the x = 0.5 line and
// the minimal normalized distortion from the origin to it is 0.5/sqrt(2).
Classifier coin_classifier() { return make_prototype({{0.0, 0.0}, {1.0, 0.0}}, 1.0); }
const double kMinDist = 0.5 / std::sqrt(2.0);

DefendedOracle soft_oracle(double theta = 0.0, double sigma = 0.0,
                           std::uint64_t seed = 0) {
  return DefendedOracle(coin_classifier(), {theta, sigma, seed, OracleMode::soft});
}
DefendedOracle hard_oracle(double theta = 0.0, double sigma = 0.0,
                           std::uint64_t seed = 0) {
  return DefendedOracle(coin_classifier(), {theta, sigma, seed, OracleMode::hard});
}

AttackSpec base_spec(AttackFamily family, bool targeted) {
  AttackSpec s;
  s.family = family;
  s.targeted = targeted;
  if (targeted) s.target = 1;
  s.seed = 3;
  return s;
}

void check_in_cube(const FeatureVec& x) {
  for (double v : x) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

}  // namespace

TEST_CASE("family name round-trip and soft/hard partition") {
  for (AttackFamily f : {AttackFamily::nes, AttackFamily::simba,
                         AttackFamily::genattack, AttackFamily::boundary,
                         AttackFamily::signopt}) {
    CHECK(parse_family(family_name(f)) == f);
    CHECK(default_epsilon(f) > 0.0);
    CHECK(default_pop(f) >= 1);
  }
  CHECK(family_is_soft(AttackFamily::nes));
  CHECK(family_is_soft(AttackFamily::simba));
  CHECK(family_is_soft(AttackFamily::genattack));
  CHECK(!family_is_soft(AttackFamily::boundary));
  CHECK(!family_is_soft(AttackFamily::signopt));
  CHECK_THROWS_AS(parse_family("zoo"), std::invalid_argument);
}

TEST_CASE("resolve_spec applies defaults and validates fields") {
  AttackSpec s = base_spec(AttackFamily::genattack, false);
  s.epsilon = 0.0;
  s.pop = 0;
  const AttackSpec r = resolve_spec(s, 2);
  CHECK(r.epsilon == default_epsilon(AttackFamily::genattack));
  CHECK(r.pop == default_pop(AttackFamily::genattack));
  // Explicit values survive.
  s.epsilon = 0.33;
  s.pop = 5;
  CHECK(resolve_spec(s, 2).epsilon == 0.33);
  CHECK(resolve_spec(s, 2).pop == 5);

  AttackSpec bad = base_spec(AttackFamily::nes, false);
  bad.budget = -1;
  CHECK_THROWS_AS(resolve_spec(bad, 2), std::invalid_argument);
  bad = base_spec(AttackFamily::nes, false);
  bad.lambda = -0.5;
  CHECK_THROWS_AS(resolve_spec(bad, 2), std::invalid_argument);
  bad = base_spec(AttackFamily::genattack, false);
  bad.mut_prob = 1.5;
  CHECK_THROWS_AS(resolve_spec(bad, 2), std::invalid_argument);
  bad = base_spec(AttackFamily::genattack, false);
  bad.elite = 0;
  CHECK_THROWS_AS(resolve_spec(bad, 2), std::invalid_argument);
  bad = base_spec(AttackFamily::nes, true);
  bad.target = 2;
  CHECK_THROWS_AS(resolve_spec(bad, 2), std::invalid_argument);
  bad.target = -1;
  CHECK_THROWS_AS(resolve_spec(bad, 2), std::invalid_argument);
}

TEST_CASE("soft_loss combines distortion and cross-entropy") {
  AttackSpec spec = base_spec(AttackFamily::nes, true);
  const Sample x0{{0.0, 0.0}, 0};
  // At x = x0 the distortion term vanishes.
  CHECK(soft_loss({0.25, 0.75}, x0.features, x0, spec) ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-9));
  AttackSpec unt = base_spec(AttackFamily::nes, false);
  CHECK(soft_loss({0.5, 0.5}, x0.features, x0, unt) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-9));
  // lambda = 0 leaves the pure normalized distortion.
  unt.lambda = 0.0;
  CHECK(soft_loss({0.5, 0.5}, {1.0, 0.0}, x0, unt) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  // Zero scores are floored, not -inf.
  unt.lambda = 1.0;
  CHECK(std::isfinite(soft_loss({0.0, 1.0}, x0.features, x0, unt)));
  CHECK_THROWS_AS(soft_loss({0.5, 0.5}, {0.1}, x0, unt), std::invalid_argument);
}

TEST_CASE("budget zero returns a failed outcome without touching the oracle") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::nes, true);
  spec.budget = 0;

  DefendedOracle soft = soft_oracle();
  DefendedOracle hard = hard_oracle();
  for (AttackFamily f : {AttackFamily::nes, AttackFamily::simba,
                         AttackFamily::genattack, AttackFamily::boundary,
                         AttackFamily::signopt}) {
    spec.family = f;
    DefendedOracle& oracle = family_is_soft(f) ? soft : hard;
    const AttackOutcome out = run_attack(oracle, x0, spec);
    CHECK(!out.success);
    CHECK(out.queries_used == 0);
    CHECK(out.l2_distortion == 0.0);
    CHECK(out.final_sample == x0.features);
    CHECK(oracle.ledger().count == 0);
  }
}

TEST_CASE("boundary with a provided init succeeds at budget zero") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::boundary, false);
  spec.budget = 0;
  DefendedOracle oracle = hard_oracle();
  const Sample init{{1.0, 0.0}, 1};
  const AttackOutcome out = attack_boundary(oracle, x0, spec, init);
  CHECK(out.success);
  CHECK(out.queries_used == 0);
  CHECK(out.final_sample == init.features);
  CHECK(out.l2_distortion == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(oracle.ledger().count == 0);
}

TEST_CASE("an already-adversarial input is confirmed in two queries") {
  const Sample x0{{0.9, 0.0}, 0};  // model says class 1 here
  for (AttackFamily f : {AttackFamily::nes, AttackFamily::simba,
                         AttackFamily::genattack}) {
    AttackSpec spec = base_spec(f, true);
    spec.budget = 100;
    DefendedOracle oracle = soft_oracle();
    const AttackOutcome out = run_attack(oracle, x0, spec);
    CHECK(out.success);
    CHECK(out.queries_used == 2);  // the detecting probe plus the confirmation
    CHECK(out.l2_distortion == 0.0);
  }
}

TEST_CASE("nes crosses the boundary on a clean soft oracle") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::nes, true);
  spec.budget = 5000;
  spec.epsilon = 0.8;
  DefendedOracle oracle = soft_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(out.success);
  CHECK(out.queries_used <= 5000);
  CHECK(out.l2_distortion >= kMinDist - 0.02);
  CHECK(out.l2_distortion <= 0.66);
  check_in_cube(out.final_sample);
  // Trace rows are (queries, distortion, soft loss) once per step.
  for (std::size_t i = 1; i < out.trace.size(); ++i)
    CHECK(out.trace[i].queries > out.trace[i - 1].queries);
}

TEST_CASE("simba accepts only strict objective improvements") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::simba, false);
  spec.budget = 2000;
  DefendedOracle oracle = soft_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(out.success);
  CHECK(out.l2_distortion <= 0.45);
  CHECK(out.l2_distortion >= kMinDist - 0.02);
  // Untargeted objective: the true-class score strictly falls along the trace.
  for (std::size_t i = 1; i < out.trace.size(); ++i)
    CHECK(out.trace[i].loss < out.trace[i - 1].loss);
}

TEST_CASE("simba giant steps stay inside the cube") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::simba, false);
  spec.budget = 200;
  spec.epsilon = 2.0;
  DefendedOracle oracle = soft_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(out.success);
  check_in_cube(out.final_sample);
  CHECK(out.l2_distortion == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("genattack without mutation cannot leave the start point") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::genattack, true);
  spec.budget = 300;
  spec.pop = 1;  // the only member is x0 itself
  spec.mut_prob = 0.0;
  DefendedOracle oracle = soft_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(!out.success);
  CHECK(out.queries_used <= 300);
  CHECK(out.l2_distortion == 0.0);
}

TEST_CASE("genattack reaches a target inside its search ball") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::genattack, true);
  spec.budget = 10000;
  spec.epsilon = 0.6;
  DefendedOracle oracle = soft_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(out.success);
  CHECK(out.queries_used <= 10000);
  CHECK(out.l2_distortion >= kMinDist - 0.02);
  CHECK(out.l2_distortion <= 0.61);
  check_in_cube(out.final_sample);
}

TEST_CASE("hard_label_line_search lands just past the decision boundary") {
  const Sample x0{{0.0, 0.0}, 0};
  const AttackSpec spec = base_spec(AttackFamily::boundary, false);
  DefendedOracle oracle = hard_oracle();
  const FeatureVec hit =
      hard_label_line_search(oracle, x0, {1.0, 0.0}, spec, 1e-3, 100);
  CHECK(hit[0] > 0.5);
  CHECK(hit[0] <= 0.501);
  CHECK(hit[1] == 0.0);
  CHECK(oracle.ledger().count > 0);
  CHECK(oracle.ledger().count <= 100);
}

TEST_CASE("boundary walk closes in on the minimal distortion") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::boundary, false);
  spec.budget = 10000;
  DefendedOracle oracle = hard_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(out.success);
  CHECK(out.queries_used <= 10000);
  CHECK(out.l2_distortion >= kMinDist - 1e-6);
  CHECK(out.l2_distortion <= kMinDist * 1.1);
  // The recorded best distortion never increases.
  for (std::size_t i = 1; i < out.trace.size(); ++i)
    CHECK(out.trace[i].loss <= out.trace[i - 1].loss + 1e-12);
}

TEST_CASE("signopt_ray_distance finds the exact boundary crossing") {
  const Sample x0{{0.0, 0.0}, 0};
  const AttackSpec spec = base_spec(AttackFamily::signopt, false);
  DefendedOracle oracle = hard_oracle();
  const double g = signopt_ray_distance(oracle, x0, {1.0, 0.0}, spec, 1e-4, 200);
  CHECK(g > 0.5);
  CHECK(g <= 0.501);
  // A ray that never crosses reports +infinity.
  DefendedOracle oracle2 = hard_oracle();
  const double none =
      signopt_ray_distance(oracle2, x0, {-1.0, 0.0}, spec, 1e-4, 200);
  CHECK(std::isinf(none));
  CHECK_THROWS_AS(signopt_ray_distance(oracle, x0, {0.0, 0.0}, spec, 1e-4, 10),
                  std::invalid_argument);
}

TEST_CASE("signopt optimizes the ray direction") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::signopt, false);
  spec.budget = 20000;
  DefendedOracle oracle = hard_oracle();
  const AttackOutcome out = run_attack(oracle, x0, spec);
  CHECK(out.success);
  CHECK(out.queries_used <= 20000);
  CHECK(out.l2_distortion >= kMinDist - 1e-6);
  CHECK(out.l2_distortion <= 0.39);
  for (std::size_t i = 1; i < out.trace.size(); ++i)
    CHECK(out.trace[i].loss <= out.trace[i - 1].loss + 1e-12);
}

TEST_CASE("run_attack matches the direct entry points and is deterministic") {
  const Sample x0{{0.0, 0.0}, 0};
  AttackSpec spec = base_spec(AttackFamily::nes, true);
  spec.budget = 800;
  spec.epsilon = 0.8;
  DefendedOracle a = soft_oracle(0.9, 0.05, 4);
  DefendedOracle b = soft_oracle(0.9, 0.05, 4);
  const AttackOutcome via_dispatch = run_attack(a, x0, spec);
  const AttackOutcome direct = attack_nes(b, x0, spec);
  CHECK(via_dispatch.success == direct.success);
  CHECK(via_dispatch.queries_used == direct.queries_used);
  CHECK(via_dispatch.final_sample == direct.final_sample);
  CHECK(via_dispatch.l2_distortion == direct.l2_distortion);

  // Rerunning on the same oracle resets the ledger, so the noise stream and
  // therefore the whole outcome replays exactly.
  const AttackOutcome again = run_attack(a, x0, spec);
  CHECK(again.success == via_dispatch.success);
  CHECK(again.queries_used == via_dispatch.queries_used);
  CHECK(again.final_sample == via_dispatch.final_sample);
}

TEST_CASE("oracle mode mismatches are rejected") {
  const Sample x0{{0.0, 0.0}, 0};
  DefendedOracle hard = hard_oracle();
  DefendedOracle soft = soft_oracle();
  for (AttackFamily f : {AttackFamily::nes, AttackFamily::simba,
                         AttackFamily::genattack}) {
    CHECK_THROWS_AS(run_attack(hard, x0, base_spec(f, false)),
                    std::invalid_argument);
  }
  for (AttackFamily f : {AttackFamily::boundary, AttackFamily::signopt}) {
    CHECK_THROWS_AS(run_attack(soft, x0, base_spec(f, false)),
                    std::invalid_argument);
  }
}

TEST_CASE("per-run input validation") {
  DefendedOracle oracle = soft_oracle();
  AttackSpec spec = base_spec(AttackFamily::nes, true);
  spec.target = 0;
  CHECK_THROWS_AS(run_attack(oracle, Sample{{0.0, 0.0}, 0}, spec),
                  std::invalid_argument);  // target equals the own class
  spec.target = 1;
  CHECK_THROWS_AS(run_attack(oracle, Sample{{0.0, 0.0, 0.0}, 0}, spec),
                  std::invalid_argument);  // dimension mismatch
  CHECK_THROWS_AS(run_attack(oracle, Sample{{0.0, 0.0}, 7}, spec),
                  std::invalid_argument);  // label out of range
}

TEST_CASE("query accounting holds for every family under an active defense") {
  const Sample x0{{0.1, 0.3}, 0};
  for (AttackFamily f : {AttackFamily::nes, AttackFamily::simba,
                         AttackFamily::genattack, AttackFamily::boundary,
                         AttackFamily::signopt}) {
    AttackSpec spec = base_spec(f, false);
    spec.budget = 600;
    DefendedOracle oracle = family_is_soft(f)
                                ? soft_oracle(0.8, 0.05, 11)
                                : hard_oracle(0.8, 0.05, 11);
    const AttackOutcome out = run_attack(oracle, x0, spec);
    CHECK(out.queries_used == static_cast<long long>(oracle.ledger().count));
    CHECK(out.queries_used <= 600);
    check_in_cube(out.final_sample);
    CHECK(out.l2_distortion ==
          doctest::Approx(l2_distortion(out.final_sample, x0.features))
              .epsilon(1e-12));
    long long prev = -1;
    for (const TracePoint& tp : out.trace) {
      CHECK(tp.queries >= prev);
      CHECK(tp.queries <= out.queries_used);
      prev = tp.queries;
    }
  }
}
