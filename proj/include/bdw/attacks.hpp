#pragma once
// Desk-scale black-box attacks, all driven exclusively through a
// DefendedOracle. Soft-label: NES gradient estimation, SimBA-style random
// coordinate search, GenAttack-style genetic search. Hard-label: Boundary
// random walk, Sign-OPT direction optimization.
//
// Shared conventions:
//  - Every candidate sample is clipped to [0,1]^M before it is queried.
//  - queries_used never exceeds spec.budget and always equals the oracle
//    ledger delta over the run.
//  - A run reports success only when one dedicated, fresh confirming query at
//    final_sample returns the adversarial label (= target when targeted,
//    != original class otherwise). Attacks reserve one query for this
//    confirmation. Sole exception: boundary with a caller-provided
//    initialization and budget 0 returns success at the init without
//    querying (the init is adversarial by contract).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdw/defense.hpp"
#include "bdw/types.hpp"

namespace bdw {

enum class AttackFamily { nes, simba, genattack, boundary, signopt };

AttackFamily parse_family(const std::string& name);
std::string family_name(AttackFamily family);
// nes/simba/genattack consume confidence vectors; boundary/signopt labels.
bool family_is_soft(AttackFamily family);

struct AttackSpec {
  AttackFamily family = AttackFamily::nes;
  bool targeted = false;
  int target = -1;           // required iff targeted
  long long budget = 20000;  // max oracle queries
  // Family-specific scale, feature units: nes/genattack l-inf ball radius
  // around x0; simba per-coordinate step; boundary initial relative
  // orthogonal step delta_0; signopt sign-probe radius eps_u.
  double epsilon = 0.0;  // <= 0 selects the family default
  double lambda = 1.0;   // soft-loss distortion/CE tradeoff, >= 0
  // Population-ish count: nes probe pairs per step (10), genattack
  // population (8), signopt sign probes per step (10); 0 selects the default.
  int pop = 0;
  std::uint64_t seed = 0;

  // Family-specific knobs (ignored by other families).
  double nes_step = 0.02;    // gradient-direction step size
  double nes_radius = 0.01;  // probe radius for gradient estimation
  double eps_source = 0.01;  // boundary: source-directed contraction step
  double mut_prob = 0.10;    // genattack: per-feature mutation probability
  double mut_range = 0.10;   // genattack: mutation amplitude, fraction of epsilon
  int elite = 2;             // genattack: elites kept per generation
};

// epsilon default by family: nes 0.5, simba 0.05, genattack 0.2,
// boundary 0.1, signopt 0.01.
double default_epsilon(AttackFamily family);
// pop default by family: nes 10, genattack 8, signopt 10, others 1.
int default_pop(AttackFamily family);
// Returns a copy with epsilon/pop defaults applied and fields validated
// against the oracle's class count (throws std::invalid_argument).
AttackSpec resolve_spec(const AttackSpec& spec, int num_classes);

struct TracePoint {
  long long queries = 0;
  double distortion = 0.0;
  double loss = 0.0;  // soft attacks: soft_loss; hard attacks: best distortion
};

struct AttackOutcome {
  FeatureVec final_sample;
  bool success = false;
  long long queries_used = 0;
  double l2_distortion = 0.0;  // sqrt(sum((x - x0)^2) / M)
  std::vector<TracePoint> trace;
};

// D(x, x0) + lambda * CE where CE = -log(scores[target] + 1e-12) when
// targeted and +log(scores[c] + 1e-12) otherwise (c = x0.label).
double soft_loss(const ConfidenceVector& scores, const FeatureVec& x,
                 const Sample& x0, const AttackSpec& spec);

AttackOutcome attack_nes(DefendedOracle& oracle, const Sample& x0,
                         const AttackSpec& spec);
AttackOutcome attack_simba(DefendedOracle& oracle, const Sample& x0,
                           const AttackSpec& spec);
AttackOutcome attack_genattack(DefendedOracle& oracle, const Sample& x0,
                               const AttackSpec& spec);
AttackOutcome attack_boundary(DefendedOracle& oracle, const Sample& x0,
                              const AttackSpec& spec,
                              const std::optional<Sample>& init = std::nullopt);
AttackOutcome attack_signopt(DefendedOracle& oracle, const Sample& x0,
                             const AttackSpec& spec);

// Resets the oracle ledger, validates the spec (including oracle-mode
// compatibility), and dispatches on spec.family.
AttackOutcome run_attack(DefendedOracle& oracle, const Sample& x0,
                         const AttackSpec& spec);

// Exposed internals (used by the hard-label attacks; handy for tests).
// Binary search along x0 -> adv for the adversarial point closest to x0;
// `adv` must already be adversarial. Bisects the interpolation weight to
// tolerance `tol`; returns the adversarial endpoint found.
FeatureVec hard_label_line_search(DefendedOracle& oracle, const Sample& x0,
                                  const FeatureVec& adv, const AttackSpec& spec,
                                  double tol, long long max_queries);
// Sign-OPT scalar landscape g(d): smallest lambda > 0 with
// clip01(x0 + lambda * d/||d||) adversarial, by geometric coarse stepping
// plus bisection to `tol`. Returns +infinity if no adversarial point is
// found along the (clipped) ray within max_queries.
double signopt_ray_distance(DefendedOracle& oracle, const Sample& x0,
                            const FeatureVec& direction, const AttackSpec& spec,
                            double tol, long long max_queries);

}  // namespace bdw
