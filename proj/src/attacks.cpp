#include "bdw/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "bdw/rng.hpp"

namespace bdw {
namespace {

constexpr double kLogEps = 1e-12;     // cross-entropy floor
constexpr double kLineTol = 1e-3;     // binary-search tolerance, feature units
constexpr long long kInitProbeCap = 2000;  // hard-label init sub-budget cap

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

FeatureVec clip01_vec(FeatureVec x) {
  for (double& v : x) v = clamp01(v);
  return x;
}

FeatureVec lerp(const FeatureVec& a, const FeatureVec& b, double t) {
  FeatureVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
  return out;
}

// Per-run bookkeeping: ledger delta, budget guard with one query held back
// for the final confirmation, and the adversarial-label predicate.
struct RunContext {
  DefendedOracle& oracle;
  const Sample& x0;
  const AttackSpec& spec;
  long long start;

  RunContext(DefendedOracle& o, const Sample& s, const AttackSpec& sp)
      : oracle(o), x0(s), spec(sp),
        start(static_cast<long long>(o.ledger().count)) {}

  long long used() const {
    return static_cast<long long>(oracle.ledger().count) - start;
  }
  // Room for n more working queries while keeping the confirmation reserve.
  bool can(long long n) const { return used() + n + 1 <= spec.budget; }
  bool can_confirm() const { return used() + 1 <= spec.budget; }
  long long working_left() const {
    return std::max<long long>(0, spec.budget - used() - 1);
  }
  bool adv_label(int label) const {
    return spec.targeted ? label == spec.target : label != x0.label;
  }
};

struct SoftProbe {
  ConfidenceVector scores;
  bool adv = false;
};

SoftProbe soft_probe(RunContext& rc, const FeatureVec& x) {
  SoftProbe p;
  p.scores = rc.oracle.query_soft(x);
  p.adv = rc.adv_label(argmax_lowest(p.scores));
  return p;
}

// The one query that decides success: fresh defended verdict at x.
bool confirm(RunContext& rc, const FeatureVec& x) {
  if (rc.oracle.mode() == OracleMode::soft)
    return rc.adv_label(argmax_lowest(rc.oracle.query_soft(x)));
  return rc.adv_label(rc.oracle.query_hard(x));
}

AttackOutcome finish(const RunContext& rc, FeatureVec x, bool success,
                     std::vector<TracePoint> trace) {
  AttackOutcome out;
  out.final_sample = std::move(x);
  out.success = success;
  out.queries_used = rc.used();
  out.l2_distortion = l2_distortion(out.final_sample, rc.x0.features);
  out.trace = std::move(trace);
  return out;
}

AttackOutcome confirm_and_finish(RunContext& rc, FeatureVec x,
                                 std::vector<TracePoint> trace) {
  const bool ok = rc.can_confirm() && confirm(rc, x);
  return finish(rc, std::move(x), ok, std::move(trace));
}

AttackSpec prepare(DefendedOracle& oracle, const Sample& x0,
                   const AttackSpec& in, AttackFamily family) {
  AttackSpec spec = resolve_spec(in, oracle.classifier().num_classes);
  require(spec.family == family,
          "attack spec family does not match the entry point");
  require(static_cast<int>(x0.features.size()) == oracle.classifier().dim,
          "attack: sample dimension does not match the classifier");
  require(x0.label >= 0 && x0.label < oracle.classifier().num_classes,
          "attack: sample label out of range");
  if (spec.targeted)
    require(spec.target != x0.label,
            "attack: target class equals the sample's own class");
  if (family_is_soft(family)) {
    require(oracle.mode() == OracleMode::soft,
            family_name(family) + ": oracle mode mismatch (soft-label attack "
                                  "on a hard-label oracle)");
  } else {
    require(oracle.mode() == OracleMode::hard,
            family_name(family) + ": oracle mode mismatch (hard-label attack "
                                  "on a soft-label oracle)");
  }
  return spec;
}

// Uniform-cube probing for an adversarial starting point (hard-label
// attacks). Returns nullopt when the sub-budget is exhausted.
std::optional<FeatureVec> probe_adversarial_init(RunContext& rc, RngStream& rng,
                                                 int dim) {
  const long long sub_budget = std::min(kInitProbeCap, rc.working_left());
  for (long long i = 0; i < sub_budget; ++i) {
    FeatureVec cand(dim);
    for (int j = 0; j < dim; ++j) cand[j] = rng.uniform();
    if (rc.adv_label(rc.oracle.query_hard(cand))) return cand;
  }
  return std::nullopt;
}

}  // namespace

AttackFamily parse_family(const std::string& name) {
  if (name == "nes") return AttackFamily::nes;
  if (name == "simba") return AttackFamily::simba;
  if (name == "genattack") return AttackFamily::genattack;
  if (name == "boundary") return AttackFamily::boundary;
  if (name == "signopt") return AttackFamily::signopt;
  throw std::invalid_argument("unknown attack family: " + name);
}

std::string family_name(AttackFamily family) {
  switch (family) {
    case AttackFamily::nes: return "nes";
    case AttackFamily::simba: return "simba";
    case AttackFamily::genattack: return "genattack";
    case AttackFamily::boundary: return "boundary";
    case AttackFamily::signopt: return "signopt";
  }
  throw std::invalid_argument("unknown attack family enum value");
}

bool family_is_soft(AttackFamily family) {
  return family == AttackFamily::nes || family == AttackFamily::simba ||
         family == AttackFamily::genattack;
}

double default_epsilon(AttackFamily family) {
  switch (family) {
    case AttackFamily::nes: return 0.5;
    case AttackFamily::simba: return 0.05;
    case AttackFamily::genattack: return 0.2;
    case AttackFamily::boundary: return 0.1;
    case AttackFamily::signopt: return 0.01;
  }
  return 0.0;
}

int default_pop(AttackFamily family) {
  switch (family) {
    case AttackFamily::nes: return 10;
    case AttackFamily::genattack: return 8;
    case AttackFamily::signopt: return 10;
    default: return 1;
  }
}

AttackSpec resolve_spec(const AttackSpec& in, int num_classes) {
  AttackSpec s = in;
  if (s.epsilon <= 0.0) s.epsilon = default_epsilon(s.family);
  if (s.pop <= 0) s.pop = default_pop(s.family);
  require(s.budget >= 0, "attack: budget must be >= 0");
  require(s.epsilon > 0.0, "attack: epsilon must be > 0");
  require(s.lambda >= 0.0, "attack: lambda must be >= 0");
  require(s.pop >= 1, "attack: population/probe count must be >= 1");
  require(s.nes_step > 0.0, "attack: nes_step must be > 0");
  require(s.nes_radius > 0.0, "attack: nes_radius must be > 0");
  require(s.eps_source > 0.0 && s.eps_source < 1.0,
          "attack: eps_source must lie in (0,1)");
  require(s.mut_prob >= 0.0 && s.mut_prob <= 1.0,
          "attack: mut_prob must lie in [0,1]");
  require(s.mut_range >= 0.0, "attack: mut_range must be >= 0");
  require(s.elite >= 1, "attack: elite must be >= 1");
  if (s.targeted)
    require(s.target >= 0 && s.target < num_classes,
            "attack: target class out of range");
  return s;
}

double soft_loss(const ConfidenceVector& scores, const FeatureVec& x,
                 const Sample& x0, const AttackSpec& spec) {
  require(x.size() == x0.features.size(), "soft_loss: dimension mismatch");
  const double dist = l2_distortion(x, x0.features);
  double ce;
  if (spec.targeted) {
    require(spec.target >= 0 && spec.target < static_cast<int>(scores.size()),
            "soft_loss: target class out of range");
    ce = -std::log(scores[spec.target] + kLogEps);
  } else {
    require(x0.label >= 0 && x0.label < static_cast<int>(scores.size()),
            "soft_loss: sample label out of range");
    ce = std::log(scores[x0.label] + kLogEps);
  }
  return dist + spec.lambda * ce;
}

AttackOutcome attack_nes(DefendedOracle& oracle, const Sample& x0,
                         const AttackSpec& raw) {
  const AttackSpec spec = prepare(oracle, x0, raw, AttackFamily::nes);
  RunContext rc(oracle, x0, spec);
  if (spec.budget <= 0) return finish(rc, clip01_vec(x0.features), false, {});
  const int m = oracle.classifier().dim;
  RngStream rng(spec.seed);
  std::vector<TracePoint> trace;
  FeatureVec x = clip01_vec(x0.features);
  while (rc.can(1)) {
    const SoftProbe cur = soft_probe(rc, x);
    if (cur.adv) return confirm_and_finish(rc, x, std::move(trace));
    trace.push_back({rc.used(), l2_distortion(x, x0.features),
                     soft_loss(cur.scores, x, x0, spec)});
    if (!rc.can(2 * spec.pop)) break;
    // Antithetic Gaussian probes; only the gradient direction matters.
    std::vector<double> grad(m, 0.0);
    bool voted = false;
    FeatureVec voted_x;
    for (int i = 0; i < spec.pop && !voted; ++i) {
      const std::vector<double> u = rng.normal_vec(m);
      FeatureVec xp(m), xm(m);
      for (int j = 0; j < m; ++j) {
        xp[j] = clamp01(x[j] + spec.nes_radius * u[j]);
        xm[j] = clamp01(x[j] - spec.nes_radius * u[j]);
      }
      const SoftProbe pp = soft_probe(rc, xp);
      if (pp.adv) {
        voted = true;
        voted_x = xp;
        break;
      }
      const SoftProbe pm = soft_probe(rc, xm);
      if (pm.adv) {
        voted = true;
        voted_x = xm;
        break;
      }
      const double diff =
          soft_loss(pp.scores, xp, x0, spec) - soft_loss(pm.scores, xm, x0, spec);
      for (int j = 0; j < m; ++j) grad[j] += diff * u[j];
    }
    if (voted) return confirm_and_finish(rc, voted_x, std::move(trace));
    const double norm = vec_norm(grad);
    if (norm < 1e-12) continue;  // flat estimate; re-probe next iteration
    for (int j = 0; j < m; ++j) {
      double v = x[j] - spec.nes_step * grad[j] / norm;
      v = std::min(std::max(v, x0.features[j] - spec.epsilon),
                   x0.features[j] + spec.epsilon);
      x[j] = clamp01(v);
    }
  }
  return finish(rc, x, false, std::move(trace));
}

AttackOutcome attack_simba(DefendedOracle& oracle, const Sample& x0,
                           const AttackSpec& raw) {
  const AttackSpec spec = prepare(oracle, x0, raw, AttackFamily::simba);
  RunContext rc(oracle, x0, spec);
  if (spec.budget <= 0) return finish(rc, clip01_vec(x0.features), false, {});
  const int m = oracle.classifier().dim;
  RngStream rng(spec.seed);
  std::vector<TracePoint> trace;
  FeatureVec x = clip01_vec(x0.features);
  if (!rc.can(1)) return finish(rc, x, false, {});
  const SoftProbe base = soft_probe(rc, x);
  if (base.adv) return confirm_and_finish(rc, x, std::move(trace));
  // Tracked objective: target-class score up (targeted) or true-class score
  // down (untargeted); a step is kept only on strict improvement.
  double best = spec.targeted ? base.scores[spec.target] : base.scores[x0.label];
  trace.push_back({rc.used(), 0.0, best});
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  while (rc.can(1)) {
    rng.shuffle(order);  // fresh permutation each cycle
    for (int coord : order) {
      for (double sign : {+1.0, -1.0}) {
        if (!rc.can(1)) return finish(rc, x, false, std::move(trace));
        FeatureVec cand = x;
        cand[coord] = clamp01(cand[coord] + sign * spec.epsilon);
        if (cand[coord] == x[coord]) continue;  // clipped into a no-op
        const SoftProbe p = soft_probe(rc, cand);
        if (p.adv) return confirm_and_finish(rc, cand, std::move(trace));
        const double obj =
            spec.targeted ? p.scores[spec.target] : p.scores[x0.label];
        const bool improved = spec.targeted ? obj > best : obj < best;
        if (improved) {
          x = std::move(cand);
          best = obj;
          trace.push_back({rc.used(), l2_distortion(x, x0.features), best});
          break;  // accepted +eps; skip the -eps try
        }
      }
    }
  }
  return finish(rc, x, false, std::move(trace));
}

AttackOutcome attack_genattack(DefendedOracle& oracle, const Sample& x0,
                               const AttackSpec& raw) {
  const AttackSpec spec = prepare(oracle, x0, raw, AttackFamily::genattack);
  RunContext rc(oracle, x0, spec);
  if (spec.budget <= 0) return finish(rc, clip01_vec(x0.features), false, {});
  const int m = oracle.classifier().dim;
  const int pop = spec.pop;
  const int elite = std::min(spec.elite, pop);
  RngStream rng(spec.seed);
  std::vector<TracePoint> trace;

  auto project_ball = [&](FeatureVec v) {
    for (int j = 0; j < m; ++j) {
      v[j] = std::min(std::max(v[j], x0.features[j] - spec.epsilon),
                      x0.features[j] + spec.epsilon);
      v[j] = clamp01(v[j]);
    }
    return v;
  };

  // Member 0 starts at x0 itself so an already-adversarial input is caught
  // on the first generation's evaluation.
  std::vector<FeatureVec> members(pop);
  members[0] = clip01_vec(x0.features);
  for (int j = 1; j < pop; ++j) {
    FeatureVec v = x0.features;
    for (int i = 0; i < m; ++i) v[i] += rng.uniform(-spec.epsilon, spec.epsilon);
    members[j] = project_ball(std::move(v));
  }

  std::vector<double> fitness(pop, -std::numeric_limits<double>::infinity());
  FeatureVec best_member = members[0];
  while (rc.can(pop)) {
    for (int j = 0; j < pop; ++j) {
      const SoftProbe p = soft_probe(rc, members[j]);
      if (p.adv) return confirm_and_finish(rc, members[j], std::move(trace));
      fitness[j] = spec.targeted ? std::log(p.scores[spec.target] + kLogEps)
                                 : -std::log(p.scores[x0.label] + kLogEps);
    }
    std::vector<int> rank(pop);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(),
                     [&](int a, int b) { return fitness[a] > fitness[b]; });
    best_member = members[rank[0]];
    trace.push_back({rc.used(), l2_distortion(best_member, x0.features),
                     -fitness[rank[0]]});
    // Elites survive unchanged; the rest are crossover+mutation children of
    // uniformly chosen elite parents.
    std::vector<FeatureVec> next(pop);
    for (int e = 0; e < elite; ++e) next[e] = members[rank[e]];
    for (int j = elite; j < pop; ++j) {
      const FeatureVec& p1 = members[rank[static_cast<int>(rng.index(elite))]];
      const FeatureVec& p2 = members[rank[static_cast<int>(rng.index(elite))]];
      FeatureVec child(m);
      for (int i = 0; i < m; ++i) child[i] = rng.uniform() < 0.5 ? p1[i] : p2[i];
      for (int i = 0; i < m; ++i) {
        if (rng.uniform() < spec.mut_prob)
          child[i] += rng.uniform(-1.0, 1.0) * spec.mut_range * spec.epsilon;
      }
      next[j] = project_ball(std::move(child));
    }
    members = std::move(next);
  }
  return finish(rc, best_member, false, std::move(trace));
}

FeatureVec hard_label_line_search(DefendedOracle& oracle, const Sample& x0,
                                  const FeatureVec& adv, const AttackSpec& spec,
                                  double tol, long long max_queries) {
  double lo = 0.0, hi = 1.0;
  long long q = 0;
  const bool targeted = spec.targeted;
  while (hi - lo > tol && q < max_queries) {
    const double mid = 0.5 * (lo + hi);
    const int label = oracle.query_hard(lerp(x0.features, adv, mid));
    ++q;
    const bool is_adv = targeted ? label == spec.target : label != x0.label;
    if (is_adv) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lerp(x0.features, adv, hi);
}

AttackOutcome attack_boundary(DefendedOracle& oracle, const Sample& x0,
                              const AttackSpec& raw,
                              const std::optional<Sample>& init) {
  const AttackSpec spec = prepare(oracle, x0, raw, AttackFamily::boundary);
  RunContext rc(oracle, x0, spec);
  const int m = oracle.classifier().dim;
  RngStream rng(spec.seed);
  std::vector<TracePoint> trace;

  FeatureVec adv;
  if (init.has_value()) {
    // Caller-provided adversarial start, adversarial by contract.
    adv = clip01_vec(init->features);
    if (spec.budget <= 0) {
      AttackOutcome out;
      out.final_sample = adv;
      out.success = true;
      out.queries_used = 0;
      out.l2_distortion = l2_distortion(adv, x0.features);
      return out;
    }
  } else {
    if (spec.budget <= 0) return finish(rc, clip01_vec(x0.features), false, {});
    std::optional<FeatureVec> found = probe_adversarial_init(rc, rng, m);
    if (!found.has_value()) {
      throw init_not_found(
          "boundary: no adversarial initialization found within the "
          "initialization sub-budget");
    }
    adv = std::move(*found);
  }

  adv = hard_label_line_search(oracle, x0, adv, spec, kLineTol,
                               rc.working_left());
  FeatureVec best = adv;
  double best_dist = l2_distortion(best, x0.features);
  trace.push_back({rc.used(), best_dist, best_dist});

  double delta = spec.epsilon;  // relative orthogonal step, adapted below
  int window_total = 0, window_accepted = 0;
  long long iter = 0;
  while (rc.can(1)) {
    ++iter;
    FeatureVec towards(m);
    for (int j = 0; j < m; ++j) towards[j] = adv[j] - x0.features[j];
    const double dist = vec_norm(towards);
    if (dist < 1e-9) break;  // walked onto the source point; nothing to refine
    // Orthogonal proposal: Gaussian direction with the source component
    // removed, scaled to delta * dist, then contracted toward the source.
    std::vector<double> u = rng.normal_vec(m);
    double dot = 0.0;
    for (int j = 0; j < m; ++j) dot += u[j] * towards[j];
    for (int j = 0; j < m; ++j) u[j] -= dot / (dist * dist) * towards[j];
    const double u_norm = vec_norm(u);
    if (u_norm < 1e-12) continue;
    FeatureVec cand(m);
    for (int j = 0; j < m; ++j)
      cand[j] = adv[j] + delta * dist / u_norm * u[j];
    // Re-project onto the sphere of radius dist, then contract by eps_source.
    FeatureVec rel(m);
    for (int j = 0; j < m; ++j) rel[j] = cand[j] - x0.features[j];
    const double rel_norm = vec_norm(rel);
    if (rel_norm < 1e-12) continue;
    const double scale = dist / rel_norm * (1.0 - spec.eps_source);
    for (int j = 0; j < m; ++j)
      cand[j] = clamp01(x0.features[j] + scale * rel[j]);
    ++window_total;
    if (rc.adv_label(oracle.query_hard(cand))) {
      ++window_accepted;
      adv = cand;
      const double d = l2_distortion(adv, x0.features);
      if (d < best_dist) {
        best_dist = d;
        best = adv;
      }
    }
    if (window_total == 20) {
      const double rate = window_accepted / 20.0;
      if (rate < 0.2) delta = std::max(delta * 0.5, 1e-4);
      else if (rate > 0.6) delta = std::min(delta * 1.2, 1.0);
      window_total = window_accepted = 0;
    }
    if (iter % 50 == 0 && rc.can(1)) {
      adv = hard_label_line_search(oracle, x0, adv, spec, kLineTol,
                                   rc.working_left());
      const double d = l2_distortion(adv, x0.features);
      if (d < best_dist) {
        best_dist = d;
        best = adv;
      }
    }
    if (iter % 20 == 0) trace.push_back({rc.used(), best_dist, best_dist});
  }
  return confirm_and_finish(rc, best, std::move(trace));
}

double signopt_ray_distance(DefendedOracle& oracle, const Sample& x0,
                            const FeatureVec& direction, const AttackSpec& spec,
                            double tol, long long max_queries) {
  const int m = static_cast<int>(direction.size());
  const double norm = vec_norm(direction);
  require(norm > 0.0, "signopt: zero direction vector");
  const double inf = std::numeric_limits<double>::infinity();
  auto at = [&](double lambda) {
    FeatureVec x(m);
    for (int j = 0; j < m; ++j)
      x[j] = clamp01(x0.features[j] + lambda * direction[j] / norm);
    return x;
  };
  auto is_adv = [&](int label) {
    return spec.targeted ? label == spec.target : label != x0.label;
  };
  long long q = 0;
  // Geometric coarse stepping; the clipped ray saturates past the cube
  // diameter, so there is nothing new beyond sqrt(m)+1.
  const double lambda_max = std::sqrt(static_cast<double>(m)) + 1.0;
  double lo = 0.0, hi = -1.0;
  for (double lambda = 0.05; lambda <= lambda_max; lambda *= 2.0) {
    if (q >= max_queries) return inf;
    ++q;
    if (is_adv(oracle.query_hard(at(lambda)))) {
      hi = lambda;
      break;
    }
    lo = lambda;
  }
  if (hi < 0.0) return inf;
  while (hi - lo > tol && q < max_queries) {
    const double mid = 0.5 * (lo + hi);
    ++q;
    if (is_adv(oracle.query_hard(at(mid)))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

AttackOutcome attack_signopt(DefendedOracle& oracle, const Sample& x0,
                             const AttackSpec& raw) {
  const AttackSpec spec = prepare(oracle, x0, raw, AttackFamily::signopt);
  RunContext rc(oracle, x0, spec);
  if (spec.budget <= 0) return finish(rc, clip01_vec(x0.features), false, {});
  const int m = oracle.classifier().dim;
  RngStream rng(spec.seed);
  std::vector<TracePoint> trace;

  std::optional<FeatureVec> found = probe_adversarial_init(rc, rng, m);
  if (!found.has_value()) {
    throw init_not_found(
        "signopt: no adversarial ray found within the initialization "
        "sub-budget");
  }
  FeatureVec dir(m);
  for (int j = 0; j < m; ++j) dir[j] = (*found)[j] - x0.features[j];
  const double dn = vec_norm(dir);
  if (dn < 1e-12) return finish(rc, clip01_vec(x0.features), false, {});
  for (int j = 0; j < m; ++j) dir[j] /= dn;

  double g = signopt_ray_distance(oracle, x0, dir, spec, kLineTol,
                                  rc.working_left());
  if (!std::isfinite(g)) return finish(rc, clip01_vec(x0.features), false, {});
  auto point_at = [&](const FeatureVec& d, double lambda) {
    FeatureVec x(m);
    for (int j = 0; j < m; ++j) x[j] = clamp01(x0.features[j] + lambda * d[j]);
    return x;
  };
  // Best-so-far is tracked by the distortion of the actual (clipped) point,
  // which keeps the recorded best column nonincreasing.
  FeatureVec best_point = point_at(dir, g);
  double best_dist = l2_distortion(best_point, x0.features);
  trace.push_back({rc.used(), best_dist, best_dist});

  double alpha = 0.2;
  while (rc.can(spec.pop + 1)) {
    // Sign-based gradient estimate: a single query per probe direction
    // decides whether g increased or decreased.
    std::vector<double> grad(m, 0.0);
    for (int qi = 0; qi < spec.pop; ++qi) {
      if (!rc.can(1)) break;
      std::vector<double> u = rng.normal_vec(m);
      FeatureVec d2(m);
      for (int j = 0; j < m; ++j) d2[j] = dir[j] + spec.epsilon * u[j];
      const double d2n = vec_norm(d2);
      if (d2n < 1e-12) continue;
      for (int j = 0; j < m; ++j) d2[j] /= d2n;
      const bool closer = rc.adv_label(oracle.query_hard(point_at(d2, g)));
      const double sign = closer ? -1.0 : +1.0;
      for (int j = 0; j < m; ++j) grad[j] += sign * u[j];
    }
    const double gn = vec_norm(grad);
    if (gn < 1e-12) continue;
    for (int j = 0; j < m; ++j) grad[j] /= gn;
    // Backtracking step on the direction sphere.
    bool accepted = false;
    for (int attempt = 0; attempt < 5 && rc.can(1); ++attempt) {
      FeatureVec d_new(m);
      for (int j = 0; j < m; ++j) d_new[j] = dir[j] - alpha * grad[j];
      const double nn = vec_norm(d_new);
      if (nn < 1e-12) {
        alpha *= 0.5;
        continue;
      }
      for (int j = 0; j < m; ++j) d_new[j] /= nn;
      const double g_new = signopt_ray_distance(oracle, x0, d_new, spec,
                                                kLineTol, rc.working_left());
      if (g_new < g) {
        dir = d_new;
        g = g_new;
        alpha = std::min(alpha * 1.5, 2.0);
        accepted = true;
        break;
      }
      alpha = std::max(alpha * 0.5, 1e-4);
    }
    if (accepted) {
      FeatureVec cand = point_at(dir, g);
      const double cd = l2_distortion(cand, x0.features);
      if (cd < best_dist) {
        best_dist = cd;
        best_point = std::move(cand);
      }
    }
    trace.push_back({rc.used(), l2_distortion(point_at(dir, g), x0.features),
                     best_dist});
  }
  return confirm_and_finish(rc, best_point, std::move(trace));
}

AttackOutcome run_attack(DefendedOracle& oracle, const Sample& x0,
                         const AttackSpec& spec) {
  // Validate before touching the ledger so a mode mismatch is a clean error.
  const AttackSpec resolved = resolve_spec(spec, oracle.classifier().num_classes);
  oracle.reset_ledger();
  switch (resolved.family) {
    case AttackFamily::nes: return attack_nes(oracle, x0, resolved);
    case AttackFamily::simba: return attack_simba(oracle, x0, resolved);
    case AttackFamily::genattack: return attack_genattack(oracle, x0, resolved);
    case AttackFamily::boundary: return attack_boundary(oracle, x0, resolved);
    case AttackFamily::signopt: return attack_signopt(oracle, x0, resolved);
  }
  throw std::invalid_argument("unknown attack family");
}

}  // namespace bdw
