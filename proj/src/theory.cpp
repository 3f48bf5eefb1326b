#include "bdw/theory.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include "bdw/rng.hpp"

namespace bdw {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kPi = 3.14159265358979323846;
const double kSqrtPi = std::sqrt(kPi);

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

void validate_quad(const QuadratureSpec& quad) {
  require(quad.grid_points >= 3 && quad.grid_points % 2 == 1,
          "quadrature grid_points must be >= 3 and odd");
}

void validate_params(const TheoryParams& p) {
  require(p.n_classes >= 3, "theory model requires n_classes >= 3");
  require(p.nu > 0.0, "theory model requires nu > 0");
  require(p.theta >= 0.0 && p.theta <= 1.0, "theta must lie in [0,1]");
  require(p.sigma >= 0.0, "sigma must be >= 0");
}

template <typename F>
double trapezoid(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / (n - 1);
  double total = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i + 1 < n; ++i) total += f(lo + i * h);
  return total * h;
}

}  // namespace

double irwin_hall_cdf(double x, int k, double a) {
  require(k >= 1, "irwin_hall_cdf requires k >= 1");
  require(a > 0.0, "irwin_hall_cdf requires a > 0");
  if (x <= 0.0) return 0.0;
  if (x >= k * a) return 1.0;
  // The alternating sum cancels catastrophically in the upper tail; the
  // distribution is symmetric about ka/2, so reflect there and only ever
  // evaluate the stable lower half (noise ~1e-10 up to k ~ 60).
  if (x > 0.5 * k * a) return clamp01(1.0 - irwin_hall_cdf(k * a - x, k, a));
  const long double u = static_cast<long double>(x) / a;
  // (1/k!) sum_j (-1)^j C(k,j) (u-j)^k with log-space magnitudes.
  long double sum = 0.0L;
  const int j_max = static_cast<int>(u);
  for (int j = 0; j <= j_max; ++j) {
    if (u - j <= 0.0L) continue;  // zero term; log would blow up
    const long double ln = k * logl(u - j) - lgammal(j + 1.0L) -
                           lgammal(static_cast<long double>(k - j) + 1.0L);
    const long double term = expl(ln);
    sum += (j % 2 == 0) ? term : -term;
  }
  return clamp01(static_cast<double>(sum));
}

double p_acc_given_s(double s, int n_classes, bool exact) {
  require(n_classes >= 3, "p_acc_given_s requires n_classes >= 3");
  require(s >= 0.0 && s <= 1.0, "p_acc_given_s requires s in [0,1]");
  if (s >= 0.5) return 1.0;  // threshold 1-2s <= 0 <= Y always
  const int k = n_classes - 2;
  const double a = (1.0 - s) / (n_classes - 1);
  const double threshold = 1.0 - 2.0 * s;
  if (exact) return 1.0 - irwin_hall_cdf(threshold, k, a);
  const double mu = k * a / 2.0;
  const double var = k * a * a / 12.0;
  return 1.0 - normal_cdf((threshold - mu) / std::sqrt(var));
}

double p_acc_given_s(double s, int n_classes) {
  return p_acc_given_s(s, n_classes, n_classes <= 60);
}

double half_normal_pdf(double s, double nu) {
  require(nu > 0.0, "half_normal_pdf requires nu > 0");
  if (s > 1.0) return 0.0;
  const double z = 1.0 - s;
  return kSqrt2 / (nu * kSqrtPi) * std::exp(-z * z / (2.0 * nu * nu));
}

double clean_acc(double nu, int n_classes, const QuadratureSpec& quad) {
  require(nu > 0.0, "clean_acc requires nu > 0");
  require(n_classes >= 3, "clean_acc requires n_classes >= 3");
  validate_quad(quad);
  return trapezoid(
      [&](double s) { return p_acc_given_s(s, n_classes) * half_normal_pdf(s, nu); },
      0.0, 1.0, quad.grid_points);
}

double calibrate_nu(double target_clean_acc, int n_classes,
                    const QuadratureSpec& quad) {
  require(target_clean_acc > 0.0 && target_clean_acc < 1.0,
          "calibrate_nu target must lie in (0,1)");
  double lo = 1e-3;
  double hi = 10.0;
  // clean_acc decreases in nu: small nu concentrates mass at s=1.
  const double acc_lo = clean_acc(lo, n_classes, quad);
  const double acc_hi = clean_acc(hi, n_classes, quad);
  if (target_clean_acc > acc_lo || target_clean_acc < acc_hi) {
    throw nu_out_of_range("calibrate_nu: target " +
                          std::to_string(target_clean_acc) +
                          " is outside the achievable clean-accuracy range");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double acc = clean_acc(mid, n_classes, quad);
    if (std::fabs(acc - target_clean_acc) <= 1e-4) return mid;
    if (acc > target_clean_acc) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw calibration_failed("calibrate_nu: bisection failed to converge");
}

double p_acc_noisy(double s, double sigma, int n_classes) {
  require(n_classes >= 3, "p_acc_noisy requires n_classes >= 3");
  require(sigma >= 0.0, "p_acc_noisy requires sigma >= 0");
  require(s >= 0.0 && s <= 1.0, "p_acc_noisy requires s in [0,1]");
  const int k = n_classes - 2;
  const double a = (1.0 - s) / (n_classes - 1);
  const double mu = k * a / 2.0;
  const double var = k * a * a / 12.0 + (n_classes + 2.0) * sigma * sigma;
  const double threshold = 1.0 - 2.0 * s;
  if (var <= 0.0) return threshold < mu ? 1.0 : (threshold > mu ? 0.0 : 0.5);
  return 1.0 - normal_cdf((threshold - mu) / std::sqrt(var));
}

double defended_acc(const TheoryParams& params, const QuadratureSpec& quad) {
  validate_params(params);
  validate_quad(quad);
  // No noise below the threshold, or no trigger region: the defended
  // integrand coincides with the clean one everywhere.
  if (params.sigma == 0.0 || params.theta == 0.0) {
    return clean_acc(params.nu, params.n_classes, quad);
  }
  const double noisy_part = trapezoid(
      [&](double s) {
        return p_acc_noisy(s, params.sigma, params.n_classes) *
               half_normal_pdf(s, params.nu);
      },
      0.0, params.theta, quad.grid_points);
  const double clean_part = trapezoid(
      [&](double s) {
        return p_acc_given_s(s, params.n_classes) * half_normal_pdf(s, params.nu);
      },
      params.theta, 1.0, quad.grid_points);
  return noisy_part + clean_part;
}

namespace {

// One simulated sample under the generative model. Fully determined by
// (seed, trial): role-separated sub-seeds keep the s-draw, the uniform sum,
// and the aggregate noise on independent counter streams.
bool mc_trial(const TheoryParams& p, std::uint64_t seed, std::int64_t trial) {
  const std::uint64_t t = static_cast<std::uint64_t>(trial);
  const double z = std::fabs(normal_at(hash_mix(seed, 1), t, 0)) * p.nu;
  const double s = 1.0 - z;
  // Prior mass outside [0,1] is clipped, not renormalized: score it 0 so the
  // estimator targets the same unrenormalized integral as the closed form.
  if (s < 0.0) return false;
  const int k = p.n_classes - 2;
  const double a = (1.0 - s) / (p.n_classes - 1);
  // The uniform sum dominates the cost at large N; use the canonical
  // splitmix64 stream keyed by (seed, trial) — one mix per draw, still a pure
  // function of (seed, trial, element).
  std::uint64_t state = hash_mix(seed, 2, t);
  double y = 0.0;
  for (int e = 0; e < k; ++e) {
    y += u64_to_unit(splitmix64(state));
    state += kGolden;
  }
  y *= a;
  if (s <= p.theta && p.sigma > 0.0) {
    y += normal_at(hash_mix(seed, 3), t, 0) *
         std::sqrt(p.n_classes + 2.0) * p.sigma;
  }
  return y > 1.0 - 2.0 * s;
}

std::pair<double, double> mc_summarize(std::int64_t successes,
                                       std::int64_t trials) {
  const double estimate = static_cast<double>(successes) / trials;
  const double stderr_ = std::sqrt(estimate * (1.0 - estimate) / trials);
  return {estimate, stderr_};
}

}  // namespace

std::pair<double, double> mc_defended_acc(const TheoryParams& params,
                                          std::int64_t trials,
                                          std::uint64_t seed) {
  validate_params(params);
  require(trials >= 1, "mc_defended_acc requires trials >= 1");
  std::int64_t successes = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : successes)
#endif
  for (std::int64_t i = 0; i < trials; ++i) {
    successes += mc_trial(params, seed, i) ? 1 : 0;
  }
  return mc_summarize(successes, trials);
}

std::pair<double, double> mc_defended_acc_serial(const TheoryParams& params,
                                                 std::int64_t trials,
                                                 std::uint64_t seed) {
  validate_params(params);
  require(trials >= 1, "mc_defended_acc requires trials >= 1");
  std::int64_t successes = 0;
  for (std::int64_t i = 0; i < trials; ++i) {
    successes += mc_trial(params, seed, i) ? 1 : 0;
  }
  return mc_summarize(successes, trials);
}

}  // namespace bdw
