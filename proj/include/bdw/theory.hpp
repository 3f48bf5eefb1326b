#pragma once
// Closed-form accuracy model: Irwin-Hall CDF, normal approximation, accuracy
// conditioned on the true-class confidence s, half-normal prior over s,
// nu calibration, noisy accuracy, the defended-accuracy integral, and a
// Monte-Carlo oracle validating the closed forms under the same generative
// assumptions.
//
// Model: a sample with true-class confidence s spreads the remaining 1-s over
// N-1 classes; the largest rival F0 relates to the non-true mass Y (a sum of
// N-2 iid U(0, a) with a = (1-s)/(N-1)) via F0 = 1-s-Y, so correctness is the
// event Y > 1-2s. Boundary noise adds an aggregate N(0, (N+2) sigma^2) term.
// The prior over s is half-normal in (1-s), truncated to [0,1] WITHOUT
// renormalization; all integrals and the MC oracle account for the clipped
// mass identically (out-of-range proposals score 0).

#include <cstdint>
#include <utility>

#include "bdw/types.hpp"

namespace bdw {

struct TheoryParams {
  int n_classes = 10;  // N >= 3
  double nu = 0.41;    // half-normal scale > 0
  double theta = 0.0;  // in [0,1]
  double sigma = 0.0;  // >= 0
};

// Fixed-grid trapezoid on [0,1]; defended_acc splits it at theta.
struct QuadratureSpec {
  int grid_points = 2001;  // >= 3 and odd
};

// Exact CDF of the sum of k iid U(0,a) at x (alternating sum, evaluated in
// log space with long-double accumulation; reflected about ka/2 so only the
// cancellation-stable lower half is ever summed; accurate to ~1e-10 for
// k <= ~60, which covers the exact routing below).
double irwin_hall_cdf(double x, int k, double a);

// P[Y > 1-2s] for Y = sum of N-2 iid U(0, (1-s)/(N-1)). Returns exactly 1 for
// s >= 0.5. exact=true uses irwin_hall_cdf, else the normal approximation.
double p_acc_given_s(double s, int n_classes, bool exact);
// Default routing: exact for N <= 60, normal approximation above.
double p_acc_given_s(double s, int n_classes);

// (sqrt(2)/(nu sqrt(pi))) exp(-(1-s)^2 / (2 nu^2)) for s <= 1, else 0.
double half_normal_pdf(double s, double nu);

// Integral over [0,1] of p_acc_given_s * half_normal_pdf.
double clean_acc(double nu, int n_classes, const QuadratureSpec& quad = {});

// Bisection on nu in [1e-3, 10] (clean_acc decreases in nu) to
// |clean_acc(nu) - target| <= 1e-4. Throws nu_out_of_range when unachievable.
double calibrate_nu(double target_clean_acc, int n_classes,
                    const QuadratureSpec& quad = {});

// 1 - CDF_{N(mu, var)}(1-2s) with mu = (1-s)(N-2)/(2(N-1)) and
// var = ((1-s)/(N-1))^2 (N-2)/12 + (N+2) sigma^2.
double p_acc_noisy(double s, double sigma, int n_classes);

// Integral over [0,theta] of the noisy accuracy plus [theta,1] of the clean
// accuracy, against the half-normal prior. sigma=0 or theta=0 reduce exactly
// to clean_acc (same integrand selection, including the exact-IH routing).
double defended_acc(const TheoryParams& params, const QuadratureSpec& quad = {});

// Monte-Carlo oracle: per trial draws z ~ |N(0, nu^2)|, s = 1-z (proposals
// with s < 0 score 0, matching the unrenormalized truncated prior), draws Y
// as a sum of N-2 uniforms, adds N(0, (N+2) sigma^2) when s <= theta, scores
// Y' > 1-2s. Returns (estimate, standard error). Bit-identical for any
// thread count (per-trial counter-based draws, integer reduction).
std::pair<double, double> mc_defended_acc(const TheoryParams& params,
                                          std::int64_t trials, std::uint64_t seed);
// Serial reference for the OpenMP kernel above.
std::pair<double, double> mc_defended_acc_serial(const TheoryParams& params,
                                                 std::int64_t trials,
                                                 std::uint64_t seed);

}  // namespace bdw
