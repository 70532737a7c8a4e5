#ifndef BATES_MODEL_HPP
#define BATES_MODEL_HPP

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace bates {

/// Bates model parameters: Heston variance dynamics plus lognormal
/// compound-Poisson jumps in the log-price.
struct BatesParams {
    double xi;       // mean-reversion speed of the variance (>0)
    double eta;      // long-run variance level (>0)
    double theta;    // vol-of-vol (>0)
    double rho;      // Brownian correlation, in [-1,1]
    double lambda_;  // jump intensity per year (>=0)
    double kbar;     // mean relative jump size (> -1)
    double delta;    // jump-size std dev in log-price (>0 when lambda_>0)

    /// Mean of the Gaussian log-jump law, ln(1+kbar) - delta^2/2.
    double gamma() const { return std::log(1.0 + kbar) - 0.5 * delta * delta; }
};

/// Contract and market state for a European call.
struct MarketSpec {
    double s0;        // spot price (>0)
    double strike;    // strike K (>0)
    double maturity;  // T in years (>0)
    double rate;      // continuously compounded short rate r
    double y0;        // initial variance (>0)
};

struct ValidationReport {
    std::vector<std::string> hard_errors;
    std::vector<std::string> warnings;

    bool ok() const { return hard_errors.empty(); }
};

/// Total validation: never throws, reports all findings. A Feller-condition
/// violation theta^2 > 2*xi*eta is a warning only; the y=0 Dirichlet
/// boundary then carries well-posedness in the FEM solver.
ValidationReport validate(const BatesParams& params, const MarketSpec& market);

/// Cumulant of the unit-time jump process,
/// kappa(z) = lambda*(exp(gamma*z + delta^2*z^2/2) - 1). kappa(1) = lambda*kbar.
double cumulant(const BatesParams& params, double z);

/// Levy density of the jumps: lambda times the N(gamma, delta^2) density.
double levy_density(const BatesParams& params, double u);

struct JumpBounds {
    double down;  // L_down, negative
    double up;    // L_up = -L_down
};

/// Truncation interval for the jump integral such that the density at the
/// endpoints has dropped below lambda*eps scale. Requires
/// 0 < eps < 1/(delta*sqrt(2*pi)).
JumpBounds jump_truncation_bounds(const BatesParams& params, double eps);

/// Risk-neutral characteristic function of ln S_t under the Bates model,
/// psi_t(u) = E[exp(i*u*ln S_t)], valid for complex u. Satisfies the
/// martingale identity psi_t(-i) = s0*exp(r*t).
std::complex<double> characteristic_fn(const BatesParams& params,
                                       const MarketSpec& market,
                                       std::complex<double> u, double t);

/// Heston characteristic function (no jumps), coded independently of
/// characteristic_fn as a cross-check and for the lambda=0 sub-model.
std::complex<double> heston_characteristic_fn(const BatesParams& params,
                                              const MarketSpec& market,
                                              std::complex<double> u, double t);

/// Named parameter presets. Values match the calibrated sets the solver is
/// benchmarked against, bit-exact.
std::optional<BatesParams> preset(const std::string& name);

/// Names of the available presets, in order.
std::vector<std::string> preset_names();

}  // namespace bates

#endif
