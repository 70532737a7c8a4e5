#ifndef BATES_REFERENCE_HPP
#define BATES_REFERENCE_HPP

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "bates/model.hpp"

namespace bates {

/// Carr-Madan FFT grid configuration.
struct FftGrid {
    int n_points = 4096;      // FFT size, power of two
    double damping = 1.5;     // damping exponent alpha (>0)
    double u_spacing = 0.25;  // frequency-grid spacing
};

struct ImpliedVolPoint {
    double strike;
    double maturity;
    double vol;
};

/// Black-Scholes European call. Degenerate limits: t=0 gives the payoff,
/// sigma=0 gives max(s - k*e^{-rt}, 0).
double bs_price(double s, double k, double t, double r, double sigma);

/// Merton jump-diffusion series price, used as the y=0 boundary value. Sums
/// Poisson-weighted Black-Scholes terms until the tail bound drops below tol.
/// base_variance adds a deterministic integrated diffusion variance to each
/// term (zero reproduces the pure-jump price).
double merton_series_price(const BatesParams& params, double s, double k,
                           double t, double r, double tol = 1e-12,
                           double base_variance = 0.0);

/// Characteristic function of ln S_T used by the FFT pricer.
using CharacteristicFn = std::function<std::complex<double>(std::complex<double>)>;

/// Carr-Madan damped-call FFT over a log-strike ladder centered at ln(s0).
/// Returns (strike, price) pairs in increasing strike order.
std::vector<std::pair<double, double>> carr_madan_prices(
    const BatesParams& params, const MarketSpec& market, const FftGrid& grid);

/// Same transform driven by an arbitrary characteristic function of ln S_T
/// (at maturity market.maturity, under rate market.rate).
std::vector<std::pair<double, double>> carr_madan_prices_cf(
    const CharacteristicFn& cf, const MarketSpec& market, const FftGrid& grid);

/// Price at a single strike by monotone-cubic interpolation of the FFT ladder.
double price_single_fft(const BatesParams& params, const MarketSpec& market,
                        double k, const FftGrid& grid);

/// Interpolate a precomputed ladder at strike k.
double interp_ladder(const std::vector<std::pair<double, double>>& ladder, double k);

/// Black-Scholes implied volatility by bracketed root finding on [1e-6, 5].
/// Requires max(s - k*e^{-rt}, 0) < price < s.
double implied_vol(double price, double s, double k, double t, double r);

}  // namespace bates

#endif
