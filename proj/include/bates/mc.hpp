#ifndef BATES_MC_HPP
#define BATES_MC_HPP

#include <cstdint>
#include <vector>

#include "bates/model.hpp"

namespace bates {

struct McConfig {
    long n_paths = 100000;
    int n_steps = 250;  // Euler steps per year
    std::uint64_t seed = 42;
    bool antithetic = false;
};

struct McResult {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_effective = 0;
};

/// Euler simulation of the Bates SDE to maturity: full-truncation CIR
/// variance, correlated Gaussian increments, per-step compound Poisson jumps
/// compensated through the drift r - kappa(1). Each path draws from its own
/// substream of (seed, path index), so results are bit-identical regardless
/// of how the work is scheduled.
std::vector<double> simulate_terminal(const BatesParams& params,
                                      const MarketSpec& market, const McConfig& cfg);

/// Discounted-payoff estimate with standard error from precomputed terminal
/// log-prices. With `paired`, consecutive entries are antithetic partners and
/// the error is computed over pair means, since partners are correlated.
McResult mc_price_from_terminal(const std::vector<double>& log_s_terminal,
                                const MarketSpec& market, bool paired = false);

/// Monte Carlo European call price.
McResult mc_price(const BatesParams& params, const MarketSpec& market,
                  const McConfig& cfg);

}  // namespace bates

#endif
