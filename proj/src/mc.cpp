#include "bates/mc.hpp"

#include <cmath>
#include <cstdint>

#include "bates/errors.hpp"

namespace bates {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

/// splitmix64, used to decorrelate per-path substreams from (seed, path).
std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Small self-contained xoshiro256** engine; one instance per path.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// uniform in (0, 1]
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// standard normal pair (Box-Muller)
    void next_normal_pair(double& z1, double& z2) {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        z1 = r * std::cos(kTwoPi * u2);
        z2 = r * std::sin(kTwoPi * u2);
    }

    /// Poisson(m) by inversion; m is tiny per step so this terminates fast
    int next_poisson(double m) {
        const double u = next_uniform();
        double p = std::exp(-m);
        double cum = p;
        int k = 0;
        while (u > cum && k < 1000) {
            ++k;
            p *= m / k;
            cum += p;
        }
        return k;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace

std::vector<double> simulate_terminal(const BatesParams& p, const MarketSpec& m,
                                      const McConfig& cfg) {
    if (cfg.n_paths < 1) throw ConfigError("mc: n_paths must be >= 1");
    if (cfg.n_steps < 1) throw ConfigError("mc: n_steps must be >= 1");
    const int total_steps =
        std::max(1, static_cast<int>(std::lround(cfg.n_steps * m.maturity)));
    if (static_cast<double>(cfg.n_paths) * total_steps > 1e9)
        throw ConfigError("mc: n_paths * steps exceeds the 1e9 desk-scale cap");

    const double dt = m.maturity / total_steps;
    const double sqdt = std::sqrt(dt);
    const double drift = m.rate - cumulant(p, 1.0);
    const double rho_c = std::sqrt(1.0 - p.rho * p.rho);
    const double lam_dt = p.lambda_ * dt;
    const double x0 = std::log(m.s0);
    const double gamma = p.lambda_ > 0.0 ? p.gamma() : 0.0;

    std::vector<double> xt(static_cast<std::size_t>(cfg.n_paths));

    const long n_streams = cfg.antithetic ? (cfg.n_paths + 1) / 2 : cfg.n_paths;
    for (long s = 0; s < n_streams; ++s) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(s));
        const bool mirrored = cfg.antithetic && (2 * s + 1 < cfg.n_paths);
        double x1 = x0, y1 = m.y0;
        double x2 = x0, y2 = m.y0;
        for (int n = 0; n < total_steps; ++n) {
            double z1, z2;
            rng.next_normal_pair(z1, z2);
            const double zx = z1;
            const double zy = p.rho * z1 + rho_c * z2;

            // full-truncation Euler on the CIR variance
            const double yp1 = std::max(y1, 0.0);
            x1 += (drift - 0.5 * yp1) * dt + std::sqrt(yp1) * sqdt * zx;
            y1 += p.xi * (p.eta - yp1) * dt + p.theta * std::sqrt(yp1) * sqdt * zy;
            if (mirrored) {
                const double yp2 = std::max(y2, 0.0);
                x2 += (drift - 0.5 * yp2) * dt - std::sqrt(yp2) * sqdt * zx;
                y2 += p.xi * (p.eta - yp2) * dt - p.theta * std::sqrt(yp2) * sqdt * zy;
            }

            if (lam_dt > 0.0) {
                const int k = rng.next_poisson(lam_dt);
                for (int j = 0; j < k; ++j) {
                    double j1, j2;
                    rng.next_normal_pair(j1, j2);
                    x1 += gamma + p.delta * j1;
                    if (mirrored) x2 += gamma - p.delta * j1;
                }
            }
        }
        if (cfg.antithetic) {
            xt[static_cast<std::size_t>(2 * s)] = x1;
            if (mirrored) xt[static_cast<std::size_t>(2 * s + 1)] = x2;
        } else {
            xt[static_cast<std::size_t>(s)] = x1;
        }
    }
    return xt;
}

McResult mc_price_from_terminal(const std::vector<double>& log_s_terminal,
                                const MarketSpec& m, bool paired) {
    const double disc = std::exp(-m.rate * m.maturity);
    const std::size_t total = log_s_terminal.size();
    auto payoff = [&](std::size_t i) {
        return std::max(std::exp(log_s_terminal[i]) - m.strike, 0.0);
    };

    double sum = 0.0, sum2 = 0.0;
    std::size_t samples = 0;
    for (std::size_t i = 0; i < total; ++i) {
        double v = payoff(i);
        if (paired && i + 1 < total) {
            v = 0.5 * (v + payoff(++i));
        }
        sum += v;
        sum2 += v * v;
        ++samples;
    }
    const auto n = static_cast<double>(samples);
    McResult res;
    res.n_effective = static_cast<long>(total);
    res.estimate = disc * sum / n;
    if (samples > 1) {
        const double var = (sum2 - sum * sum / n) / (n - 1.0);
        res.std_error = disc * std::sqrt(std::max(var, 0.0) / n);
    }
    return res;
}

McResult mc_price(const BatesParams& p, const MarketSpec& m, const McConfig& cfg) {
    return mc_price_from_terminal(simulate_terminal(p, m, cfg), m, cfg.antithetic);
}

}  // namespace bates
