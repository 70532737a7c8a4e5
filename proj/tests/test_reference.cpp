#include <doctest.h>

#include <cmath>
#include <random>

#include "bates/errors.hpp"
#include "bates/model.hpp"
#include "bates/reference.hpp"

using namespace bates;

namespace {

/// independent oracle: lognormal expectation by composite Simpson in z
double bs_quadrature(double s, double k, double t, double r, double sigma) {
    const int n = 40000;
    const double lo = -10.0, hi = 10.0;
    const double h = (hi - lo) / n;
    auto f = [&](double z) {
        const double st = s * std::exp((r - 0.5 * sigma * sigma) * t +
                                       sigma * std::sqrt(t) * z);
        const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        return std::max(st - k, 0.0) * phi;
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
    return std::exp(-r * t) * acc * h / 3.0;
}

}  // namespace

TEST_CASE("black-scholes price") {
    SUBCASE("degenerate limits") {
        CHECK(bs_price(100, 100, 1.0, 0.05, 0.0) ==
              doctest::Approx(std::max(100.0 - 100.0 * std::exp(-0.05), 0.0)));
        CHECK(bs_price(120, 100, 0.0, 0.05, 0.3) == 20.0);
        CHECK(bs_price(80, 100, 0.0, 0.05, 0.3) == 0.0);
    }

    SUBCASE("frozen value against the quadrature oracle") {
        // oracle evaluates to 7.96557 for the ATM 20% vol call
        CHECK(bs_quadrature(100, 100, 1, 0, 0.2) == doctest::Approx(7.96557).epsilon(2e-6));
        CHECK(bs_price(100, 100, 1, 0, 0.2) == doctest::Approx(7.96557).epsilon(2e-6));
        CHECK(bs_price(105, 95, 0.7, 0.03, 0.35) ==
              doctest::Approx(bs_quadrature(105, 95, 0.7, 0.03, 0.35)).epsilon(1e-8));
    }

    SUBCASE("monotone in sigma and s, antitone in k") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int i = 0; i < 200; ++i) {
            const double s = 50 + 100 * uni(rng);
            const double k = 50 + 100 * uni(rng);
            const double t = 0.1 + 2 * uni(rng);
            const double r = 0.1 * uni(rng);
            const double sig = 0.05 + 0.8 * uni(rng);
            const double base = bs_price(s, k, t, r, sig);
            CHECK(bs_price(s, k, t, r, sig + 0.05) >= base - 1e-12);
            CHECK(bs_price(s + 1.0, k, t, r, sig) >= base - 1e-12);
            CHECK(bs_price(s, k + 1.0, t, r, sig) <= base + 1e-12);
        }
    }
}

TEST_CASE("merton series price") {
    const BatesParams s1 = *preset("S1");

    SUBCASE("no jumps degenerates to zero-vol Black-Scholes") {
        BatesParams p = s1;
        p.lambda_ = 0.0;
        CHECK(merton_series_price(p, 100, 100, 1.0, 0.05) ==
              bs_price(100, 100, 1.0, 0.05, 0.0));
        CHECK(merton_series_price(p, 100, 100, 1.0, 0.05) ==
              doctest::Approx(4.877).epsilon(1e-3));
    }

    SUBCASE("expiry limit") {
        CHECK(merton_series_price(s1, 120, 100, 0.0, 0.05) == 20.0);
        CHECK(merton_series_price(s1, 120, 100, 1e-10, 0.05) ==
              doctest::Approx(20.0).epsilon(1e-6));
    }

    SUBCASE("positive jump risk raises the OTM price above intrinsic") {
        const double v = merton_series_price(s1, 90, 100, 1.0, 0.05);
        CHECK(v > 0.0);
        CHECK(v < 90.0);
    }

    SUBCASE("tolerance tightening converges") {
        const double a = merton_series_price(s1, 100, 100, 1.0, 0.05, 1e-6);
        const double b = merton_series_price(s1, 100, 100, 1.0, 0.05, 1e-13);
        CHECK(std::abs(a - b) < 2e-6);
    }
}

TEST_CASE("carr-madan fft pricer") {
    const BatesParams s1 = *preset("S1");
    MarketSpec m{100.0, 100.0, 1.0, 0.05, s1.eta};
    const FftGrid grid;

    SUBCASE("heston sub-model matches the independent Heston CF engine") {
        BatesParams p = s1;
        p.lambda_ = 0.0;
        const auto ladder_a = carr_madan_prices(p, m, grid);
        auto cf = [&](std::complex<double> u) {
            return heston_characteristic_fn(p, m, u, m.maturity);
        };
        const auto ladder_b = carr_madan_prices_cf(cf, m, grid);
        REQUIRE(ladder_a.size() == ladder_b.size());
        for (std::size_t i = 0; i < ladder_a.size(); ++i) {
            if (ladder_a[i].first < 20.0 || ladder_a[i].first > 500.0) continue;
            CHECK(std::abs(ladder_a[i].second - ladder_b[i].second) < 1e-8);
        }
    }

    SUBCASE("near-deterministic sub-model approaches Black-Scholes") {
        BatesParams p{1.0, 0.04, 1e-4, 0.0, 0.0, 0.0, 0.1};
        MarketSpec bsm{100.0, 100.0, 1.0, 0.05, 0.04};
        for (double k : {80.0, 100.0, 120.0}) {
            const double fft = price_single_fft(p, bsm, k, grid);
            const double bs = bs_price(100.0, k, 1.0, 0.05, 0.2);
            CHECK(fft == doctest::Approx(bs).epsilon(2e-4));
        }
    }

    SUBCASE("arbitrage bounds and convexity on the ladder") {
        const auto ladder = carr_madan_prices(s1, m, grid);
        std::vector<std::pair<double, double>> window;
        for (const auto& [k, price] : ladder)
            if (k > 20.0 && k < 400.0) window.emplace_back(k, price);
        REQUIRE(window.size() > 10);
        for (std::size_t i = 0; i < window.size(); ++i) {
            const auto& [k, price] = window[i];
            CHECK(price >= std::max(m.s0 - k * std::exp(-m.rate), 0.0) - 1e-8 * m.s0);
            CHECK(price <= m.s0 + 1e-8 * m.s0);
        }
        for (std::size_t i = 1; i + 1 < window.size(); ++i) {
            const double h1 = window[i].first - window[i - 1].first;
            const double h2 = window[i + 1].first - window[i].first;
            const double d2 = (window[i + 1].second - window[i].second) / h2 -
                              (window[i].second - window[i - 1].second) / h1;
            CHECK(d2 >= -1e-8 * m.s0);
        }
    }

    SUBCASE("deep low-strike region approaches the spot") {
        const auto ladder = carr_madan_prices(s1, m, grid);
        for (const auto& [k, price] : ladder) {
            if (k > 0.5 && k < 2.0)
                CHECK(price == doctest::Approx(m.s0 - k * std::exp(-m.rate)).epsilon(1e-3));
        }
    }

    SUBCASE("single-strike interpolation") {
        const auto ladder = carr_madan_prices(s1, m, grid);
        // at a ladder node the interpolant returns the ladder value
        const auto& node = ladder[ladder.size() / 2];
        CHECK(interp_ladder(ladder, node.first) == node.second);
        // between nodes the value stays between the neighbors
        const auto& next = ladder[ladder.size() / 2 + 1];
        const double mid = 0.5 * (node.first + next.first);
        const double v = interp_ladder(ladder, mid);
        CHECK(v <= std::max(node.second, next.second) + 1e-12);
        CHECK(v >= std::min(node.second, next.second) - 1e-12);
        // call price decreases in strike
        CHECK(price_single_fft(s1, m, 90.0, grid) > price_single_fft(s1, m, 110.0, grid));
    }

    SUBCASE("configuration errors") {
        FftGrid bad = grid;
        bad.n_points = 1000;  // not a power of two
        CHECK_THROWS_AS(carr_madan_prices(s1, m, bad), ConfigError);
        bad = grid;
        bad.damping = -1.0;
        CHECK_THROWS_AS(carr_madan_prices(s1, m, bad), ConfigError);
        CHECK_THROWS_AS(price_single_fft(s1, m, 1e9, grid), NumericError);
    }
}

TEST_CASE("implied volatility") {
    SUBCASE("round trip") {
        const double price = bs_price(100, 100, 1, 0.05, 0.3);
        CHECK(implied_vol(price, 100, 100, 1, 0.05) == doctest::Approx(0.3).epsilon(1e-9));
    }

    SUBCASE("identity over a sigma grid") {
        for (double sigma = 0.01; sigma <= 2.0; sigma += 0.0775) {
            const double price = bs_price(100, 110, 0.6, 0.02, sigma);
            if (price <= std::max(100 - 110 * std::exp(-0.02 * 0.6), 0.0) + 1e-12)
                continue;  // below representable interior
            CHECK(implied_vol(price, 100, 110, 0.6, 0.02) ==
                  doctest::Approx(sigma).epsilon(1e-8));
        }
    }

    SUBCASE("domain errors name the violated bound") {
        CHECK_THROWS_WITH_AS(implied_vol(1.0, 100, 50, 1, 0.05),
                             doctest::Contains("intrinsic"), NumericError);
        CHECK_THROWS_WITH_AS(implied_vol(120.0, 100, 100, 1, 0.05),
                             doctest::Contains("spot"), NumericError);
    }

    SUBCASE("fft price inverts to a vol near sqrt(eta) scale") {
        const BatesParams s1 = *preset("S1");
        MarketSpec m{100.0, 100.0, 1.0, 0.05, s1.eta};
        const double price = price_single_fft(s1, m, 100.0, FftGrid{});
        const double vol = implied_vol(price, 100.0, 100.0, 1.0, 0.05);
        CHECK(vol > 0.1);
        CHECK(vol < 0.45);
    }
}
