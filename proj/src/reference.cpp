#include "bates/reference.hpp"

#include <algorithm>
#include <cmath>

#include "bates/errors.hpp"

namespace bates {

namespace {

constexpr double kPi = 3.14159265358979323846;
const std::complex<double> kI{0.0, 1.0};

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// In-place radix-2 Cooley-Tukey FFT, size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen{std::cos(ang), std::sin(ang)};
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w{1.0, 0.0};
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Fritsch-Carlson monotone cubic slopes for data (x_i, y_i), x strictly
/// increasing.
std::vector<double> pchip_slopes(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m[i] = 0.0;
        } else {
            const double w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            const double w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    // limit endpoint slopes to preserve monotonicity
    for (std::size_t i : {std::size_t{0}, n - 1}) {
        const double di = (i == 0) ? d[0] : d[n - 2];
        if (m[i] * di <= 0.0)
            m[i] = 0.0;
        else if (std::abs(m[i]) > 3.0 * std::abs(di))
            m[i] = 3.0 * di;
    }
    return m;
}

}  // namespace

double bs_price(double s, double k, double t, double r, double sigma) {
    if (t <= 0.0) return std::max(s - k, 0.0);
    if (sigma <= 0.0) return std::max(s - k * std::exp(-r * t), 0.0);
    const double st = sigma * std::sqrt(t);
    const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * t) / st;
    const double d2 = d1 - st;
    return s * norm_cdf(d1) - k * std::exp(-r * t) * norm_cdf(d2);
}

double merton_series_price(const BatesParams& p, double s, double k, double t,
                           double r, double tol, double base_variance) {
    if (t <= 0.0) return std::max(s - k, 0.0);
    const double base_vol = std::sqrt(std::max(base_variance, 0.0) / std::max(t, 1e-300));
    if (p.lambda_ == 0.0) return bs_price(s, k, t, r, base_vol);

    // Martingale-consistent jump weights: Poisson intensity lambda*(1+kbar),
    // per-term rate r_n = r - lambda*kbar + n*ln(1+kbar)/t,
    // per-term vol sigma_n = sqrt(n*delta^2/t).
    const double lk = std::log(1.0 + p.kbar);
    const double lam_p = p.lambda_ * (1.0 + p.kbar) * t;
    double weight = std::exp(-lam_p);  // n = 0 term
    double sum = 0.0;
    double cum = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const double sigma_n = std::sqrt(base_vol * base_vol +
                                         static_cast<double>(n) * p.delta * p.delta / t);
        const double r_n = r - p.lambda_ * p.kbar + static_cast<double>(n) * lk / t;
        sum += weight * bs_price(s, k, t, r_n, sigma_n);
        cum += weight;
        // remaining Poisson mass bounds the tail since each BS term <= s
        if ((1.0 - cum) * s < tol) return sum;
        weight *= lam_p / static_cast<double>(n + 1);
    }
    throw NumericError("merton_series_price: series did not converge in 1000 terms");
}

std::vector<std::pair<double, double>> carr_madan_prices_cf(
    const CharacteristicFn& cf, const MarketSpec& market, const FftGrid& grid) {
    if (!is_pow2(grid.n_points))
        throw ConfigError("FFT n_points must be a power of two");
    if (!(grid.damping > 0.0))
        throw ConfigError("FFT damping must be positive");
    if (!(grid.u_spacing > 0.0))
        throw ConfigError("FFT u_spacing must be positive");

    const int n = grid.n_points;
    const double alpha = grid.damping;
    const double du = grid.u_spacing;
    const double dk = 2.0 * kPi / (n * du);
    const double b = 0.5 * n * dk;
    const double x0 = std::log(market.s0);
    const double t = market.maturity;
    const double disc = std::exp(-market.rate * t);

    // integrability check for the damped payoff: psi(-(alpha+1)i) = E[S^{1+alpha}]
    {
        const std::complex<double> mom = cf(-(alpha + 1.0) * kI);
        if (!std::isfinite(mom.real()) || !std::isfinite(mom.imag()))
            throw ConfigError("FFT damping inadmissible: moment E[S^(1+alpha)] not finite");
    }

    std::vector<std::complex<double>> x(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double u = j * du;
        const std::complex<double> num = cf(u - (alpha + 1.0) * kI);
        const std::complex<double> den =
            alpha * alpha + alpha - u * u + kI * ((2.0 * alpha + 1.0) * u);
        // Simpson weights 1,4,2,4,...,; integrand decays so the open end is fine
        double w = (j == 0) ? 1.0 : ((j % 2 == 1) ? 4.0 : 2.0);
        x[static_cast<std::size_t>(j)] =
            std::exp(kI * (b - x0) * (j * du)) * disc * num / den * (w * du / 3.0);
    }
    fft_inplace(x);

    std::vector<std::pair<double, double>> ladder;
    ladder.reserve(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const double km = x0 - b + m * dk;
        const double price =
            std::exp(-alpha * km) / kPi * x[static_cast<std::size_t>(m)].real();
        ladder.emplace_back(std::exp(km), price);
    }
    return ladder;
}

std::vector<std::pair<double, double>> carr_madan_prices(
    const BatesParams& params, const MarketSpec& market, const FftGrid& grid) {
    const double t = market.maturity;
    auto cf = [&](std::complex<double> u) {
        return characteristic_fn(params, market, u, t);
    };
    return carr_madan_prices_cf(cf, market, grid);
}

double interp_ladder(const std::vector<std::pair<double, double>>& ladder, double k) {
    if (ladder.size() < 4 || k < ladder.front().first || k > ladder.back().first)
        throw NumericError("strike outside FFT ladder range");

    // interpolate over a local window; monotone cubic keeps prices between
    // neighboring ladder values
    auto it = std::lower_bound(ladder.begin(), ladder.end(), k,
                               [](const auto& a, double v) { return a.first < v; });
    std::size_t idx = static_cast<std::size_t>(it - ladder.begin());
    if (idx > 0 && ladder[idx].first != k) --idx;
    if (ladder[idx].first == k) return ladder[idx].second;

    const std::size_t lo = (idx >= 2) ? idx - 2 : 0;
    const std::size_t hi = std::min(idx + 3, ladder.size() - 1);
    std::vector<double> xs, ys;
    for (std::size_t i = lo; i <= hi; ++i) {
        xs.push_back(ladder[i].first);
        ys.push_back(ladder[i].second);
    }
    const std::vector<double> ms = pchip_slopes(xs, ys);
    const std::size_t i = idx - lo;
    const double h = xs[i + 1] - xs[i];
    const double s = (k - xs[i]) / h;
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return h00 * ys[i] + h10 * h * ms[i] + h01 * ys[i + 1] + h11 * h * ms[i + 1];
}

double price_single_fft(const BatesParams& params, const MarketSpec& market,
                        double k, const FftGrid& grid) {
    return interp_ladder(carr_madan_prices(params, market, grid), k);
}

double implied_vol(double price, double s, double k, double t, double r) {
    const double intrinsic = std::max(s - k * std::exp(-r * t), 0.0);
    if (!(price > intrinsic))
        throw NumericError("implied_vol: price at or below intrinsic lower bound");
    if (!(price < s))
        throw NumericError("implied_vol: price at or above spot upper bound");

    double lo = 1e-6, hi = 5.0;
    double flo = bs_price(s, k, t, r, lo) - price;
    double fhi = bs_price(s, k, t, r, hi) - price;
    if (flo > 0.0 || fhi < 0.0)
        throw NumericError("implied_vol: root not bracketed in [1e-6, 5]");

    for (int it = 0; it < 200; ++it) {
        // secant proposal from the bracket endpoints; bisect every other
        // iteration so the bracket provably shrinks
        double x = lo - flo * (hi - lo) / (fhi - flo);
        if (it % 2 == 1 || !(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double fx = bs_price(s, k, t, r, x) - price;
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace bates
