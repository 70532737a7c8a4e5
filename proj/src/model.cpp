#include "bates/model.hpp"

#include <stdexcept>

namespace bates {

namespace {
constexpr double kPi = 3.14159265358979323846;
const std::complex<double> kI{0.0, 1.0};
}  // namespace

ValidationReport validate(const BatesParams& p, const MarketSpec& m) {
    ValidationReport rep;
    auto hard = [&rep](const std::string& msg) { rep.hard_errors.push_back(msg); };

    if (!(p.xi > 0.0)) hard("mean-reversion speed xi must be positive");
    if (!(p.eta > 0.0)) hard("long-run variance eta must be positive");
    if (!(p.theta > 0.0)) hard("vol-of-vol theta must be positive");
    if (!(p.rho >= -1.0 && p.rho <= 1.0)) hard("correlation out of range [-1,1]");
    if (!(p.lambda_ >= 0.0)) hard("jump intensity lambda must be nonnegative");
    if (!(p.kbar > -1.0)) hard("mean jump size kbar must exceed -1");
    if (p.lambda_ > 0.0 && !(p.delta > 0.0))
        hard("jump-size std dev delta must be positive when lambda > 0");

    if (!(m.s0 > 0.0)) hard("spot s0 must be positive");
    if (!(m.strike > 0.0)) hard("strike must be positive");
    if (!(m.maturity > 0.0)) hard("maturity must be positive");
    if (!(m.y0 > 0.0)) hard("initial variance y0 must be positive");

    if (p.xi > 0.0 && p.eta > 0.0 && p.theta > 0.0 &&
        p.theta * p.theta > 2.0 * p.xi * p.eta) {
        rep.warnings.push_back("Feller violated: theta^2 > 2*xi*eta, variance can hit zero");
    }
    return rep;
}

double cumulant(const BatesParams& p, double z) {
    if (p.lambda_ == 0.0) return 0.0;
    const double g = p.gamma();
    return p.lambda_ * (std::exp(g * z + 0.5 * p.delta * p.delta * z * z) - 1.0);
}

double levy_density(const BatesParams& p, double u) {
    if (p.lambda_ == 0.0) return 0.0;
    const double d = u - p.gamma();
    return p.lambda_ / (p.delta * std::sqrt(2.0 * kPi)) *
           std::exp(-d * d / (2.0 * p.delta * p.delta));
}

JumpBounds jump_truncation_bounds(const BatesParams& p, double eps) {
    const double scale = 1.0 / (p.delta * std::sqrt(2.0 * kPi));
    if (!(eps > 0.0) || !(eps < scale))
        throw std::invalid_argument("jump truncation eps must lie in (0, 1/(delta*sqrt(2*pi)))");
    const double half = std::sqrt(-2.0 * p.delta * p.delta *
                                  std::log(eps * p.delta * std::sqrt(2.0 * kPi)));
    const double up = half + std::abs(p.gamma());
    return {-up, up};
}

std::complex<double> characteristic_fn(const BatesParams& p, const MarketSpec& m,
                                       std::complex<double> u, double t) {
    if (t == 0.0) return std::exp(kI * u * std::log(m.s0));

    const double k1 = cumulant(p, 1.0);
    const std::complex<double> iu = kI * u;
    const std::complex<double> u2iu = u * u + iu;

    // spot/drift factor
    const std::complex<double> spot =
        std::exp(iu * (std::log(m.s0) + (m.rate - k1) * t));

    // jump factor
    std::complex<double> jump{1.0, 0.0};
    if (p.lambda_ > 0.0) {
        const double d2 = p.delta * p.delta;
        jump = std::exp(t * p.lambda_ *
                        (std::exp(-0.5 * d2 * u * u +
                                  kI * (std::log(1.0 + p.kbar) - 0.5 * d2) * u) -
                         1.0));
    }

    // Heston variance factor, written with decaying exponentials so the
    // complex power stays on a continuous branch for all t.
    const std::complex<double> beta = p.xi - kI * p.rho * p.theta * u;
    const std::complex<double> d =
        std::sqrt(p.theta * p.theta * u2iu + beta * beta);
    const std::complex<double> g = beta / d;
    const std::complex<double> emdt = std::exp(-d * t);
    const double power = 2.0 * p.xi * p.eta / (p.theta * p.theta);

    // The power term [cosh(dt/2) + g*sinh(dt/2)]^{-power} and the
    // normalization exp(xi*eta*t*beta/theta^2) required by the martingale
    // identity psi(-i)=s0*e^{rt} are combined in log space; separately they
    // overflow for small theta. beta - d is computed without cancellation.
    const std::complex<double> bracket = 0.5 * ((1.0 + g) + (1.0 - g) * emdt);
    std::complex<double> beta_minus_d;
    if (std::abs(beta + d) > 1e-12 * (std::abs(beta) + std::abs(d)))
        beta_minus_d = -p.theta * p.theta * u2iu / (beta + d);
    else
        beta_minus_d = beta - d;
    const std::complex<double> heston_factor =
        std::exp(power * (0.5 * t * beta_minus_d - std::log(bracket)));

    // d*coth(dt/2) + beta, via coth(x) = (1+e^{-2x})/(1-e^{-2x})
    const std::complex<double> denom = d * (1.0 + emdt) / (1.0 - emdt) + beta;
    const std::complex<double> heston_exp = std::exp(-u2iu * m.y0 / denom);

    return spot * jump * heston_factor * heston_exp;
}

std::complex<double> heston_characteristic_fn(const BatesParams& p, const MarketSpec& m,
                                              std::complex<double> u, double t) {
    if (t == 0.0) return std::exp(kI * u * std::log(m.s0));

    // Schoutens-form Heston CF, algebraically distinct from the Bates path.
    const std::complex<double> iu = kI * u;
    const std::complex<double> b = p.xi - p.rho * p.theta * iu;
    const double th2 = p.theta * p.theta;
    const std::complex<double> d = std::sqrt(b * b + th2 * (iu + u * u));
    const std::complex<double> gq = (b - d) / (b + d);
    const std::complex<double> emdt = std::exp(-d * t);

    const std::complex<double> A =
        iu * (std::log(m.s0) + m.rate * t);
    const std::complex<double> B =
        p.eta * p.xi / th2 *
        ((b - d) * t - 2.0 * std::log((1.0 - gq * emdt) / (1.0 - gq)));
    const std::complex<double> C =
        m.y0 / th2 * (b - d) * (1.0 - emdt) / (1.0 - gq * emdt);

    return std::exp(A + B + C);
}

std::optional<BatesParams> preset(const std::string& name) {
    if (name == "S1") return BatesParams{0.21568, 0.04937, 0.23828, -0.44793, 0.13674, -0.11889, 0.17189};
    if (name == "S2") return BatesParams{0.33502, 0.033582, 0.26969, -0.42404, 0.33785, -0.077973, 0.11048};
    if (name == "S3") return BatesParams{0.13279, 0.18193, 0.37518, -0.59722, 0.05218, 0.080396, 0.057373};
    if (name == "S4") return BatesParams{0.48443, 0.022097, 0.21903, -0.40066, 0.15977, -0.12938, 0.16878};
    return std::nullopt;
}

std::vector<std::string> preset_names() { return {"S1", "S2", "S3", "S4"}; }

}  // namespace bates
