#include "bates/fem.hpp"

#include <cmath>
#include <memory>
#include <ostream>

#include "bates/errors.hpp"
#include "bates/reference.hpp"

namespace bates {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TriQuadPoint {
    std::array<double, 3> bary;
    double weight;  // fraction of the triangle area
};

std::vector<TriQuadPoint> triangle_quadrature(int order) {
    if (order <= 1) return {{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1.0}};
    // edge-midpoint rule, exact to degree 2
    return {{{0.5, 0.5, 0.0}, 1.0 / 3.0},
            {{0.0, 0.5, 0.5}, 1.0 / 3.0},
            {{0.5, 0.0, 0.5}, 1.0 / 3.0}};
}

// Ladder read with asymptotic fallbacks for strikes beyond the FFT range:
// far above it the call is worthless, far below it is forward-intrinsic.
double eval_ladder_clamped(const std::vector<std::pair<double, double>>& ladder,
                           double s0, double k, double r, double tau) {
    if (k > ladder.back().first) return 0.0;
    if (k < ladder.front().first) return s0 - k * std::exp(-r * tau);
    return std::max(interp_ladder(ladder, k), 0.0);
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw ConfigError("Gauss-Legendre order must be >= 1");
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Legendre recurrence and Newton update
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
}

SpMat assemble_mass(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double area = mesh.triangle_area(t);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trips.emplace_back(tri[a], tri[b], (a == b) ? area / 6.0 : area / 12.0);
    }
    SpMat m(mesh.num_nodes(), mesh.num_nodes());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

SpMat assemble_diffusion(const Mesh& mesh, const BatesParams& params) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const Eigen::Vector2d& a = mesh.node(tri[0]);
        const Eigen::Vector2d& b = mesh.node(tri[1]);
        const Eigen::Vector2d& c = mesh.node(tri[2]);
        const double area = mesh.triangle_area(t);

        // constant P1 gradients
        Eigen::Matrix<double, 2, 3> grad;
        grad.col(0) = Eigen::Vector2d(b.y() - c.y(), c.x() - b.x()) / (2.0 * area);
        grad.col(1) = Eigen::Vector2d(c.y() - a.y(), a.x() - c.x()) / (2.0 * area);
        grad.col(2) = Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) / (2.0 * area);

        // K is linear in y, so the centroid value integrates it exactly
        const double yc = (a.y() + b.y() + c.y()) / 3.0;
        Eigen::Matrix2d K;
        K << 0.5 * yc, 0.5 * params.rho * params.theta * yc,
            0.5 * params.rho * params.theta * yc, 0.5 * params.theta * params.theta * yc;

        const Eigen::Matrix3d local = area * grad.transpose() * K * grad;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], local(i, j));
    }
    SpMat m(mesh.num_nodes(), mesh.num_nodes());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

JumpOperator assemble_jump(const Mesh& mesh, const BatesParams& params,
                           const GridConfig& grid) {
    const int n = mesh.num_nodes();
    JumpOperator out;
    out.ext_exp = Eigen::VectorXd::Zero(n);
    out.ext_mass = Eigen::VectorXd::Zero(n);
    out.matrix.resize(n, n);
    if (params.lambda_ == 0.0) {
        out.matrix.setZero();
        return out;
    }

    const JumpBounds bounds = jump_truncation_bounds(params, grid.jump_eps);
    std::vector<double> gl_x, gl_w;
    gauss_legendre(grid.jump_quad_points, gl_x, gl_w);
    const double mid = 0.5 * (bounds.up + bounds.down);
    const double half = 0.5 * (bounds.up - bounds.down);

    std::vector<double> u_k(gl_x.size()), omega_k(gl_x.size());
    double lambda_trunc = 0.0;
    for (std::size_t k = 0; k < gl_x.size(); ++k) {
        u_k[k] = mid + half * gl_x[k];
        omega_k[k] = half * gl_w[k] * levy_density(params, u_k[k]);
        lambda_trunc += omega_k[k];
    }

    const auto quad = triangle_quadrature(grid.tri_quad_order);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * quad.size() *
                  (gl_x.size() * 3 + 9));

    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double area = mesh.triangle_area(t);
        for (const auto& qp : quad) {
            const double wq = qp.weight * area;
            Eigen::Vector2d q = qp.bary[0] * mesh.node(tri[0]) +
                                qp.bary[1] * mesh.node(tri[1]) +
                                qp.bary[2] * mesh.node(tri[2]);
            // local part: + psi_i psi_j * lambda_trunc
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    trips.emplace_back(tri[a], tri[b],
                                       qp.bary[a] * qp.bary[b] * wq * lambda_trunc);
            // shifted part: - psi_i * F_h(x+u, y)
            for (std::size_t k = 0; k < u_k.size(); ++k) {
                const double xs = q.x() + u_k[k];
                if (xs < mesh.x_min()) continue;  // F = 0 there
                if (xs > mesh.x_max()) {
                    for (int a = 0; a < 3; ++a) {
                        const double w = qp.bary[a] * wq * omega_k[k];
                        out.ext_exp[tri[a]] += w * std::exp(xs);
                        out.ext_mass[tri[a]] += w;
                    }
                    continue;
                }
                const PointLocation loc = mesh.locate({xs, q.y()});
                const auto& dst = mesh.triangle(loc.triangle);
                for (int a = 0; a < 3; ++a) {
                    const double w = qp.bary[a] * wq * omega_k[k];
                    for (int m = 0; m < 3; ++m)
                        trips.emplace_back(tri[a], dst[m], -w * loc.bary[m]);
                }
            }
        }
    }
    out.matrix.setFromTriplets(trips.begin(), trips.end());
    return out;
}

double boundary_values(const BatesParams& params, const MarketSpec& market,
                       BoundaryTag tag, double x, double tau, RightBc right_bc,
                       BottomBc bottom_bc) {
    switch (tag) {
        case BoundaryTag::left:
            return 0.0;
        case BoundaryTag::right: {
            if (right_bc == RightBc::paper) return std::exp(x);
            return std::max(std::exp(x) - market.strike * std::exp(-market.rate * tau),
                            0.0);
        }
        case BoundaryTag::top:
            return std::exp(x);
        case BoundaryTag::bottom: {
            if (bottom_bc == BottomBc::exact && tau > 0.0) {
                MarketSpec bm = market;
                bm.s0 = std::exp(x);
                bm.maturity = tau;
                bm.y0 = 0.0;
                return eval_ladder_clamped(carr_madan_prices(params, bm, FftGrid{}),
                                           bm.s0, market.strike, market.rate, tau);
            }
            double base_var = 0.0;
            if (bottom_bc == BottomBc::drift && tau > 0.0)
                base_var = params.eta *
                           (tau - (1.0 - std::exp(-params.xi * tau)) / params.xi);
            return merton_series_price(params, std::exp(x), market.strike, tau,
                                       market.rate, 1e-12, base_var);
        }
        case BoundaryTag::interior:
            break;
    }
    throw ConfigError("boundary_values called for a non-boundary node");
}

void apply_dirichlet_rows(SpMat& matrix, const std::vector<char>& is_dirichlet) {
    for (int i = 0; i < matrix.outerSize(); ++i) {
        if (!is_dirichlet[static_cast<std::size_t>(i)]) continue;
        for (SpMat::InnerIterator it(matrix, i); it; ++it)
            it.valueRef() = (it.col() == i) ? 1.0 : 0.0;
    }
}

void apply_dirichlet_rhs(Eigen::VectorXd& rhs, const Mesh& mesh,
                         const OperatorSet& ops, double tau) {
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (ops.is_dirichlet[static_cast<std::size_t>(i)])
            rhs[i] = ops.dirichlet_value(i, tau);
}

Eigen::VectorXd OperatorSet::jump_rhs(double tau) const {
    if (extension == ExtensionRule::exponential) return ext_exp;
    // the extended field is a call value, never negative
    return (ext_exp - strike * std::exp(-rate * tau) * ext_mass).cwiseMax(0.0);
}

OperatorSet assemble_operators(const Mesh& mesh, const BatesParams& params,
                               const MarketSpec& market, const GridConfig& grid,
                               RightBc right_bc, BottomBc bottom_bc) {
    OperatorSet ops;
    ops.mass = assemble_mass(mesh);
    ops.diffusion = assemble_diffusion(mesh, params);
    JumpOperator jump = assemble_jump(mesh, params, grid);
    ops.jump = std::move(jump.matrix);
    ops.ext_exp = std::move(jump.ext_exp);
    ops.ext_mass = std::move(jump.ext_mass);
    ops.extension =
        right_bc == RightBc::paper ? ExtensionRule::exponential : ExtensionRule::payoff;
    ops.strike = market.strike;
    ops.rate = market.rate;
    ops.is_dirichlet.resize(static_cast<std::size_t>(mesh.num_nodes()));
    for (int i = 0; i < mesh.num_nodes(); ++i)
        ops.is_dirichlet[static_cast<std::size_t>(i)] =
            mesh.tag(i) != BoundaryTag::interior;
    std::vector<std::pair<BoundaryTag, double>> node_info;
    node_info.reserve(static_cast<std::size_t>(mesh.num_nodes()));
    for (int i = 0; i < mesh.num_nodes(); ++i)
        node_info.emplace_back(mesh.tag(i), mesh.node(i).x());
    // For the exact bottom data, one transform ladder per tau serves every
    // bottom node through homogeneity: C(s, K) = (s/K) * C(K, K^2/s).
    struct BottomCache {
        double tau = -1.0;
        std::vector<std::pair<double, double>> ladder;
    };
    auto cache = std::make_shared<BottomCache>();
    ops.dirichlet_value = [params, market, right_bc, bottom_bc, cache,
                           node_info = std::move(node_info)](int node, double tau) {
        const auto& [tag, x] = node_info[static_cast<std::size_t>(node)];
        if (tag == BoundaryTag::bottom && bottom_bc == BottomBc::exact && tau > 0.0) {
            if (cache->tau != tau) {
                MarketSpec bm = market;
                bm.s0 = market.strike;
                bm.maturity = tau;
                bm.y0 = 0.0;
                cache->ladder = carr_madan_prices(params, bm, FftGrid{});
                cache->tau = tau;
            }
            const double s = std::exp(x);
            const double scale = s / market.strike;
            return scale * eval_ladder_clamped(cache->ladder, market.strike,
                                               market.strike / scale, market.rate,
                                               tau);
        }
        return boundary_values(params, market, tag, x, tau, right_bc, bottom_bc);
    };
    return ops;
}

void write_coordinate_format(const SpMat& m, std::ostream& out) {
    for (int i = 0; i < m.outerSize(); ++i)
        for (SpMat::InnerIterator it(m, i); it; ++it)
            out << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace bates
