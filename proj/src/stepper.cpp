#include "bates/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/IterativeSolvers>

#include "bates/errors.hpp"

namespace bates {

CharacteristicField CharacteristicField::from_model(const BatesParams& p,
                                                    const MarketSpec& m) {
    CharacteristicField f;
    f.ax0 = m.rate - cumulant(p, 1.0) - 0.5 * p.rho * p.theta;
    f.ax1 = -0.5;
    f.ay0 = p.xi * p.eta - 0.5 * p.theta * p.theta;
    f.ay1 = -p.xi;
    return f;
}

Eigen::Vector2d trace_foot(const CharacteristicField& f, const Eigen::Vector2d& p,
                           double dt, FootMethod method) {
    if (dt == 0.0) return p;
    switch (method) {
        case FootMethod::exact: {
            // y' = ay0 + ay1*y has a closed form; the x shift is its time
            // integral against ax1 plus ax0*dt.
            double y_end, int_y;
            if (f.ay1 != 0.0) {
                const double ystar = -f.ay0 / f.ay1;
                const double e = std::exp(f.ay1 * dt);
                y_end = ystar + (p.y() - ystar) * e;
                int_y = ystar * dt + (p.y() - ystar) * (e - 1.0) / f.ay1;
            } else {
                y_end = p.y() + f.ay0 * dt;
                int_y = p.y() * dt + 0.5 * f.ay0 * dt * dt;
            }
            return {p.x() + f.ax0 * dt + f.ax1 * int_y, y_end};
        }
        case FootMethod::implicit_euler: {
            // foot = p + dt * a(foot); a is affine in y so this is explicit
            const double y_end = (p.y() + dt * f.ay0) / (1.0 - dt * f.ay1);
            return {p.x() + dt * (f.ax0 + f.ax1 * y_end), y_end};
        }
        case FootMethod::rk4: {
            const auto k1 = f.velocity(p);
            const auto k2 = f.velocity(p + 0.5 * dt * k1);
            const auto k3 = f.velocity(p + 0.5 * dt * k2);
            const auto k4 = f.velocity(p + dt * k3);
            return p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    throw ConfigError("unknown foot-tracing method");
}

Eigen::Vector2d trace_foot(const BatesParams& params, const MarketSpec& market,
                           const Eigen::Vector2d& p, double dt, FootMethod method) {
    return trace_foot(CharacteristicField::from_model(params, market), p, dt, method);
}

double PriceSurface::price_at_recovered(double x, double y) const {
    const Eigen::Vector2d p{std::min(std::max(x, mesh.x_min()), mesh.x_max()),
                            std::min(std::max(y, 0.0), mesh.y_max())};
    // local length scales from the containing triangle's bounding box
    const PointLocation loc = mesh.locate(p);
    const auto& tri = mesh.triangle(loc.triangle);
    double hx = 0.0, hy = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            hx = std::max(hx, std::abs(mesh.node(tri[a]).x() - mesh.node(tri[b]).x()));
            hy = std::max(hy, std::abs(mesh.node(tri[a]).y() - mesh.node(tri[b]).y()));
        }

    // gather nodes in a window, widening if the patch is too thin
    for (double widen : {1.6, 2.6, 4.1}) {
        const double rx = widen * hx, ry = widen * hy;
        std::vector<int> patch;
        for (int i = 0; i < mesh.num_nodes(); ++i)
            if (std::abs(mesh.node(i).x() - p.x()) <= rx &&
                std::abs(mesh.node(i).y() - p.y()) <= ry)
                patch.push_back(i);
        if (patch.size() < 8) continue;

        Eigen::MatrixXd a(patch.size(), 6);
        Eigen::VectorXd rhs(patch.size());
        for (std::size_t k = 0; k < patch.size(); ++k) {
            const double dx = (mesh.node(patch[k]).x() - p.x()) / hx;
            const double dy = (mesh.node(patch[k]).y() - p.y()) / hy;
            const double w = std::exp(-(dx * dx + dy * dy));
            a.row(static_cast<Eigen::Index>(k)) << w, w * dx, w * dy, w * dx * dx,
                w * dx * dy, w * dy * dy;
            rhs[static_cast<Eigen::Index>(k)] = w * values[patch[k]];
        }
        const Eigen::VectorXd coef =
            (a.transpose() * a).ldlt().solve(a.transpose() * rhs);
        if (coef.allFinite()) return coef[0];
    }
    return mesh.interpolate(values, p);
}

void PriceSurface::write_csv(std::ostream& out) const {
    out << "x,y,value\n";
    std::ostringstream os;
    os.precision(12);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        os.str("");
        os << mesh.node(i).x() << "," << mesh.node(i).y() << "," << values[i] << "\n";
        out << os.str();
    }
}

namespace {

// degree-5 rule (Dunavant); weights are fractions of the triangle area
struct QuadPoint {
    std::array<double, 3> bary;
    double weight;
};

const std::array<QuadPoint, 7>& transport_quadrature() {
    static const std::array<QuadPoint, 7> rule = [] {
        const double w1 = 0.225;
        const double a2 = 0.059715871789770, b2 = 0.470142064105115;
        const double w2 = 0.132394152788506;
        const double a3 = 0.797426985353087, b3 = 0.101286507323456;
        const double w3 = 0.125939180544827;
        return std::array<QuadPoint, 7>{{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, w1},
                                         {{a2, b2, b2}, w2},
                                         {{b2, a2, b2}, w2},
                                         {{b2, b2, a2}, w2},
                                         {{a3, b3, b3}, w3},
                                         {{b3, a3, b3}, w3},
                                         {{b3, b3, a3}, w3}}};
    }();
    return rule;
}

// L2-projection of the payoff max(e^x - K, 0) onto P1. Nodal interpolation
// would overshoot across the strike kink and inject an O(h^2 * K) price bias
// that never decays; projecting instead integrates the payoff exactly, with
// each element clipped against the kink line x = ln K first.
Eigen::VectorXd project_payoff(const Mesh& mesh, double strike) {
    const double xk = std::log(strike);
    const auto& quad = transport_quadrature();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.num_nodes());

    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const Eigen::Vector2d v0 = mesh.node(tri[0]);
        const Eigen::Vector2d v1 = mesh.node(tri[1]);
        const Eigen::Vector2d v2 = mesh.node(tri[2]);
        if (v0.x() <= xk && v1.x() <= xk && v2.x() <= xk) continue;

        // clip to the half-plane x >= xk (Sutherland-Hodgman)
        std::vector<Eigen::Vector2d> poly;
        const Eigen::Vector2d verts[3] = {v0, v1, v2};
        for (int e = 0; e < 3; ++e) {
            const Eigen::Vector2d& a = verts[e];
            const Eigen::Vector2d& c = verts[(e + 1) % 3];
            const bool a_in = a.x() >= xk, c_in = c.x() >= xk;
            if (a_in) poly.push_back(a);
            if (a_in != c_in) {
                const double s = (xk - a.x()) / (c.x() - a.x());
                poly.push_back(a + s * (c - a));
            }
        }
        if (poly.size() < 3) continue;

        // barycentric map of the original triangle
        const Eigen::Vector2d e1 = v1 - v0, e2 = v2 - v0;
        const double det = e1.x() * e2.y() - e1.y() * e2.x();

        for (std::size_t f = 1; f + 1 < poly.size(); ++f) {
            const Eigen::Vector2d& p0 = poly[0];
            const Eigen::Vector2d& p1 = poly[f];
            const Eigen::Vector2d& p2 = poly[f + 1];
            const double area = 0.5 * std::abs((p1.x() - p0.x()) * (p2.y() - p0.y()) -
                                               (p1.y() - p0.y()) * (p2.x() - p0.x()));
            if (area == 0.0) continue;
            for (const auto& qp : quad) {
                const Eigen::Vector2d p =
                    qp.bary[0] * p0 + qp.bary[1] * p1 + qp.bary[2] * p2;
                const double payoff = std::exp(p.x()) - strike;
                if (payoff <= 0.0) continue;
                const Eigen::Vector2d d = p - v0;
                const double l1 = (d.x() * e2.y() - d.y() * e2.x()) / det;
                const double l2 = (e1.x() * d.y() - e1.y() * d.x()) / det;
                const double w = qp.weight * area * payoff;
                b[tri[0]] += w * (1.0 - l1 - l2);
                b[tri[1]] += w * l1;
                b[tri[2]] += w * l2;
            }
        }
    }

    const SpMat mass = assemble_mass(mesh);
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-14);
    cg.compute(mass);
    return cg.solve(b);
}

}  // namespace

struct Stepper::Impl {
    const Mesh& mesh;
    const OperatorSet& ops;
    SolverConfig cfg;
    SpMat system;     // (1/dt + r)*M + A_D + A_J with Dirichlet rows replaced
    SpMat transport;  // B_ij = integral of psi_i(x) psi_j(foot(x))
    Eigen::GMRES<SpMat, Eigen::DiagonalPreconditioner<double>> solver;

    Impl(const Mesh& mesh_, const OperatorSet& ops_, const CharacteristicField& field,
         const SolverConfig& cfg_)
        : mesh(mesh_), ops(ops_), cfg(cfg_) {
        system = ops.mass * (1.0 / cfg.dt + ops.rate);
        system += ops.diffusion;
        if (!cfg.explicit_jump) system += ops.jump;
        apply_dirichlet_rows(system, ops.is_dirichlet);
        system.makeCompressed();

        // The transported term is assembled in weak form: feet are traced from
        // quadrature points, not nodes, which keeps the advection second order
        // when the displacement is below the mesh size. The field is
        // autonomous, so one matrix serves every step. Feet leaving the domain
        // are clamped to the boundary, where Dirichlet data lives.
        const auto& quad = transport_quadrature();
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * quad.size() * 9);
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            const auto& tri = mesh.triangle(t);
            const double area = mesh.triangle_area(t);
            for (const auto& qp : quad) {
                const Eigen::Vector2d x = qp.bary[0] * mesh.node(tri[0]) +
                                          qp.bary[1] * mesh.node(tri[1]) +
                                          qp.bary[2] * mesh.node(tri[2]);
                const Eigen::Vector2d foot = trace_foot(field, x, cfg.dt, cfg.method);
                const PointLocation loc = mesh.locate(foot, LocatePolicy::clamp);
                const auto& dst = mesh.triangle(loc.triangle);
                const double w = qp.weight * area;
                for (int a = 0; a < 3; ++a)
                    for (int m = 0; m < 3; ++m)
                        trips.emplace_back(tri[a], dst[m],
                                           w * qp.bary[a] * loc.bary[m]);
            }
        }
        transport.resize(mesh.num_nodes(), mesh.num_nodes());
        transport.setFromTriplets(trips.begin(), trips.end());

        solver.setTolerance(cfg.linear_tol);
        solver.setMaxIterations(cfg.linear_maxit);
        solver.set_restart(60);
        solver.compute(system);
    }
};

Stepper::Stepper(const Mesh& mesh, const OperatorSet& ops,
                 const CharacteristicField& field, const SolverConfig& cfg)
    : impl_(std::make_unique<Impl>(mesh, ops, field, cfg)) {}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

TimeState Stepper::advance(const TimeState& state) const {
    const Impl& im = *impl_;
    const double tau_next = state.tau + im.cfg.dt;

    Eigen::VectorXd rhs = (1.0 / im.cfg.dt) * (im.transport * state.nodal_values);
    rhs += im.ops.jump_rhs(tau_next);
    if (im.cfg.explicit_jump) rhs -= im.ops.jump * state.nodal_values;
    apply_dirichlet_rhs(rhs, im.mesh, im.ops, tau_next);

    TimeState next;
    next.tau = tau_next;
    next.nodal_values = im.solver.solveWithGuess(rhs, state.nodal_values);
    if (im.solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "linear solver failed to converge: " << im.solver.iterations()
           << " iterations, residual " << im.solver.error();
        throw NumericError(os.str());
    }
    return next;
}

TimeState step(const TimeState& state, const Mesh& mesh, const OperatorSet& ops,
               const SolverConfig& cfg, const CharacteristicField& field) {
    return Stepper(mesh, ops, field, cfg).advance(state);
}

PriceSurface run(const BatesParams& params, const MarketSpec& market,
                 const GridConfig& grid, const SolverConfig& cfg_in,
                 RightBc right_bc, BottomBc bottom_bc) {
    Mesh mesh =
        Mesh::rectangle_graded(grid.x_min, grid.x_max, grid.y_max, grid.nx, grid.ny,
                               std::log(market.strike), grid.x_grade, grid.y_grade);
    const OperatorSet ops =
        assemble_operators(mesh, params, market, grid, right_bc, bottom_bc);

    SolverConfig cfg = cfg_in;
    cfg.dt = market.maturity / grid.n_steps;
    const CharacteristicField field = CharacteristicField::from_model(params, market);
    Stepper stepper(mesh, ops, field, cfg);

    TimeState state;
    state.tau = 0.0;
    state.nodal_values = project_payoff(mesh, market.strike);

    for (int n = 0; n < grid.n_steps; ++n) {
        state = stepper.advance(state);
        // call values are nonnegative; clip the Galerkin undershoot that the
        // payoff kink excites on coarse meshes
        state.nodal_values = state.nodal_values.cwiseMax(0.0);
    }

    return PriceSurface{std::move(mesh), std::move(state.nodal_values)};
}

}  // namespace bates
