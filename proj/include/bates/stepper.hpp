#ifndef BATES_STEPPER_HPP
#define BATES_STEPPER_HPP

#include <memory>

#include <Eigen/Core>

#include "bates/fem.hpp"
#include "bates/mesh.hpp"
#include "bates/model.hpp"

namespace bates {

/// Characteristic velocity, affine in y:
///   a_x = ax0 + ax1*y,  a_y = ay0 + ay1*y.
/// The Bates field has ax0 = r - kappa(1) - rho*theta/2, ax1 = -1/2,
/// ay0 = xi*eta - theta^2/2, ay1 = -xi.
struct CharacteristicField {
    double ax0 = 0.0, ax1 = 0.0;
    double ay0 = 0.0, ay1 = 0.0;

    static CharacteristicField from_model(const BatesParams& params,
                                          const MarketSpec& market);

    Eigen::Vector2d velocity(const Eigen::Vector2d& p) const {
        return {ax0 + ax1 * p.y(), ay0 + ay1 * p.y()};
    }
};

enum class FootMethod { exact, implicit_euler, rk4 };

struct SolverConfig {
    FootMethod method = FootMethod::exact;
    double linear_tol = 1e-10;
    int linear_maxit = 5000;
    double dt = 0.02;  // = T / n_steps when driven by run()
    bool explicit_jump = false;  // lag the jump term to the rhs
};

/// Option values over the mesh at a fixed time-to-maturity.
struct TimeState {
    double tau = 0.0;
    Eigen::VectorXd nodal_values;
};

/// Nodal solution at tau = T plus the mesh it lives on.
struct PriceSurface {
    Mesh mesh;
    Eigen::VectorXd values;

    double price_at(double x, double y) const {
        return mesh.interpolate(values, {x, y});
    }
    /// Post-processed read: weighted least-squares quadratic fit over the
    /// nodal values around (x, y). P1 interpolation of a convex price carries
    /// an O(h^2 * second derivative) chord error between nodes; the local
    /// patch recovery removes it without touching the solve.
    double price_at_recovered(double x, double y) const;
    void write_csv(std::ostream& out) const;
};

/// Foot of the characteristic through p over one step of length dt
/// (the point the transported quantity is fetched from). Not clamped;
/// interpolation clamps to the domain.
Eigen::Vector2d trace_foot(const CharacteristicField& field, const Eigen::Vector2d& p,
                           double dt, FootMethod method);

Eigen::Vector2d trace_foot(const BatesParams& params, const MarketSpec& market,
                           const Eigen::Vector2d& p, double dt, FootMethod method);

/// One-step solver: feet and interpolation weights are computed once (the
/// field is autonomous), the Dirichlet-constrained system is factored into
/// an iterative solver once, then advance() marches tau -> tau + dt.
class Stepper {
public:
    Stepper(const Mesh& mesh, const OperatorSet& ops, const CharacteristicField& field,
            const SolverConfig& cfg);
    ~Stepper();
    Stepper(Stepper&&) noexcept;
    Stepper& operator=(Stepper&&) noexcept;

    TimeState advance(const TimeState& state) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Single semi-Lagrangian step, for tests and one-off use.
TimeState step(const TimeState& state, const Mesh& mesh, const OperatorSet& ops,
               const SolverConfig& cfg, const CharacteristicField& field);

/// Full march: payoff at tau=0, n_steps steps to tau=T.
PriceSurface run(const BatesParams& params, const MarketSpec& market,
                 const GridConfig& grid, const SolverConfig& cfg,
                 RightBc right_bc = RightBc::payoff,
                 BottomBc bottom_bc = BottomBc::exact);

}  // namespace bates

#endif
