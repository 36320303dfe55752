#ifndef SLP_TRAJ_OPT_HPP
#define SLP_TRAJ_OPT_HPP

// Spatio-temporal trajectory optimization over corridor waypoints and segment
// durations: minimum-snap energy plus a total-duration term plus time-integral
// penalties for corridor containment (payload and quadrotor), thrust band,
// tilt, payload velocity/acceleration limits, and the taut-cable tension
// margin, all differentiated through the flatness chain and the spline
// construction, then minimized without constraints via the barycentric
// overlap parameterization and a positive-duration diffeomorphism.

#include <Eigen/Dense>

#include <vector>

#include "slp/dynamics.hpp"
#include "slp/error.hpp"
#include "slp/geometry.hpp"
#include "slp/lbfgs.hpp"
#include "slp/minco.hpp"
#include "slp/traj_init.hpp"

namespace slp::traj
{
    using geom::Polytope;
    using geom::Vec3;

    // Per-family penalty weights (the chi vector, grouped).
    struct ConstraintWeights
    {
        double corridor = 1.0;
        double thrust = 1.0;
        double tilt = 1.0;
        double velocity = 1.0;
        double acceleration = 1.0;
        double tension = 1.0;
    };

    // Sampled constraint definition for one trajectory: a polytope per
    // segment (both payload and quadrotor positions are constrained to it;
    // empty disables corridor rows), actuation and payload limits, penalty
    // weights, trapezoid sample counts, and the penalty exponent.
    struct ConstraintSet
    {
        std::vector<Polytope> corridor;
        double f_min = 0.0, f_max = 40.0;  // thrust band (N)
        double tilt_max = 1.0;             // max tilt angle (rad)
        double v_max = 3.0, a_max = 6.0;   // payload speed / acceleration caps
        double tension_eps = 0.1;          // taut margin: accel_z + g >= eps
        ConstraintWeights chi;
        std::vector<int> kappa;            // samples per segment; empty = 16 each
        double power = 3.0;                // penalty exponent k > 1

        // Throws UsageError unless kappa_i >= 2, chi >= 0, k > 1, and the
        // corridor is empty or has exactly one polytope per segment.
        void validate(int segments) const;
    };

    // Limits copied from the system description, corridor attached.
    ConstraintSet make_constraints(const std::vector<Polytope> &corridor,
                                   const dyn::SystemParams &system);

    // Time-integral penalty with trapezoidal quadrature (endpoint weight 1/2)
    // and its gradients with respect to the polynomial coefficients and the
    // segment durations. Gradient buffers may be null to skip them; when
    // given, they are overwritten. Near free fall (cable direction undefined)
    // a sample contributes only the tension term, which by design repels the
    // optimizer from that region.
    double penalty_and_grad(const minco::PiecewiseTrajectory &traj,
                            const ConstraintSet &constraints,
                            const dyn::SystemParams &system,
                            const Vec3 &f_ext_q, const Vec3 &f_ext_l,
                            std::vector<minco::CoeffMatrix> *grad_coeffs,
                            std::vector<double> *grad_T);

    // Worst violation per constraint family over a dense sampling, in each
    // family's native units (meters for corridor rows).
    struct ConstraintResidual
    {
        double corridor = 0.0;
        double thrust = 0.0;
        double tilt = 0.0;
        double velocity = 0.0;
        double acceleration = 0.0;
        double tension = 0.0;

        double max() const;
    };

    ConstraintResidual evaluate_residual(const minco::PiecewiseTrajectory &traj,
                                         const ConstraintSet &constraints,
                                         const dyn::SystemParams &system,
                                         const Vec3 &f_ext_q, const Vec3 &f_ext_l,
                                         int samples_per_segment);

    struct OptParams
    {
        dyn::SystemParams system;
        Vec3 snap_weights = Vec3::Ones();  // per-axis weight on snap energy
        double lambda_time = 20.0;         // weight on total duration
        double lambda_penalty = 1e9;       // weight on the constraint penalty
        ConstraintWeights chi;
        int samples_per_segment = 16;
        double power = 3.0;
        Vec3 f_ext_q = Vec3::Zero();
        Vec3 f_ext_l = Vec3::Zero();
        LbfgsParams solver;
        double min_duration = 0.2;         // floor for the chord/v_max warm start
        int dense_factor = 10;             // verification sampling multiplier
        double feasibility_tol = 1e-3;
        bool strict_hulls = false;         // also check consecutive-sample hulls
    };

    struct OptResult
    {
        minco::PiecewiseTrajectory trajectory;
        double cost = 0.0;
        SolveStatus status = SolveStatus::MaxIterations;
        bool feasible = false;             // residual.max() <= feasibility_tol
        ConstraintResidual residual;       // at dense sampling
        bool hull_chain_ok = true;         // consecutive samples share a polytope
    };

    // Quasi-Newton minimization of snap energy + lambda_T * total duration +
    // lambda_s * penalty over (overlap waypoints, virtual durations), warm
    // started from the initializer result with durations chord / v_max. The
    // chain must pair corridor polytopes (corridor.size() == cells + 1); an
    // empty chain optimizes durations only for a single-segment corridor.
    // Always returns the best iterate with a dense-sampling residual report;
    // throws OptimizerStall when the warm start itself is unusable.
    OptResult optimize_trajectory(const init::InitResult &init,
                                  const init::OverlapChain &chain,
                                  const std::vector<Polytope> &corridor,
                                  const minco::BoundaryState &z0,
                                  const minco::BoundaryState &zf,
                                  const OptParams &params);

} // namespace slp::traj

#endif
