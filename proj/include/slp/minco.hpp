#ifndef SLP_MINCO_HPP
#define SLP_MINCO_HPP

// Minimum-control-effort spline backbone for trajectory optimization: the
// unique degree-7 (s = 4) piecewise polynomial through given waypoints with
// given segment durations and full boundary derivatives, built by one banded
// linear solve, plus the adjoint machinery that converts gradients with
// respect to polynomial coefficients into gradients with respect to the
// waypoints and durations. Degree 7 with C6 junctions is exactly the
// minimizer of the integrated squared fourth derivative, so the spline both
// parameterizes and regularizes the search space.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "slp/error.hpp"
#include "slp/geometry.hpp"

namespace slp::minco
{
    using geom::Vec3;
    using CoeffMatrix = Eigen::Matrix<double, 8, 3>;  // row = power of t, col = axis

    // Position through jerk at one end of the trajectory.
    struct BoundaryState
    {
        Vec3 p{Vec3::Zero()};
        Vec3 v{Vec3::Zero()};
        Vec3 a{Vec3::Zero()};
        Vec3 j{Vec3::Zero()};
    };

    // Basis row: the order-th derivative of (1, t, ..., t^7) at t.
    Eigen::Matrix<double, 8, 1> poly_basis(double t, int order);

    // Piecewise degree-7 polynomial with per-segment local time in [0, T_i].
    struct PiecewiseTrajectory
    {
        std::vector<CoeffMatrix> coeffs;
        std::vector<double> durations;

        int segments() const { return static_cast<int>(coeffs.size()); }
        double total_time() const;

        // Segment index containing global time t plus the local offset;
        // junction times resolve to the earlier segment's endpoint.
        int locate(double t, double *local) const;  // throws OutOfDomain

        // Derivative of the given order at global time t (0 <= t <= total).
        Vec3 eval(double t, int order) const;  // throws OutOfDomain, UsageError

        Vec3 eval_segment(int segment, double local_t, int order) const;
    };

    // Banded LU (no pivoting) for the spline systems; bandwidths are fixed by
    // the junction structure. Throws SingularSystem on vanishing pivots.
    class BandedLU
    {
    public:
        BandedLU(int n, int lower, int upper);

        double &at(int row, int col);
        double at(int row, int col) const;

        void factor();
        void solve(Eigen::MatrixXd &rhs) const;            // A x = rhs, in place
        void solve_transpose(Eigen::MatrixXd &rhs) const;  // A^T x = rhs, in place

    private:
        int n_, lower_, upper_;
        bool factored_{false};
        Eigen::MatrixXd band_;  // (lower + upper + 1) x n, diagonal offset keyed
    };

    // Assembled and factored interpolation system: the trajectory through
    // waypoints p with durations T and boundary states z0/zf, kept factored so
    // cost gradients can be pulled back through the construction.
    class SplineSystem
    {
    public:
        // waypoints.size() + 1 == durations.size(); all durations positive.
        SplineSystem(const std::vector<Vec3> &waypoints, const std::vector<double> &durations,
                     const BoundaryState &z0, const BoundaryState &zf);

        const PiecewiseTrajectory &trajectory() const { return traj_; }

        // Adjoint pullback: given dK/d(coefficients) per segment and the
        // direct part dK/dT (terms not routed through the coefficients),
        // accumulates the full gradients with respect to waypoints and
        // durations. grad_T must arrive carrying the direct part.
        void propagate_gradient(const std::vector<CoeffMatrix> &grad_coeffs,
                                std::vector<Vec3> *grad_waypoints,
                                std::vector<double> *grad_T) const;

    private:
        PiecewiseTrajectory traj_;
        BandedLU lu_;
        int waypoint_count_;
    };

    // Convenience wrapper when no gradients are needed.
    PiecewiseTrajectory minco_construct(const std::vector<Vec3> &waypoints,
                                        const std::vector<double> &durations,
                                        const BoundaryState &z0, const BoundaryState &zf);

    // Integrated squared fourth derivative, per-axis weighted: sum_i
    // int_0^{T_i} Z^(4)(t)^T diag(q) Z^(4)(t) dt.
    double snap_energy(const PiecewiseTrajectory &traj, const Vec3 &q);

    // Energy gradients with respect to coefficients and durations (the
    // duration gradient holds the coefficients fixed; route the coefficient
    // part through SplineSystem::propagate_gradient).
    void snap_energy_grad(const PiecewiseTrajectory &traj, const Vec3 &q,
                          std::vector<CoeffMatrix> *grad_coeffs,
                          std::vector<double> *grad_T);

    // JSON round trip: per-segment duration plus 8x3 coefficients; numbers
    // serialize with shortest exact decimal representation.
    std::string serialize_trajectory(const PiecewiseTrajectory &traj);
    PiecewiseTrajectory deserialize_trajectory(const std::string &text);

} // namespace slp::minco

#endif
