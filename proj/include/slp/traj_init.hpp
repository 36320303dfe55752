#ifndef SLP_TRAJ_INIT_HPP
#define SLP_TRAJ_INIT_HPP

// Waypoint and cable-direction initialization inside corridor overlaps: a
// smooth three-term objective (short path, quadrotor containment, midpoint
// separation margin) minimized without constraints by mapping each waypoint
// through a barycentric surjection onto its overlap polytope and each cable
// direction through a hemisphere parameterization.

#include <Eigen/Dense>

#include <vector>

#include "slp/error.hpp"
#include "slp/geometry.hpp"
#include "slp/lbfgs.hpp"

namespace slp::init
{
    using geom::Polytope;
    using geom::Vec3;

    // One corridor overlap: the intersection polytope plus its enumerated
    // extreme points. vertices[0] anchors the barycentric map.
    struct Overlap
    {
        Polytope polytope;
        std::vector<Vec3> vertices;

        int dof() const { return static_cast<int>(vertices.size()) - 1; }
    };

    struct OverlapChain
    {
        std::vector<Overlap> cells;
    };

    // Enumerates the intersection's vertices and validates that they span a
    // full-dimensional region. Throws DegenerateOverlap when the intersection
    // is empty, lower-dimensional, or has fewer than 4 affinely independent
    // vertices.
    Overlap make_overlap(const Polytope &intersection);

    // Chain of pairwise intersections of consecutive corridor polytopes:
    // cells[i] = corridor[i] ∩ corridor[i+1].
    OverlapChain build_overlap_chain(const std::vector<Polytope> &corridor);

    struct InitParams
    {
        double l0 = 1.0;               // cable length
        double eps = 1e-4;             // path-length smoothing (m^2)
        double corridor_weight = 1e3;  // scale of the quadrotor containment penalty
        double phi_delta = 1e-2;       // cubic hinge scale: phi(s) = s^3/(3 delta)
        double margin_weight = 0.1;    // weight on the midpoint separation margin
        double softmin_mu = 64.0;      // softmin sharpness (1/m)
        LbfgsParams solver;
    };

    struct InitResult
    {
        std::vector<Vec3> waypoints;            // payload waypoints, one per overlap
        std::vector<Vec3> directions;           // unit cable directions, z > 0
        std::vector<Eigen::VectorXd> xi;        // raw barycentric parameters
        std::vector<Eigen::Vector2d> u;         // raw hemisphere parameters
        double cost{0.0};
    };

    // Smooth surjection of an unconstrained vector onto the overlap:
    // x = v_0 + 4 Vhat [xi]^2 / (xi^T xi + 1)^2, a convex combination of the
    // vertices for every real xi. xi must have overlap.dof() entries.
    Vec3 polytope_map(const Eigen::VectorXd &xi, const Overlap &overlap);

    // Pullback of a cost gradient at the mapped point to the parameter space.
    Eigen::VectorXd polytope_pullback(const Eigen::VectorXd &xi, const Overlap &overlap,
                                      const Vec3 &grad_point);

    // Upper-hemisphere parameterization n = (u, v, 1) / sqrt(1 + u^2 + v^2)
    // and its inverse u = (n_x, n_y) / n_z; sphere_inverse throws UsageError
    // off the open upper hemisphere.
    Vec3 sphere_map(const Eigen::Vector2d &u);
    Eigen::Vector2d sphere_inverse(const Vec3 &n);

    // Pullback of a cost gradient on the unit direction to the (u, v) plane.
    Eigen::Vector2d sphere_pullback(const Eigen::Vector2d &u, const Vec3 &grad_dir);

    // Objective and gradients at one parameter assignment. Returns
    //   J = sum_i sqrt(‖x_L^{i+1} − x_L^i‖^2 + eps)                (short path)
    //     + w_c sum_i sum_m phi(margin_m(x_Q^i))                   (containment)
    //     − kappa sum_i softmin_m(depth_m(x_mid^i))                (separation)
    // with x_Q = x_L + l0 n and x_mid = x_L + (l0/2) n; halfspace margins are
    // normalized to meters. Gradient buffers may be null to skip them.
    double init_cost_grad(const std::vector<Eigen::VectorXd> &xi,
                          const std::vector<Eigen::Vector2d> &u,
                          const OverlapChain &chain, const Vec3 &start, const Vec3 &goal,
                          const InitParams &params,
                          std::vector<Eigen::VectorXd> *grad_xi,
                          std::vector<Eigen::Vector2d> *grad_u);

    // Quasi-Newton minimization of the objective over all parameters. Starts
    // from a deterministic interior point of each overlap with near-vertical
    // cables (the exact anchor-vertex/vertical start is a stationary point of
    // both parameterizations, so it is offset slightly).
    InitResult initialize_waypoints(const OverlapChain &chain, const Vec3 &start,
                                    const Vec3 &goal, const InitParams &params);

} // namespace slp::init

#endif
