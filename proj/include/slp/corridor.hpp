#ifndef SLP_CORRIDOR_HPP
#define SLP_CORRIDOR_HPP

// Planner front end: kinodynamic lattice search over a voxel map for the
// coupled quadrotor/payload pair, seed extraction from the resulting dual
// path, and sequential safe-corridor generation with bridge polytopes that
// restore overlap between disjoint neighbors.

#include <Eigen/Dense>

#include <vector>

#include "slp/dynamics.hpp"
#include "slp/error.hpp"
#include "slp/geometry.hpp"
#include "slp/grid_map.hpp"
#include "slp/inflate.hpp"

namespace slp::plan
{
    using geom::Polytope;
    using geom::Vec3;
    using grid::GridMap;

    // Knobs of the lattice search. Payload states are expanded with
    // constant-acceleration primitives: the 26 lattice directions at half
    // and full nominal magnitude (accel_margin * a_max) plus coasting, each
    // applied for tau seconds. The quadrotor rides the taut-pendulum offset
    // x_q = x_l + l0 * u with u = (a + g e_z)/|a + g e_z| (no external
    // payload force), so every primitive sweeps both body spheres and the
    // cable between them. The heuristic is the Euclidean time lower bound
    // distance / v_max.
    struct SearchParams
    {
        dyn::SystemParams system{};
        Vec3 start_velocity{Vec3::Zero()};  // payload velocity at the root
        double tau{0.3};                    // primitive duration, s
        double accel_margin{0.8};           // nominal accel = margin * a_max
        double velocity_bin{0.4};           // closed-set velocity quantization, m/s
        double goal_tolerance{0.3};         // accept radius around the goal, m
        double goal_speed{1.5};             // max speed at acceptance, m/s
        double r_cable{0.05};               // cable clearance radius, m
        double w_effort{0.01};              // cost weight on |a|^2, s^3/m^2
        int max_expansions{400000};         // exhaustion budget before NoPath

        // Throws UsageError on nonpositive knobs, accel_margin outside
        // (0, 1], or a start velocity faster than v_max.
        void validate() const;
    };

    // Discrete dual path: payload nodes pi_l and quadrotor nodes pi_q on the
    // taut offset, |pi_q[i] - pi_l[i]| = l0 at every node. accel[i] is the
    // payload acceleration of the primitive arriving at node i (zero at the
    // root and at the appended goal node, which hover); dt[i] is the
    // duration of segment i -> i+1.
    struct DualPath
    {
        std::vector<Vec3> pi_q;
        std::vector<Vec3> pi_l;
        std::vector<Vec3> accel;
        std::vector<double> dt;

        std::size_t size() const { return pi_l.size(); }

        bool taut_consistent(double l0, double tol = 1e-6) const;
    };

    // A* over the acceleration lattice from a hovering pair at start to a
    // hovering pair at goal. Every returned node pair passes the sphere
    // checks for both bodies plus the sampled cable segment; payload nodes
    // stay inside the map lattice (outside the lattice is unknown, not
    // traversable). The final node is the exact goal, reached by a straight
    // collision-checked hover glide from the accepted lattice node.
    //
    // Throws StartInCollision / GoalInCollision when the hover geometry
    // x_q = x_l + l0 e_z intersects obstacles at the endpoints, NoPath when
    // the open set or the expansion budget is exhausted, and UsageError for
    // endpoints outside the map lattice.
    DualPath kinodynamic_search(const GridMap &map, const Vec3 &start, const Vec3 &goal,
                                const SearchParams &params);

    // Seed i spans path nodes i and i+1 with vertices in canonical order
    // {x_q^i, x_q^{i+1}, x_l^i, x_l^{i+1}}; classification (quadrilateral
    // when coplanar within 1e-6 m, else tetrahedron, with degenerate
    // duplicates collapsing to line/triangle) follows ConvexSeed. N+1 nodes
    // yield N seeds. Throws UsageError for paths shorter than two nodes or
    // with mismatched body sequences.
    std::vector<sfc::ConvexSeed> build_seed_sequence(const DualPath &path);

    // Vertex radii for the canonical seed layout: {r_q, r_q, r_l, r_l}.
    sfc::VertexRadiusMap body_radius_template(const dyn::SystemParams &system);

    // Ordered safe flight corridor: seed polytopes in path order with any
    // bridge polytopes inserted between disjoint neighbors.
    struct Corridor
    {
        std::vector<Polytope> polytopes;
        int seed_count{0};
        int bridge_count{0};

        // Checks the adjacency invariant: every consecutive pair intersects
        // with nonempty interior (the intersection admits an inscribed
        // ellipsoid of positive volume). Throws DegenerateOverlap on the
        // first failing pair and UsageError when the counts are
        // inconsistent or the corridor is empty.
        void validate() const;
    };

    // One polytope per seed, inflated inside a working cube of the given
    // half extent centered on the seed centroid (grown when a seed plus its
    // vertex radii outgrows the cube, so containment is never sacrificed).
    // The radius map applies verbatim when its length matches a seed's
    // vertex count; collapsed degenerate seeds conservatively take the
    // largest template radius on every vertex. Wherever adjacent polytopes
    // have no interior overlap, a bridge polytope seeded on the segment
    // between the two seed centroids is inserted.
    //
    // Propagates inflation errors for seed polytopes; bridge construction
    // failures (including a blocked bridge segment) surface as
    // BridgeFailure. Throws UsageError for empty input, nonpositive radii,
    // or a nonpositive half extent.
    Corridor generate_corridor(const GridMap &map, const std::vector<sfc::ConvexSeed> &seeds,
                               const sfc::VertexRadiusMap &radii, double box_half_extent = 1.0);

} // namespace slp::plan

#endif
