#ifndef SLP_INFLATE_HPP
#define SLP_INFLATE_HPP

#include <optional>
#include <utility>
#include <vector>

#include "slp/geometry.hpp"

namespace slp::sfc
{
    using geom::Ellipsoid;
    using geom::HalfSpace;
    using geom::Polytope;
    using geom::Vec3;

    enum class SeedKind
    {
        Point,
        Line,
        Triangle,
        Quadrilateral,
        Tetrahedron,
        Hull
    };

    struct ConvexSeed
    {
        std::vector<Vec3> vertices;
        SeedKind kind{SeedKind::Point};

        // Classifies by count; 4 coplanar vertices (1e-6 m) → Quadrilateral,
        // else Tetrahedron. Duplicate vertices (1e-9 m) are collapsed first.
        static ConvexSeed from_vertices(std::vector<Vec3> verts);

        Vec3 centroid() const;
    };

    struct VertexRadiusMap
    {
        std::vector<double> radius; // parallel to seed.vertices
    };

    struct ObstacleCloud
    {
        std::vector<Vec3> points;
    };

    struct InflateParams
    {
        double rho_conv = 0.02;
        int max_iterations = 10;
    };

    // Seed vertex nearest to o and its mapped radius; ties break to the
    // lowest vertex index.
    std::pair<Vec3, double> nearest_seed_vertex(const ConvexSeed &seed,
                                                const VertexRadiusMap &radii,
                                                const Vec3 &o);

    // Exact nearest point of the seed's convex hull to o (all vertex triples).
    Vec3 hull_nearest_point(const ConvexSeed &seed, const Vec3 &o);

    // Eigendecomposed inverse shape of an ellipsoid, shared across many
    // separating-plane queries against the same E.
    struct EllipsoidFrame
    {
        Eigen::Matrix3d Cinv;
        Eigen::Matrix3d V;    // eigenvectors of Cinv
        Eigen::Vector3d nu;   // eigenvalues of Cinv
        Vec3 d;

        static EllipsoidFrame from(const Ellipsoid &E);
        double ellipsoid_distance(const Vec3 &o) const { return (Cinv * (o - d)).norm(); }
    };

    // Plane tangent to sphere (o, r) supporting it away from E. nullopt when
    // the sphere intersects E (no tangent plane can keep all of E feasible).
    std::optional<HalfSpace> try_separating_plane(const EllipsoidFrame &E,
                                                  const Vec3 &o, double r);

    // Throwing wrapper: SeedSphereOverlap when the sphere intersects E.
    HalfSpace separating_plane(const Ellipsoid &E, const Vec3 &o, double r);

    // Plane tangent to sphere (o, r) with normal from o toward the nearest
    // seed point, oriented so the whole seed is feasible. Uses the
    // three-nearest-vertices triangle first and falls back to the exact hull
    // nearest point if any seed vertex would be cut.
    // Throws SeedObstacleConflict when dist(o, hull) ≤ r or the normal degenerates.
    HalfSpace containment_correction(const ConvexSeed &seed, const Vec3 &o, double r);

    // Iterative regional inflation: grows a free polytope around the seed by
    // alternating per-obstacle separating planes (per-vertex radii) with MVIE
    // expansion, until the inscribed-ellipsoid volume growth falls below
    // rho_conv. Bounds halfspaces are re-added every iteration.
    Polytope inflate_region(const ObstacleCloud &O, const ConvexSeed &seed,
                            const VertexRadiusMap &radii, const Polytope &bounds,
                            const InflateParams &params = InflateParams());

} // namespace slp::sfc

#endif
