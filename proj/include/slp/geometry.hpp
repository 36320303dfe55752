#ifndef SLP_GEOMETRY_HPP
#define SLP_GEOMETRY_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "slp/error.hpp"

namespace slp::geom
{
    using Vec3 = Eigen::Vector3d;
    using Mat3 = Eigen::Matrix3d;

    // Feasible side is {x : a·x ≤ b}; a need not be unit.
    struct HalfSpace
    {
        Vec3 a;
        double b;

        double violation(const Vec3 &x) const { return a.dot(x) - b; }
        // Signed distance outside the plane (positive ⇒ infeasible side).
        double margin(const Vec3 &x) const { return (a.dot(x) - b) / a.norm(); }
    };

    struct Polytope
    {
        std::vector<HalfSpace> hs;

        bool contains(const Vec3 &x, double tol) const
        {
            for (const auto &h : hs)
                if (h.violation(x) > tol * h.a.norm())
                    return false;
            return true;
        }

        void append(const Polytope &other)
        {
            hs.insert(hs.end(), other.hs.begin(), other.hs.end());
        }
    };

    // {C y + d : ‖y‖ ≤ 1} with C symmetric positive definite.
    struct Ellipsoid
    {
        Mat3 C{Mat3::Identity()};
        Vec3 d{Vec3::Zero()};

        double volume() const;
        Mat3 inverse_shape() const;
        bool contains(const Vec3 &x, double tol) const;
    };

    struct InteriorPoint
    {
        Vec3 x;
        double radius; // Chebyshev radius (normalized margins)
    };

    Polytope axis_box(const Vec3 &lo, const Vec3 &hi);

    // Largest-inscribed-sphere center; nullopt when the interior is empty.
    std::optional<InteriorPoint> find_interior_point(const Polytope &P);

    // Maximum-volume inscribed ellipsoid via log-det barrier Newton iteration.
    // Post: a·d + ‖Ca‖ ≤ b + 1e-8 for every halfspace; volume within 1e-6
    // relative of optimal. nullopt ⇒ empty interior.
    std::optional<Ellipsoid> mvie(const Polytope &P);
    Ellipsoid mvie_or_throw(const Polytope &P); // throws InfeasiblePolytope

    Vec3 nearest_point_on_segment(const Vec3 &a, const Vec3 &b, const Vec3 &q);
    // verts of size 2 (segment) or 3 (triangle); collinear triangles fall back
    // to best-edge handling.
    Vec3 nearest_point_on_simplex(const std::vector<Vec3> &verts, const Vec3 &q);

    // All extreme points of a bounded H-polytope (plane-triple enumeration,
    // deduplicated). Test-grade and small-polytope use.
    std::vector<Vec3> enumerate_vertices(const Polytope &P, double dedup_tol = 1e-9);

    // Exact volume via face-pyramid decomposition of the enumerated hull.
    double hull_volume(const Polytope &P);

    struct McVolume
    {
        double volume;
        double rel_std_error;
    };

    // Monte-Carlo volume inside the given box (or a box derived from the
    // enumerated vertices). Throws Unbounded when no box can be derived.
    McVolume polytope_volume(const Polytope &P, int samples, uint64_t seed,
                             const Eigen::AlignedBox3d &bbox);
    McVolume polytope_volume(const Polytope &P, int samples, uint64_t seed);

} // namespace slp::geom

#endif
