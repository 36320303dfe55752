#ifndef SLP_CABLE_HPP
#define SLP_CABLE_HPP

// Bent-cable shape estimation under a uniform resultant force field (gravity
// plus steady wind). A slack cable in such a field hangs as a planar catenary;
// this module fits that model to the attachment point, the load point, and the
// measured cable tangent at the load, then derives two consumers of the fit:
// a conservative quadrilateral envelope around the bent cable and a spherical
// exclusion mask for removing cable returns from range-sensor clouds.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "slp/error.hpp"
#include "slp/geometry.hpp"

namespace slp::cable
{
    using geom::Vec3;

    // Working frame of the cable plane plus the load's in-plane coordinates.
    // The plane is spanned by the chord direction and the measured tangent;
    // its normal is their cross product.
    struct PlaneReduction
    {
        Vec3 x_hat;      // along p_l - p_u
        Vec3 y_hat;      // z_hat x x_hat
        Vec3 z_hat;      // plane normal, along (p_l - p_u) x d_l
        double m_l;      // load abscissa = |p_l - p_u|
        double z_l;      // load ordinate, 0 by construction
        double phi_des;  // in-plane angle of the measured load tangent
    };

    // Builds the orthonormal cable-plane frame. d_l is the unit cable tangent
    // at the load, oriented away from the attachment point. Throws
    // CollinearTangent when d_l is parallel to the chord (taut cable; use the
    // straight-line model instead).
    PlaneReduction reduce_to_plane(const Vec3 &p_u, const Vec3 &p_l, const Vec3 &d_l);

    // Planar catenary in a rotated in-plane frame. The curve starts at p_u
    // exactly and reaches the load at abscissa m_l within fit tolerance:
    //   r(x) = p_u + x_hat * x + y_hat * height(x),  x in [0, m_l].
    struct CatenaryFit
    {
        double a{1.0};      // catenary parameter, > 0
        double c{0.5};      // apex abscissa, in (0, m_l)
        double alpha{0.0};  // in-plane rotation applied to the reduction frame
        Vec3 x_hat{Vec3::UnitX()};  // rotated abscissa direction
        Vec3 y_hat{Vec3::UnitY()};  // rotated ordinate direction (sag is negative)
        Vec3 z_hat{Vec3::UnitZ()};  // plane normal, unchanged by the rotation
        Vec3 p_u{Vec3::Zero()};     // attachment point, on the curve exactly
        double m_l{1.0};            // load abscissa in the rotated frame

        double height(double x) const
        {
            return a * (std::cosh((x - c) / a) - std::cosh(c / a));
        }
        double slope(double x) const
        {
            return std::sinh((x - c) / a);
        }
        // Arc length of the curve from 0 to x.
        double arc_length(double x) const
        {
            return a * std::sinh((x - c) / a) + a * std::sinh(c / a);
        }
        Vec3 point(double x) const
        {
            return p_u + x_hat * x + y_hat * height(x);
        }
    };

    struct FitWeights
    {
        double position = 1.0;  // weight on the pass-through-the-load residual
        double length = 1.0;    // weight on the arc-length residual
    };

    // Anti-degeneracy notch: a Gaussian cost bump at alpha = phi_des keeps the
    // rotation from collapsing onto the measured tangent direction.
    struct FitNotch
    {
        double beta = 1.0;    // bump height
        double sigma = 0.1;   // bump width, rad
    };

    // Fits (a, c, alpha) by nested minimization: the outer loop shapes the
    // in-plane rotation so the model tangent at the load matches phi_des; the
    // inner loop solves the pass-through and arc-length residuals for (a, c)
    // at each candidate rotation. Inner variables run through diffeomorphic
    // reparameterizations (below) so a > 0 and c in (0, m_l) hold by
    // construction. Throws NoSlack when |p_l - p_u| >= l_0 and propagates
    // CollinearTangent from the plane reduction.
    CatenaryFit fit_catenary(const Vec3 &p_u, const Vec3 &p_l, const Vec3 &d_l,
                             double l_0, const FitWeights &weights = {},
                             const FitNotch &notch = {});

    // n >= 2 points at uniform in-plane abscissa over [0, m_l]; the first
    // point is p_u exactly and the polyline arc length approaches the cable
    // length from below as n grows.
    std::vector<Vec3> sample_curve(const CatenaryFit &fit, int n);

    // Convex quadrilateral containing the whole curve, lifted to 3D and
    // returned in convex order. Bounded by the chord, the two endpoint
    // tangents, and the tangent at the lowest point (x = c). When the
    // construction is thinner than min_thickness (near-taut fit), returns a
    // chord-aligned rectangle of exactly that thickness on the sag side.
    std::array<Vec3, 4> trapezoid_envelope(const CatenaryFit &fit, double min_thickness);

    struct FilterSphere
    {
        Vec3 center;
        double radius;
    };

    // Union of spheres covering the cable: gap-free when every radius is at
    // least half the sample spacing.
    struct FilterMask
    {
        std::vector<FilterSphere> spheres;
    };

    // Spheres of radius r_c centered at arc-length samples of the centerline
    // polyline, spaced ds apart; the terminal (load) sphere gets radius r_l.
    // Throws GapRisk when r_c < ds/2 or r_l < ds/2.
    FilterMask build_filter_mask(const std::vector<Vec3> &centerline, double ds,
                                 double r_c, double r_l);

    // Removes exactly the points lying within any mask sphere.
    std::vector<Vec3> filter_points(const std::vector<Vec3> &cloud, const FilterMask &mask);

    // Diffeomorphism between the unconstrained inner variables and the
    // feasible catenary parameters: a > 0 for any real v_a, piecewise smooth
    // with a(0) = 1; c in (0, m_l) for any real v_c through a scaled arctan.
    inline double a_from_virtual(double v_a)
    {
        return v_a > 0.0 ? (0.5 * v_a + 1.0) * v_a + 1.0
                         : 1.0 / ((0.5 * v_a - 1.0) * v_a + 1.0);
    }
    inline double virtual_from_a(double a)
    {
        return a > 1.0 ? std::sqrt(2.0 * a - 1.0) - 1.0
                       : 1.0 - std::sqrt(2.0 / a - 1.0);
    }
    inline double a_derivative(double v_a)  // da / dv_a
    {
        if (v_a > 0.0)
            return v_a + 1.0;
        const double den = (0.5 * v_a - 1.0) * v_a + 1.0;
        return (1.0 - v_a) / (den * den);
    }
    inline double c_from_virtual(double v_c, double m_l)
    {
        return m_l * (std::atan(v_c) / M_PI + 0.5);
    }
    inline double virtual_from_c(double c, double m_l)
    {
        return std::tan(M_PI * (c / m_l - 0.5));
    }
    inline double c_derivative(double v_c, double m_l)  // dc / dv_c
    {
        return m_l / (M_PI * (1.0 + v_c * v_c));
    }
} // namespace slp::cable

#endif
