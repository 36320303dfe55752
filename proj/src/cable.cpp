#include "slp/cable.hpp"

#include <cassert>
#include <limits>

#include "slp/lbfgs.hpp"

namespace slp::cable
{
    namespace
    {
        // Catenary parameter of the symmetric sag whose arc length equals the
        // cable length: bisection on the map a -> 2a sinh(m/(2a)), which
        // decreases from +inf to m as a grows.
        double symmetric_sag_parameter(double m, double l0)
        {
            auto arc = [&](double a) { return 2.0 * a * std::sinh(m / (2.0 * a)); };
            double hi = std::max(m, 1.0);
            for (int it = 0; it < 200 && arc(hi) > l0; ++it)
                hi *= 2.0;
            double lo = 0.5 * hi;
            for (int it = 0; it < 200 && arc(lo) < l0; ++it)
                lo *= 0.5;
            for (int it = 0; it < 200; ++it)
            {
                const double mid = 0.5 * (lo + hi);
                (arc(mid) > l0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }

        // Inner problem: weighted squared residuals forcing the curve through
        // the load and matching the cable length, for a fixed rotation.
        struct InnerSetup
        {
            double m_a;  // rotated load abscissa
            double z_a;  // rotated load ordinate
            double l0;
            double w_p;
            double w_l;
        };

        double inner_cost(const InnerSetup &s, const Eigen::VectorXd &v, Eigen::VectorXd &g)
        {
            const double a = a_from_virtual(v[0]);
            const double c = c_from_virtual(v[1], s.m_a);
            assert(a > 0.0 && c >= 0.0 && c <= s.m_a);
            const double u = (s.m_a - c) / a;
            const double w = c / a;
            const double chu = std::cosh(u), shu = std::sinh(u);
            const double chw = std::cosh(w), shw = std::sinh(w);
            const double ep = a * (chu - chw) - s.z_a;
            const double el = a * shu + a * shw - s.l0;
            const double dep_da = (chu - u * shu) - (chw - w * shw);
            const double dep_dc = -(shu + shw);
            const double del_da = (shu - u * chu) + (shw - w * chw);
            const double del_dc = chw - chu;
            const double dj_da = 2.0 * s.w_p * ep * dep_da + 2.0 * s.w_l * el * del_da;
            const double dj_dc = 2.0 * s.w_p * ep * dep_dc + 2.0 * s.w_l * el * del_dc;
            g[0] = dj_da * a_derivative(v[0]);
            g[1] = dj_dc * c_derivative(v[1], s.m_a);
            return s.w_p * ep * ep + s.w_l * el * el;
        }

        // Solves the inner problem from (va, vc), leaving the optimum there.
        // A warm start carried over from a different rotation can overflow the
        // hyperbolic terms; fall back to the symmetric-sag initial guess then.
        void solve_inner(const InnerSetup &s, double &va, double &vc)
        {
            Eigen::VectorXd x(2), g(2);
            x << va, vc;
            if (!std::isfinite(inner_cost(s, x, g)))
                x << virtual_from_a(symmetric_sag_parameter(s.m_a, s.l0)), 0.0;
            LbfgsParams prm;
            prm.memory = 8;
            prm.grad_eps = 1e-8;
            prm.max_iterations = 100;
            lbfgs_minimize(x, [&](const Eigen::VectorXd &v, Eigen::VectorXd &g)
                           { return inner_cost(s, v, g); }, prm);
            va = x[0];
            vc = x[1];
        }

        struct InnerResiduals
        {
            double ep;
            double el;
        };

        InnerResiduals residuals_at(const InnerSetup &s, double va, double vc)
        {
            const double a = a_from_virtual(va);
            const double c = c_from_virtual(vc, s.m_a);
            const double u = (s.m_a - c) / a;
            const double w = c / a;
            return {a * (std::cosh(u) - std::cosh(w)) - s.z_a,
                    a * std::sinh(u) + a * std::sinh(w) - s.l0};
        }
    } // namespace

    PlaneReduction reduce_to_plane(const Vec3 &p_u, const Vec3 &p_l, const Vec3 &d_l)
    {
        const Vec3 chord = p_l - p_u;
        const Vec3 cross = chord.cross(d_l);
        const double scale = chord.norm() * d_l.norm();
        if (scale <= 0.0 || cross.norm() <= 1e-10 * scale)
            throw Error(ErrorCode::CollinearTangent,
                        "load tangent is parallel to the attachment chord");
        PlaneReduction red;
        red.x_hat = chord.normalized();
        red.z_hat = cross.normalized();
        red.y_hat = red.z_hat.cross(red.x_hat);
        red.m_l = chord.norm();
        red.z_l = 0.0;
        const Vec3 d_proj = d_l - red.z_hat * red.z_hat.dot(d_l);
        red.phi_des = std::atan2(d_proj.dot(red.y_hat), d_proj.dot(red.x_hat));
        return red;
    }

    CatenaryFit fit_catenary(const Vec3 &p_u, const Vec3 &p_l, const Vec3 &d_l,
                             double l_0, const FitWeights &weights, const FitNotch &notch)
    {
        if (l_0 <= 0.0)
            throw Error(ErrorCode::UsageError, "cable length must be positive");
        const double chord = (p_l - p_u).norm();
        if (chord >= l_0)
            throw Error(ErrorCode::NoSlack, "chord is at least the cable length");
        const PlaneReduction red = reduce_to_plane(p_u, p_l, d_l);

        // Rotated load coordinates for a candidate in-plane rotation.
        auto rotated = [&](double alpha, double &m_a, double &z_a) {
            m_a = std::cos(alpha) * red.m_l + std::sin(alpha) * red.z_l;
            z_a = -std::sin(alpha) * red.m_l + std::cos(alpha) * red.z_l;
        };

        // Warm-started inner state, shared across outer evaluations.
        double va = virtual_from_a(symmetric_sag_parameter(red.m_l, l_0));
        double vc = 0.0;  // c = m/2

        const double two_sigma2 = 2.0 * notch.sigma * notch.sigma;
        constexpr double residual_tol = 1e-4;     // boundary-condition guarantee
        constexpr double residual_margin = 5e-5;  // headroom used while searching

        struct OuterEval
        {
            double j_theta;
            double ep;
            double el;
        };
        // Tangent-matching objective of the inner optimum at this rotation,
        // along with the boundary residuals that optimum leaves behind.
        auto evaluate = [&](double alpha) -> OuterEval {
            double m_a, z_a;
            rotated(alpha, m_a, z_a);
            if (m_a < 1e-8)  // load behind the attachment: reject this rotation
                return {1e9 * (1.0 + (1e-8 - m_a)), 1.0, 1.0};
            InnerSetup s{m_a, z_a, l_0, weights.position, weights.length};
            solve_inner(s, va, vc);
            const double a = a_from_virtual(va);
            const double c = c_from_virtual(vc, m_a);
            const double theta = alpha + std::atan(std::sinh((m_a - c) / a));
            const double dth = std::remainder(theta - red.phi_des, 2.0 * M_PI);
            const double dal = std::remainder(alpha - red.phi_des, 2.0 * M_PI);
            const InnerResiduals r = residuals_at(s, va, vc);
            return {dth * dth + notch.beta * std::exp(-dal * dal / two_sigma2),
                    r.ep, r.el};
        };
        // The returned fit must meet the boundary conditions, so rotations
        // whose best curve misses them are walled off during the search.
        auto outer_cost = [&](double alpha) -> double {
            const OuterEval e = evaluate(alpha);
            const double viol =
                std::max(std::fabs(e.ep), std::fabs(e.el)) / residual_margin;
            const double wall = viol > 1.0 ? (viol - 1.0) * (viol - 1.0) : 0.0;
            return e.j_theta + wall;
        };

        Eigen::VectorXd alpha_v(1);
        alpha_v << 0.0;
        LbfgsParams oprm;
        oprm.memory = 8;
        oprm.grad_eps = 1e-8;
        oprm.max_iterations = 50;
        lbfgs_minimize(alpha_v,
                       [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
                           const double h = 1e-5;
                           const double jp = outer_cost(x[0] + h);
                           const double jm = outer_cost(x[0] - h);
                           g[0] = (jp - jm) / (2.0 * h);
                           return outer_cost(x[0]);
                       },
                       oprm);

        double alpha = alpha_v[0];
        // Re-solves the inner problem at alpha_c from the current (va, vc) and
        // reports whether the boundary conditions are met to tolerance.
        auto feasible_at = [&](double alpha_c) -> bool {
            double m_c, z_c;
            rotated(alpha_c, m_c, z_c);
            if (m_c < 1e-8)
                return false;
            InnerSetup s{m_c, z_c, l_0, weights.position, weights.length};
            solve_inner(s, va, vc);
            const InnerResiduals r = residuals_at(s, va, vc);
            return std::fabs(r.ep) <= residual_tol && std::fabs(r.el) <= residual_tol;
        };
        bool ok = feasible_at(alpha);
        if (!ok)
        {
            // One cold restart from the symmetric initial guess.
            double m_a, z_a;
            rotated(alpha, m_a, z_a);
            if (m_a >= 1e-8)
            {
                va = virtual_from_a(symmetric_sag_parameter(m_a, l_0));
                vc = 0.0;
                ok = feasible_at(alpha);
            }
        }
        if (!ok)
        {
            // Nearly taut cables: the tangent notch can push the rotation into
            // a regime where no curve of this family meets the boundary
            // conditions. Recover with a bracketed scan for the best objective
            // that stays feasible; a feasible band always exists around zero
            // rotation, where the chord is level and the apex sits inside it.
            double lo = -1.55, hi = 1.55;
            double best_j = std::numeric_limits<double>::infinity();
            double best_alpha = 0.0;
            bool found = false;
            for (int pass = 0; pass < 3; ++pass)
            {
                const double step = (hi - lo) / 100.0;
                for (int i = 0; i <= 100; ++i)
                {
                    const double cand = lo + step * i;
                    double m_c, z_c;
                    rotated(cand, m_c, z_c);
                    if (m_c < 1e-8)
                        continue;
                    va = virtual_from_a(symmetric_sag_parameter(m_c, l_0));
                    vc = 0.0;
                    const OuterEval e = evaluate(cand);
                    if (std::fabs(e.ep) <= residual_margin &&
                        std::fabs(e.el) <= residual_margin && e.j_theta < best_j)
                    {
                        best_j = e.j_theta;
                        best_alpha = cand;
                        found = true;
                    }
                }
                if (!found)
                    break;
                lo = best_alpha - step;
                hi = best_alpha + step;
            }
            if (!found)
                throw Error(ErrorCode::OptimizerStall,
                            "no rotation meets the boundary tolerances");
            alpha = best_alpha;
            double m_c, z_c;
            rotated(alpha, m_c, z_c);
            va = virtual_from_a(symmetric_sag_parameter(m_c, l_0));
            vc = 0.0;
            if (!feasible_at(alpha))
                throw Error(ErrorCode::OptimizerStall,
                            "catenary residuals did not reach tolerance");
        }

        double m_a, z_a;
        rotated(alpha, m_a, z_a);
        CatenaryFit fit;
        fit.a = a_from_virtual(va);
        fit.c = c_from_virtual(vc, m_a);
        fit.alpha = alpha;
        fit.x_hat = std::cos(alpha) * red.x_hat + std::sin(alpha) * red.y_hat;
        fit.y_hat = -std::sin(alpha) * red.x_hat + std::cos(alpha) * red.y_hat;
        fit.z_hat = red.z_hat;
        fit.p_u = p_u;
        fit.m_l = m_a;
        return fit;
    }

    std::vector<Vec3> sample_curve(const CatenaryFit &fit, int n)
    {
        if (n < 2)
            throw Error(ErrorCode::UsageError, "need at least two curve samples");
        std::vector<Vec3> out;
        out.reserve(n);
        out.push_back(fit.p_u);  // exact, by contract
        for (int i = 1; i < n; ++i)
            out.push_back(fit.point(fit.m_l * i / (n - 1)));
        return out;
    }

    std::array<Vec3, 4> trapezoid_envelope(const CatenaryFit &fit, double min_thickness)
    {
        // Work in the in-plane coordinates (x, z) of the rotated frame.
        const double m = fit.m_l;
        const double z_m = fit.height(m);
        const Eigen::Vector2d p0(0.0, 0.0), p1(m, z_m);
        Eigen::Vector2d u = (p1 - p0).normalized();
        Eigen::Vector2d n_sag(-u.y(), u.x());
        // The curve dips below the chord; orient the normal toward the dip.
        const double mid_gap = fit.height(0.5 * m) - 0.5 * z_m;
        if (n_sag.y() * mid_gap < 0.0)
            n_sag = -n_sag;

        // Deepest point below the chord: where the slope matches the chord's.
        const double x_t = fit.c + fit.a * std::asinh(z_m / m);
        const Eigen::Vector2d pt(x_t, fit.height(x_t));
        const double depth = (pt - p0).dot(n_sag);

        auto lift = [&](const Eigen::Vector2d &q) {
            return Vec3(fit.p_u + fit.x_hat * q.x() + fit.y_hat * q.y());
        };

        if (!(depth >= min_thickness))
        {
            // Near-taut: the construction is thinner than the floor, so return
            // a chord-aligned rectangle of exactly min_thickness on the sag side.
            return {lift(p0), lift(p1), lift(p1 + min_thickness * n_sag),
                    lift(p0 + min_thickness * n_sag)};
        }

        const double s0 = fit.slope(0.0);     // < 0 for c in (0, m)
        const double s1 = fit.slope(m);       // > 0 for c in (0, m)
        const double z_min = fit.height(fit.c);
        // Endpoint tangents meet the lowest-point tangent line z = z_min.
        const Eigen::Vector2d v2(z_min / s0, z_min);
        const Eigen::Vector2d v3(m + (z_min - z_m) / s1, z_min);
        return {lift(p0), lift(v2), lift(v3), lift(p1)};
    }

    FilterMask build_filter_mask(const std::vector<Vec3> &centerline, double ds,
                                 double r_c, double r_l)
    {
        if (centerline.size() < 2 || ds <= 0.0)
            throw Error(ErrorCode::UsageError, "centerline needs two points and ds > 0");
        if (r_c < 0.5 * ds || r_l < 0.5 * ds)
            throw Error(ErrorCode::GapRisk,
                        "exclusion radii below half the sample spacing leave gaps");

        std::vector<double> s(centerline.size(), 0.0);
        for (size_t i = 1; i < centerline.size(); ++i)
            s[i] = s[i - 1] + (centerline[i] - centerline[i - 1]).norm();
        const double total = s.back();
        auto at_arc = [&](double si) {
            size_t j = 0;
            while (j + 2 < centerline.size() && s[j + 1] < si)
                ++j;
            const double seg = s[j + 1] - s[j];
            const double t = seg > 0.0 ? (si - s[j]) / seg : 0.0;
            return Vec3(centerline[j] + t * (centerline[j + 1] - centerline[j]));
        };

        FilterMask mask;
        const int count = static_cast<int>(std::ceil(total / ds - 1e-9));
        for (int i = 0; i < count; ++i)
            mask.spheres.push_back({at_arc(i * ds), r_c});
        mask.spheres.push_back({centerline.back(), r_l});  // load sphere
        return mask;
    }

    std::vector<Vec3> filter_points(const std::vector<Vec3> &cloud, const FilterMask &mask)
    {
        std::vector<Vec3> keep;
        keep.reserve(cloud.size());
        for (const Vec3 &p : cloud)
        {
            bool inside = false;
            for (const FilterSphere &b : mask.spheres)
            {
                if ((p - b.center).norm() <= b.radius)
                {
                    inside = true;
                    break;
                }
            }
            if (!inside)
                keep.push_back(p);
        }
        return keep;
    }
} // namespace slp::cable
