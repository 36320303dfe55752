#include "slp/inflate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slp::sfc
{
    ConvexSeed ConvexSeed::from_vertices(std::vector<Vec3> verts)
    {
        std::vector<Vec3> uniq;
        for (const auto &v : verts)
        {
            bool dup = false;
            for (const auto &u : uniq)
                if ((u - v).norm() <= 1e-9)
                {
                    dup = true;
                    break;
                }
            if (!dup)
                uniq.push_back(v);
        }
        ConvexSeed s;
        s.vertices = std::move(uniq);
        const size_t n = s.vertices.size();
        if (n == 1)
            s.kind = SeedKind::Point;
        else if (n == 2)
            s.kind = SeedKind::Line;
        else if (n == 3)
        {
            const Vec3 ab = s.vertices[1] - s.vertices[0];
            const Vec3 ac = s.vertices[2] - s.vertices[0];
            s.kind = ab.cross(ac).norm() <= 1e-9 ? SeedKind::Line : SeedKind::Triangle;
        }
        else if (n == 4)
        {
            const Vec3 ab = s.vertices[1] - s.vertices[0];
            const Vec3 ac = s.vertices[2] - s.vertices[0];
            const Vec3 ad = s.vertices[3] - s.vertices[0];
            const Vec3 n_plane = ab.cross(ac);
            if (n_plane.norm() <= 1e-9)
                s.kind = SeedKind::Line;
            else if (std::fabs(n_plane.normalized().dot(ad)) <= 1e-6)
                s.kind = SeedKind::Quadrilateral;
            else
                s.kind = SeedKind::Tetrahedron;
        }
        else
            s.kind = SeedKind::Hull;
        return s;
    }

    Vec3 ConvexSeed::centroid() const
    {
        Vec3 c = Vec3::Zero();
        for (const auto &v : vertices)
            c += v;
        return c / static_cast<double>(vertices.size());
    }

    std::pair<Vec3, double> nearest_seed_vertex(const ConvexSeed &seed,
                                                const VertexRadiusMap &radii,
                                                const Vec3 &o)
    {
        size_t best = 0;
        double best_d2 = (seed.vertices[0] - o).squaredNorm();
        for (size_t i = 1; i < seed.vertices.size(); ++i)
        {
            const double d2 = (seed.vertices[i] - o).squaredNorm();
            if (d2 < best_d2)
            {
                best = i;
                best_d2 = d2;
            }
        }
        return {seed.vertices[best], radii.radius[best]};
    }

    Vec3 hull_nearest_point(const ConvexSeed &seed, const Vec3 &o)
    {
        const auto &v = seed.vertices;
        const size_t n = v.size();
        if (n == 1)
            return v[0];
        if (n == 2)
            return geom::nearest_point_on_segment(v[0], v[1], o);
        Vec3 best = v[0];
        double best_d2 = (v[0] - o).squaredNorm();
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j)
                for (size_t k = j + 1; k < n; ++k)
                {
                    const Vec3 p = geom::nearest_point_on_simplex({v[i], v[j], v[k]}, o);
                    const double d2 = (p - o).squaredNorm();
                    if (d2 < best_d2)
                    {
                        best = p;
                        best_d2 = d2;
                    }
                }
        return best;
    }

    EllipsoidFrame EllipsoidFrame::from(const Ellipsoid &E)
    {
        EllipsoidFrame f;
        f.Cinv = E.inverse_shape();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(f.Cinv);
        f.V = es.eigenvectors();
        f.nu = es.eigenvalues();
        f.d = E.d;
        return f;
    }

    std::optional<HalfSpace> try_separating_plane(const EllipsoidFrame &E,
                                                  const Vec3 &o, double r)
    {
        const Vec3 ot = E.Cinv * (o - E.d); // E maps to the unit ball at 0
        Vec3 q;
        if (r <= 0.0)
        {
            q = ot;
        }
        else
        {
            // Closest point of {ot + rC⁻¹ s : ‖s‖ ≤ 1} to the origin:
            // secular equation on the Lagrange multiplier.
            const Vec3 mu = r * E.nu; // eigenvalues of M = rC⁻¹
            const Vec3 z = E.V.transpose() * ot;
            auto snorm2 = [&](double lam) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k)
                {
                    const double sk = mu(k) * z(k) / (mu(k) * mu(k) + lam);
                    acc += sk * sk;
                }
                return acc;
            };
            if (snorm2(0.0) <= 1.0)
                return std::nullopt; // ellipsoid center inside the sphere
            double lo = 0.0, hi = (mu.cwiseProduct(z)).norm();
            for (int it = 0; it < 200 && snorm2(hi) > 1.0; ++it)
                hi *= 2.0;
            for (int it = 0; it < 120; ++it)
            {
                const double mid = 0.5 * (lo + hi);
                (snorm2(mid) > 1.0 ? lo : hi) = mid;
            }
            const double lam = 0.5 * (lo + hi);
            Vec3 s;
            for (int k = 0; k < 3; ++k)
                s(k) = -mu(k) * z(k) / (mu(k) * mu(k) + lam);
            q = ot + r * (E.Cinv * (E.V * s));
        }
        const double qn2 = q.squaredNorm();
        if (qn2 <= 1.0 + 1e-12)
            return std::nullopt;
        // Supporting plane of the transformed obstacle at its closest point
        // to the origin keeps the unit ball (all of E) feasible.
        HalfSpace h;
        h.a = E.Cinv * q;
        h.b = qn2 + h.a.dot(E.d);
        return h;
    }

    HalfSpace separating_plane(const Ellipsoid &E, const Vec3 &o, double r)
    {
        const auto h = try_separating_plane(EllipsoidFrame::from(E), o, r);
        if (!h)
            throw Error(ErrorCode::SeedSphereOverlap,
                        "separating_plane: obstacle sphere intersects the ellipsoid");
        return *h;
    }

    namespace
    {
        bool seed_feasible(const ConvexSeed &seed, const HalfSpace &h, double tol)
        {
            const double na = h.a.norm();
            for (const auto &v : seed.vertices)
                if (h.violation(v) > tol * na)
                    return false;
            return true;
        }

        std::optional<HalfSpace> correction_from_point(const Vec3 &p_star, const Vec3 &o,
                                                       double r)
        {
            const Vec3 n_f = p_star - o;
            const double dist = n_f.norm();
            if (dist <= r + 1e-9 || dist <= 1e-9)
                return std::nullopt;
            const Vec3 n = n_f / dist;
            return HalfSpace{-n, -(n.dot(o) + r)};
        }
    } // namespace

    HalfSpace containment_correction(const ConvexSeed &seed, const Vec3 &o, double r)
    {
        // Three nearest vertices first (printed construction), exact hull
        // nearest point as the guaranteed fallback.
        const auto &v = seed.vertices;
        std::vector<size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](size_t i, size_t j) {
            return (v[i] - o).squaredNorm() < (v[j] - o).squaredNorm();
        });
        std::vector<Vec3> near;
        for (size_t i = 0; i < std::min<size_t>(3, idx.size()); ++i)
            near.push_back(v[idx[i]]);
        const Vec3 p_heuristic = geom::nearest_point_on_simplex(near, o);

        if (auto h = correction_from_point(p_heuristic, o, r))
            if (seed_feasible(seed, *h, 1e-9))
                return *h;

        const Vec3 p_exact = hull_nearest_point(seed, o);
        if (auto h = correction_from_point(p_exact, o, r))
            if (seed_feasible(seed, *h, 1e-9))
                return *h;
        throw Error(ErrorCode::SeedObstacleConflict,
                    "containment_correction: obstacle within radius of the seed hull");
    }

    Polytope inflate_region(const ObstacleCloud &O, const ConvexSeed &seed,
                            const VertexRadiusMap &radii, const Polytope &bounds,
                            const InflateParams &params)
    {
        if (radii.radius.size() != seed.vertices.size())
            throw Error(ErrorCode::SeedObstacleConflict,
                        "inflate_region: radius map does not match seed vertices");

        const size_t n_all = O.points.size();
        std::vector<Vec3> pts;
        std::vector<double> pr;
        pts.reserve(n_all);
        pr.reserve(n_all);
        for (size_t j = 0; j < n_all; ++j)
        {
            const auto [vtx, r] = nearest_seed_vertex(seed, radii, O.points[j]);
            if ((vtx - O.points[j]).norm() <= r)
                throw Error(ErrorCode::SeedObstacleConflict,
                            "inflate_region: obstacle within radius of a seed vertex");
            // Points the bounds polytope already excludes by ≥ r never
            // constrain P ⊆ bounds; drop them up-front.
            double bounds_margin = -std::numeric_limits<double>::infinity();
            for (const auto &h : bounds.hs)
                bounds_margin = std::max(bounds_margin, h.margin(O.points[j]));
            if (bounds_margin >= r)
                continue;
            pts.push_back(O.points[j]);
            pr.push_back(r);
        }

        Ellipsoid E;
        E.d = seed.centroid();
        double vol_last = E.volume();
        Polytope P = bounds;

        std::vector<size_t> order(pts.size());
        std::vector<double> key(pts.size());

        for (int iter = 0; iter < params.max_iterations; ++iter)
        {
            P = bounds;
            const auto frame = EllipsoidFrame::from(E);
            for (size_t j = 0; j < pts.size(); ++j)
                key[j] = frame.ellipsoid_distance(pts[j]);
            std::iota(order.begin(), order.end(), size_t{0});
            std::sort(order.begin(), order.end(),
                      [&](size_t a, size_t b) { return key[a] < key[b]; });

            for (size_t j : order)
            {
                const Vec3 &o = pts[j];
                const double r = pr[j];
                bool excluded = false;
                for (const auto &h : P.hs)
                    if (h.margin(o) >= r)
                    {
                        excluded = true;
                        break;
                    }
                if (excluded)
                    continue;

                auto plane = try_separating_plane(frame, o, r);
                if (!plane || !seed_feasible(seed, *plane, 1e-9))
                    plane = containment_correction(seed, o, r);
                P.hs.push_back(*plane);
            }

            auto E_new = geom::mvie(P);
            if (!E_new)
                throw Error(ErrorCode::MvieFailure,
                            "inflate_region: inscribed ellipsoid vanished");
            const double vol = E_new->volume();
            E = *E_new;
            if (vol < (1.0 + params.rho_conv) * vol_last)
                break;
            vol_last = vol;
        }
        return P;
    }

} // namespace slp::sfc
