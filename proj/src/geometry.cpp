#include "slp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slp/rng.hpp"

namespace slp::geom
{
    namespace
    {
        struct NormalRows
        {
            Eigen::Matrix<double, Eigen::Dynamic, 3> A;
            Eigen::VectorXd b;
        };

        NormalRows normalized_rows(const Polytope &P)
        {
            NormalRows nr;
            const int m = static_cast<int>(P.hs.size());
            nr.A.resize(m, 3);
            nr.b.resize(m);
            for (int i = 0; i < m; ++i)
            {
                const double na = P.hs[i].a.norm();
                nr.A.row(i) = (P.hs[i].a / na).transpose();
                nr.b(i) = P.hs[i].b / na;
            }
            return nr;
        }

        // Damped Newton on a strictly feasible self-concordant objective.
        // feasible(x) must be exact; fg fills gradient/Hessian at x.
        template <int N>
        bool newton_descend(Eigen::Matrix<double, N, 1> &x,
                            const std::function<double(const Eigen::Matrix<double, N, 1> &,
                                                       Eigen::Matrix<double, N, 1> *,
                                                       Eigen::Matrix<double, N, N> *)> &fg,
                            const std::function<bool(const Eigen::Matrix<double, N, 1> &)> &feasible,
                            int max_iters)
        {
            using VecN = Eigen::Matrix<double, N, 1>;
            using MatN = Eigen::Matrix<double, N, N>;
            VecN g;
            MatN H;
            double f = fg(x, &g, &H);
            for (int it = 0; it < max_iters; ++it)
            {
                MatN Hr = H;
                Eigen::LDLT<MatN> ldlt(Hr);
                VecN step = -ldlt.solve(g);
                if (!step.allFinite() || ldlt.info() != Eigen::Success)
                {
                    Hr += MatN::Identity() * (1e-10 * H.trace() / N + 1e-300);
                    step = -Hr.ldlt().solve(g);
                    if (!step.allFinite())
                        return false;
                }
                const double decrement = -0.5 * g.dot(step);
                if (decrement < 1e-12)
                    return true;
                double alpha = 1.0;
                bool moved = false;
                for (int ls = 0; ls < 60; ++ls)
                {
                    VecN xn = x + alpha * step;
                    if (feasible(xn))
                    {
                        VecN gn;
                        MatN Hn;
                        const double fn = fg(xn, &gn, &Hn);
                        if (std::isfinite(fn) && fn <= f - 1e-4 * alpha * 2.0 * decrement + 1e-14 * std::fabs(f))
                        {
                            x = xn;
                            f = fn;
                            g = gn;
                            H = Hn;
                            moved = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if (!moved)
                    return true; // stalled at numerical floor
            }
            return true;
        }
    } // namespace

    double Ellipsoid::volume() const
    {
        return 4.0 / 3.0 * std::numbers::pi * C.determinant();
    }

    Mat3 Ellipsoid::inverse_shape() const
    {
        Eigen::SelfAdjointEigenSolver<Mat3> es(C);
        return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
               es.eigenvectors().transpose();
    }

    bool Ellipsoid::contains(const Vec3 &x, double tol) const
    {
        return (inverse_shape() * (x - d)).norm() <= 1.0 + tol;
    }

    Polytope axis_box(const Vec3 &lo, const Vec3 &hi)
    {
        Polytope P;
        for (int k = 0; k < 3; ++k)
        {
            Vec3 e = Vec3::Zero();
            e(k) = 1.0;
            P.hs.push_back({e, hi(k)});
            P.hs.push_back({-e, -lo(k)});
        }
        return P;
    }

    std::optional<InteriorPoint> find_interior_point(const Polytope &P)
    {
        const auto nr = normalized_rows(P);
        const int m = static_cast<int>(nr.b.size());
        if (m == 0)
            return InteriorPoint{Vec3::Zero(), std::numeric_limits<double>::infinity()};

        using Vec4 = Eigen::Matrix<double, 4, 1>;
        using Mat4 = Eigen::Matrix<double, 4, 4>;
        Vec4 u = Vec4::Zero(); // (x, τ): minimize τ s.t. aᵀx − b ≤ τ
        u(3) = (nr.A * Vec3::Zero() - nr.b).maxCoeff() + 1.0;

        double t = 1.0;
        while (true)
        {
            auto feasible = [&](const Vec4 &w) {
                for (int i = 0; i < m; ++i)
                    if (w(3) + nr.b(i) - nr.A.row(i).dot(w.head<3>()) <= 0.0)
                        return false;
                return true;
            };
            auto fg = [&](const Vec4 &w, Vec4 *g, Mat4 *H) {
                double f = t * w(3);
                g->setZero();
                (*g)(3) = t;
                H->setZero();
                for (int i = 0; i < m; ++i)
                {
                    const double h = w(3) + nr.b(i) - nr.A.row(i).dot(w.head<3>());
                    f -= std::log(h);
                    Vec4 dh;
                    dh.head<3>() = -nr.A.row(i).transpose();
                    dh(3) = 1.0;
                    *g -= dh / h;
                    *H += dh * dh.transpose() / (h * h);
                }
                return f;
            };
            newton_descend<4>(u, fg, feasible, 100);
            const double gap = m / t;
            if (u(3) < -1e-9 && gap < 0.1 * -u(3))
                return InteriorPoint{u.head<3>(), -u(3)};
            if (u(3) - gap > 0.0)
                return std::nullopt;
            if (gap < 1e-12)
                break;
            t *= 20.0;
            if (t > 1e15)
                break;
        }
        if (u(3) < 0.0)
            return InteriorPoint{u.head<3>(), -u(3)};
        return std::nullopt;
    }

    std::optional<Ellipsoid> mvie(const Polytope &P)
    {
        const auto ip = find_interior_point(P);
        if (!ip || !(ip->radius > 1e-12))
            return std::nullopt;

        const auto nr = normalized_rows(P);
        const int m = static_cast<int>(nr.b.size());
        if (m == 0)
            return std::nullopt;

        // θ = (L00, L10, L11, L20, L21, L22, d); E = {L y + d}, diag(L) > 0.
        using Vec9 = Eigen::Matrix<double, 9, 1>;
        using Mat9 = Eigen::Matrix<double, 9, 9>;
        constexpr int LI[6][2] = {{0, 0}, {1, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}};

        auto unpack = [&](const Vec9 &th, Mat3 &L, Vec3 &d) {
            L.setZero();
            for (int k = 0; k < 6; ++k)
                L(LI[k][0], LI[k][1]) = th(k);
            d = th.tail<3>();
        };

        Vec9 th = Vec9::Zero();
        th(0) = th(2) = th(5) = 0.5 * ip->radius;
        th.tail<3>() = ip->x;

        auto feasible = [&](const Vec9 &w) {
            Mat3 L;
            Vec3 d;
            unpack(w, L, d);
            if (L(0, 0) <= 0.0 || L(1, 1) <= 0.0 || L(2, 2) <= 0.0)
                return false;
            for (int i = 0; i < m; ++i)
            {
                const Vec3 a = nr.A.row(i).transpose();
                if (nr.b(i) - a.dot(d) - (L.transpose() * a).norm() <= 0.0)
                    return false;
            }
            return true;
        };

        double t = 1.0;
        const double target_gap = 1e-8;
        while (true)
        {
            auto fg = [&](const Vec9 &w, Vec9 *g, Mat9 *H) {
                Mat3 L;
                Vec3 d;
                unpack(w, L, d);
                double f = -t * (std::log(L(0, 0)) + std::log(L(1, 1)) + std::log(L(2, 2)));
                g->setZero();
                H->setZero();
                for (int k : {0, 2, 5})
                {
                    (*g)(k) -= t / w(k);
                    (*H)(k, k) += t / (w(k) * w(k));
                }
                for (int i = 0; i < m; ++i)
                {
                    const Vec3 a = nr.A.row(i).transpose();
                    const Vec3 wv = L.transpose() * a;
                    const double s = wv.norm();
                    const double h = nr.b(i) - a.dot(d) - s;
                    f -= std::log(h);
                    Vec9 v; // ∇(aᵀd + s)
                    for (int k = 0; k < 6; ++k)
                        v(k) = a(LI[k][0]) * wv(LI[k][1]) / s;
                    v.tail<3>() = a;
                    *g += v / h;
                    *H += v * v.transpose() / (h * h);
                    for (int k = 0; k < 6; ++k)
                        for (int l = 0; l < 6; ++l)
                        {
                            const double dqs = (LI[k][1] == LI[l][1]) ? 1.0 : 0.0;
                            (*H)(k, l) += a(LI[k][0]) * a(LI[l][0]) *
                                          (dqs - wv(LI[k][1]) * wv(LI[l][1]) / (s * s)) / (s * h);
                        }
                }
                return f;
            };
            newton_descend<9>(th, fg, feasible, 120);
            if (m / t < target_gap)
                break;
            t *= 20.0;
        }

        Mat3 L;
        Vec3 d;
        unpack(th, L, d);
        Eigen::SelfAdjointEigenSolver<Mat3> es(L * L.transpose());
        Ellipsoid E;
        E.C = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
              es.eigenvectors().transpose();
        E.d = d;
        return E;
    }

    Ellipsoid mvie_or_throw(const Polytope &P)
    {
        auto E = mvie(P);
        if (!E)
            throw Error(ErrorCode::InfeasiblePolytope, "mvie: empty interior");
        return *E;
    }

    Vec3 nearest_point_on_segment(const Vec3 &a, const Vec3 &b, const Vec3 &q)
    {
        const Vec3 ab = b - a;
        const double den = ab.squaredNorm();
        if (den <= 0.0)
            return a;
        const double t = std::clamp(ab.dot(q - a) / den, 0.0, 1.0);
        return a + t * ab;
    }

    Vec3 nearest_point_on_simplex(const std::vector<Vec3> &verts, const Vec3 &q)
    {
        if (verts.size() == 1)
            return verts[0];
        if (verts.size() == 2)
            return nearest_point_on_segment(verts[0], verts[1], q);

        const Vec3 &a = verts[0], &b = verts[1], &c = verts[2];
        const Vec3 ab = b - a, ac = c - a;
        const double scale2 = std::max(ab.squaredNorm(), ac.squaredNorm());
        if (ab.cross(ac).squaredNorm() <= 1e-24 * scale2 * scale2)
        {
            // Collinear triangle: best point among the edges.
            Vec3 best = nearest_point_on_segment(a, b, q);
            for (const auto &[u, v] : {std::pair{b, c}, std::pair{a, c}})
            {
                const Vec3 p = nearest_point_on_segment(u, v, q);
                if ((p - q).squaredNorm() < (best - q).squaredNorm())
                    best = p;
            }
            return best;
        }

        // Ericson's closest-point-on-triangle region tests.
        const Vec3 ap = q - a;
        const double d1 = ab.dot(ap), d2 = ac.dot(ap);
        if (d1 <= 0.0 && d2 <= 0.0)
            return a;
        const Vec3 bp = q - b;
        const double d3 = ab.dot(bp), d4 = ac.dot(bp);
        if (d3 >= 0.0 && d4 <= d3)
            return b;
        const double vc = d1 * d4 - d3 * d2;
        if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
            return a + (d1 / (d1 - d3)) * ab;
        const Vec3 cp = q - c;
        const double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0.0 && d5 <= d6)
            return c;
        const double vb = d5 * d2 - d1 * d6;
        if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
            return a + (d2 / (d2 - d6)) * ac;
        const double va = d3 * d6 - d5 * d4;
        if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
            return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
        const double denom = 1.0 / (va + vb + vc);
        return a + ab * (vb * denom) + ac * (vc * denom);
    }

    std::vector<Vec3> enumerate_vertices(const Polytope &P, double dedup_tol)
    {
        const auto nr = normalized_rows(P);
        const int m = static_cast<int>(nr.b.size());
        std::vector<Vec3> out;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                for (int k = j + 1; k < m; ++k)
                {
                    Mat3 A;
                    A.row(0) = nr.A.row(i);
                    A.row(1) = nr.A.row(j);
                    A.row(2) = nr.A.row(k);
                    if (std::fabs(A.determinant()) < 1e-10)
                        continue;
                    const Vec3 x = A.partialPivLu().solve(Vec3(nr.b(i), nr.b(j), nr.b(k)));
                    if (!x.allFinite())
                        continue;
                    bool inside = true;
                    for (int l = 0; l < m && inside; ++l)
                        inside = nr.A.row(l).dot(x) - nr.b(l) <= 1e-7;
                    if (!inside)
                        continue;
                    bool dup = false;
                    for (const auto &v : out)
                        if ((v - x).norm() <= dedup_tol)
                        {
                            dup = true;
                            break;
                        }
                    if (!dup)
                        out.push_back(x);
                }
        return out;
    }

    double hull_volume(const Polytope &P)
    {
        const auto verts = enumerate_vertices(P);
        if (verts.size() < 4)
            return 0.0;
        Vec3 x0 = Vec3::Zero();
        for (const auto &v : verts)
            x0 += v;
        x0 /= static_cast<double>(verts.size());

        const auto nr = normalized_rows(P);
        const int m = static_cast<int>(nr.b.size());
        double vol = 0.0;
        for (int i = 0; i < m; ++i)
        {
            bool dup = false;
            for (int j = 0; j < i && !dup; ++j)
                dup = (nr.A.row(i) - nr.A.row(j)).norm() < 1e-9 &&
                      std::fabs(nr.b(i) - nr.b(j)) < 1e-9;
            if (dup)
                continue;

            const Vec3 n = nr.A.row(i).transpose();
            std::vector<Vec3> face;
            for (const auto &v : verts)
                if (std::fabs(n.dot(v) - nr.b(i)) <= 1e-7)
                    face.push_back(v);
            if (face.size() < 3)
                continue;

            Vec3 cen = Vec3::Zero();
            for (const auto &v : face)
                cen += v;
            cen /= static_cast<double>(face.size());
            Vec3 u = (face[0] - cen).normalized();
            Vec3 w = n.cross(u).normalized();
            std::sort(face.begin(), face.end(), [&](const Vec3 &p, const Vec3 &q) {
                return std::atan2(w.dot(p - cen), u.dot(p - cen)) <
                       std::atan2(w.dot(q - cen), u.dot(q - cen));
            });
            double area2 = 0.0;
            for (size_t k = 0; k < face.size(); ++k)
            {
                const Vec3 p = face[k] - cen, q = face[(k + 1) % face.size()] - cen;
                area2 += n.dot(p.cross(q));
            }
            const double area = 0.5 * std::fabs(area2);
            const double dist = nr.b(i) - n.dot(x0);
            vol += area * dist / 3.0;
        }
        return vol;
    }

    McVolume polytope_volume(const Polytope &P, int samples, uint64_t seed,
                             const Eigen::AlignedBox3d &bbox)
    {
        Rng rng(seed);
        int hits = 0;
        for (int s = 0; s < samples; ++s)
        {
            const Vec3 x(rng.uniform(bbox.min().x(), bbox.max().x()),
                         rng.uniform(bbox.min().y(), bbox.max().y()),
                         rng.uniform(bbox.min().z(), bbox.max().z()));
            if (P.contains(x, 0.0))
                ++hits;
        }
        const double p = static_cast<double>(hits) / samples;
        const double box_vol = bbox.sizes().prod();
        McVolume r;
        r.volume = p * box_vol;
        r.rel_std_error = hits > 0 ? std::sqrt((1.0 - p) / (p * samples))
                                   : std::numeric_limits<double>::infinity();
        return r;
    }

    McVolume polytope_volume(const Polytope &P, int samples, uint64_t seed)
    {
        const auto verts = enumerate_vertices(P);
        if (verts.size() < 4)
            throw Error(ErrorCode::Unbounded, "polytope_volume: no bounding box derivable");
        Eigen::AlignedBox3d box;
        for (const auto &v : verts)
            box.extend(v);
        return polytope_volume(P, samples, seed, box);
    }

} // namespace slp::geom
