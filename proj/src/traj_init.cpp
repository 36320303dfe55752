#include "slp/traj_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slp::init
{
    namespace
    {
        // Difference matrix Vhat = [v_1 - v_0, ..., v_K - v_0].
        Eigen::Matrix3Xd vertex_span(const Overlap &overlap)
        {
            const int k = overlap.dof();
            Eigen::Matrix3Xd vhat(3, k);
            for (int i = 0; i < k; ++i)
                vhat.col(i) = overlap.vertices[i + 1] - overlap.vertices[0];
            return vhat;
        }

        void check_dof(const Eigen::VectorXd &xi, const Overlap &overlap)
        {
            if (overlap.dof() < 3)
                throw Error(ErrorCode::DegenerateOverlap,
                            "overlap needs at least 4 vertices");
            if (xi.size() != overlap.dof())
                throw Error(ErrorCode::UsageError,
                            "parameter dimension must match vertex count minus one");
        }

        // Cubic smoothed hinge: zero for s <= 0, s^3/(3 delta) above; C2 at
        // the switch.
        double phi(double s, double delta) { return s <= 0.0 ? 0.0 : s * s * s / (3.0 * delta); }
        double phi_grad(double s, double delta) { return s <= 0.0 ? 0.0 : s * s / delta; }
    } // namespace

    Overlap make_overlap(const Polytope &intersection)
    {
        Overlap overlap;
        // Intersections of adjacent corridor polytopes repeat shared planes;
        // keep one normalized copy of each face so penalties and softmin
        // weights count every boundary once.
        for (const auto &face : intersection.hs)
        {
            const double norm = face.a.norm();
            if (!(norm > 1e-12))
                continue;
            const geom::HalfSpace unit{face.a / norm, face.b / norm};
            const bool duplicate =
                std::any_of(overlap.polytope.hs.begin(), overlap.polytope.hs.end(),
                            [&](const geom::HalfSpace &kept)
                            {
                                return (kept.a - unit.a).norm() < 1e-9 &&
                                       std::abs(kept.b - unit.b) < 1e-9;
                            });
            if (!duplicate)
                overlap.polytope.hs.push_back(unit);
        }
        overlap.vertices = geom::enumerate_vertices(overlap.polytope);
        if (overlap.vertices.size() < 4)
            throw Error(ErrorCode::DegenerateOverlap,
                        "overlap has fewer than 4 vertices");

        Eigen::Matrix3Xd span = vertex_span(overlap);
        const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(span);
        const auto &sigma = svd.singularValues();
        if (sigma(2) <= 1e-9 * std::max(sigma(0), 1e-12))
            throw Error(ErrorCode::DegenerateOverlap,
                        "overlap vertices are not full-dimensional");
        return overlap;
    }

    OverlapChain build_overlap_chain(const std::vector<Polytope> &corridor)
    {
        if (corridor.size() < 2)
            throw Error(ErrorCode::UsageError,
                        "overlap chain needs at least two corridor polytopes");
        OverlapChain chain;
        for (size_t i = 0; i + 1 < corridor.size(); ++i)
        {
            Polytope intersection = corridor[i];
            intersection.append(corridor[i + 1]);
            chain.cells.push_back(make_overlap(intersection));
        }
        return chain;
    }

    Vec3 polytope_map(const Eigen::VectorXd &xi, const Overlap &overlap)
    {
        check_dof(xi, overlap);
        const double denom = xi.squaredNorm() + 1.0;
        const Eigen::VectorXd weights = 4.0 * xi.array().square() / (denom * denom);
        Vec3 x = overlap.vertices[0];
        for (int i = 0; i < overlap.dof(); ++i)
            x += weights(i) * (overlap.vertices[i + 1] - overlap.vertices[0]);
        return x;
    }

    Eigen::VectorXd polytope_pullback(const Eigen::VectorXd &xi, const Overlap &overlap,
                                      const Vec3 &grad_point)
    {
        check_dof(xi, overlap);
        const Eigen::Matrix3Xd vhat = vertex_span(overlap);
        const double denom = xi.squaredNorm() + 1.0;
        const Eigen::VectorXd vg = vhat.transpose() * grad_point;
        const double pulled = grad_point.dot(vhat * xi.array().square().matrix());
        return (8.0 / (denom * denom)) * xi.cwiseProduct(vg) -
               (16.0 * pulled / (denom * denom * denom)) * xi;
    }

    Vec3 sphere_map(const Eigen::Vector2d &u)
    {
        const double w = std::sqrt(1.0 + u.squaredNorm());
        return Vec3(u.x() / w, u.y() / w, 1.0 / w);
    }

    Eigen::Vector2d sphere_inverse(const Vec3 &n)
    {
        const double planar = n.x() * n.x() + n.y() * n.y();
        if (!(planar < 1.0) || !(n.z() > 0.0))
            throw Error(ErrorCode::UsageError,
                        "direction must lie on the open upper hemisphere");
        const double root = std::sqrt(1.0 - planar);
        return Eigen::Vector2d(n.x() / root, n.y() / root);
    }

    Eigen::Vector2d sphere_pullback(const Eigen::Vector2d &u, const Vec3 &grad_dir)
    {
        // Reduce the 3-vector gradient to the two free components (the z
        // component is sqrt(1 - x^2 - y^2) on the upper hemisphere), then
        // apply the 2x2 parameter Jacobian.
        const double a = u.x(), b = u.y();
        const double w2 = 1.0 + a * a + b * b;
        const Eigen::Vector2d reduced(grad_dir.x() - grad_dir.z() * a,
                                      grad_dir.y() - grad_dir.z() * b);
        Eigen::Matrix2d jacobian;
        jacobian << 1.0 + b * b, -a * b,
                    -a * b, 1.0 + a * a;
        return jacobian * reduced / (w2 * std::sqrt(w2));
    }

    double init_cost_grad(const std::vector<Eigen::VectorXd> &xi,
                          const std::vector<Eigen::Vector2d> &u,
                          const OverlapChain &chain, const Vec3 &start, const Vec3 &goal,
                          const InitParams &params,
                          std::vector<Eigen::VectorXd> *grad_xi,
                          std::vector<Eigen::Vector2d> *grad_u)
    {
        const int cells = static_cast<int>(chain.cells.size());
        if (static_cast<int>(xi.size()) != cells || static_cast<int>(u.size()) != cells)
            throw Error(ErrorCode::UsageError,
                        "one parameter block per overlap is required");

        std::vector<Vec3> points(cells + 2);
        std::vector<Vec3> dirs(cells);
        points.front() = start;
        points.back() = goal;
        for (int i = 0; i < cells; ++i)
        {
            points[i + 1] = polytope_map(xi[i], chain.cells[i]);
            dirs[i] = sphere_map(u[i]);
        }

        std::vector<Vec3> grad_point(cells, Vec3::Zero());
        std::vector<Vec3> grad_dir(cells, Vec3::Zero());
        double cost = 0.0;

        // (1) smoothed path length through the waypoints.
        for (int k = 0; k + 1 < cells + 2; ++k)
        {
            const Vec3 d = points[k + 1] - points[k];
            const double len = std::sqrt(d.squaredNorm() + params.eps);
            cost += len;
            if (k >= 1)
                grad_point[k - 1] -= d / len;
            if (k + 1 <= cells)
                grad_point[k] += d / len;
        }

        // (2) quadrotor containment: smoothed hinge on each halfspace margin
        // of the overlap at x_Q = x_L + l0 n.
        // (3) midpoint separation: reward the softened minimum margin depth
        // at x_mid = x_L + (l0/2) n.
        for (int i = 0; i < cells; ++i)
        {
            const auto &faces = chain.cells[i].polytope.hs;
            const Vec3 xq = points[i + 1] + params.l0 * dirs[i];
            Vec3 gq = Vec3::Zero();
            for (const auto &face : faces)
            {
                const double norm = face.a.norm();
                if (!(norm > 1e-12))
                    continue;
                const double violation = face.margin(xq);
                cost += params.corridor_weight * phi(violation, params.phi_delta);
                gq += params.corridor_weight * phi_grad(violation, params.phi_delta) *
                      (face.a / norm);
            }
            grad_point[i] += gq;
            grad_dir[i] += params.l0 * gq;

            if (params.margin_weight > 0.0)
            {
                const Vec3 mid = points[i + 1] + 0.5 * params.l0 * dirs[i];
                double depth_min = std::numeric_limits<double>::infinity();
                for (const auto &face : faces)
                    if (face.a.norm() > 1e-12)
                        depth_min = std::min(depth_min, -face.margin(mid));

                double partition = 0.0;
                Vec3 weighted_normal = Vec3::Zero();
                for (const auto &face : faces)
                {
                    const double norm = face.a.norm();
                    if (!(norm > 1e-12))
                        continue;
                    const double depth = -face.margin(mid);
                    const double w = std::exp(-params.softmin_mu * (depth - depth_min));
                    partition += w;
                    weighted_normal += w * (face.a / norm);
                }
                const double softmin =
                    depth_min - std::log(partition) / params.softmin_mu;
                cost -= params.margin_weight * softmin;
                const Vec3 gm = params.margin_weight * weighted_normal / partition;
                grad_point[i] += gm;
                grad_dir[i] += 0.5 * params.l0 * gm;
            }
        }

        if (grad_xi != nullptr)
        {
            grad_xi->resize(cells);
            for (int i = 0; i < cells; ++i)
                (*grad_xi)[i] = polytope_pullback(xi[i], chain.cells[i], grad_point[i]);
        }
        if (grad_u != nullptr)
        {
            grad_u->resize(cells);
            for (int i = 0; i < cells; ++i)
                (*grad_u)[i] = sphere_pullback(u[i], grad_dir[i]);
        }
        return cost;
    }

    InitResult initialize_waypoints(const OverlapChain &chain, const Vec3 &start,
                                    const Vec3 &goal, const InitParams &params)
    {
        const int cells = static_cast<int>(chain.cells.size());
        if (cells == 0)
            throw Error(ErrorCode::UsageError, "overlap chain is empty");

        std::vector<int> offsets(cells + 1, 0);
        for (int i = 0; i < cells; ++i)
        {
            if (chain.cells[i].dof() < 3)
                throw Error(ErrorCode::DegenerateOverlap,
                            "overlap needs at least 4 vertices");
            offsets[i + 1] = offsets[i] + chain.cells[i].dof() + 2;
        }

        // xi = 1 decodes to an interior mix of the vertices and u breaks the
        // vertical saddle; both exact zeros are stationary points of their
        // maps and would freeze the solve.
        Eigen::VectorXd x(offsets[cells]);
        for (int i = 0; i < cells; ++i)
        {
            x.segment(offsets[i], chain.cells[i].dof()).setOnes();
            x.segment(offsets[i] + chain.cells[i].dof(), 2).setConstant(0.05);
        }

        std::vector<Eigen::VectorXd> xi(cells);
        std::vector<Eigen::Vector2d> u(cells);
        const auto unpack = [&](const Eigen::VectorXd &packed)
        {
            for (int i = 0; i < cells; ++i)
            {
                xi[i] = packed.segment(offsets[i], chain.cells[i].dof());
                u[i] = packed.segment(offsets[i] + chain.cells[i].dof(), 2);
            }
        };

        std::vector<Eigen::VectorXd> grad_xi;
        std::vector<Eigen::Vector2d> grad_u;
        const GradFn objective = [&](const Eigen::VectorXd &packed, Eigen::VectorXd &grad)
        {
            unpack(packed);
            const double cost =
                init_cost_grad(xi, u, chain, start, goal, params, &grad_xi, &grad_u);
            grad.resize(packed.size());
            for (int i = 0; i < cells; ++i)
            {
                grad.segment(offsets[i], chain.cells[i].dof()) = grad_xi[i];
                grad.segment(offsets[i] + chain.cells[i].dof(), 2) = grad_u[i];
            }
            return cost;
        };

        lbfgs_minimize(x, objective, params.solver);
        unpack(x);

        InitResult result;
        result.xi = xi;
        result.u = u;
        result.cost = init_cost_grad(xi, u, chain, start, goal, params, nullptr, nullptr);
        for (int i = 0; i < cells; ++i)
        {
            result.waypoints.push_back(polytope_map(xi[i], chain.cells[i]));
            result.directions.push_back(sphere_map(u[i]));
        }
        return result;
    }

} // namespace slp::init
