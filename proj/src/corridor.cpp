#include "slp/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slp/rng.hpp"

namespace slp::plan
{
    namespace
    {
        struct LatticeKey
        {
            int cx, cy, cz, vx, vy, vz;
            bool operator==(const LatticeKey &) const = default;
        };

        struct LatticeKeyHash
        {
            std::size_t operator()(const LatticeKey &k) const
            {
                uint64_t h = 0x9E3779B97F4A7C15ULL;
                for (int t : {k.cx, k.cy, k.cz, k.vx, k.vy, k.vz})
                    h = splitmix64(h ^ static_cast<uint64_t>(static_cast<int64_t>(t)));
                return static_cast<std::size_t>(h);
            }
        };

        struct Node
        {
            Vec3 x{Vec3::Zero()};
            Vec3 v{Vec3::Zero()};
            Vec3 a_in{Vec3::Zero()};
            double dt_in{0.0};
            double g{0.0};
            int parent{-1};
        };

        // Collision queries for one (payload, quadrotor, cable) configuration,
        // with per-radius dilated masks as the fast path over exact tests.
        struct PairChecker
        {
            const GridMap &map;
            const dyn::SystemParams &sys;
            double r_cable;
            grid::DilatedMask mask_l, mask_q, mask_c;

            PairChecker(const GridMap &m, const dyn::SystemParams &s, double rc)
                : map(m), sys(s), r_cable(rc), mask_l(m.dilate(s.r_l)),
                  mask_q(m.dilate(s.r_q)), mask_c(m.dilate(rc))
            {
            }

            bool ball_free(const Vec3 &p, double r, const grid::DilatedMask &mask) const
            {
                if (!mask.maybe(map.world_to_cell(p)))
                    return true;
                return !map.sphere_collides(p, r);
            }

            // Payload at x_l with unit cable direction u (payload -> quadrotor).
            bool pair_free(const Vec3 &x_l, const Vec3 &u) const
            {
                const Vec3 x_q = x_l + sys.l0 * u;
                if (!ball_free(x_l, sys.r_l, mask_l))
                    return false;
                if (!ball_free(x_q, sys.r_q, mask_q))
                    return false;
                const int n =
                    std::max(1, static_cast<int>(std::ceil(sys.l0 / std::min(map.resolution, r_cable))));
                for (int i = 0; i <= n; ++i)
                {
                    const double t = static_cast<double>(i) / n;
                    if (!ball_free(x_l + t * (x_q - x_l), r_cable, mask_c))
                        return false;
                }
                return true;
            }
        };

        bool pair_has_interior(const Polytope &a, const Polytope &b)
        {
            Polytope inter = a;
            inter.append(b);
            const auto e = geom::mvie(inter);
            return e.has_value() && e->volume() > 0.0;
        }

    } // namespace

    void SearchParams::validate() const
    {
        system.validate();
        if (!(tau > 0.0))
            throw Error(ErrorCode::UsageError, "search: primitive duration must be positive");
        if (!(accel_margin > 0.0 && accel_margin <= 1.0))
            throw Error(ErrorCode::UsageError, "search: accel margin must lie in (0, 1]");
        if (!(velocity_bin > 0.0))
            throw Error(ErrorCode::UsageError, "search: velocity bin must be positive");
        if (!(goal_tolerance > 0.0))
            throw Error(ErrorCode::UsageError, "search: goal tolerance must be positive");
        if (!(goal_speed > 0.0))
            throw Error(ErrorCode::UsageError, "search: goal speed must be positive");
        if (!(r_cable > 0.0))
            throw Error(ErrorCode::UsageError, "search: cable radius must be positive");
        if (!(w_effort >= 0.0))
            throw Error(ErrorCode::UsageError, "search: effort weight must be non-negative");
        if (max_expansions <= 0)
            throw Error(ErrorCode::UsageError, "search: expansion budget must be positive");
        if (start_velocity.norm() > system.v_max + 1e-12)
            throw Error(ErrorCode::UsageError, "search: start velocity exceeds the speed limit");
    }

    bool DualPath::taut_consistent(double l0, double tol) const
    {
        if (pi_q.size() != pi_l.size())
            return false;
        for (std::size_t i = 0; i < pi_l.size(); ++i)
            if (std::fabs((pi_q[i] - pi_l[i]).norm() - l0) > tol)
                return false;
        return true;
    }

    DualPath kinodynamic_search(const GridMap &map, const Vec3 &start, const Vec3 &goal,
                                const SearchParams &params)
    {
        params.validate();
        if (!map.in_bounds(map.world_to_cell(start)))
            throw Error(ErrorCode::UsageError, "search: start payload position outside the map");
        if (!map.in_bounds(map.world_to_cell(goal)))
            throw Error(ErrorCode::UsageError, "search: goal payload position outside the map");

        const dyn::SystemParams &sys = params.system;
        const Vec3 ez = Vec3::UnitZ();
        if (map.sphere_collides(start, sys.r_l) || map.sphere_collides(start + sys.l0 * ez, sys.r_q))
            throw Error(ErrorCode::StartInCollision, "search: hover pair at the start intersects obstacles");
        if (map.sphere_collides(goal, sys.r_l) || map.sphere_collides(goal + sys.l0 * ez, sys.r_q))
            throw Error(ErrorCode::GoalInCollision, "search: hover pair at the goal intersects obstacles");

        const PairChecker chk(map, sys, params.r_cable);

        // 26 lattice directions at half and full nominal magnitude, plus coasting.
        const double a_nom = params.accel_margin * sys.a_max;
        std::vector<Vec3> prims;
        prims.push_back(Vec3::Zero());
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz)
                {
                    if (dx == 0 && dy == 0 && dz == 0)
                        continue;
                    const Vec3 d = Vec3(dx, dy, dz).normalized();
                    prims.push_back(0.5 * a_nom * d);
                    prims.push_back(a_nom * d);
                }

        const auto quantize = [&](const Vec3 &x, const Vec3 &v) {
            const grid::Cell c = map.world_to_cell(x);
            LatticeKey k{c.x(), c.y(), c.z(), 0, 0, 0};
            k.vx = static_cast<int>(std::llround(v.x() / params.velocity_bin));
            k.vy = static_cast<int>(std::llround(v.y() / params.velocity_bin));
            k.vz = static_cast<int>(std::llround(v.z() / params.velocity_bin));
            return k;
        };
        const auto heuristic = [&](const Vec3 &x) { return (goal - x).norm() / sys.v_max; };

        // Straight hover glide from a lattice node to the exact goal.
        const auto glide_free = [&](const Vec3 &from) {
            const double len = (goal - from).norm();
            const int n = std::max(1, static_cast<int>(std::ceil(len / map.resolution)));
            for (int i = 0; i <= n; ++i)
            {
                const double t = static_cast<double>(i) / n;
                if (!chk.pair_free(from + t * (goal - from), ez))
                    return false;
            }
            return true;
        };

        std::vector<Node> arena;
        arena.push_back(Node{start, params.start_velocity, Vec3::Zero(), 0.0, 0.0, -1});
        std::unordered_map<LatticeKey, double, LatticeKeyHash> best_g;
        best_g[quantize(start, params.start_velocity)] = 0.0;

        using QueueEntry = std::pair<double, int>;
        std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;
        open.emplace(1.0001 * heuristic(start), 0);

        int expansions = 0;
        int accepted = -1;
        while (!open.empty())
        {
            const int idx = open.top().second;
            open.pop();
            const Node n = arena[idx];
            const auto it = best_g.find(quantize(n.x, n.v));
            if (it == best_g.end() || n.g > it->second + 1e-12)
                continue; // superseded by a cheaper route to the same lattice state
            if ((n.x - goal).norm() <= params.goal_tolerance && n.v.norm() <= params.goal_speed &&
                glide_free(n.x))
            {
                accepted = idx;
                break;
            }
            if (++expansions > params.max_expansions)
                break;
            for (const Vec3 &a : prims)
            {
                const Vec3 v1 = n.v + params.tau * a;
                if (v1.norm() > sys.v_max + 1e-12)
                    continue; // speed along a primitive peaks at an endpoint
                const Vec3 x1 = n.x + params.tau * n.v + 0.5 * params.tau * params.tau * a;
                if (!map.in_bounds(map.world_to_cell(x1)))
                    continue;
                const Vec3 dir = a + sys.g * ez; // pendulum balance with no payload force
                const double dn = dir.norm();
                if (dn <= 1e-6)
                    continue; // free-fall primitive: cable direction undefined
                const Vec3 u = dir / dn;
                const double arc = params.tau * n.v.norm() + 0.5 * params.tau * params.tau * a.norm();
                const int ns = std::max(2, static_cast<int>(std::ceil(arc / map.resolution)) + 1);
                bool clear = true;
                for (int s = 0; s <= ns && clear; ++s)
                {
                    const double t = params.tau * s / ns;
                    clear = chk.pair_free(n.x + t * n.v + 0.5 * t * t * a, u);
                }
                if (!clear)
                    continue;
                const double g1 = n.g + params.tau + params.w_effort * a.squaredNorm() * params.tau;
                const LatticeKey key = quantize(x1, v1);
                const auto bit = best_g.find(key);
                if (bit != best_g.end() && bit->second <= g1 + 1e-12)
                    continue;
                best_g[key] = g1;
                arena.push_back(Node{x1, v1, a, params.tau, g1, idx});
                open.emplace(g1 + 1.0001 * heuristic(x1), static_cast<int>(arena.size()) - 1);
            }
        }
        if (accepted < 0)
            throw Error(ErrorCode::NoPath, "kinodynamic search exhausted without reaching the goal");

        std::vector<int> chain;
        for (int i = accepted; i >= 0; i = arena[i].parent)
            chain.push_back(i);
        std::reverse(chain.begin(), chain.end());

        DualPath path;
        for (std::size_t j = 0; j < chain.size(); ++j)
        {
            const Node &nd = arena[chain[j]];
            const Vec3 u = (nd.a_in + sys.g * ez).normalized();
            path.pi_l.push_back(nd.x);
            path.pi_q.push_back(nd.x + sys.l0 * u);
            path.accel.push_back(nd.a_in);
            if (j > 0)
                path.dt.push_back(nd.dt_in);
        }

        const double dist = (goal - path.pi_l.back()).norm();
        if (dist > 1e-9 || path.size() == 1)
        {
            const double v_ref =
                std::max({arena[accepted].v.norm(), 0.5 * params.goal_speed, 0.1});
            path.pi_l.push_back(goal);
            path.pi_q.push_back(goal + sys.l0 * ez);
            path.accel.push_back(Vec3::Zero());
            path.dt.push_back(std::max(dist / v_ref, 1e-3));
        }
        return path;
    }

    std::vector<sfc::ConvexSeed> build_seed_sequence(const DualPath &path)
    {
        if (path.pi_q.size() != path.pi_l.size())
            throw Error(ErrorCode::UsageError, "seed sequence: body sequences differ in length");
        if (path.size() < 2)
            throw Error(ErrorCode::UsageError, "seed sequence: path must contain at least two states");
        std::vector<sfc::ConvexSeed> seeds;
        seeds.reserve(path.size() - 1);
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            seeds.push_back(sfc::ConvexSeed::from_vertices(
                {path.pi_q[i], path.pi_q[i + 1], path.pi_l[i], path.pi_l[i + 1]}));
        return seeds;
    }

    sfc::VertexRadiusMap body_radius_template(const dyn::SystemParams &system)
    {
        return sfc::VertexRadiusMap{{system.r_q, system.r_q, system.r_l, system.r_l}};
    }

    void Corridor::validate() const
    {
        if (polytopes.empty())
            throw Error(ErrorCode::UsageError, "corridor is empty");
        if (seed_count + bridge_count != static_cast<int>(polytopes.size()))
            throw Error(ErrorCode::UsageError, "corridor counts do not match its polytopes");
        for (std::size_t i = 0; i + 1 < polytopes.size(); ++i)
            if (!pair_has_interior(polytopes[i], polytopes[i + 1]))
                throw Error(ErrorCode::DegenerateOverlap,
                            "adjacent corridor polytopes " + std::to_string(i) + " and " +
                                std::to_string(i + 1) + " have no interior overlap");
    }

    Corridor generate_corridor(const GridMap &map, const std::vector<sfc::ConvexSeed> &seeds,
                               const sfc::VertexRadiusMap &radii, double box_half_extent)
    {
        if (seeds.empty())
            throw Error(ErrorCode::UsageError, "generate_corridor: no seeds");
        if (radii.radius.empty())
            throw Error(ErrorCode::UsageError, "generate_corridor: empty radius template");
        for (double r : radii.radius)
            if (!(r > 0.0))
                throw Error(ErrorCode::UsageError, "generate_corridor: radii must be positive");
        if (!(box_half_extent > 0.0))
            throw Error(ErrorCode::UsageError, "generate_corridor: half extent must be positive");

        const double r_max = *std::max_element(radii.radius.begin(), radii.radius.end());
        const double pad = r_max + map.resolution;

        const auto inflate_one = [&](const sfc::ConvexSeed &seed, const sfc::VertexRadiusMap &rm,
                                     const Vec3 &center, double half) {
            const Vec3 lo = center - Vec3::Constant(half);
            const Vec3 hi = center + Vec3::Constant(half);
            sfc::ObstacleCloud cloud;
            cloud.points =
                map.obstacle_points_in_box(lo - Vec3::Constant(pad), hi + Vec3::Constant(pad));
            return sfc::inflate_region(cloud, seed, rm, geom::axis_box(lo, hi));
        };

        // Per-seed inflations are independent of one another (bridging below
        // only reads the results), so this loop could run concurrently.
        std::vector<Polytope> seed_polys;
        seed_polys.reserve(seeds.size());
        for (const auto &seed : seeds)
        {
            sfc::VertexRadiusMap rm;
            if (radii.radius.size() == seed.vertices.size())
                rm = radii;
            else
                rm.radius.assign(seed.vertices.size(), r_max); // collapsed seed: conservative radii
            const Vec3 c = seed.centroid();
            double half = box_half_extent;
            for (std::size_t k = 0; k < seed.vertices.size(); ++k)
                half = std::max(half, (seed.vertices[k] - c).cwiseAbs().maxCoeff() + rm.radius[k] +
                                          2.0 * map.resolution);
            seed_polys.push_back(inflate_one(seed, rm, c, half));
        }

        Corridor out;
        out.seed_count = static_cast<int>(seeds.size());
        out.polytopes.push_back(seed_polys.front());
        for (std::size_t i = 0; i + 1 < seed_polys.size(); ++i)
        {
            if (!pair_has_interior(seed_polys[i], seed_polys[i + 1]))
            {
                const Vec3 ca = seeds[i].centroid();
                const Vec3 cb = seeds[i + 1].centroid();
                const auto bridge_seed = sfc::ConvexSeed::from_vertices({ca, cb});
                sfc::VertexRadiusMap rm;
                rm.radius.assign(bridge_seed.vertices.size(), r_max);
                const double half =
                    std::max(box_half_extent, 0.5 * (cb - ca).norm() + r_max + 2.0 * map.resolution);
                Polytope bridge;
                try
                {
                    bridge = inflate_one(bridge_seed, rm, 0.5 * (ca + cb), half);
                }
                catch (const Error &e)
                {
                    throw Error(ErrorCode::BridgeFailure,
                                "bridge between seeds " + std::to_string(i) + " and " +
                                    std::to_string(i + 1) + " failed: " + e.what());
                }
                if (!pair_has_interior(seed_polys[i], bridge) ||
                    !pair_has_interior(bridge, seed_polys[i + 1]))
                    throw Error(ErrorCode::BridgeFailure,
                                "bridge between seeds " + std::to_string(i) + " and " +
                                    std::to_string(i + 1) + " does not restore overlap");
                out.polytopes.push_back(bridge);
                ++out.bridge_count;
            }
            out.polytopes.push_back(seed_polys[i + 1]);
        }
        return out;
    }

} // namespace slp::plan
