#include "slp/traj_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slp/adscalar.hpp"
#include "slp/cable.hpp"

namespace slp::traj
{
    namespace
    {
        using D9 = Dual<9>;
        using DV3 = V3<D9>;

        constexpr double kFreeFallFloor = 1e-6;  // |alpha| below this has no cable direction
        constexpr double kThrustFloor = 1e-9;    // tilt is undefined at zero thrust

        // Seed slots 0..2 = payload acceleration, 3..5 = jerk, 6..8 = snap.
        DV3 seed_vec(const Vec3 &v, int base)
        {
            return {D9::seed(v.x(), base), D9::seed(v.y(), base + 1), D9::seed(v.z(), base + 2)};
        }

        // Cable direction q (payload to quadrotor) and its second time
        // derivative, from the payload's specific thrust alpha and the time
        // derivatives of alpha.
        struct CableChain
        {
            D9 n;      // |alpha|
            DV3 q;     // alpha / n
            DV3 q_dd;  // second time derivative of q
        };

        CableChain cable_chain(const DV3 &alpha, const DV3 &alpha_d, const DV3 &alpha_dd)
        {
            CableChain c;
            c.n = norm(alpha);
            const D9 ndot = dot(alpha, alpha_d) / c.n;
            const D9 nddot = (dot(alpha_d, alpha_d) + dot(alpha, alpha_dd)) / c.n
                           - (ndot * ndot) / c.n;
            const D9 n2 = c.n * c.n;
            c.q = (D9(1.0) / c.n) * alpha;
            c.q_dd = (D9(1.0) / c.n) * alpha_dd - ((2.0 * ndot) / n2) * alpha_d
                   - ((nddot - (2.0 * ndot * ndot) / c.n) / n2) * alpha;
            return c;
        }
    } // namespace

    void ConstraintSet::validate(int segments) const
    {
        if (segments < 1)
            throw Error(ErrorCode::UsageError, "trajectory must have at least one segment");
        if (!corridor.empty() && static_cast<int>(corridor.size()) != segments)
            throw Error(ErrorCode::UsageError, "corridor must supply one polytope per segment");
        if (!kappa.empty() && static_cast<int>(kappa.size()) != segments)
            throw Error(ErrorCode::UsageError, "kappa must supply one sample count per segment");
        for (int k : kappa)
            if (k < 2)
                throw Error(ErrorCode::UsageError,
                            "each segment needs at least two quadrature intervals");
        const double weights[] = {chi.corridor, chi.thrust, chi.tilt,
                                  chi.velocity, chi.acceleration, chi.tension};
        for (double w : weights)
            if (!(w >= 0.0))
                throw Error(ErrorCode::UsageError, "penalty weights must be non-negative");
        if (!(power > 1.0))
            throw Error(ErrorCode::UsageError, "penalty exponent must exceed one");
        if (!(f_max > f_min) || !(v_max > 0.0) || !(a_max > 0.0))
            throw Error(ErrorCode::UsageError, "limits must define non-empty ranges");
        if (!(tilt_max > 0.0) || !(tilt_max < 1.5707963267948966))
            throw Error(ErrorCode::UsageError, "tilt limit must lie in (0, pi/2)");
    }

    ConstraintSet make_constraints(const std::vector<Polytope> &corridor,
                                   const dyn::SystemParams &system)
    {
        ConstraintSet cs;
        cs.corridor = corridor;
        cs.f_min = system.f_min;
        cs.f_max = system.f_max;
        cs.tilt_max = system.tilt_max;
        cs.v_max = system.v_max;
        cs.a_max = system.a_max;
        cs.tension_eps = system.tension_eps;
        return cs;
    }

    double penalty_and_grad(const minco::PiecewiseTrajectory &traj,
                            const ConstraintSet &cs,
                            const dyn::SystemParams &system,
                            const Vec3 &f_ext_q, const Vec3 &f_ext_l,
                            std::vector<minco::CoeffMatrix> *grad_coeffs,
                            std::vector<double> *grad_T)
    {
        const int m = traj.segments();
        cs.validate(m);
        if (grad_coeffs)
            grad_coeffs->assign(m, minco::CoeffMatrix::Zero());
        if (grad_T)
            grad_T->assign(m, 0.0);

        const double k = cs.power;
        const double mid = 0.5 * (cs.f_max + cs.f_min);
        const double half = 0.5 * (cs.f_max - cs.f_min);
        const double cos_tilt = std::cos(cs.tilt_max);
        const double v_cap = cs.v_max * cs.v_max;
        const double a_cap = cs.a_max * cs.a_max;
        const Vec3 grav_l = system.g * Vec3::UnitZ() - f_ext_l / system.m_l;
        const Vec3 grav_q = system.g * Vec3::UnitZ();

        double total = 0.0;
        for (int i = 0; i < m; ++i)
        {
            const int kap = cs.kappa.empty() ? 16 : cs.kappa[i];
            const double T = traj.durations[i];
            const double step = T / kap;
            const geom::Polytope *cell = cs.corridor.empty() ? nullptr : &cs.corridor[i];

            for (int j = 0; j <= kap; ++j)
            {
                const double tau = static_cast<double>(j) / kap;
                const double t = tau * T;
                const double w = (j == 0 || j == kap) ? 0.5 : 1.0;

                Vec3 d[6];
                for (int o = 0; o < 6; ++o)
                    d[o] = traj.eval_segment(i, t, o);

                double value = 0.0;  // weighted sum over active constraints
                Vec3 gd[5];          // d value / d d_0..d_4
                for (auto &g : gd)
                    g.setZero();

                auto add = [&](double c, double weight, int order, const Vec3 &dc)
                {
                    if (weight <= 0.0 || c <= 0.0)
                        return;
                    const double cp = std::pow(c, k - 1.0);
                    value += weight * cp * c;
                    gd[order] += (weight * k * cp) * dc;
                };

                add(d[1].squaredNorm() - v_cap, cs.chi.velocity, 1, 2.0 * d[1]);
                add(d[2].squaredNorm() - a_cap, cs.chi.acceleration, 2, 2.0 * d[2]);
                add(cs.tension_eps - d[2].z() - system.g, cs.chi.tension, 2, -Vec3::UnitZ());
                if (cell && cs.chi.corridor > 0.0)
                    for (const auto &hs : cell->hs)
                    {
                        const double an = hs.a.norm();
                        if (!(an > 1e-12))
                            continue;
                        add((hs.a.dot(d[0]) - hs.b) / an, cs.chi.corridor, 0, hs.a / an);
                    }

                // Quadrotor-side constraints through the cable direction.
                if ((d[2] + grav_l).norm() > kFreeFallFloor)
                {
                    const DV3 da = seed_vec(d[2], 0);
                    const DV3 dj = seed_vec(d[3], 3);
                    const DV3 ds = seed_vec(d[4], 6);
                    const DV3 alpha = da + lift<D9>(grav_l);
                    const CableChain cc = cable_chain(alpha, dj, ds);

                    auto add_dual = [&](const D9 &c, double weight, const Vec3 *d0_part)
                    {
                        if (weight <= 0.0 || c.v <= 0.0)
                            return;
                        const double cp = std::pow(c.v, k - 1.0);
                        value += weight * cp * c.v;
                        const double scale = weight * k * cp;
                        gd[2] += scale * Vec3(c.g.segment<3>(0));
                        gd[3] += scale * Vec3(c.g.segment<3>(3));
                        gd[4] += scale * Vec3(c.g.segment<3>(6));
                        if (d0_part)
                            gd[0] += scale * (*d0_part);
                    };

                    if (cell && cs.chi.corridor > 0.0)
                        for (const auto &hs : cell->hs)
                        {
                            const double an = hs.a.norm();
                            if (!(an > 1e-12))
                                continue;
                            const Vec3 a_hat = hs.a / an;
                            const D9 row = D9(a_hat.dot(d[0]) - hs.b / an)
                                         + system.l0 * dot(lift<D9>(a_hat), cc.q);
                            add_dual(row, cs.chi.corridor, &a_hat);
                        }

                    // Thrust vector; the cable term f_T * q collapses to m_l * alpha.
                    const DV3 tau_vec = system.m_q * (da + system.l0 * cc.q_dd + lift<D9>(grav_q))
                                      + system.m_l * alpha - lift<D9>(f_ext_q);
                    const D9 f = norm(tau_vec);
                    add_dual((f - mid) * (f - mid) - half * half, cs.chi.thrust, nullptr);
                    if (f.v > kThrustFloor)
                        add_dual(cos_tilt - tau_vec.z / f, cs.chi.tilt, nullptr);
                }

                total += step * w * value;
                if (grad_coeffs)
                {
                    minco::CoeffMatrix &grad = (*grad_coeffs)[i];
                    for (int o = 0; o <= 4; ++o)
                        if (!gd[o].isZero(0.0))
                            grad += (step * w) * minco::poly_basis(t, o) * gd[o].transpose();
                }
                if (grad_T)
                {
                    double dvalue_dt = 0.0;
                    for (int o = 0; o <= 4; ++o)
                        dvalue_dt += gd[o].dot(d[o + 1]);
                    (*grad_T)[i] += (w / kap) * value + step * w * tau * dvalue_dt;
                }
            }
        }
        return total;
    }

    double ConstraintResidual::max() const
    {
        return std::max({corridor, thrust, tilt, velocity, acceleration, tension});
    }

    ConstraintResidual evaluate_residual(const minco::PiecewiseTrajectory &traj,
                                         const ConstraintSet &cs,
                                         const dyn::SystemParams &system,
                                         const Vec3 &f_ext_q, const Vec3 &f_ext_l,
                                         int samples_per_segment)
    {
        const int m = traj.segments();
        cs.validate(m);
        if (samples_per_segment < 2)
            throw Error(ErrorCode::UsageError, "need at least two residual samples per segment");

        const double mid = 0.5 * (cs.f_max + cs.f_min);
        const double half = 0.5 * (cs.f_max - cs.f_min);
        const double cos_tilt = std::cos(cs.tilt_max);
        const Vec3 grav_l = system.g * Vec3::UnitZ() - f_ext_l / system.m_l;

        ConstraintResidual r;
        auto hit = [](double &slot, double c)
        {
            if (c > slot)
                slot = c;
        };

        for (int i = 0; i < m; ++i)
        {
            const double T = traj.durations[i];
            const geom::Polytope *cell = cs.corridor.empty() ? nullptr : &cs.corridor[i];
            for (int j = 0; j <= samples_per_segment; ++j)
            {
                const double t = T * j / samples_per_segment;
                const Vec3 p = traj.eval_segment(i, t, 0);
                const Vec3 v = traj.eval_segment(i, t, 1);
                const Vec3 a = traj.eval_segment(i, t, 2);

                hit(r.velocity, v.squaredNorm() - cs.v_max * cs.v_max);
                hit(r.acceleration, a.squaredNorm() - cs.a_max * cs.a_max);
                hit(r.tension, cs.tension_eps - a.z() - system.g);
                if (cell)
                    for (const auto &hs : cell->hs)
                        hit(r.corridor, hs.margin(p));

                if ((a + grav_l).norm() <= kFreeFallFloor)
                    continue;  // quadrotor pose undefined; tension already flags it
                const Vec3 jerk = traj.eval_segment(i, t, 3);
                const Vec3 snap = traj.eval_segment(i, t, 4);
                const CableChain cc = cable_chain(seed_vec(a, 0) + lift<D9>(grav_l),
                                                  seed_vec(jerk, 3), seed_vec(snap, 6));
                const Vec3 q_dir(cc.q.x.v, cc.q.y.v, cc.q.z.v);
                const Vec3 q_dd(cc.q_dd.x.v, cc.q_dd.y.v, cc.q_dd.z.v);
                const Vec3 x_q = p + system.l0 * q_dir;
                const Vec3 tau_vec = system.m_q * (a + system.l0 * q_dd
                                                   + system.g * Vec3::UnitZ())
                                   + system.m_l * (a + grav_l) - f_ext_q;
                const double f = tau_vec.norm();
                hit(r.thrust, (f - mid) * (f - mid) - half * half);
                if (f > kThrustFloor)
                    hit(r.tilt, cos_tilt - tau_vec.z() / f);
                if (cell)
                    for (const auto &hs : cell->hs)
                        hit(r.corridor, hs.margin(x_q));
            }
        }
        r.corridor = std::max(r.corridor, 0.0);
        r.thrust = std::max(r.thrust, 0.0);
        r.tilt = std::max(r.tilt, 0.0);
        r.velocity = std::max(r.velocity, 0.0);
        r.acceleration = std::max(r.acceleration, 0.0);
        r.tension = std::max(r.tension, 0.0);
        return r;
    }

    namespace
    {
        // Payload and quadrotor positions at one time; the quadrotor position
        // is absent in free fall.
        struct SamplePair
        {
            Vec3 x_l;
            Vec3 x_q;
            bool has_quad;
        };

        SamplePair sample_pair(const minco::PiecewiseTrajectory &traj, int segment,
                               double local_t, const dyn::SystemParams &system,
                               const Vec3 &grav_l)
        {
            SamplePair s;
            s.x_l = traj.eval_segment(segment, local_t, 0);
            const Vec3 alpha = traj.eval_segment(segment, local_t, 2) + grav_l;
            s.has_quad = alpha.norm() > kFreeFallFloor;
            s.x_q = s.has_quad ? Vec3(s.x_l + system.l0 * alpha.normalized()) : s.x_l;
            return s;
        }

        // Samples stay aligned to junctions so a polytope hand-off happens at
        // a shared sample point rather than inside a pair.
        bool hull_chain_holds(const minco::PiecewiseTrajectory &traj,
                              const std::vector<Polytope> &corridor,
                              const dyn::SystemParams &system, const Vec3 &grav_l,
                              int dense, double tol)
        {
            SamplePair prev = sample_pair(traj, 0, 0.0, system, grav_l);
            for (int i = 0; i < traj.segments(); ++i)
            {
                const double T = traj.durations[i];
                for (int j = (i == 0) ? 1 : 0; j <= dense; ++j)
                {
                    const SamplePair cur = sample_pair(traj, i, T * j / dense, system, grav_l);
                    if (prev.has_quad && cur.has_quad)
                    {
                        const Vec3 pts[4] = {prev.x_l, prev.x_q, cur.x_l, cur.x_q};
                        const bool shared = std::any_of(
                            corridor.begin(), corridor.end(), [&](const Polytope &poly)
                            {
                                return std::all_of(std::begin(pts), std::end(pts),
                                                   [&](const Vec3 &x)
                                                   { return poly.contains(x, tol); });
                            });
                        if (!shared)
                            return false;
                    }
                    prev = cur;
                }
            }
            return true;
        }
    } // namespace

    OptResult optimize_trajectory(const init::InitResult &init,
                                  const init::OverlapChain &chain,
                                  const std::vector<Polytope> &corridor,
                                  const minco::BoundaryState &z0,
                                  const minco::BoundaryState &zf,
                                  const OptParams &params)
    {
        params.system.validate();
        const int m = static_cast<int>(corridor.size());
        if (m < 1)
            throw Error(ErrorCode::UsageError, "corridor must contain at least one polytope");
        if (static_cast<int>(chain.cells.size()) != m - 1)
            throw Error(ErrorCode::UsageError,
                        "need one overlap cell between consecutive corridor polytopes");
        if (static_cast<int>(init.xi.size()) != m - 1 ||
            static_cast<int>(init.waypoints.size()) != m - 1)
            throw Error(ErrorCode::UsageError, "initializer result does not match the chain");
        if (params.samples_per_segment < 2 || params.dense_factor < 1)
            throw Error(ErrorCode::UsageError, "invalid sampling configuration");

        ConstraintSet cs = make_constraints(corridor, params.system);
        cs.chi = params.chi;
        cs.power = params.power;
        cs.kappa.assign(m, params.samples_per_segment);
        cs.validate(m);

        // Pack barycentric waypoint coordinates, then virtual durations.
        std::vector<int> off(m - 1);
        int nx = 0;
        for (int i = 0; i < m - 1; ++i)
        {
            const int dof = chain.cells[i].dof();
            if (static_cast<int>(init.xi[i].size()) != dof)
                throw Error(ErrorCode::UsageError,
                            "initializer coordinates do not match the chain");
            off[i] = nx;
            nx += dof;
        }
        const int sig0 = nx;
        nx += m;

        Eigen::VectorXd x(nx);
        for (int i = 0; i < m - 1; ++i)
            x.segment(off[i], chain.cells[i].dof()) = init.xi[i];
        std::vector<Vec3> pts(m + 1);
        pts.front() = z0.p;
        for (int i = 0; i < m - 1; ++i)
            pts[i + 1] = init.waypoints[i];
        pts.back() = zf.p;
        for (int i = 0; i < m; ++i)
        {
            const double chord = (pts[i + 1] - pts[i]).norm();
            const double T = std::max(chord / params.system.v_max, params.min_duration);
            x[sig0 + i] = cable::virtual_from_a(T);
        }

        const Vec3 grav_l = params.system.g * Vec3::UnitZ() - params.f_ext_l / params.system.m_l;

        auto decode = [&](const Eigen::VectorXd &xv,
                          std::vector<Vec3> &wps, std::vector<double> &T)
        {
            wps.resize(m - 1);
            T.resize(m);
            for (int i = 0; i < m - 1; ++i)
                wps[i] = init::polytope_map(xv.segment(off[i], chain.cells[i].dof()),
                                            chain.cells[i]);
            for (int i = 0; i < m; ++i)
                T[i] = cable::a_from_virtual(xv[sig0 + i]);
        };

        auto objective_impl = [&](const Eigen::VectorXd &xv, Eigen::VectorXd &gv) -> double
        {
            std::vector<Vec3> wps;
            std::vector<double> T;
            decode(xv, wps, T);
            minco::SplineSystem spline(wps, T, z0, zf);
            const minco::PiecewiseTrajectory &traj = spline.trajectory();

            std::vector<minco::CoeffMatrix> gc_energy, gc_penalty;
            std::vector<double> gt_energy, gt_penalty;
            const double energy = minco::snap_energy(traj, params.snap_weights);
            minco::snap_energy_grad(traj, params.snap_weights, &gc_energy, &gt_energy);
            const double penalty = penalty_and_grad(traj, cs, params.system, params.f_ext_q,
                                                    params.f_ext_l, &gc_penalty, &gt_penalty);

            double duration = 0.0;
            std::vector<minco::CoeffMatrix> gc(m);
            std::vector<double> gt(m);
            for (int i = 0; i < m; ++i)
            {
                duration += T[i];
                gc[i] = gc_energy[i] + params.lambda_penalty * gc_penalty[i];
                gt[i] = gt_energy[i] + params.lambda_penalty * gt_penalty[i] + params.lambda_time;
            }

            std::vector<Vec3> gwp;
            spline.propagate_gradient(gc, &gwp, &gt);

            gv.resize(nx);
            for (int i = 0; i < m - 1; ++i)
                gv.segment(off[i], chain.cells[i].dof()) =
                    init::polytope_pullback(xv.segment(off[i], chain.cells[i].dof()),
                                            chain.cells[i], gwp[i]);
            for (int i = 0; i < m; ++i)
                gv[sig0 + i] = gt[i] * cable::a_derivative(xv[sig0 + i]);

            return energy + params.lambda_time * duration + params.lambda_penalty * penalty;
        };

        // Exploratory line-search steps can drive a duration to the edge of
        // the representable range; report such points as infinitely bad
        // instead of letting the construction error escape the solve.
        auto objective = [&](const Eigen::VectorXd &xv, Eigen::VectorXd &gv) -> double
        {
            try
            {
                return objective_impl(xv, gv);
            }
            catch (const Error &)
            {
                gv.setZero(nx);
                return std::numeric_limits<double>::infinity();
            }
        };

        Eigen::VectorXd g0(nx);
        const double initial_cost = objective(x, g0);
        if (!std::isfinite(initial_cost))
            throw Error(ErrorCode::OptimizerStall, "warm-start trajectory cost is not finite");

        const SolveResult solve = lbfgs_minimize(x, objective, params.solver);

        OptResult out;
        std::vector<Vec3> wps;
        std::vector<double> T;
        decode(x, wps, T);
        out.trajectory = minco::minco_construct(wps, T, z0, zf);
        out.cost = solve.f;
        out.status = solve.status;
        out.residual = evaluate_residual(out.trajectory, cs, params.system, params.f_ext_q,
                                         params.f_ext_l,
                                         params.samples_per_segment * params.dense_factor);
        out.feasible = out.residual.max() <= params.feasibility_tol;
        if (params.strict_hulls)
            out.hull_chain_ok = hull_chain_holds(out.trajectory, corridor, params.system,
                                                 grav_l,
                                                 params.samples_per_segment * params.dense_factor,
                                                 params.feasibility_tol);
        return out;
    }

} // namespace slp::traj
