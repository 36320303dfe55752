#include "slp/dynamics.hpp"

#include "slp/adscalar.hpp"

#include <cmath>

namespace slp::dyn
{
    namespace
    {
        using JVec = V3<Jet3>;

        // First time derivative of a jet-valued vector.
        Vec3 d1_of(const JVec &v)
        {
            return {v.x.d1, v.y.d1, v.z.d1};
        }

        // Shifts a jet down by two orders: the result's value and first
        // derivative are the input's second and third; higher slots are dead.
        Jet3 shift2(const Jet3 &j)
        {
            return {j.d2, j.d3, 0.0, 0.0};
        }

        JVec shift2(const JVec &v)
        {
            return {shift2(v.x), shift2(v.y), shift2(v.z)};
        }

        Jet3 series(const std::array<Vec3, 6> &d, int axis)
        {
            return {d[0][axis], d[1][axis], d[2][axis], d[3][axis]};
        }

        // Euler sub-step used to form the RK4 stage states. The attitude and
        // the cable slots advance as raw coordinates; projections happen once
        // per full step.
        SystemState advance(const SystemState &s, const StateDerivative &d, double h)
        {
            SystemState r = s;
            r.x_l += h * d.v_l;
            r.v_l += h * d.a_l;
            r.x_q += h * d.v_q;
            r.v_q += h * d.a_q;
            r.rot += h * d.rot_dot;
            r.rho += h * d.rho_dot;
            r.rho_dot += h * d.rho_ddot;
            return r;
        }
    } // namespace

    void SystemParams::validate() const
    {
        const bool positive = m_q > 0.0 && m_l > 0.0 && l0 > 0.0 && l_l > 0.0 &&
                              r_q > 0.0 && r_l > 0.0 && g > 0.0;
        if (!positive)
            throw Error(ErrorCode::UsageError,
                        "system masses, lengths, and gravity must be positive");
        if (!(f_min < f_max))
            throw Error(ErrorCode::UsageError, "thrust bounds must satisfy f_min < f_max");
        if (!(tilt_max > 0.0 && tilt_max < M_PI_2))
            throw Error(ErrorCode::UsageError, "tilt limit must lie in (0, pi/2)");
        if (!(v_max > 0.0 && a_max > 0.0 && tension_eps > 0.0))
            throw Error(ErrorCode::UsageError, "kinematic limits must be positive");
    }

    bool SystemState::taut_consistent(const SystemParams &params, double tol) const
    {
        return std::abs(rho.norm() - 1.0) <= tol && std::abs(rho.dot(rho_dot)) <= tol &&
               std::abs((x_q - x_l).norm() - params.l0) <= tol;
    }

    FlatState flat_to_state(const FlatOutput &flat, const SystemParams &params)
    {
        const Vec3 ez = Vec3::UnitZ();

        // Specific thrust demanded by the payload: alpha = a_l + g e_z - F_L/m_L.
        // Its first three time derivatives come from payload orders 3..5.
        const Vec3 alpha0 = flat.x_l[2] + params.g * ez - flat.f_ext_l / params.m_l;
        const JVec alpha(Jet3(alpha0.x(), flat.x_l[3].x(), flat.x_l[4].x(), flat.x_l[5].x()),
                         Jet3(alpha0.y(), flat.x_l[3].y(), flat.x_l[4].y(), flat.x_l[5].y()),
                         Jet3(alpha0.z(), flat.x_l[3].z(), flat.x_l[4].z(), flat.x_l[5].z()));

        const Jet3 na = norm(alpha);
        if (!(na.f > 1e-6))
            throw Error(ErrorCode::FreeFallSingularity,
                        "payload in free fall: cable direction undefined");

        // Cable direction opposes the demanded specific thrust; the quadrotor
        // sits one cable length up the line.
        const JVec rho = -(reciprocal(na) * alpha);
        const JVec xl(series(flat.x_l, 0), series(flat.x_l, 1), series(flat.x_l, 2));
        const JVec xq = xl - params.l0 * rho;

        // Thrust vector from the quadrotor's own balance; tension recycles the
        // payload balance that defined rho.
        const Jet3 tension = params.m_l * na;
        const JVec aq = shift2(xq);
        const JVec tau = params.m_q * (aq + lift<Jet3>(params.g * ez)) - tension * rho -
                         lift<Jet3>(flat.f_ext_q);

        const Jet3 ntau = norm(tau);
        if (!(ntau.f > 1e-9))
            throw Error(ErrorCode::UsageError, "thrust vector vanishes: attitude undefined");
        const JVec b3 = reciprocal(ntau) * tau;

        // Attitude completion from yaw: b2 ~ b3 x (cos psi, sin psi, 0).
        const Jet3 cpsi(std::cos(flat.psi[0]), -std::sin(flat.psi[0]) * flat.psi[1], 0.0, 0.0);
        const Jet3 spsi(std::sin(flat.psi[0]), std::cos(flat.psi[0]) * flat.psi[1], 0.0, 0.0);
        const JVec heading(cpsi, spsi, Jet3(0.0));

        const JVec raw_b2 = cross(b3, heading);
        const Jet3 nb2 = norm(raw_b2);
        if (!(nb2.f > 1e-8))
            throw Error(ErrorCode::UsageError, "yaw heading parallel to thrust axis");
        const JVec b2 = reciprocal(nb2) * raw_b2;
        const JVec b1 = cross(b2, b3);

        Mat3 rot, rot_dot;
        rot.col(0) = value_of(b1);
        rot.col(1) = value_of(b2);
        rot.col(2) = value_of(b3);
        rot_dot.col(0) = d1_of(b1);
        rot_dot.col(1) = d1_of(b2);
        rot_dot.col(2) = d1_of(b3);

        FlatState out;
        out.state.x_l = flat.x_l[0];
        out.state.v_l = flat.x_l[1];
        out.state.x_q = value_of(xq);
        out.state.v_q = d1_of(xq);
        out.state.rot = rot;
        out.state.rho = value_of(rho);
        out.state.rho_dot = d1_of(rho);
        out.state.omega = vee(rot.transpose() * rot_dot);
        out.thrust = ntau.f;
        out.tension = tension.f;
        return out;
    }

    double taut_tension(const SystemState &state, double thrust, const Vec3 &f_ext_q,
                        const Vec3 &f_ext_l, const SystemParams &params)
    {
        // Second derivative of |x_q - x_l|^2 = l0^2 pinned to zero; positive
        // tension pulls the bodies together.
        const Vec3 tvec = thrust * (state.rot * Vec3::UnitZ());
        const double coupling =
            state.rho.dot(f_ext_l / params.m_l - (tvec + f_ext_q) / params.m_q);
        return (params.l0 * state.rho_dot.squaredNorm() + coupling) * params.m_q *
               params.m_l / (params.m_q + params.m_l);
    }

    StateDerivative hybrid_derivative(const SystemState &state, const ControlInput &u,
                                      CableMode mode, const Vec3 &f_ext_q,
                                      const Vec3 &f_ext_l, const SystemParams &params)
    {
        const Vec3 ez = Vec3::UnitZ();
        const Vec3 tvec = u.thrust * (state.rot * ez);

        StateDerivative d;
        d.v_l = state.v_l;
        d.v_q = state.v_q;
        d.rho_dot = state.rho_dot;
        d.rot_dot = state.rot * hat(u.omega);

        if (mode == CableMode::Taut)
        {
            const double tension = taut_tension(state, u.thrust, f_ext_q, f_ext_l, params);
            d.a_l = (-tension * state.rho + f_ext_l) / params.m_l - params.g * ez;
            d.a_q = (tension * state.rho + tvec + f_ext_q) / params.m_q - params.g * ez;
            const Vec3 w = (tvec + f_ext_q) / (params.l0 * params.m_q) -
                           f_ext_l / (params.l0 * params.m_l);
            d.rho_ddot = state.rho.cross(state.rho.cross(w)) -
                         state.rho_dot.squaredNorm() * state.rho;
        }
        else
        {
            // Decoupled free flight. The cable slot follows the relative
            // acceleration of the bodies (exactly x_l - x_q when l0 = 1).
            d.a_l = f_ext_l / params.m_l - params.g * ez;
            d.a_q = (tvec + f_ext_q) / params.m_q - params.g * ez;
            d.rho_ddot = f_ext_l / params.m_l - (tvec + f_ext_q) / params.m_q;
        }
        return d;
    }

    SystemState integrate_rk4(const SystemState &state, const ControlInput &u,
                              CableMode mode, const Vec3 &f_ext_q, const Vec3 &f_ext_l,
                              const SystemParams &params, double dt)
    {
        if (!(dt > 0.0))
            throw Error(ErrorCode::UsageError, "integration step must be positive");

        const StateDerivative k1 = hybrid_derivative(state, u, mode, f_ext_q, f_ext_l, params);
        const StateDerivative k2 =
            hybrid_derivative(advance(state, k1, 0.5 * dt), u, mode, f_ext_q, f_ext_l, params);
        const StateDerivative k3 =
            hybrid_derivative(advance(state, k2, 0.5 * dt), u, mode, f_ext_q, f_ext_l, params);
        const StateDerivative k4 =
            hybrid_derivative(advance(state, k3, dt), u, mode, f_ext_q, f_ext_l, params);

        const double w = dt / 6.0;
        SystemState out = state;
        out.x_l += w * (k1.v_l + 2.0 * k2.v_l + 2.0 * k3.v_l + k4.v_l);
        out.v_l += w * (k1.a_l + 2.0 * k2.a_l + 2.0 * k3.a_l + k4.a_l);
        out.x_q += w * (k1.v_q + 2.0 * k2.v_q + 2.0 * k3.v_q + k4.v_q);
        out.v_q += w * (k1.a_q + 2.0 * k2.a_q + 2.0 * k3.a_q + k4.a_q);
        out.rot += w * (k1.rot_dot + 2.0 * k2.rot_dot + 2.0 * k3.rot_dot + k4.rot_dot);
        out.rho += w * (k1.rho_dot + 2.0 * k2.rho_dot + 2.0 * k3.rho_dot + k4.rho_dot);
        out.rho_dot += w * (k1.rho_ddot + 2.0 * k2.rho_ddot + 2.0 * k3.rho_ddot + k4.rho_ddot);
        out.omega = u.omega;

        // Snap the attitude back onto the rotation manifold.
        Eigen::Quaterniond q(out.rot);
        q.normalize();
        out.rot = q.toRotationMatrix();

        if (mode == CableMode::Taut)
        {
            const double n = out.rho.norm();
            if (n > 0.0)
                out.rho /= n;
            out.rho_dot -= out.rho.dot(out.rho_dot) * out.rho;
        }
        return out;
    }

} // namespace slp::dyn
