#ifndef SLP_DYNAMICS_HPP
#define SLP_DYNAMICS_HPP

// Quadrotor / cable / payload model with a hybrid cable mode (taut or bent),
// the differential-flatness map from payload-space trajectories to full
// vehicle states, and a classical RK4 integrator for the hybrid ODE.
//
// Conventions: world frame with z up, gravity acts as -g e_z. rho is the
// unit vector from the quadrotor toward the payload, so a taut cable gives
// x_l = x_q + l0 * rho (at hover rho = -e_z and the quadrotor sits above the
// payload). External forces f_ext_q (on the quadrotor) and f_ext_l (on the
// payload) model steady disturbances such as wind drag. The lowest-level
// control input is collective thrust plus body angular rate; torque-level
// attitude dynamics are out of scope.

#include <Eigen/Dense>

#include <array>

#include "slp/error.hpp"
#include "slp/geometry.hpp"

namespace slp::dyn
{
    using geom::Vec3;
    using Mat3 = Eigen::Matrix3d;

    // Skew-symmetric matrix of w: hat(w) * v == w x v.
    inline Mat3 hat(const Vec3 &w)
    {
        Mat3 m;
        m << 0.0, -w.z(), w.y(),
            w.z(), 0.0, -w.x(),
            -w.y(), w.x(), 0.0;
        return m;
    }

    // Inverse of hat, symmetrized so slightly non-skew inputs average out.
    inline Vec3 vee(const Mat3 &m)
    {
        return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    }

    // Physical constants and operating limits of one quadrotor-payload unit.
    struct SystemParams
    {
        double m_q{1.0};  // quadrotor mass, kg
        double m_l{0.3};  // payload mass, kg
        double l0{1.0};   // cable length, m
        double l_l{0.2};  // payload body length along the cable, m
        double r_q{0.3};  // quadrotor bounding radius, m
        double r_l{0.1};  // payload bounding radius, m
        Mat3 j_q{Mat3::Identity() * 1e-2};  // quadrotor inertia, kg m^2
        double g{9.81};                     // gravity, m/s^2
        double f_min{0.0};   // collective thrust lower bound, N
        double f_max{40.0};  // collective thrust upper bound, N
        double tilt_max{1.0};     // max tilt from vertical, rad, in (0, pi/2)
        double v_max{3.0};        // payload speed limit, m/s
        double a_max{6.0};        // payload acceleration limit, m/s^2
        double tension_eps{0.1};  // min specific payload thrust when taut, m/s^2

        // Throws UsageError unless masses, lengths, and radii are positive,
        // f_min < f_max, and 0 < tilt_max < pi/2.
        void validate() const;
    };

    // Full state of the hybrid system. rho and rho_dot describe the cable
    // direction; when the cable is taut they satisfy |rho| = 1, rho.rho_dot = 0
    // and |x_q - x_l| = l0 (each to 1e-6).
    struct SystemState
    {
        Vec3 x_l{Vec3::Zero()};            // payload position
        Vec3 v_l{Vec3::Zero()};            // payload velocity
        Vec3 x_q{Vec3::UnitZ()};           // quadrotor position
        Vec3 v_q{Vec3::Zero()};            // quadrotor velocity
        Mat3 rot{Mat3::Identity()};        // body-to-world attitude
        Vec3 rho{-Vec3::UnitZ()};          // unit vector quadrotor -> payload
        Vec3 rho_dot{Vec3::Zero()};        // cable direction rate
        Vec3 omega{Vec3::Zero()};          // body angular rate, rad/s

        // True when the taut-cable invariants hold to the given tolerance.
        bool taut_consistent(const SystemParams &params, double tol = 1e-6) const;
    };

    // Time derivative of SystemState under one cable mode. The attitude slot
    // carries d/dt of the rotation matrix itself.
    struct StateDerivative
    {
        Vec3 v_l{Vec3::Zero()};
        Vec3 a_l{Vec3::Zero()};
        Vec3 v_q{Vec3::Zero()};
        Vec3 a_q{Vec3::Zero()};
        Mat3 rot_dot{Mat3::Zero()};
        Vec3 rho_dot{Vec3::Zero()};
        Vec3 rho_ddot{Vec3::Zero()};
    };

    // Discrete cable mode: taut transmits tension, bent decouples the bodies.
    enum class CableMode
    {
        Bent = 0,
        Taut = 1,
    };

    // Lowest-level control input: collective thrust along the body z axis
    // plus the body angular rate.
    struct ControlInput
    {
        double thrust{0.0};        // N
        Vec3 omega{Vec3::Zero()};  // rad/s
    };

    // Flat output of the taut system: the payload trajectory and yaw. The
    // attitude map needs payload derivatives up to order 5 (order 2 fixes the
    // cable direction, orders 3-4 its rates, order 5 the body rate); splines
    // of degree >= 7 provide all of them. External forces are held constant.
    struct FlatOutput
    {
        std::array<Vec3, 6> x_l;     // payload position derivatives, orders 0..5
        std::array<double, 3> psi;   // yaw and derivatives, orders 0..2
        Vec3 f_ext_q{Vec3::Zero()};  // constant external force on the quadrotor, N
        Vec3 f_ext_l{Vec3::Zero()};  // constant external force on the payload, N

        FlatOutput()
        {
            x_l.fill(Vec3::Zero());
            psi.fill(0.0);
        }
    };

    // State reconstructed from a flat output, with the collective thrust and
    // cable tension realizing it.
    struct FlatState
    {
        SystemState state;
        double thrust{0.0};   // N
        double tension{0.0};  // N
    };

    // Differential-flatness map. Recovers the cable direction from the
    // payload's dynamic balance, places the quadrotor at x_l - l0 * rho,
    // completes the attitude from the thrust direction and yaw, and derives
    // the body rate by differentiating the whole chain.
    //
    // Throws FreeFallSingularity when |a_l + g e_z - f_ext_l / m_l| <= 1e-6
    // (cable direction undefined) and UsageError when the yaw heading is
    // parallel to the thrust axis (attitude completion degenerate).
    FlatState flat_to_state(const FlatOutput &flat, const SystemParams &params);

    // Cable tension enforcing the taut holonomic constraint |x_q - x_l| = l0
    // at the given state and inputs. Positive values pull the bodies together.
    double taut_tension(const SystemState &state, double thrust, const Vec3 &f_ext_q,
                        const Vec3 &f_ext_l, const SystemParams &params);

    // Hybrid equations of motion. Taut mode couples the bodies through the
    // constraint tension; bent mode integrates them independently (the cable
    // slot then tracks the relative configuration and carries no force).
    StateDerivative hybrid_derivative(const SystemState &state, const ControlInput &u,
                                      CableMode mode, const Vec3 &f_ext_q,
                                      const Vec3 &f_ext_l, const SystemParams &params);

    // Classical fourth-order Runge-Kutta step of the hybrid dynamics. The
    // attitude is integrated as nine numbers and snapped back to the nearest
    // rotation; after taut steps rho is renormalized and rho_dot re-projected
    // orthogonal to rho. Requires dt > 0.
    SystemState integrate_rk4(const SystemState &state, const ControlInput &u,
                              CableMode mode, const Vec3 &f_ext_q, const Vec3 &f_ext_l,
                              const SystemParams &params, double dt);

} // namespace slp::dyn

#endif
