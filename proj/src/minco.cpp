#include "slp/minco.hpp"

#include <json.hpp>

#include <cmath>

namespace slp::minco
{
    namespace
    {
        // d^order/dt^order of t^n evaluated symbolically: n!/(n-order)!.
        double falling_factorial(int n, int order)
        {
            double f = 1.0;
            for (int k = 0; k < order; ++k)
                f *= double(n - k);
            return f;
        }
    } // namespace

    Eigen::Matrix<double, 8, 1> poly_basis(double t, int order)
    {
        Eigen::Matrix<double, 8, 1> b = Eigen::Matrix<double, 8, 1>::Zero();
        if (order < 0 || order > 7)
            return b;
        double power = 1.0;
        for (int n = order; n < 8; ++n)
        {
            b(n) = falling_factorial(n, order) * power;
            power *= t;
        }
        return b;
    }

    double PiecewiseTrajectory::total_time() const
    {
        double total = 0.0;
        for (double t : durations)
            total += t;
        return total;
    }

    int PiecewiseTrajectory::locate(double t, double *local) const
    {
        const double total = total_time();
        if (!(t >= -1e-9) || t > total + 1e-9)
            throw Error(ErrorCode::OutOfDomain, "query time outside the trajectory span");
        t = std::max(t, 0.0);
        double acc = 0.0;
        for (int i = 0; i + 1 < segments(); ++i)
        {
            if (t <= acc + durations[i])
            {
                *local = t - acc;
                return i;
            }
            acc += durations[i];
        }
        *local = std::min(t - acc, durations.back());
        return segments() - 1;
    }

    Vec3 PiecewiseTrajectory::eval(double t, int order) const
    {
        double local = 0.0;
        const int segment = locate(t, &local);
        return eval_segment(segment, local, order);
    }

    Vec3 PiecewiseTrajectory::eval_segment(int segment, double local_t, int order) const
    {
        if (order < 0)
            throw Error(ErrorCode::UsageError, "derivative order must be non-negative");
        if (segment < 0 || segment >= segments())
            throw Error(ErrorCode::OutOfDomain, "segment index outside the trajectory");
        if (order > 7)
            return Vec3::Zero();
        return coeffs[segment].transpose() * poly_basis(local_t, order);
    }

    BandedLU::BandedLU(int n, int lower, int upper)
        : n_(n), lower_(lower), upper_(upper),
          band_(Eigen::MatrixXd::Zero(lower + upper + 1, n))
    {
    }

    double &BandedLU::at(int row, int col)
    {
        return band_(upper_ + row - col, col);
    }

    double BandedLU::at(int row, int col) const
    {
        return band_(upper_ + row - col, col);
    }

    void BandedLU::factor()
    {
        const double scale = band_.cwiseAbs().maxCoeff();
        const double tiny = std::max(scale, 1.0) * 1e-14;
        for (int k = 0; k < n_; ++k)
        {
            const double pivot = at(k, k);
            if (!(std::abs(pivot) > tiny))
                throw Error(ErrorCode::SingularSystem, "spline system pivot underflow");
            const int last_row = std::min(n_ - 1, k + lower_);
            const int last_col = std::min(n_ - 1, k + upper_);
            for (int i = k + 1; i <= last_row; ++i)
            {
                const double m = at(i, k) / pivot;
                at(i, k) = m;
                for (int j = k + 1; j <= last_col; ++j)
                    at(i, j) -= m * at(k, j);
            }
        }
        factored_ = true;
    }

    void BandedLU::solve(Eigen::MatrixXd &rhs) const
    {
        if (!factored_)
            throw Error(ErrorCode::UsageError, "solve before factor");
        for (int k = 0; k < n_; ++k)
            for (int i = k + 1; i <= std::min(n_ - 1, k + lower_); ++i)
                rhs.row(i) -= at(i, k) * rhs.row(k);
        for (int k = n_ - 1; k >= 0; --k)
        {
            for (int j = k + 1; j <= std::min(n_ - 1, k + upper_); ++j)
                rhs.row(k) -= at(k, j) * rhs.row(j);
            rhs.row(k) /= at(k, k);
        }
    }

    void BandedLU::solve_transpose(Eigen::MatrixXd &rhs) const
    {
        // A^T = U^T L^T: U^T is lower triangular (with U's diagonal), L^T is
        // unit upper triangular holding the elimination multipliers.
        if (!factored_)
            throw Error(ErrorCode::UsageError, "solve before factor");
        for (int i = 0; i < n_; ++i)
        {
            for (int j = std::max(0, i - upper_); j < i; ++j)
                rhs.row(i) -= at(j, i) * rhs.row(j);
            rhs.row(i) /= at(i, i);
        }
        for (int i = n_ - 1; i >= 0; --i)
            for (int j = i + 1; j <= std::min(n_ - 1, i + lower_); ++j)
                rhs.row(i) -= at(j, i) * rhs.row(j);
    }

    SplineSystem::SplineSystem(const std::vector<Vec3> &waypoints,
                               const std::vector<double> &durations,
                               const BoundaryState &z0, const BoundaryState &zf)
        : lu_(8 * static_cast<int>(durations.size()), 8, 8),
          waypoint_count_(static_cast<int>(waypoints.size()))
    {
        const int m = static_cast<int>(durations.size());
        if (m < 1 || static_cast<int>(waypoints.size()) != m - 1)
            throw Error(ErrorCode::UsageError,
                        "waypoint count must be one less than segment count");
        for (double t : durations)
            if (!(t > 0.0) || !std::isfinite(t))
                throw Error(ErrorCode::SingularSystem, "segment duration underflow");

        const int n = 8 * m;
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);

        // Start block: orders 0..3 of segment 0 at t = 0.
        for (int k = 0; k < 4; ++k)
        {
            const auto basis = poly_basis(0.0, k);
            for (int c = 0; c < 8; ++c)
                if (basis(c) != 0.0)
                    lu_.at(k, c) = basis(c);
        }
        rhs.row(0) = z0.p.transpose();
        rhs.row(1) = z0.v.transpose();
        rhs.row(2) = z0.a.transpose();
        rhs.row(3) = z0.j.transpose();

        // Junction blocks: optimality continuity (orders 4..6), the waypoint
        // pin, and smoothness continuity (orders 0..3).
        for (int i = 0; i + 1 < m; ++i)
        {
            const int rb = 8 * i + 4;
            const int left = 8 * i;
            const int right = 8 * (i + 1);
            const double t = durations[i];

            const int orders[8] = {4, 5, 6, 0, 0, 1, 2, 3};
            for (int r = 0; r < 8; ++r)
            {
                const auto basis = poly_basis(t, orders[r]);
                for (int c = 0; c < 8; ++c)
                    if (basis(c) != 0.0)
                        lu_.at(rb + r, left + c) = basis(c);
            }
            // Matching right-segment terms at local time 0; the waypoint row
            // (r = 3) has none.
            lu_.at(rb + 0, right + 4) = -falling_factorial(4, 4);
            lu_.at(rb + 1, right + 5) = -falling_factorial(5, 5);
            lu_.at(rb + 2, right + 6) = -falling_factorial(6, 6);
            lu_.at(rb + 4, right + 0) = -1.0;
            lu_.at(rb + 5, right + 1) = -1.0;
            lu_.at(rb + 6, right + 2) = -falling_factorial(2, 2);
            lu_.at(rb + 7, right + 3) = -falling_factorial(3, 3);
            rhs.row(rb + 3) = waypoints[i].transpose();
        }

        // End block: orders 0..3 of the last segment at its duration.
        for (int k = 0; k < 4; ++k)
        {
            const auto basis = poly_basis(durations.back(), k);
            for (int c = 0; c < 8; ++c)
                if (basis(c) != 0.0)
                    lu_.at(n - 4 + k, 8 * (m - 1) + c) = basis(c);
        }
        rhs.row(n - 4) = zf.p.transpose();
        rhs.row(n - 3) = zf.v.transpose();
        rhs.row(n - 2) = zf.a.transpose();
        rhs.row(n - 1) = zf.j.transpose();

        lu_.factor();
        lu_.solve(rhs);

        traj_.durations = durations;
        traj_.coeffs.resize(m);
        for (int i = 0; i < m; ++i)
            traj_.coeffs[i] = rhs.block<8, 3>(8 * i, 0);
    }

    void SplineSystem::propagate_gradient(const std::vector<CoeffMatrix> &grad_coeffs,
                                          std::vector<Vec3> *grad_waypoints,
                                          std::vector<double> *grad_T) const
    {
        const int m = traj_.segments();
        if (static_cast<int>(grad_coeffs.size()) != m ||
            static_cast<int>(grad_T->size()) != m)
            throw Error(ErrorCode::UsageError, "gradient buffers must match segment count");
        Eigen::MatrixXd adjoint = Eigen::MatrixXd::Zero(8 * m, 3);
        for (int i = 0; i < m; ++i)
            adjoint.block<8, 3>(8 * i, 0) = grad_coeffs[i];
        lu_.solve_transpose(adjoint);

        grad_waypoints->assign(waypoint_count_, Vec3::Zero());
        for (int j = 0; j < waypoint_count_; ++j)
            (*grad_waypoints)[j] = adjoint.row(8 * j + 7).transpose();

        // Duration coupling: rows whose basis is evaluated at T_i move with
        // T_i; each contributes -lambda_r . Z^(k+1)(T_i).
        for (int i = 0; i < m; ++i)
        {
            const double t = traj_.durations[i];
            double coupling = 0.0;
            if (i + 1 < m)
            {
                const int rb = 8 * i + 4;
                const int orders[8] = {4, 5, 6, 0, 0, 1, 2, 3};
                for (int r = 0; r < 8; ++r)
                {
                    const Vec3 rate = traj_.eval_segment(i, t, orders[r] + 1);
                    coupling += adjoint.row(rb + r).dot(rate);
                }
            }
            else
            {
                for (int k = 0; k < 4; ++k)
                {
                    const Vec3 rate = traj_.eval_segment(i, t, k + 1);
                    coupling += adjoint.row(8 * m - 4 + k).dot(rate);
                }
            }
            (*grad_T)[i] -= coupling;
        }
    }

    PiecewiseTrajectory minco_construct(const std::vector<Vec3> &waypoints,
                                        const std::vector<double> &durations,
                                        const BoundaryState &z0, const BoundaryState &zf)
    {
        return SplineSystem(waypoints, durations, z0, zf).trajectory();
    }

    namespace
    {
        // Gram matrix of the fourth-derivative basis over [0, T], active
        // coefficients 4..7 only.
        Eigen::Matrix4d snap_gram(double t)
        {
            const double f[4] = {24.0, 120.0, 360.0, 840.0};
            Eigen::Matrix4d h;
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                {
                    const int power = j + k + 1;  // (j+4)+(k+4)-7
                    h(j, k) = f[j] * f[k] * std::pow(t, double(power)) / double(power);
                }
            return h;
        }
    } // namespace

    double snap_energy(const PiecewiseTrajectory &traj, const Vec3 &q)
    {
        double energy = 0.0;
        for (int i = 0; i < traj.segments(); ++i)
        {
            const Eigen::Matrix4d h = snap_gram(traj.durations[i]);
            for (int ax = 0; ax < 3; ++ax)
            {
                const Eigen::Vector4d c = traj.coeffs[i].block<4, 1>(4, ax);
                energy += q[ax] * c.dot(h * c);
            }
        }
        return energy;
    }

    void snap_energy_grad(const PiecewiseTrajectory &traj, const Vec3 &q,
                          std::vector<CoeffMatrix> *grad_coeffs,
                          std::vector<double> *grad_T)
    {
        const int m = traj.segments();
        grad_coeffs->assign(m, CoeffMatrix::Zero());
        grad_T->assign(m, 0.0);
        for (int i = 0; i < m; ++i)
        {
            const double t = traj.durations[i];
            const Eigen::Matrix4d h = snap_gram(t);
            const Vec3 snap_end = traj.eval_segment(i, t, 4);
            for (int ax = 0; ax < 3; ++ax)
            {
                const Eigen::Vector4d c = traj.coeffs[i].block<4, 1>(4, ax);
                (*grad_coeffs)[i].block<4, 1>(4, ax) = 2.0 * q[ax] * (h * c);
                (*grad_T)[i] += q[ax] * snap_end[ax] * snap_end[ax];
            }
        }
    }

    std::string serialize_trajectory(const PiecewiseTrajectory &traj)
    {
        nlohmann::json doc;
        doc["version"] = 1;
        auto &segments = doc["segments"];
        segments = nlohmann::json::array();
        for (int i = 0; i < traj.segments(); ++i)
        {
            nlohmann::json seg;
            seg["duration"] = traj.durations[i];
            auto &rows = seg["coeffs"];
            rows = nlohmann::json::array();
            for (int r = 0; r < 8; ++r)
                rows.push_back({traj.coeffs[i](r, 0), traj.coeffs[i](r, 1),
                                traj.coeffs[i](r, 2)});
            segments.push_back(std::move(seg));
        }
        return doc.dump();
    }

    PiecewiseTrajectory deserialize_trajectory(const std::string &text)
    {
        PiecewiseTrajectory traj;
        try
        {
            const nlohmann::json doc = nlohmann::json::parse(text);
            if (doc.at("version").get<int>() != 1)
                throw Error(ErrorCode::UsageError, "unsupported trajectory format version");
            for (const auto &seg : doc.at("segments"))
            {
                traj.durations.push_back(seg.at("duration").get<double>());
                CoeffMatrix c;
                const auto &rows = seg.at("coeffs");
                if (rows.size() != 8)
                    throw Error(ErrorCode::UsageError, "trajectory segment needs 8 rows");
                for (int r = 0; r < 8; ++r)
                    for (int ax = 0; ax < 3; ++ax)
                        c(r, ax) = rows.at(r).at(ax).get<double>();
                traj.coeffs.push_back(c);
            }
        }
        catch (const nlohmann::json::exception &)
        {
            throw Error(ErrorCode::UsageError, "malformed trajectory document");
        }
        if (traj.segments() == 0)
            throw Error(ErrorCode::UsageError, "trajectory document has no segments");
        return traj;
    }

} // namespace slp::minco
