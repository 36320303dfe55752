#ifndef SLP_LBFGS_HPP
#define SLP_LBFGS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace slp
{
    struct LbfgsParams
    {
        int memory = 8;
        int max_iterations = 200;
        double grad_eps = 1e-8;   // stop when ‖g‖ ≤ grad_eps · max(1, ‖x‖)
        double rel_f_eps = 0.0;   // optional stop on relative objective decrease
        int max_linesearch = 60;
        double c1 = 1e-4;         // sufficient decrease
        double c2 = 0.9;          // curvature
    };

    enum class SolveStatus
    {
        Converged,
        MaxIterations,
        LineSearchFailed
    };

    struct SolveResult
    {
        SolveStatus status{SolveStatus::MaxIterations};
        int iterations{0};
        double f{std::numeric_limits<double>::quiet_NaN()};
        double grad_norm{std::numeric_limits<double>::quiet_NaN()};
    };

    using GradFn = std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)>;

    namespace detail
    {
        struct WolfeResult
        {
            bool ok{false};
            double alpha{0.0}, f{0.0};
        };

        // Strong Wolfe line search: bracket by expansion, refine by bisection.
        inline WolfeResult wolfe_search(const GradFn &fg, const Eigen::VectorXd &x,
                                        const Eigen::VectorXd &p, double f0, double dg0,
                                        Eigen::VectorXd &x_new, Eigen::VectorXd &g_new,
                                        const LbfgsParams &prm, double alpha_init = 1.0)
        {
            const double c1 = prm.c1, c2 = prm.c2;
            auto eval = [&](double a, double &f, double &dg) -> bool {
                x_new = x + a * p;
                f = fg(x_new, g_new);
                if (!std::isfinite(f) || !g_new.allFinite())
                    return false;
                dg = g_new.dot(p);
                return true;
            };

            double lo = 0.0, f_lo = f0, dg_lo = dg0;
            double hi = -1.0, f_hi = 0.0;
            double alpha = alpha_init;
            bool bracketed = false;

            for (int it = 0; it < prm.max_linesearch; ++it)
            {
                double f_a, dg_a;
                if (!eval(alpha, f_a, dg_a))
                {
                    hi = alpha;
                    f_hi = std::numeric_limits<double>::infinity();
                    bracketed = true;
                    alpha = 0.5 * (lo + alpha);
                    continue;
                }
                if (f_a > f0 + c1 * alpha * dg0 || (bracketed && f_a >= f_lo))
                {
                    hi = alpha;
                    f_hi = f_a;
                    bracketed = true;
                    alpha = 0.5 * (lo + hi);
                    continue;
                }
                if (std::fabs(dg_a) <= -c2 * dg0)
                    return {true, alpha, f_a};
                if (dg_a >= 0.0)
                {
                    hi = lo;
                    f_hi = f_lo;
                    lo = alpha;
                    f_lo = f_a;
                    dg_lo = dg_a;
                    bracketed = true;
                    alpha = 0.5 * (lo + hi);
                    continue;
                }
                lo = alpha;
                f_lo = f_a;
                dg_lo = dg_a;
                if (bracketed)
                    alpha = 0.5 * (lo + hi);
                else
                    alpha *= 2.0;
                if (alpha > 1e12)
                    break;
                if (bracketed &&
                    std::fabs(hi - lo) < 1e-12 * std::max(std::fabs(hi), std::fabs(lo)))
                    break;
            }
            (void)dg_lo;
            (void)f_hi;
            // Accept the best sufficient-decrease point seen, if any.
            if (lo > 0.0 && f_lo <= f0 + c1 * lo * dg0)
            {
                double f_a, dg_a;
                if (eval(lo, f_a, dg_a))
                    return {true, lo, f_a};
            }
            return {false, 0.0, f0};
        }
    } // namespace detail

    inline SolveResult lbfgs_minimize(Eigen::VectorXd &x, const GradFn &fg,
                                      const LbfgsParams &prm = LbfgsParams())
    {
        const int n = static_cast<int>(x.size());
        Eigen::VectorXd g(n), x_new(n), g_new(n);
        double f = fg(x, g);
        SolveResult res;
        if (!std::isfinite(f) || !g.allFinite())
        {
            res.status = SolveStatus::LineSearchFailed;
            return res;
        }

        std::deque<Eigen::VectorXd> s_mem, y_mem;
        std::deque<double> rho_mem;
        Eigen::VectorXd p(n), q(n);
        double gamma = 1.0;

        for (int iter = 0; iter < prm.max_iterations; ++iter)
        {
            const double gnorm = g.norm();
            if (gnorm <= prm.grad_eps * std::max(1.0, x.norm()))
            {
                res = {SolveStatus::Converged, iter, f, gnorm};
                return res;
            }

            // Two-loop recursion.
            q = -g;
            const int m = static_cast<int>(s_mem.size());
            std::vector<double> alpha_mem(m);
            for (int i = m - 1; i >= 0; --i)
            {
                alpha_mem[i] = rho_mem[i] * s_mem[i].dot(q);
                q -= alpha_mem[i] * y_mem[i];
            }
            q *= gamma;
            for (int i = 0; i < m; ++i)
            {
                const double beta = rho_mem[i] * y_mem[i].dot(q);
                q += (alpha_mem[i] - beta) * s_mem[i];
            }
            p = q;
            double dg0 = g.dot(p);
            if (dg0 >= 0.0) // not a descent direction: restart
            {
                p = -g;
                dg0 = -gnorm * gnorm;
                s_mem.clear();
                y_mem.clear();
                rho_mem.clear();
                gamma = 1.0;
            }

            // Without curvature history the direction is an unscaled
            // gradient, whose natural step is 1/|g|; with history the
            // two-loop output is already well scaled.
            const double alpha_init =
                s_mem.empty() ? std::min(1.0, 1.0 / std::max(1.0, p.norm())) : 1.0;

            auto ls = detail::wolfe_search(fg, x, p, f, dg0, x_new, g_new, prm, alpha_init);
            if (!ls.ok)
            {
                if (m > 0) // retry once from steepest descent
                {
                    p = -g;
                    dg0 = -gnorm * gnorm;
                    s_mem.clear();
                    y_mem.clear();
                    rho_mem.clear();
                    gamma = 1.0;
                    ls = detail::wolfe_search(fg, x, p, f, dg0, x_new, g_new, prm,
                                              std::min(1.0, 1.0 / std::max(1.0, p.norm())));
                }
                if (!ls.ok)
                {
                    res = {SolveStatus::LineSearchFailed, iter, f, gnorm};
                    return res;
                }
            }

            Eigen::VectorXd s = x_new - x;
            Eigen::VectorXd yv = g_new - g;
            const double sy = s.dot(yv);
            const double f_prev = f;
            x.swap(x_new);
            g.swap(g_new);
            f = ls.f;

            if (sy > 1e-12 * s.norm() * yv.norm())
            {
                if (static_cast<int>(s_mem.size()) == prm.memory)
                {
                    s_mem.pop_front();
                    y_mem.pop_front();
                    rho_mem.pop_front();
                }
                s_mem.push_back(std::move(s));
                y_mem.push_back(std::move(yv));
                rho_mem.push_back(1.0 / sy);
                gamma = sy / y_mem.back().squaredNorm();
            }

            if (prm.rel_f_eps > 0.0 &&
                std::fabs(f_prev - f) <= prm.rel_f_eps * std::max(1.0, std::fabs(f)))
            {
                res = {SolveStatus::Converged, iter + 1, f, g.norm()};
                return res;
            }
        }
        res = {SolveStatus::MaxIterations, prm.max_iterations, f, g.norm()};
        return res;
    }

} // namespace slp

#endif
