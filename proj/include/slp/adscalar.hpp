#ifndef SLP_ADSCALAR_HPP
#define SLP_ADSCALAR_HPP

#include <Eigen/Dense>
#include <cmath>

namespace slp
{
    // Forward-mode dual number carrying an N-dimensional gradient.
    template <int N>
    struct Dual
    {
        double v{0.0};
        Eigen::Matrix<double, N, 1> g{Eigen::Matrix<double, N, 1>::Zero()};

        Dual() = default;
        Dual(double value) : v(value) { g.setZero(); }
        Dual(double value, const Eigen::Matrix<double, N, 1> &grad) : v(value), g(grad) {}

        static Dual seed(double value, int k)
        {
            Dual d(value);
            d.g(k) = 1.0;
            return d;
        }
    };

    template <int N> inline Dual<N> operator+(const Dual<N> &a, const Dual<N> &b) { return {a.v + b.v, a.g + b.g}; }
    template <int N> inline Dual<N> operator-(const Dual<N> &a, const Dual<N> &b) { return {a.v - b.v, a.g - b.g}; }
    template <int N> inline Dual<N> operator-(const Dual<N> &a) { return {-a.v, -a.g}; }
    template <int N> inline Dual<N> operator*(const Dual<N> &a, const Dual<N> &b) { return {a.v * b.v, a.v * b.g + b.v * a.g}; }
    template <int N> inline Dual<N> operator*(double s, const Dual<N> &a) { return {s * a.v, s * a.g}; }
    template <int N> inline Dual<N> operator*(const Dual<N> &a, double s) { return s * a; }
    template <int N> inline Dual<N> operator/(const Dual<N> &a, const Dual<N> &b)
    {
        const double inv = 1.0 / b.v;
        return {a.v * inv, (a.g - (a.v * inv) * b.g) * inv};
    }
    template <int N> inline Dual<N> operator/(const Dual<N> &a, double s) { return {a.v / s, a.g / s}; }
    template <int N> inline Dual<N> operator+(const Dual<N> &a, double s) { return {a.v + s, a.g}; }
    template <int N> inline Dual<N> operator+(double s, const Dual<N> &a) { return {a.v + s, a.g}; }
    template <int N> inline Dual<N> operator-(const Dual<N> &a, double s) { return {a.v - s, a.g}; }
    template <int N> inline Dual<N> operator-(double s, const Dual<N> &a) { return {s - a.v, -a.g}; }
    template <int N> inline Dual<N> sqrt(const Dual<N> &a)
    {
        const double s = std::sqrt(a.v);
        return {s, a.g / (2.0 * s)};
    }

    // Truncated Taylor jet: value and first three time derivatives.
    struct Jet3
    {
        double f{0.0}, d1{0.0}, d2{0.0}, d3{0.0};

        Jet3() = default;
        Jet3(double v) : f(v) {}
        Jet3(double v, double a, double b, double c) : f(v), d1(a), d2(b), d3(c) {}
    };

    inline Jet3 operator+(const Jet3 &a, const Jet3 &b) { return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3}; }
    inline Jet3 operator-(const Jet3 &a, const Jet3 &b) { return {a.f - b.f, a.d1 - b.d1, a.d2 - b.d2, a.d3 - b.d3}; }
    inline Jet3 operator-(const Jet3 &a) { return {-a.f, -a.d1, -a.d2, -a.d3}; }
    inline Jet3 operator*(const Jet3 &a, const Jet3 &b)
    {
        return {a.f * b.f,
                a.d1 * b.f + a.f * b.d1,
                a.d2 * b.f + 2.0 * a.d1 * b.d1 + a.f * b.d2,
                a.d3 * b.f + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.f * b.d3};
    }
    inline Jet3 operator*(double s, const Jet3 &a) { return {s * a.f, s * a.d1, s * a.d2, s * a.d3}; }
    inline Jet3 operator*(const Jet3 &a, double s) { return s * a; }
    inline Jet3 operator+(const Jet3 &a, double s) { return {a.f + s, a.d1, a.d2, a.d3}; }
    inline Jet3 operator+(double s, const Jet3 &a) { return a + s; }
    inline Jet3 operator-(const Jet3 &a, double s) { return {a.f - s, a.d1, a.d2, a.d3}; }
    inline Jet3 operator-(double s, const Jet3 &a) { return -(a - s); }
    inline Jet3 reciprocal(const Jet3 &x)
    {
        Jet3 r;
        r.f = 1.0 / x.f;
        r.d1 = -r.f * x.d1 / x.f;
        r.d2 = -(2.0 * r.d1 * x.d1 + r.f * x.d2) / x.f;
        r.d3 = -(3.0 * r.d2 * x.d1 + 3.0 * r.d1 * x.d2 + r.f * x.d3) / x.f;
        return r;
    }
    inline Jet3 operator/(const Jet3 &a, const Jet3 &b) { return a * reciprocal(b); }
    inline Jet3 operator/(const Jet3 &a, double s) { return a * (1.0 / s); }
    inline Jet3 sqrt(const Jet3 &x)
    {
        Jet3 s;
        s.f = std::sqrt(x.f);
        s.d1 = x.d1 / (2.0 * s.f);
        s.d2 = (x.d2 - 2.0 * s.d1 * s.d1) / (2.0 * s.f);
        s.d3 = (x.d3 - 6.0 * s.d1 * s.d2) / (2.0 * s.f);
        return s;
    }

    // Minimal 3-vector over any scalar supporting field ops and sqrt.
    template <class S>
    struct V3
    {
        S x{}, y{}, z{};

        V3() = default;
        V3(const S &a, const S &b, const S &c) : x(a), y(b), z(c) {}
    };

    template <class S> inline V3<S> operator+(const V3<S> &a, const V3<S> &b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    template <class S> inline V3<S> operator-(const V3<S> &a, const V3<S> &b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    template <class S> inline V3<S> operator-(const V3<S> &a) { return {-a.x, -a.y, -a.z}; }
    template <class S> inline V3<S> operator*(const S &s, const V3<S> &a) { return {s * a.x, s * a.y, s * a.z}; }
    template <class S> inline V3<S> operator*(double s, const V3<S> &a) { return {s * a.x, s * a.y, s * a.z}; }
    template <class S> inline S dot(const V3<S> &a, const V3<S> &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
    template <class S> inline V3<S> cross(const V3<S> &a, const V3<S> &b)
    {
        return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    }
    template <class S> inline S norm(const V3<S> &a)
    {
        using std::sqrt;
        using slp::sqrt;
        return sqrt(dot(a, a));
    }

    template <class S>
    inline V3<S> lift(const Eigen::Vector3d &v) { return {S(v.x()), S(v.y()), S(v.z())}; }

    inline Eigen::Vector3d value_of(const V3<double> &v) { return {v.x, v.y, v.z}; }
    inline Eigen::Vector3d value_of(const V3<Jet3> &v) { return {v.x.f, v.y.f, v.z.f}; }
    template <int N>
    inline Eigen::Vector3d value_of(const V3<Dual<N>> &v) { return {v.x.v, v.y.v, v.z.v}; }

} // namespace slp

#endif
