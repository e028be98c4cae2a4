#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace hpfcm {

using Vec3 = std::array<double, 3>;
using Int3 = std::array<int, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Axis-aligned box, used for leaf elements, voxels and octree recursion.
struct Box {
    Vec3 lo{0, 0, 0};
    Vec3 hi{0, 0, 0};

    Vec3 center() const { return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])}; }
    Vec3 size() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
    double volume() const { auto s = size(); return s[0] * s[1] * s[2]; }
    double half_diagonal() const { auto s = size(); return 0.5 * norm(s); }
    bool contains(const Vec3& p) const {
        return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1] && p[2] >= lo[2] && p[2] <= hi[2];
    }
    /// Map local coordinates in [-1,1]^3 to physical coordinates.
    Vec3 map_local(const Vec3& xi) const {
        return {lo[0] + 0.5 * (xi[0] + 1.0) * (hi[0] - lo[0]),
                lo[1] + 0.5 * (xi[1] + 1.0) * (hi[1] - lo[1]),
                lo[2] + 0.5 * (xi[2] + 1.0) * (hi[2] - lo[2])};
    }
    Vec3 to_local(const Vec3& x) const {
        return {2.0 * (x[0] - lo[0]) / (hi[0] - lo[0]) - 1.0,
                2.0 * (x[1] - lo[1]) / (hi[1] - lo[1]) - 1.0,
                2.0 * (x[2] - lo[2]) / (hi[2] - lo[2]) - 1.0};
    }
};

/// Symmetric second order tensor, components (xx, yy, zz, yz, xz, xy).
struct SymTensor3 {
    std::array<double, 6> a{0, 0, 0, 0, 0, 0};

    static constexpr int XX = 0, YY = 1, ZZ = 2, YZ = 3, XZ = 4, XY = 5;

    double& operator[](int i) { return a[i]; }
    double operator[](int i) const { return a[i]; }

    double operator()(int i, int j) const {
        if (i == j) return a[i];
        int k = i + j;  // 0+1->xy(5), 0+2->xz(4), 1+2->yz(3)
        return a[k == 1 ? XY : (k == 2 ? XZ : YZ)];
    }
    void set(int i, int j, double v) {
        if (i == j) { a[i] = v; return; }
        int k = i + j;
        a[k == 1 ? XY : (k == 2 ? XZ : YZ)] = v;
    }

    double trace() const { return a[0] + a[1] + a[2]; }

    SymTensor3 deviator() const {
        double m = trace() / 3.0;
        SymTensor3 d = *this;
        d.a[0] -= m; d.a[1] -= m; d.a[2] -= m;
        return d;
    }

    /// Full double contraction A : B, off-diagonals counted twice.
    double contract(const SymTensor3& b) const {
        return a[0] * b.a[0] + a[1] * b.a[1] + a[2] * b.a[2] +
               2.0 * (a[3] * b.a[3] + a[4] * b.a[4] + a[5] * b.a[5]);
    }

    double frobenius_norm() const { return std::sqrt(contract(*this)); }

    SymTensor3& operator+=(const SymTensor3& b) { for (int i = 0; i < 6; ++i) a[i] += b.a[i]; return *this; }
    SymTensor3& operator-=(const SymTensor3& b) { for (int i = 0; i < 6; ++i) a[i] -= b.a[i]; return *this; }
    SymTensor3& operator*=(double s) { for (int i = 0; i < 6; ++i) a[i] *= s; return *this; }

    static SymTensor3 identity() { return SymTensor3{{1, 1, 1, 0, 0, 0}}; }
    static SymTensor3 isotropic(double v) { return SymTensor3{{v, v, v, 0, 0, 0}}; }
};

inline SymTensor3 operator+(SymTensor3 x, const SymTensor3& y) { x += y; return x; }
inline SymTensor3 operator-(SymTensor3 x, const SymTensor3& y) { x -= y; return x; }
inline SymTensor3 operator*(double s, SymTensor3 x) { x *= s; return x; }

/// t_i = sum_j T_ij n_j
inline Vec3 apply(const SymTensor3& t, const Vec3& n) {
    return {t(0, 0) * n[0] + t(0, 1) * n[1] + t(0, 2) * n[2],
            t(1, 0) * n[0] + t(1, 1) * n[1] + t(1, 2) * n[2],
            t(2, 0) * n[0] + t(2, 1) * n[1] + t(2, 2) * n[2]};
}

}  // namespace hpfcm
