#pragma once

#include <array>
#include <vector>

#include "hpfcm/geometry.hpp"

namespace hpfcm {

/// One-dimensional hierarchic shape functions on [-1, 1]: the two linear
/// nodal functions followed by the integrated Legendre internal modes
///   N_k = (L_k - L_{k-2}) / sqrt(4k - 2),  k = 2..p,
/// which vanish at both endpoints. For order p there are p + 1 functions.
struct ShapeSet1D {
    int order;

    explicit ShapeSet1D(int p);

    int count() const { return order + 1; }

    /// Values of all p+1 functions at xi. Throws std::domain_error for
    /// |xi| > 1 + 1e-12.
    std::vector<double> eval(double xi) const;

    /// Values and first derivatives.
    void eval(double xi, std::vector<double>& values, std::vector<double>& derivatives) const;
};

/// Legendre polynomials L_0..L_n at xi (helper for the transfer fit basis).
void legendre(int n, double xi, std::vector<double>& values);

enum class ComponentType : unsigned char { Vertex = 0, Edge = 1, Face = 2, Volume = 3 };

/// Owning topological component of a tensor product function.
struct TopologicalComponent {
    ComponentType type;
    int index;  // vertex 0..7, edge 0..11, face 0..5, volume 0
};

/// Tensor product basis on the reference hexahedron [-1,1]^3. Each function
/// is a product of 1D factors identified by (i, j, k); factor indices 0 and 1
/// are the nodal functions, >= 2 the internal modes. Every function belongs
/// to exactly one topological component of the hexahedron.
struct HexBasis {
    Int3 orders;

    explicit HexBasis(Int3 p);
    explicit HexBasis(int p) : HexBasis(Int3{p, p, p}) {}

    int count() const { return (orders[0] + 1) * (orders[1] + 1) * (orders[2] + 1); }

    Int3 factor_indices(int function) const;
    TopologicalComponent component(int function) const;

    /// Values and gradients of all functions at a local point.
    void eval(const Vec3& local, std::vector<double>& values, std::vector<Vec3>& gradients) const;
};

/// Row vector spanning the full tensor product polynomial space of a leaf:
/// products of Legendre polynomials L_i(r) L_j(s) L_k(t), i <= orders[0] etc.
/// The first entry is the constant mode. Used by the least squares transfer.
std::vector<double> legendre_vector(const Int3& orders, const Vec3& local);

inline int legendre_vector_size(const Int3& orders) {
    return (orders[0] + 1) * (orders[1] + 1) * (orders[2] + 1);
}

}  // namespace hpfcm
