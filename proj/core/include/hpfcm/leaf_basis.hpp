#pragma once

#include <vector>

#include "hpfcm/geometry.hpp"
#include "hpfcm/mlhp_mesh.hpp"

namespace hpfcm {

/// One active global basis function restricted to a leaf. Every function is
/// a tensor product of 1D factors in the local frame of the ancestor element
/// it belongs to; factor indices 0/1 are nodal, >= 2 integrated Legendre
/// internal modes.
struct LeafFunctionRef {
    std::int32_t dof;
    std::uint8_t anc;  // ancestor slot (0 = base element, leaf.level = own)
    std::uint8_t fi, fj, fk;
};

/// All active functions with support on one leaf, together with the affine
/// maps from leaf-local to ancestor-local coordinates:
///   xi_anc = anc_scale[a] * xi_leaf + anc_offset[a]   (per axis)
struct LeafBasis {
    int leaf = -1;
    int level = 0;
    std::vector<double> anc_scale;
    std::vector<Vec3> anc_offset;
    std::vector<LeafFunctionRef> functions;

    int size() const { return static_cast<int>(functions.size()); }
};

/// Mesh + order + dof layout + per-leaf function tables. A value type; a
/// snapshot taken before refinement stays evaluable (needed by the variable
/// transfer).
struct Discretization {
    MlhpMesh mesh;
    int order = 1;
    DofLayout layout;
    std::vector<LeafBasis> leaf_bases;

    std::int64_t dof_count() const { return layout.total; }
};

Discretization build_discretization(const MlhpMesh& mesh, int order);

/// Values and physical-space gradients of all leaf functions at a set of
/// points, stored point-major: value[pt * n_fn + fn].
struct BasisValues {
    int n_fn = 0;
    int n_pt = 0;
    std::vector<double> value;
    std::vector<Vec3> gradient;

    double val(int pt, int fn) const { return value[static_cast<std::size_t>(pt) * n_fn + fn]; }
    const Vec3& grad(int pt, int fn) const { return gradient[static_cast<std::size_t>(pt) * n_fn + fn]; }
};

/// Evaluate on a tensor grid of local points (x outer, z innermost), i.e.
/// point index = (qx * ny + qy) * nz + qz. Exploits the tensor structure.
BasisValues eval_on_tensor_grid(const Discretization& disc, int leaf,
                                const std::vector<double>& xi_x,
                                const std::vector<double>& xi_y,
                                const std::vector<double>& xi_z);

/// Evaluate at arbitrary local points.
BasisValues eval_at_points(const Discretization& disc, int leaf, std::span<const Vec3> local_points);

/// Evaluate at the points of a volume rule, exploiting the tensor structure
/// when the rule has one.
struct LeafQuadrature;


/// Evaluate the scalar field given by `dofs` at a physical point; returns
/// false when the point lies outside the mesh. `stride` and `offset` select
/// interleaved components (e.g. displacement components).
bool eval_field(const Discretization& disc, std::span<const double> dofs, const Vec3& point,
                double& out, int stride = 1, int offset = 0);

/// Per-axis 1D integrals of factor products over a leaf, for the separable
/// fast path of constant-coefficient element matrices:
///   integral(f, g, da, db) = prod_axis sum_q w_q fac_f^{(da)} fac_g^{(db)}
/// where da/db choose value or physical derivative on that axis.
struct SeparableLeafIntegrals {
    int n_fn = 0;
    std::array<int, 3> n_axis{0, 0, 0};
    std::array<std::vector<int>, 3> fn_axis;      // per axis: function -> axis factor id
    // per axis: (vv, vd, dv, dd) matrices flattened n_axis x n_axis
    std::array<std::array<std::vector<double>, 4>, 3> m;

    /// d(f/g) in {-1: value, 0..2: derivative w.r.t. that axis}
    double stiffness_entry(int f, int g, int df, int dg) const;
    double mass_entry(int f, int g) const;
};

SeparableLeafIntegrals build_separable_integrals(const Discretization& disc, int leaf, int gauss_order);

}  // namespace hpfcm
