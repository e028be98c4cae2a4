#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hpfcm/geometry.hpp"
#include "hpfcm/leaf_basis.hpp"
#include "hpfcm/mlhp_mesh.hpp"

namespace hpfcm {

/// Implicit description of the physical domain. `inside` must be total over
/// the computational box; `signed_distance` is optional and only needed for
/// embedded surface quadrature and conservative cut detection. Convention:
/// the zero level set is the surface of interest, the gradient of the
/// distance defines the surface normal.
struct ImplicitGeometry {
    std::function<bool(const Vec3&)> inside;
    std::function<double(const Vec3&)> signed_distance;  // may be empty

    bool has_distance() const { return static_cast<bool>(signed_distance); }
};

ImplicitGeometry make_sphere_shell(Vec3 center, double r_inner, double r_outer);
ImplicitGeometry make_sphere(Vec3 center, double r);      // inside = |x-c| <= r
ImplicitGeometry make_halfspace(Vec3 point, Vec3 normal); // inside = (x-p).n <= 0
ImplicitGeometry make_box_region(Box box);
ImplicitGeometry make_union(ImplicitGeometry a, ImplicitGeometry b);
ImplicitGeometry make_all();

/// Indicator weighting of the fictitious domain.
struct IndicatorAlpha {
    double alpha_fict = 1e-8;
    bool warned = false;

    explicit IndicatorAlpha(double a = 1e-8);
    double value(bool physical) const { return physical ? 1.0 : alpha_fict; }
};

/// One point of a volume rule in leaf-local coordinates (reference volume 8).
struct QuadraturePoint {
    Vec3 local;
    double weight;
    double alpha;  // 1 or alpha_fict
};

/// Per-leaf volume rule. Uncut leaves carry a plain tensor Gauss rule (the
/// lattice axes are kept for the transfer interpolation); cut leaves use a
/// split-line rule: a transverse grid of Gauss lines, each line divided at
/// every interface crossing, every sub-segment integrated on its own side.
/// All weights are positive, so assembled operators stay definite. Each
/// point carries separate weights for the physical and the fictitious
/// measure; flatten() expands to the (point, weight, alpha) view.
struct LeafQuadrature {
    std::vector<Vec3> points;                 // local coordinates
    std::vector<double> w_phys;               // physical-measure weights
    std::vector<double> w_fict;               // fictitious-measure weights (without alpha)
    std::array<std::vector<double>, 3> axes;  // tensor lattice axes (uncut leaves only)
    bool cut = false;

    int lattice_size() const { return static_cast<int>(points.size()); }
    const Vec3& lattice_point(int index) const { return points[index]; }
    bool has_lattice() const { return !axes[0].empty(); }
    std::vector<QuadraturePoint> flatten(double alpha_fict) const;
    double physical_volume() const;  // sum of w_phys
};

/// Raw recursive-bisection rule of one leaf (debug/reference view).
std::vector<QuadraturePoint> build_octree_rule(const Box& leaf_box, const ImplicitGeometry& geometry,
                                               int depth, int gauss_order, double alpha_fict);

/// Volume rule for one leaf. Lines with an ambiguous crossing pattern fall
/// back to recursive bisection up to `depth`.
LeafQuadrature build_quadrature(const Box& leaf_box, const ImplicitGeometry& geometry, int depth,
                                int gauss_order, int lattice_order);

/// Surface quadrature point in physical coordinates.
struct SurfacePoint {
    Vec3 position;
    double weight;  // area weight
    Vec3 normal;    // normalized distance gradient
};

/// Quadrature over the zero isosurface inside a leaf, built by recursive
/// bisection plus marching cubes with bisection root finding on the edges.
/// Returns an empty set when the leaf does not intersect the surface.
std::vector<SurfacePoint> embedded_surface_quadrature(const Box& leaf_box,
                                                      const ImplicitGeometry& geometry, int depth,
                                                      int points_per_triangle = 7);

/// Volume rules for every leaf of a discretization.
struct QuadraturePlan {
    double alpha_fict = 1e-8;
    int depth = 4;
    std::vector<LeafQuadrature> leaves;

    const LeafQuadrature& of(int leaf) const { return leaves[leaf]; }
};

QuadraturePlan build_quadrature_plan(const Discretization& disc, const ImplicitGeometry& geometry,
                                     double alpha_fict, int depth, int gauss_order = 0);

/// Basis values at the points of a leaf rule (tensor fast path when the
/// rule is a lattice).
BasisValues eval_plan_points(const Discretization& disc, int leaf, const LeafQuadrature& rule);

/// Material state of a voxel. Deposition is monotone: Air may become
/// Deposited, never the reverse.
enum class MatState : std::uint8_t { Air = 0, Liquid = 1, Deposited = 2, Base = 3 };

/// Dynamic octree container tracking the material state of space, decoupled
/// from the finite element meshes: refining or coarsening a mesh never
/// touches this grid.
class VoxelStateGrid {
public:
    VoxelStateGrid() = default;
    VoxelStateGrid(Box box, double resolution, MatState initial = MatState::Air);

    const Box& box() const { return box_; }
    double resolution() const { return resolution_; }

    /// Initial assignment of a region (e.g. the base plate). Not monotone.
    void set_region(const ImplicitGeometry& region, MatState state, double time = 0.0);

    /// Flip Air voxels inside the region to Deposited with a timestamp.
    void deposit(const ImplicitGeometry& region, double time);

    /// State at a point; throws std::out_of_range outside the box.
    MatState classify(const Vec3& point) const;

    /// Deposit timestamp of the voxel containing the point (0 if never).
    double deposit_time(const Vec3& point) const;

    double state_volume(MatState state) const;

    /// Flat list (center, size, state, timestamp), one voxel per line.
    void snapshot(std::ostream& os) const;

private:
    struct VNode {
        std::int32_t first_child = -1;
        MatState state = MatState::Air;
        float time = 0.0f;
        bool is_leaf() const { return first_child < 0; }
    };

    Box box_{};
    double resolution_ = 1.0;
    std::vector<VNode> nodes_;

    void apply(int node, const Box& box, const ImplicitGeometry& region, MatState state, double time,
               bool monotone);
    void split(int node);
};

/// Base-cell activity mask: a cell stays active unless it is verifiably
/// outside the physical domain (all samples fictitious and, when a distance
/// is available, farther from the surface than the cell half-diagonal).
std::vector<std::uint8_t> active_cells_from_geometry(const BaseGrid& grid,
                                                     const ImplicitGeometry& geometry);

}  // namespace hpfcm
