#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hpfcm/geometry.hpp"

namespace hpfcm {

/// Cartesian base grid of hexahedral cells. Cells can be deactivated (e.g.
/// cells completely outside the embedded body are dropped from the
/// computation).
struct BaseGrid {
    Vec3 origin{0, 0, 0};
    Vec3 spacing{1, 1, 1};
    Int3 counts{1, 1, 1};
    std::vector<std::uint8_t> cell_active;  // empty means all active

    void validate() const;
    int cell_count() const { return counts[0] * counts[1] * counts[2]; }
    int cell_index(int i, int j, int k) const { return (i * counts[1] + j) * counts[2] + k; }
    Int3 cell_coords(int index) const;
    bool is_active(int i, int j, int k) const;
    Box cell_box(int i, int j, int k) const;
};

/// Identifies an element of the level-l overlay lattice. At level l the
/// domain is tiled by cells of size spacing / 2^l; (gx, gy, gz) are global
/// lattice coordinates at that level.
struct ElementKey {
    int level = 0;
    int gx = 0, gy = 0, gz = 0;

    bool operator==(const ElementKey&) const = default;
};

/// Stable identity of a leaf across mesh modifications (same key <=> same
/// geometric box).
using LeafKey = ElementKey;

std::uint64_t pack_element_key(const ElementKey& k);

struct Leaf {
    int cell = 0;   // base cell index
    int node = 0;   // node index within the cell tree
    int level = 0;
    int gx = 0, gy = 0, gz = 0;  // global lattice coordinates at 'level'
    LeafKey key() const { return {level, gx, gy, gz}; }
};

/// Change record of one refine/coarsen call. Geometric correspondence: each
/// new leaf listed in `refined` is one of the 8 children of the named old
/// leaf; each entry of `coarsened` replaces the 8 former children of the
/// named element. Leaves not mentioned are unchanged.
struct MeshDelta {
    std::vector<std::pair<LeafKey, std::array<LeafKey, 8>>> refined;
    std::vector<LeafKey> coarsened;          // new leaves created by child removal
    std::vector<LeafKey> skipped_coarsening; // requests dropped to keep the 2:1 balance
    bool empty() const { return refined.empty() && coarsened.empty(); }
};

enum class ElementStatus : unsigned char {
    Outside,  // position maps outside the active base grid
    Covered,  // inside the domain but covered by a coarser leaf
    Leaf,
    Refined
};

/// Hexahedral mesh with multi-level overlay refinement by superposition.
/// Each base cell carries an octree of overlay elements; leaves tile the
/// cell exactly. Face-adjacent leaves never differ by more than one level.
class MlhpMesh {
public:
    MlhpMesh() = default;
    MlhpMesh(BaseGrid grid, int max_level);

    const BaseGrid& grid() const { return grid_; }
    int max_level() const { return max_level_; }

    const std::vector<Leaf>& leaves() const { return leaves_; }
    Box leaf_box(const Leaf& leaf) const;
    Box element_box(const ElementKey& key) const;

    /// Status of the element lattice position (level, gx, gy, gz).
    ElementStatus element_status(const ElementKey& key) const;

    /// Leaf containing the point. Points on internal faces resolve to the
    /// upper neighbor by default, or to the lower one (lowest leaf id) with
    /// prefer_lower. Returns std::nullopt outside the active grid.
    std::optional<int> leaf_at(const Vec3& point, bool prefer_lower = false) const;

    int leaf_index(const LeafKey& key) const;  // -1 when no such leaf

    /// Refine the marked leaves into 8 children each. Additional leaves are
    /// refined as needed to keep the 2:1 face balance. Throws if a marked
    /// leaf already sits at max_level.
    MeshDelta refine(std::span<const int> marked_leaves);

    /// Remove the children of the marked elements. Throws if a marked
    /// element has non-leaf children. Requests that would break the 2:1
    /// balance are skipped and reported in the delta.
    MeshDelta coarsen(std::span<const ElementKey> marked);

    /// Leaves whose centroid signed-distance magnitude is below `band`.
    /// Only leaves below max_level are returned (they are refinable).
    std::vector<int> mark_by_band(const std::function<double(const Vec3&)>& distance,
                                  double band) const;

    /// Structured text dump of the tree state for debugging and golden tests.
    void dump(std::ostream& os) const;

    bool operator==(const MlhpMesh& other) const;

private:
    struct Node {
        std::int32_t first_child = -1;  // index of first of 8 contiguous children
        std::uint8_t level = 0;
        std::uint16_t li = 0, lj = 0, lk = 0;  // coords within the base cell at 'level'
        bool is_leaf() const { return first_child < 0; }
    };
    struct CellTree {
        std::vector<Node> nodes;  // nodes[0] is the base cell
    };

    BaseGrid grid_;
    int max_level_ = 0;
    std::vector<CellTree> trees_;
    std::vector<Leaf> leaves_;
    std::unordered_map<std::uint64_t, int> leaf_lookup_;

    void rebuild_leaves();
    const Node* find_node(const ElementKey& key, int* cell_out = nullptr) const;
    void refine_node(int cell, int node_local);
    friend class DofEnumerator;
};

/// Map from active topological components to global dof ranges. Numbering is
/// deterministic: ascending level, then vertices, edges, faces, volumes,
/// then lexicographic lattice order, then mode index.
struct DofLayout {
    int order = 1;
    std::int64_t total = 0;

    struct Entry {
        std::uint64_t key;       // packed component key
        std::int32_t dof_start;
    };
    std::vector<Entry> entries;  // sorted by key
    std::unordered_map<std::uint64_t, std::int32_t> index;

    std::int32_t find(std::uint64_t component_key) const {
        auto it = index.find(component_key);
        return it == index.end() ? -1 : it->second;
    }
};

/// Component kinds used in packed keys: 0 vertex, 1..3 edge along x/y/z,
/// 4..6 face normal to x/y/z, 7 volume.
std::uint64_t pack_component_key(int level, int kind, int gx, int gy, int gz);
int component_mode_count(int kind, int order);

/// Build the dof layout for isotropic order p. Compatibility and linear
/// independence of the superposed basis are enforced by deactivating
/// topological components: a level-l component stays active only if at
/// least one level-l element containing it is a leaf, and (for l >= 1) every
/// containing lattice position inside the domain carries a level-l element.
DofLayout enumerate_dofs(const MlhpMesh& mesh, int order);

}  // namespace hpfcm
