#include "hpfcm/mlhp_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hpfcm {

void BaseGrid::validate() const {
    for (int d = 0; d < 3; ++d) {
        if (counts[d] < 1) throw std::invalid_argument("BaseGrid: counts must be >= 1 per axis");
        if (!(spacing[d] > 0.0)) throw std::invalid_argument("BaseGrid: spacing must be > 0");
    }
    if (!cell_active.empty() && static_cast<int>(cell_active.size()) != cell_count())
        throw std::invalid_argument("BaseGrid: active mask size mismatch");
}

Int3 BaseGrid::cell_coords(int index) const {
    int k = index % counts[2];
    int j = (index / counts[2]) % counts[1];
    int i = index / (counts[2] * counts[1]);
    return {i, j, k};
}

bool BaseGrid::is_active(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= counts[0] || j >= counts[1] || k >= counts[2]) return false;
    if (cell_active.empty()) return true;
    return cell_active[cell_index(i, j, k)] != 0;
}

Box BaseGrid::cell_box(int i, int j, int k) const {
    Vec3 lo{origin[0] + i * spacing[0], origin[1] + j * spacing[1], origin[2] + k * spacing[2]};
    return {lo, {lo[0] + spacing[0], lo[1] + spacing[1], lo[2] + spacing[2]}};
}

std::uint64_t pack_element_key(const ElementKey& k) {
    return pack_component_key(k.level, 7, k.gx, k.gy, k.gz);
}

std::uint64_t pack_component_key(int level, int kind, int gx, int gy, int gz) {
    // 4 bits level | 4 bits kind | 3 x 18 bits coordinates
    return (static_cast<std::uint64_t>(level) << 60) | (static_cast<std::uint64_t>(kind) << 56) |
           (static_cast<std::uint64_t>(gx) << 36) | (static_cast<std::uint64_t>(gy) << 18) |
           static_cast<std::uint64_t>(gz);
}

int component_mode_count(int kind, int order) {
    int m = order - 1;
    if (kind == 0) return 1;
    if (kind <= 3) return m;
    if (kind <= 6) return m * m;
    return m * m * m;
}

MlhpMesh::MlhpMesh(BaseGrid grid, int max_level) : grid_(std::move(grid)), max_level_(max_level) {
    grid_.validate();
    if (max_level_ < 0) throw std::invalid_argument("MlhpMesh: max_level must be >= 0");
    trees_.resize(grid_.cell_count());
    for (int c = 0; c < grid_.cell_count(); ++c) {
        auto ijk = grid_.cell_coords(c);
        if (grid_.is_active(ijk[0], ijk[1], ijk[2])) trees_[c].nodes.push_back(Node{});
    }
    rebuild_leaves();
}

void MlhpMesh::rebuild_leaves() {
    leaves_.clear();
    leaf_lookup_.clear();
    for (int c = 0; c < static_cast<int>(trees_.size()); ++c) {
        const auto& tree = trees_[c];
        if (tree.nodes.empty()) continue;
        auto ijk = grid_.cell_coords(c);
        // pre-order traversal, children in octant order
        std::vector<int> stack{0};
        std::vector<int> order;
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            order.push_back(n);
            if (!tree.nodes[n].is_leaf())
                for (int o = 7; o >= 0; --o) stack.push_back(tree.nodes[n].first_child + o);
        }
        for (int n : order) {
            const Node& node = tree.nodes[n];
            if (!node.is_leaf()) continue;
            Leaf leaf;
            leaf.cell = c;
            leaf.node = n;
            leaf.level = node.level;
            leaf.gx = (ijk[0] << node.level) + node.li;
            leaf.gy = (ijk[1] << node.level) + node.lj;
            leaf.gz = (ijk[2] << node.level) + node.lk;
            leaf_lookup_[pack_element_key(leaf.key())] = static_cast<int>(leaves_.size());
            leaves_.push_back(leaf);
        }
    }
}

Box MlhpMesh::element_box(const ElementKey& key) const {
    double f = 1.0 / static_cast<double>(1 << key.level);
    Vec3 h{grid_.spacing[0] * f, grid_.spacing[1] * f, grid_.spacing[2] * f};
    Vec3 lo{grid_.origin[0] + key.gx * h[0], grid_.origin[1] + key.gy * h[1], grid_.origin[2] + key.gz * h[2]};
    return {lo, {lo[0] + h[0], lo[1] + h[1], lo[2] + h[2]}};
}

Box MlhpMesh::leaf_box(const Leaf& leaf) const { return element_box(leaf.key()); }

const MlhpMesh::Node* MlhpMesh::find_node(const ElementKey& key, int* cell_out) const {
    int bi = key.gx >> key.level, bj = key.gy >> key.level, bk = key.gz >> key.level;
    if (!grid_.is_active(bi, bj, bk)) return nullptr;
    int cell = grid_.cell_index(bi, bj, bk);
    if (trees_[cell].nodes.empty()) return nullptr;
    if (cell_out) *cell_out = cell;
    const auto& nodes = trees_[cell].nodes;
    int n = 0;
    for (int depth = 1; depth <= key.level; ++depth) {
        if (nodes[n].is_leaf()) return nullptr;  // covered by a coarser leaf
        int shift = key.level - depth;
        int o = ((key.gx >> shift) & 1) | (((key.gy >> shift) & 1) << 1) | (((key.gz >> shift) & 1) << 2);
        n = nodes[n].first_child + o;
    }
    return &nodes[n];
}

ElementStatus MlhpMesh::element_status(const ElementKey& key) const {
    int bi = key.gx >> key.level, bj = key.gy >> key.level, bk = key.gz >> key.level;
    if (key.gx < 0 || key.gy < 0 || key.gz < 0 || !grid_.is_active(bi, bj, bk)) return ElementStatus::Outside;
    const Node* node = find_node(key);
    if (!node) return ElementStatus::Covered;
    return node->is_leaf() ? ElementStatus::Leaf : ElementStatus::Refined;
}

std::optional<int> MlhpMesh::leaf_at(const Vec3& point, bool prefer_lower) const {
    // Clamp onto the grid interior by a relative epsilon so that points on
    // upper boundaries resolve to the last cell.
    Int3 ci;
    for (int d = 0; d < 3; ++d) {
        double t = (point[d] - grid_.origin[d]) / grid_.spacing[d];
        if (t < -1e-12 || t > grid_.counts[d] + 1e-12) return std::nullopt;
        ci[d] = std::clamp(static_cast<int>(std::floor(t)), 0, grid_.counts[d] - 1);
    }
    if (!grid_.is_active(ci[0], ci[1], ci[2])) return std::nullopt;
    int cell = grid_.cell_index(ci[0], ci[1], ci[2]);
    if (trees_[cell].nodes.empty()) return std::nullopt;
    const auto& nodes = trees_[cell].nodes;
    Box box = grid_.cell_box(ci[0], ci[1], ci[2]);
    int n = 0;
    while (!nodes[n].is_leaf()) {
        Vec3 c = box.center();
        int o = 0;
        Box child = box;
        for (int d = 0; d < 3; ++d) {
            bool upper = prefer_lower ? point[d] > c[d] : point[d] >= c[d];
            if (upper) {
                o |= 1 << d;
                child.lo[d] = c[d];
            } else {
                child.hi[d] = c[d];
            }
        }
        n = nodes[n].first_child + o;
        box = child;
    }
    ElementKey key{nodes[n].level,
                   (ci[0] << nodes[n].level) + nodes[n].li,
                   (ci[1] << nodes[n].level) + nodes[n].lj,
                   (ci[2] << nodes[n].level) + nodes[n].lk};
    return leaf_index(key);
}

int MlhpMesh::leaf_index(const LeafKey& key) const {
    auto it = leaf_lookup_.find(pack_element_key(key));
    return it == leaf_lookup_.end() ? -1 : it->second;
}

void MlhpMesh::refine_node(int cell, int node_local) {
    auto& nodes = trees_[cell].nodes;
    Node parent = nodes[node_local];
    nodes[node_local].first_child = static_cast<std::int32_t>(nodes.size());
    for (int o = 0; o < 8; ++o) {
        Node child;
        child.level = parent.level + 1;
        child.li = static_cast<std::uint16_t>((parent.li << 1) + (o & 1));
        child.lj = static_cast<std::uint16_t>((parent.lj << 1) + ((o >> 1) & 1));
        child.lk = static_cast<std::uint16_t>((parent.lk << 1) + ((o >> 2) & 1));
        nodes.push_back(child);
    }
}

MeshDelta MlhpMesh::refine(std::span<const int> marked_leaves) {
    MeshDelta delta;
    for (int id : marked_leaves) {
        if (id < 0 || id >= static_cast<int>(leaves_.size()))
            throw std::out_of_range("refine: invalid leaf id");
        if (leaves_[id].level >= max_level_) {
            std::ostringstream msg;
            msg << "refine: leaf " << id << " (level " << leaves_[id].level << ", lattice " << leaves_[id].gx
                << "," << leaves_[id].gy << "," << leaves_[id].gz << ") already at max_level " << max_level_;
            throw std::runtime_error(msg.str());
        }
    }

    // Work on element keys; deepest first so 2:1 closure cascades correctly.
    std::set<std::uint64_t> seen;
    std::vector<ElementKey> work;
    for (int id : marked_leaves) {
        auto key = leaves_[id].key();
        if (seen.insert(pack_element_key(key)).second) work.push_back(key);
    }

    std::vector<ElementKey> to_refine;
    while (!work.empty()) {
        auto key = work.back();
        work.pop_back();
        to_refine.push_back(key);
        // Face neighbors must reach at least level key.level before this
        // element gains level key.level+1 children.
        for (int axis = 0; axis < 3; ++axis) {
            for (int dir : {-1, 1}) {
                ElementKey nb = key;
                (axis == 0 ? nb.gx : axis == 1 ? nb.gy : nb.gz) += dir;
                if (element_status(nb) != ElementStatus::Covered) continue;
                // find the covering leaf (the deepest existing element above)
                ElementKey cover = nb;
                while (cover.level > 0) {
                    cover = {cover.level - 1, cover.gx >> 1, cover.gy >> 1, cover.gz >> 1};
                    if (element_status(cover) == ElementStatus::Leaf) break;
                }
                if (seen.insert(pack_element_key(cover)).second) work.push_back(cover);
            }
        }
    }

    // Apply deepest-last (parents first) so the tree stays consistent.
    std::sort(to_refine.begin(), to_refine.end(),
              [](const ElementKey& a, const ElementKey& b) { return a.level < b.level; });
    for (const auto& key : to_refine) {
        int cell = -1;
        const Node* node = find_node(key, &cell);
        if (!node || !node->is_leaf()) continue;  // may have been refined by closure already
        refine_node(cell, static_cast<int>(node - trees_[cell].nodes.data()));
        std::array<LeafKey, 8> children;
        for (int o = 0; o < 8; ++o)
            children[o] = {key.level + 1, (key.gx << 1) + (o & 1), (key.gy << 1) + ((o >> 1) & 1),
                           (key.gz << 1) + ((o >> 2) & 1)};
        delta.refined.emplace_back(key, children);
    }
    rebuild_leaves();
    return delta;
}

MeshDelta MlhpMesh::coarsen(std::span<const ElementKey> marked) {
    MeshDelta delta;
    std::vector<ElementKey> sorted(marked.begin(), marked.end());
    std::sort(sorted.begin(), sorted.end(), [](const ElementKey& a, const ElementKey& b) {
        if (a.level != b.level) return a.level > b.level;  // deepest first
        return pack_element_key(a) < pack_element_key(b);
    });
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    for (const auto& key : sorted) {
        int cell = -1;
        const Node* node = find_node(key, &cell);
        if (!node) throw std::runtime_error("coarsen: no element at the marked position");
        if (node->is_leaf()) throw std::runtime_error("coarsen: marked element has no children");
        auto& nodes = trees_[cell].nodes;
        int first = node->first_child;
        for (int o = 0; o < 8; ++o)
            if (!nodes[first + o].is_leaf())
                throw std::runtime_error("coarsen: marked element has non-leaf children");

        // 2:1 balance: removing the children leaves 'key' as a leaf at its
        // level; every face neighbor must then be at most one level deeper,
        // i.e. no neighbor child touching the shared face may be refined.
        bool ok = true;
        for (int axis = 0; axis < 3 && ok; ++axis) {
            for (int dir : {-1, 1}) {
                ElementKey nb = key;
                (axis == 0 ? nb.gx : axis == 1 ? nb.gy : nb.gz) += dir;
                if (element_status(nb) != ElementStatus::Refined) continue;
                // children of nb adjacent to the shared face
                for (int o = 0; o < 8; ++o) {
                    int bit = (o >> axis) & 1;
                    if ((dir > 0 && bit != 0) || (dir < 0 && bit != 1)) continue;
                    ElementKey child{nb.level + 1, (nb.gx << 1) + (o & 1), (nb.gy << 1) + ((o >> 1) & 1),
                                     (nb.gz << 1) + ((o >> 2) & 1)};
                    if (element_status(child) == ElementStatus::Refined) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
            }
        }
        if (!ok) {
            delta.skipped_coarsening.push_back(key);
            continue;
        }
        // drop children (tombstone by truncating links; storage is compacted below)
        auto& mut = trees_[cell].nodes[node - trees_[cell].nodes.data()];
        mut.first_child = -1;
        delta.coarsened.push_back(key);
    }

    // Compact each touched tree: rebuild in canonical pre-order.
    for (auto& tree : trees_) {
        if (tree.nodes.empty()) continue;
        std::vector<Node> compact;
        compact.reserve(tree.nodes.size());
        struct Item { int old_index; };
        std::vector<int> stack{0};
        // map old->new by two-pass: emit in pre-order, fixing child links
        std::vector<std::pair<int, int>> emit;  // (old, new)
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            emit.emplace_back(n, static_cast<int>(emit.size()));
            if (!tree.nodes[n].is_leaf())
                for (int o = 7; o >= 0; --o) stack.push_back(tree.nodes[n].first_child + o);
        }
        std::vector<int> remap(tree.nodes.size(), -1);
        for (auto [oldi, newi] : emit) remap[oldi] = newi;
        compact.resize(emit.size());
        for (auto [oldi, newi] : emit) {
            compact[newi] = tree.nodes[oldi];
            if (!tree.nodes[oldi].is_leaf()) compact[newi].first_child = remap[tree.nodes[oldi].first_child];
        }
        tree.nodes = std::move(compact);
    }
    rebuild_leaves();
    return delta;
}

std::vector<int> MlhpMesh::mark_by_band(const std::function<double(const Vec3&)>& distance,
                                        double band) const {
    std::vector<int> marked;
    if (!(band > 0.0)) return marked;
    for (int i = 0; i < static_cast<int>(leaves_.size()); ++i) {
        if (leaves_[i].level >= max_level_) continue;
        Vec3 c = leaf_box(leaves_[i]).center();
        if (std::abs(distance(c)) < band) marked.push_back(i);
    }
    return marked;
}

void MlhpMesh::dump(std::ostream& os) const {
    os << "mesh " << grid_.counts[0] << " " << grid_.counts[1] << " " << grid_.counts[2]
       << " max_level " << max_level_ << "\n";
    for (const auto& leaf : leaves_) {
        Box b = leaf_box(leaf);
        os << "leaf cell " << leaf.cell << " level " << leaf.level << " lattice " << leaf.gx << " "
           << leaf.gy << " " << leaf.gz << " box " << b.lo[0] << " " << b.lo[1] << " " << b.lo[2] << " "
           << b.hi[0] << " " << b.hi[1] << " " << b.hi[2] << "\n";
    }
}

bool MlhpMesh::operator==(const MlhpMesh& other) const {
    if (leaves_.size() != other.leaves_.size()) return false;
    for (std::size_t i = 0; i < leaves_.size(); ++i)
        if (!(leaves_[i].key() == other.leaves_[i].key())) return false;
    return true;
}

namespace {

struct ComponentCandidate {
    int kind;
    int gx, gy, gz;
    bool operator<(const ComponentCandidate& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (gx != o.gx) return gx < o.gx;
        if (gy != o.gy) return gy < o.gy;
        return gz < o.gz;
    }
    bool operator==(const ComponentCandidate&) const = default;
};

/// Lattice cell positions containing the component (and, for rule B, the
/// positions whose occupancy decides compatibility).
void containing_cells(const ComponentCandidate& c, std::vector<Int3>& out) {
    out.clear();
    switch (c.kind) {
        case 0:  // vertex
            for (int a = -1; a <= 0; ++a)
                for (int b = -1; b <= 0; ++b)
                    for (int d = -1; d <= 0; ++d) out.push_back({c.gx + a, c.gy + b, c.gz + d});
            break;
        case 1:  // edge along x
            for (int b = -1; b <= 0; ++b)
                for (int d = -1; d <= 0; ++d) out.push_back({c.gx, c.gy + b, c.gz + d});
            break;
        case 2:  // edge along y
            for (int a = -1; a <= 0; ++a)
                for (int d = -1; d <= 0; ++d) out.push_back({c.gx + a, c.gy, c.gz + d});
            break;
        case 3:  // edge along z
            for (int a = -1; a <= 0; ++a)
                for (int b = -1; b <= 0; ++b) out.push_back({c.gx + a, c.gy + b, c.gz});
            break;
        case 4:
            out.push_back({c.gx - 1, c.gy, c.gz});
            out.push_back({c.gx, c.gy, c.gz});
            break;
        case 5:
            out.push_back({c.gx, c.gy - 1, c.gz});
            out.push_back({c.gx, c.gy, c.gz});
            break;
        case 6:
            out.push_back({c.gx, c.gy, c.gz - 1});
            out.push_back({c.gx, c.gy, c.gz});
            break;
        default:
            out.push_back({c.gx, c.gy, c.gz});
            break;
    }
}

void emit_components(const ElementKey& e, std::set<ComponentCandidate>& out) {
    // vertices
    for (int a = 0; a <= 1; ++a)
        for (int b = 0; b <= 1; ++b)
            for (int d = 0; d <= 1; ++d) out.insert({0, e.gx + a, e.gy + b, e.gz + d});
    // edges along x/y/z (origin corner of each edge)
    for (int b = 0; b <= 1; ++b)
        for (int d = 0; d <= 1; ++d) {
            out.insert({1, e.gx, e.gy + b, e.gz + d});
            out.insert({2, e.gx + b, e.gy, e.gz + d});
            out.insert({3, e.gx + b, e.gy + d, e.gz});
        }
    // faces
    for (int s = 0; s <= 1; ++s) {
        out.insert({4, e.gx + s, e.gy, e.gz});
        out.insert({5, e.gx, e.gy + s, e.gz});
        out.insert({6, e.gx, e.gy, e.gz + s});
    }
    out.insert({7, e.gx, e.gy, e.gz});
}

}  // namespace

DofLayout enumerate_dofs(const MlhpMesh& mesh, int order) {
    if (order < 1) throw std::invalid_argument("enumerate_dofs: order must be >= 1");
    DofLayout layout;
    layout.order = order;

    int deepest = 0;
    for (const auto& leaf : mesh.leaves()) deepest = std::max(deepest, leaf.level);

    std::int64_t next = 0;
    for (int level = 0; level <= deepest; ++level) {
        // collect elements at this level: ancestors of leaves at >= level
        std::set<std::uint64_t> elem_seen;
        std::set<ComponentCandidate> candidates;
        for (const auto& leaf : mesh.leaves()) {
            if (leaf.level < level) continue;
            int shift = leaf.level - level;
            ElementKey e{level, leaf.gx >> shift, leaf.gy >> shift, leaf.gz >> shift};
            if (!elem_seen.insert(pack_element_key(e)).second) continue;
            emit_components(e, candidates);
        }

        std::vector<Int3> cells;
        for (const auto& c : candidates) {
            containing_cells(c, cells);
            bool has_leaf_support = false;
            bool compatible = true;
            for (const auto& pos : cells) {
                ElementStatus st = mesh.element_status({level, pos[0], pos[1], pos[2]});
                if (st == ElementStatus::Leaf) has_leaf_support = true;
                if (level > 0 && st == ElementStatus::Covered) compatible = false;
            }
            if (!has_leaf_support || !compatible) continue;
            int modes = component_mode_count(c.kind, order);
            if (modes == 0) continue;
            layout.entries.push_back({pack_component_key(level, c.kind, c.gx, c.gy, c.gz),
                                      static_cast<std::int32_t>(next)});
            next += modes;
        }
    }
    layout.total = next;
    layout.index.reserve(layout.entries.size() * 2);
    for (const auto& e : layout.entries) layout.index.emplace(e.key, e.dof_start);
    return layout;
}

}  // namespace hpfcm
