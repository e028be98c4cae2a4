#include "hpfcm/leaf_basis.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "hpfcm/gauss.hpp"
#include "hpfcm/polybasis.hpp"

namespace hpfcm {

namespace {

/// Append the active modes of one component of the ancestor element at
/// `level` (element lattice coords e). Factor indices are relative to that
/// element. Order matches the dof enumeration: mode index lexicographic in
/// the internal factor indices.
void append_component(const DofLayout& layout, int level, int kind, int gx, int gy, int gz,
                      int anc_slot, int p, std::vector<LeafFunctionRef>& out,
                      const std::function<void(int, std::uint8_t&, std::uint8_t&, std::uint8_t&)>& factors) {
    auto start = layout.find(pack_component_key(level, kind, gx, gy, gz));
    if (start < 0) return;
    int modes = component_mode_count(kind, p);
    for (int m = 0; m < modes; ++m) {
        LeafFunctionRef ref;
        ref.dof = start + m;
        ref.anc = static_cast<std::uint8_t>(anc_slot);
        factors(m, ref.fi, ref.fj, ref.fk);
        out.push_back(ref);
    }
}

LeafBasis build_leaf_basis(const MlhpMesh& mesh, const DofLayout& layout, int leaf_index) {
    const Leaf& leaf = mesh.leaves()[leaf_index];
    const int p = layout.order;
    const int L = leaf.level;

    LeafBasis basis;
    basis.leaf = leaf_index;
    basis.level = L;
    basis.anc_scale.resize(L + 1);
    basis.anc_offset.resize(L + 1);

    for (int a = 0; a <= L; ++a) {
        int shift = L - a;
        double s = 1.0 / static_cast<double>(1 << shift);
        basis.anc_scale[a] = s;
        int ex = leaf.gx >> shift, ey = leaf.gy >> shift, ez = leaf.gz >> shift;
        Int3 r{leaf.gx - (ex << shift), leaf.gy - (ey << shift), leaf.gz - (ez << shift)};
        basis.anc_offset[a] = {s * (1.0 + 2.0 * r[0]) - 1.0, s * (1.0 + 2.0 * r[1]) - 1.0,
                               s * (1.0 + 2.0 * r[2]) - 1.0};

        // Components in enumeration order: vertices, edges x/y/z, faces
        // x/y/z, volume; lattice-lexicographic within each kind.
        auto& fns = basis.functions;
        for (int A = 0; A <= 1; ++A)
            for (int B = 0; B <= 1; ++B)
                for (int C = 0; C <= 1; ++C)
                    append_component(layout, a, 0, ex + A, ey + B, ez + C, a, p, fns,
                                     [&](int, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                         fi = A; fj = B; fk = C;
                                     });
        for (int B = 0; B <= 1; ++B)
            for (int C = 0; C <= 1; ++C)
                append_component(layout, a, 1, ex, ey + B, ez + C, a, p, fns,
                                 [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                     fi = 2 + m; fj = B; fk = C;
                                 });
        for (int A = 0; A <= 1; ++A)
            for (int C = 0; C <= 1; ++C)
                append_component(layout, a, 2, ex + A, ey, ez + C, a, p, fns,
                                 [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                     fi = A; fj = 2 + m; fk = C;
                                 });
        for (int A = 0; A <= 1; ++A)
            for (int B = 0; B <= 1; ++B)
                append_component(layout, a, 3, ex + A, ey + B, ez, a, p, fns,
                                 [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                     fi = A; fj = B; fk = 2 + m;
                                 });
        int nint = p - 1;
        for (int S = 0; S <= 1; ++S)
            append_component(layout, a, 4, ex + S, ey, ez, a, p, fns,
                             [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                 fi = S; fj = 2 + m / nint; fk = 2 + m % nint;
                             });
        for (int S = 0; S <= 1; ++S)
            append_component(layout, a, 5, ex, ey + S, ez, a, p, fns,
                             [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                 fi = 2 + m / nint; fj = S; fk = 2 + m % nint;
                             });
        for (int S = 0; S <= 1; ++S)
            append_component(layout, a, 6, ex, ey, ez + S, a, p, fns,
                             [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                                 fi = 2 + m / nint; fj = 2 + m % nint; fk = S;
                             });
        append_component(layout, a, 7, ex, ey, ez, a, p, fns,
                         [&](int m, std::uint8_t& fi, std::uint8_t& fj, std::uint8_t& fk) {
                             fi = 2 + m / (nint * nint);
                             fj = 2 + (m / nint) % nint;
                             fk = 2 + m % nint;
                         });
    }
    return basis;
}

}  // namespace

Discretization build_discretization(const MlhpMesh& mesh, int order) {
    Discretization disc;
    disc.mesh = mesh;
    disc.order = order;
    disc.layout = enumerate_dofs(mesh, order);
    disc.leaf_bases.resize(mesh.leaves().size());
    for (int i = 0; i < static_cast<int>(mesh.leaves().size()); ++i)
        disc.leaf_bases[i] = build_leaf_basis(disc.mesh, disc.layout, i);
    return disc;
}

namespace {

/// 1D factor tables for one leaf: per ancestor slot and axis, values and
/// physical derivatives of all p+1 1D functions at the given local points.
struct AxisTables {
    int p1 = 0;  // p + 1
    // [anc][axis] -> vector of size p1 * n_pts, layout [factor][pt]
    std::vector<std::array<std::vector<double>, 3>> val, der;
};

AxisTables build_axis_tables(const LeafBasis& basis, const Box& box, int order,
                             const std::array<const std::vector<double>*, 3>& pts) {
    AxisTables t;
    int n_anc = static_cast<int>(basis.anc_scale.size());
    t.p1 = order + 1;
    t.val.resize(n_anc);
    t.der.resize(n_anc);
    ShapeSet1D shapes(order);
    std::vector<double> v, d;
    Vec3 h = box.size();
    for (int a = 0; a < n_anc; ++a) {
        for (int axis = 0; axis < 3; ++axis) {
            const auto& x = *pts[axis];
            int nq = static_cast<int>(x.size());
            t.val[a][axis].resize(static_cast<std::size_t>(t.p1) * nq);
            t.der[a][axis].resize(static_cast<std::size_t>(t.p1) * nq);
            double chain = basis.anc_scale[a] * 2.0 / h[axis];
            for (int q = 0; q < nq; ++q) {
                double xi = basis.anc_scale[a] * x[q] + basis.anc_offset[a][axis];
                shapes.eval(xi, v, d);
                for (int f = 0; f < t.p1; ++f) {
                    t.val[a][axis][static_cast<std::size_t>(f) * nq + q] = v[f];
                    t.der[a][axis][static_cast<std::size_t>(f) * nq + q] = d[f] * chain;
                }
            }
        }
    }
    return t;
}

}  // namespace

BasisValues eval_on_tensor_grid(const Discretization& disc, int leaf,
                                const std::vector<double>& xi_x,
                                const std::vector<double>& xi_y,
                                const std::vector<double>& xi_z) {
    const LeafBasis& basis = disc.leaf_bases[leaf];
    Box box = disc.mesh.leaf_box(disc.mesh.leaves()[leaf]);
    auto tables = build_axis_tables(basis, box, disc.order, {&xi_x, &xi_y, &xi_z});

    int nx = static_cast<int>(xi_x.size()), ny = static_cast<int>(xi_y.size()), nz = static_cast<int>(xi_z.size());
    BasisValues out;
    out.n_fn = basis.size();
    out.n_pt = nx * ny * nz;
    out.value.resize(static_cast<std::size_t>(out.n_fn) * out.n_pt);
    out.gradient.resize(static_cast<std::size_t>(out.n_fn) * out.n_pt);

    for (int fn = 0; fn < out.n_fn; ++fn) {
        const auto& ref = basis.functions[fn];
        const double* vx = &tables.val[ref.anc][0][static_cast<std::size_t>(ref.fi) * nx];
        const double* dx = &tables.der[ref.anc][0][static_cast<std::size_t>(ref.fi) * nx];
        const double* vy = &tables.val[ref.anc][1][static_cast<std::size_t>(ref.fj) * ny];
        const double* dy = &tables.der[ref.anc][1][static_cast<std::size_t>(ref.fj) * ny];
        const double* vz = &tables.val[ref.anc][2][static_cast<std::size_t>(ref.fk) * nz];
        const double* dz = &tables.der[ref.anc][2][static_cast<std::size_t>(ref.fk) * nz];
        for (int qx = 0; qx < nx; ++qx)
            for (int qy = 0; qy < ny; ++qy) {
                double vxy = vx[qx] * vy[qy];
                double dxy = dx[qx] * vy[qy];
                double vdy = vx[qx] * dy[qy];
                std::size_t base = (static_cast<std::size_t>(qx) * ny + qy) * nz;
                for (int qz = 0; qz < nz; ++qz) {
                    std::size_t at = (base + qz) * out.n_fn + fn;
                    out.value[at] = vxy * vz[qz];
                    out.gradient[at] = {dxy * vz[qz], vdy * vz[qz], vxy * dz[qz]};
                }
            }
    }
    return out;
}

BasisValues eval_at_points(const Discretization& disc, int leaf, std::span<const Vec3> local_points) {
    const LeafBasis& basis = disc.leaf_bases[leaf];
    Box box = disc.mesh.leaf_box(disc.mesh.leaves()[leaf]);
    Vec3 h = box.size();
    int n_anc = static_cast<int>(basis.anc_scale.size());

    BasisValues out;
    out.n_fn = basis.size();
    out.n_pt = static_cast<int>(local_points.size());
    out.value.resize(static_cast<std::size_t>(out.n_fn) * out.n_pt);
    out.gradient.resize(static_cast<std::size_t>(out.n_fn) * out.n_pt);

    ShapeSet1D shapes(disc.order);
    std::vector<double> v, d;
    std::vector<std::array<std::vector<double>, 6>> tab(n_anc);  // vx,vy,vz,dx,dy,dz per anc

    for (int pt = 0; pt < out.n_pt; ++pt) {
        for (int a = 0; a < n_anc; ++a)
            for (int axis = 0; axis < 3; ++axis) {
                double xi = basis.anc_scale[a] * local_points[pt][axis] + basis.anc_offset[a][axis];
                shapes.eval(xi, v, d);
                tab[a][axis] = v;
                tab[a][3 + axis] = d;
                double chain = basis.anc_scale[a] * 2.0 / h[axis];
                for (auto& x : tab[a][3 + axis]) x *= chain;
            }
        for (int fn = 0; fn < out.n_fn; ++fn) {
            const auto& ref = basis.functions[fn];
            const auto& t = tab[ref.anc];
            std::size_t at = static_cast<std::size_t>(pt) * out.n_fn + fn;
            out.value[at] = t[0][ref.fi] * t[1][ref.fj] * t[2][ref.fk];
            out.gradient[at] = {t[3][ref.fi] * t[1][ref.fj] * t[2][ref.fk],
                                t[0][ref.fi] * t[4][ref.fj] * t[2][ref.fk],
                                t[0][ref.fi] * t[1][ref.fj] * t[5][ref.fk]};
        }
    }
    return out;
}

bool eval_field(const Discretization& disc, std::span<const double> dofs, const Vec3& point,
                double& out, int stride, int offset) {
    auto leaf = disc.mesh.leaf_at(point);
    if (!leaf) return false;
    Box box = disc.mesh.leaf_box(disc.mesh.leaves()[*leaf]);
    Vec3 xi = box.to_local(point);
    auto vals = eval_at_points(disc, *leaf, std::span<const Vec3>(&xi, 1));
    const LeafBasis& basis = disc.leaf_bases[*leaf];
    double acc = 0.0;
    for (int fn = 0; fn < vals.n_fn; ++fn)
        acc += vals.val(0, fn) * dofs[static_cast<std::size_t>(basis.functions[fn].dof) * stride + offset];
    out = acc;
    return true;
}

double SeparableLeafIntegrals::stiffness_entry(int f, int g, int df, int dg) const {
    double prod = 1.0;
    for (int axis = 0; axis < 3; ++axis) {
        int sel = (df == axis ? 2 : 0) + (dg == axis ? 1 : 0);  // vv, vd, dv, dd
        prod *= m[axis][sel][static_cast<std::size_t>(fn_axis[axis][f]) * n_axis[axis] + fn_axis[axis][g]];
    }
    return prod;
}

double SeparableLeafIntegrals::mass_entry(int f, int g) const {
    double prod = 1.0;
    for (int axis = 0; axis < 3; ++axis)
        prod *= m[axis][0][static_cast<std::size_t>(fn_axis[axis][f]) * n_axis[axis] + fn_axis[axis][g]];
    return prod;
}

SeparableLeafIntegrals build_separable_integrals(const Discretization& disc, int leaf, int gauss_order) {
    const LeafBasis& basis = disc.leaf_bases[leaf];
    Box box = disc.mesh.leaf_box(disc.mesh.leaves()[leaf]);
    Vec3 h = box.size();
    const GaussRule& rule = gauss_rule(gauss_order);
    std::vector<double> pts(rule.points.begin(), rule.points.end());

    auto tables = build_axis_tables(basis, box, disc.order, {&pts, &pts, &pts});

    SeparableLeafIntegrals out;
    out.n_fn = basis.size();

    // axis factor ids: unique (anc, factor) pairs per axis
    int p1 = disc.order + 1;
    int n_anc = static_cast<int>(basis.anc_scale.size());
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<int> id(static_cast<std::size_t>(n_anc) * p1, -1);
        out.fn_axis[axis].resize(out.n_fn);
        std::vector<std::pair<int, int>> factors;  // (anc, f)
        for (int fn = 0; fn < out.n_fn; ++fn) {
            const auto& ref = basis.functions[fn];
            int f = axis == 0 ? ref.fi : axis == 1 ? ref.fj : ref.fk;
            int key = ref.anc * p1 + f;
            if (id[key] < 0) {
                id[key] = static_cast<int>(factors.size());
                factors.emplace_back(ref.anc, f);
            }
            out.fn_axis[axis][fn] = id[key];
        }
        int na = static_cast<int>(factors.size());
        out.n_axis[axis] = na;
        for (auto& mm : out.m[axis]) mm.assign(static_cast<std::size_t>(na) * na, 0.0);
        int nq = static_cast<int>(pts.size());
        double jac = 0.5 * h[axis];
        for (int i = 0; i < na; ++i) {
            auto [ai, fi] = factors[i];
            const double* vi = &tables.val[ai][axis][static_cast<std::size_t>(fi) * nq];
            const double* di = &tables.der[ai][axis][static_cast<std::size_t>(fi) * nq];
            for (int j = 0; j < na; ++j) {
                auto [aj, fj] = factors[j];
                const double* vj = &tables.val[aj][axis][static_cast<std::size_t>(fj) * nq];
                const double* dj = &tables.der[aj][axis][static_cast<std::size_t>(fj) * nq];
                double vv = 0, vd = 0, dv = 0, dd = 0;
                for (int q = 0; q < nq; ++q) {
                    double w = rule.weights[q] * jac;
                    vv += w * vi[q] * vj[q];
                    vd += w * vi[q] * dj[q];
                    dv += w * di[q] * vj[q];
                    dd += w * di[q] * dj[q];
                }
                std::size_t at = static_cast<std::size_t>(i) * na + j;
                out.m[axis][0][at] = vv;
                out.m[axis][1][at] = vd;
                out.m[axis][2][at] = dv;
                out.m[axis][3][at] = dd;
            }
        }
    }
    return out;
}

}  // namespace hpfcm
