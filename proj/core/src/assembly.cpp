#include "hpfcm/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef HPFCM_WITH_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include "hpfcm/gauss.hpp"

namespace hpfcm {

namespace {

struct ComponentGeom {
    int level, kind;
    int gx, gy, gz;
};

ComponentGeom unpack_key(std::uint64_t key) {
    ComponentGeom g;
    g.level = static_cast<int>(key >> 60);
    g.kind = static_cast<int>((key >> 56) & 0xF);
    g.gx = static_cast<int>((key >> 36) & 0x3FFFF);
    g.gy = static_cast<int>((key >> 18) & 0x3FFFF);
    g.gz = static_cast<int>(key & 0x3FFFF);
    return g;
}

}  // namespace

DirichletSet dirichlet_plane(const Discretization& disc, int axis, double coordinate, double value,
                             int ncomp, int comp) {
    DirichletSet out;
    const auto& grid = disc.mesh.grid();
    double tol = 1e-9 * grid.spacing[axis];
    for (const auto& entry : disc.layout.entries) {
        ComponentGeom g = unpack_key(entry.key);
        if (g.kind == 7) continue;  // volume modes never lie in a plane
        if (g.kind >= 1 && g.kind <= 3 && (g.kind - 1) == axis) continue;  // edge along the axis
        if (g.kind >= 4 && g.kind <= 6 && (g.kind - 4) != axis) continue;  // face not normal to it
        double h = grid.spacing[axis] / static_cast<double>(1 << g.level);
        int gpos = axis == 0 ? g.gx : axis == 1 ? g.gy : g.gz;
        double x = grid.origin[axis] + gpos * h;
        if (std::abs(x - coordinate) > tol) continue;
        int modes = component_mode_count(g.kind, disc.order);
        double v = (g.kind == 0) ? value : 0.0;
        for (int m = 0; m < modes; ++m)
            out.entries.push_back({static_cast<std::int64_t>(entry.dof_start + m) * ncomp + comp, v});
    }
    return out;
}

SparseSystem::SparseSystem(const Discretization& disc, int ncomp) : ncomp_(ncomp) {
    std::int64_t n_scalar = disc.dof_count();
    std::vector<std::vector<std::int32_t>> cols(n_scalar);
    for (const auto& basis : disc.leaf_bases) {
        for (const auto& fj : basis.functions) {
            auto& col = cols[fj.dof];
            for (const auto& fi : basis.functions) col.push_back(fi.dof);
        }
    }
    std::int64_t nnz_scalar = 0;
    for (auto& col : cols) {
        std::sort(col.begin(), col.end());
        col.erase(std::unique(col.begin(), col.end()), col.end());
        nnz_scalar += static_cast<std::int64_t>(col.size());
    }

    matrix_.resize(n_scalar * ncomp_, n_scalar * ncomp_);
    Eigen::VectorXi counts(n_scalar * ncomp_);
    for (std::int64_t j = 0; j < n_scalar; ++j)
        for (int b = 0; b < ncomp_; ++b) counts[j * ncomp_ + b] = static_cast<int>(cols[j].size()) * ncomp_;
    matrix_.reserve(counts);
    for (std::int64_t j = 0; j < n_scalar; ++j)
        for (int b = 0; b < ncomp_; ++b)
            for (std::int32_t i : cols[j])
                for (int a = 0; a < ncomp_; ++a)
                    matrix_.insert(static_cast<std::int64_t>(i) * ncomp_ + a, j * ncomp_ + b) = 0.0;
    matrix_.makeCompressed();
}

void SparseSystem::set_zero() {
    std::fill(matrix_.valuePtr(), matrix_.valuePtr() + matrix_.nonZeros(), 0.0);
}

void SparseSystem::add_block(const std::vector<std::int32_t>& scalar_dofs, const Eigen::MatrixXd& Ke) {
    const int n = static_cast<int>(scalar_dofs.size());
    const auto* outer = matrix_.outerIndexPtr();
    const auto* inner = matrix_.innerIndexPtr();
    double* values = matrix_.valuePtr();
    std::vector<std::int64_t> pos(n);
    for (int jj = 0; jj < n; ++jj) {
        std::int64_t col0 = static_cast<std::int64_t>(scalar_dofs[jj]) * ncomp_;
        const auto* begin = inner + outer[col0];
        const auto* end = inner + outer[col0 + 1];
        for (int ii = 0; ii < n; ++ii) {
            auto it = std::lower_bound(begin, end, scalar_dofs[ii] * ncomp_);
            pos[ii] = it - begin;
        }
        for (int b = 0; b < ncomp_; ++b) {
            std::int64_t base = outer[col0 + b];
            for (int ii = 0; ii < n; ++ii) {
                double* slot = values + base + pos[ii];
                for (int a = 0; a < ncomp_; ++a) slot[a] += Ke(ii * ncomp_ + a, jj * ncomp_ + b);
            }
        }
    }
}

void apply_dirichlet(Eigen::SparseMatrix<double>& K, Eigen::VectorXd& rhs, const DirichletSet& bc) {
    if (bc.entries.empty()) return;
    std::vector<char> fixed(K.rows(), 0);
    std::vector<double> value(K.rows(), 0.0);
    for (auto [dof, v] : bc.entries) {
        fixed[dof] = 1;
        value[dof] = v;
    }
    for (int col = 0; col < K.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
            int row = static_cast<int>(it.row());
            if (fixed[col] && !fixed[row]) rhs[row] -= it.value() * value[col];
        }
    }
    for (int col = 0; col < K.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
            int row = static_cast<int>(it.row());
            if (fixed[col] || fixed[row]) it.valueRef() = (row == col && fixed[col]) ? 1.0 : 0.0;
        }
    }
    for (auto [dof, v] : bc.entries) rhs[dof] = v;
}

void zero_dirichlet(Eigen::VectorXd& r, const DirichletSet& bc) {
    for (auto [dof, v] : bc.entries) r[dof] = 0.0;
}

void impose_dirichlet(Eigen::VectorXd& u, const DirichletSet& bc) {
    for (auto [dof, v] : bc.entries) u[dof] = v;
}

struct DirectSolver::Impl {
    bool spd;
    // symmetric Jacobi equilibration: the indicator-weighted systems span
    // many orders of magnitude between physical and fictitious dofs, which
    // breaks supernodal Cholesky pivots without scaling
    Eigen::VectorXd scale;
    Eigen::SparseMatrix<double> scaled;
    bool use_fallback = false;
#ifdef HPFCM_WITH_CHOLMOD
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>> chol;
#endif
    // plastic tangents are only positive semi-definite (perfect plasticity),
    // so a pivot-tolerant LDLT backs up the fast Cholesky
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

DirectSolver::DirectSolver(bool spd) : impl_(std::make_unique<Impl>()) { impl_->spd = spd; }
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

void DirectSolver::factor(const Eigen::SparseMatrix<double>& K) {
    if (impl_->spd) {
        impl_->scale.resize(K.rows());
        for (int i = 0; i < K.rows(); ++i) {
            double d = K.coeff(i, i);
            impl_->scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
        }
        impl_->scaled = K;
        for (int col = 0; col < impl_->scaled.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(impl_->scaled, col); it; ++it)
                it.valueRef() *= impl_->scale[it.row()] * impl_->scale[col];
        impl_->use_fallback = false;
#ifdef HPFCM_WITH_CHOLMOD
        impl_->chol.compute(impl_->scaled);
        if (impl_->chol.info() == Eigen::Success) return;
        impl_->use_fallback = true;
#endif
        impl_->ldlt.compute(impl_->scaled);
#ifndef HPFCM_WITH_CHOLMOD
        impl_->use_fallback = true;
#endif
        if (impl_->ldlt.info() != Eigen::Success)
            throw std::runtime_error("DirectSolver: factorization failed (matrix not SPD?)");
    } else {
        impl_->lu.compute(K);
        if (impl_->lu.info() != Eigen::Success)
            throw std::runtime_error("DirectSolver: LU factorization failed (singular matrix?)");
    }
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& rhs) const {
    if (!impl_->spd) return impl_->lu.solve(rhs).eval();
    Eigen::VectorXd b = impl_->scale.asDiagonal() * rhs;
    Eigen::VectorXd x;
#ifdef HPFCM_WITH_CHOLMOD
    if (!impl_->use_fallback) x = impl_->chol.solve(b);
    else x = impl_->ldlt.solve(b);
#else
    x = impl_->ldlt.solve(b);
#endif
    return impl_->scale.asDiagonal() * x;
}

Eigen::VectorXd solve_constrained(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
                                  const ConstraintSet& constraints, Eigen::VectorXd* multipliers) {
    std::int64_t n = K.rows();
    std::int64_t n_aux = constraints.n_aux;
    std::int64_t n_c = static_cast<std::int64_t>(constraints.rows.size());
    std::int64_t total = n + n_aux + n_c;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(K.nonZeros() + 4 * constraints.rows.size());
    for (int col = 0; col < K.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), col, it.value());
    for (std::int64_t r = 0; r < n_c; ++r) {
        for (auto [dof, coeff] : constraints.rows[r].terms) {
            if (dof >= n + n_aux) throw std::out_of_range("solve_constrained: constraint dof out of range");
            trips.emplace_back(static_cast<int>(n + n_aux + r), static_cast<int>(dof), coeff);
            trips.emplace_back(static_cast<int>(dof), static_cast<int>(n + n_aux + r), coeff);
        }
    }
    Eigen::SparseMatrix<double> A(total, total);
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd b = Eigen::VectorXd::Zero(total);
    b.head(n) = rhs;
    for (std::int64_t r = 0; r < n_c; ++r) b[n + n_aux + r] = constraints.rows[r].rhs;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("solve_constrained: singular KKT system (rank-deficient constraints?)");
    Eigen::VectorXd x = lu.solve(b);
    if (multipliers) *multipliers = x.tail(n_c);
    return x.head(n + n_aux);
}

Eigen::VectorXd project_function(const Discretization& disc,
                                 const std::function<double(const Vec3&)>& f) {
    SparseSystem mass(disc, 1);
    mass.set_zero();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(disc.dof_count());
    const GaussRule& rule = gauss_rule(disc.order + 2);
    std::vector<double> pts(rule.points.begin(), rule.points.end());
    int nq = static_cast<int>(pts.size());
    for (int leaf = 0; leaf < static_cast<int>(disc.mesh.leaves().size()); ++leaf) {
        auto vals = eval_on_tensor_grid(disc, leaf, pts, pts, pts);
        Box box = disc.mesh.leaf_box(disc.mesh.leaves()[leaf]);
        double jac = box.volume() / 8.0;
        const auto& fns = disc.leaf_bases[leaf].functions;
        Eigen::MatrixXd Me = Eigen::MatrixXd::Zero(vals.n_fn, vals.n_fn);
        std::vector<std::int32_t> dofs(vals.n_fn);
        for (int f = 0; f < vals.n_fn; ++f) dofs[f] = fns[f].dof;
        for (int qx = 0; qx < nq; ++qx)
            for (int qy = 0; qy < nq; ++qy)
                for (int qz = 0; qz < nq; ++qz) {
                    int pt = (qx * nq + qy) * nq + qz;
                    double w = rule.weights[qx] * rule.weights[qy] * rule.weights[qz] * jac;
                    Vec3 phys = box.map_local({pts[qx], pts[qy], pts[qz]});
                    double fv = f(phys);
                    for (int i = 0; i < vals.n_fn; ++i) {
                        double vi = vals.val(pt, i);
                        rhs[dofs[i]] += w * vi * fv;
                        for (int j = 0; j < vals.n_fn; ++j) Me(i, j) += w * vi * vals.val(pt, j);
                    }
                }
        mass.add_block(dofs, Me);
    }
    DirectSolver solver(true);
    solver.factor(mass.matrix());
    return solver.solve(rhs);
}

Eigen::VectorXd project_coordinate_field(const Discretization& disc, int axis) {
    return project_function(disc, [axis](const Vec3& x) { return x[axis]; });
}

Constraint point_constraint(const Discretization& disc, const Vec3& point, int comp, int ncomp) {
    auto leaf = disc.mesh.leaf_at(point);
    if (!leaf) throw std::invalid_argument("point_constraint: point outside the mesh");
    Box box = disc.mesh.leaf_box(disc.mesh.leaves()[*leaf]);
    Vec3 xi = box.to_local(point);
    auto vals = eval_at_points(disc, *leaf, std::span<const Vec3>(&xi, 1));
    Constraint row;
    const auto& fns = disc.leaf_bases[*leaf].functions;
    for (int fn = 0; fn < vals.n_fn; ++fn)
        if (std::abs(vals.val(0, fn)) > 1e-14)
            row.terms.push_back({static_cast<std::int64_t>(fns[fn].dof) * ncomp + comp, vals.val(0, fn)});
    return row;
}

ConstraintSet extended_plane_strain(const Discretization& disc, int axis, int ncomp) {
    Eigen::VectorXd coord = project_coordinate_field(disc, axis);
    ConstraintSet set;
    set.n_aux = 1;
    std::int64_t aux = disc.dof_count() * ncomp;  // the single strain unknown
    set.rows.reserve(disc.dof_count());
    for (std::int64_t i = 0; i < disc.dof_count(); ++i) {
        Constraint c;
        c.terms = {{i * ncomp + axis, 1.0}, {aux, -coord[i]}};
        set.rows.push_back(std::move(c));
    }
    return set;
}

Eigen::VectorXd uniform_field(const Discretization& disc, double value) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(disc.dof_count());
    for (const auto& entry : disc.layout.entries) {
        ComponentGeom g = unpack_key(entry.key);
        if (g.kind == 0) out[entry.dof_start] = value;
    }
    return out;
}

}  // namespace hpfcm
