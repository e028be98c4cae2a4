#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <Eigen/SparseLU>
#include <cstdint>
#include <memory>
#include <vector>

#include "hpfcm/leaf_basis.hpp"

namespace hpfcm {

/// Fixed dofs with prescribed values (indices in the expanded system, i.e.
/// scalar_dof * ncomp + component).
struct DirichletSet {
    std::vector<std::pair<std::int64_t, double>> entries;

    void append(const DirichletSet& other) {
        entries.insert(entries.end(), other.entries.begin(), other.entries.end());
    }
};

/// Fix one displacement/temperature component on an axis-aligned plane that
/// is conforming to the mesh. Vertex modes get `value`, higher-order modes
/// on the plane are set to zero (exact for constant data).
DirichletSet dirichlet_plane(const Discretization& disc, int axis, double coordinate, double value,
                             int ncomp = 1, int comp = 0);

/// Linear multi-point constraints sum_k coeff_k u_{dof_k} = rhs. Dofs may
/// reference one trailing auxiliary unknown per set (index >= n_dofs).
struct Constraint {
    std::vector<std::pair<std::int64_t, double>> terms;
    double rhs = 0.0;
};
struct ConstraintSet {
    std::vector<Constraint> rows;
    std::int64_t n_aux = 0;  // auxiliary unknowns referenced by the rows

    bool empty() const { return rows.empty(); }
};

/// Global sparse matrix with the pattern of a discretization (ncomp
/// components interleaved). The pattern is built once; assembly scatters
/// dense per-leaf blocks into the fixed value array.
class SparseSystem {
public:
    SparseSystem(const Discretization& disc, int ncomp);

    int ncomp() const { return ncomp_; }
    std::int64_t size() const { return matrix_.rows(); }

    void set_zero();
    /// Ke indexed fn-major: (fn * ncomp + comp); scalar_dofs are the leaf's
    /// function dofs.
    void add_block(const std::vector<std::int32_t>& scalar_dofs, const Eigen::MatrixXd& Ke);

    Eigen::SparseMatrix<double>& matrix() { return matrix_; }
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

private:
    int ncomp_;
    Eigen::SparseMatrix<double> matrix_;  // column major, compressed
};

/// Symmetric elimination of Dirichlet dofs: K := identity rows/cols, moves
/// the known columns to the rhs, sets rhs at fixed dofs to the value.
void apply_dirichlet(Eigen::SparseMatrix<double>& K, Eigen::VectorXd& rhs, const DirichletSet& bc);
/// Only the rhs/solution part (for residual vectors).
void zero_dirichlet(Eigen::VectorXd& r, const DirichletSet& bc);
void impose_dirichlet(Eigen::VectorXd& u, const DirichletSet& bc);

/// Direct sparse solve; SPD path uses the supernodal Cholesky when built
/// with CHOLMOD, otherwise Eigen's simplicial LDLT.
class DirectSolver {
public:
    explicit DirectSolver(bool spd = true);
    ~DirectSolver();
    DirectSolver(DirectSolver&&) noexcept;
    DirectSolver& operator=(DirectSolver&&) noexcept;

    void factor(const Eigen::SparseMatrix<double>& K);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// KKT system [K C^T; C 0] with the constraint rows appended; returns the
/// primal solution and (optionally) the multipliers. Throws on rank
/// deficient constraint sets.
Eigen::VectorXd solve_constrained(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
                                  const ConstraintSet& constraints,
                                  Eigen::VectorXd* multipliers = nullptr);

/// L2 projection of an arbitrary function onto the scalar space (plain
/// unweighted mass; used for initial conditions and coordinate fields).
Eigen::VectorXd project_function(const Discretization& disc,
                                 const std::function<double(const Vec3&)>& f);

/// Dof coefficient vector representing the coordinate field x_axis (used by
/// the extended plane strain constraint); exact because the space contains
/// linear functions.
Eigen::VectorXd project_coordinate_field(const Discretization& disc, int axis);

/// Constraint row pinning one displacement component at a point (weighted
/// combination of every basis function with support there).
Constraint point_constraint(const Discretization& disc, const Vec3& point, int comp, int ncomp);

/// Tie every displacement dof of one component to a single auxiliary strain
/// unknown so that eps_axis is spatially constant: u_axis = q * x_axis.
ConstraintSet extended_plane_strain(const Discretization& disc, int axis, int ncomp);

/// Scalar dof vector with vertex modes set to `value` (exact constant).
Eigen::VectorXd uniform_field(const Discretization& disc, double value);

}  // namespace hpfcm
