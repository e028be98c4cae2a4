#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <limits>
#include <vector>

#include "hpfcm/assembly.hpp"
#include "hpfcm/embedded_domain.hpp"
#include "hpfcm/material.hpp"

namespace hpfcm {

/// Internal variables at the quadrature lattice of every leaf, parallel to
/// the QuadraturePlan. Keys allow identity transfer across mesh changes.
struct GaussStateStore {
    std::vector<LeafKey> keys;
    std::vector<std::vector<InternalVariables>> states;

    static GaussStateStore zero(const Discretization& disc, const QuadraturePlan& plan);
};

struct EmbeddedPressure {
    ImplicitGeometry surface;
    double magnitude = 0.0;  // traction = magnitude * unit distance gradient
    int depth = 3;
};

struct FaceTraction {
    int axis = 0;
    int side = 1;  // 0: lower box face, 1: upper
    Vec3 traction{0, 0, 0};
};

struct MechLoads {
    std::vector<EmbeddedPressure> pressures;
    std::vector<FaceTraction> tractions;
    Vec3 body_force{0, 0, 0};
};

/// Treatment of material above the melting temperature.
struct MoltenRule {
    double melt_temperature = std::numeric_limits<double>::infinity();
    bool reset_state = true;  // internal variables are erased while molten
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double load_reference = 0.0;
    std::vector<double> residual_norms;
};

/// Quasi-static elasto-plastic equilibrium on one discretization with
/// indicator-weighted quadrature. Physical points run the return mapping,
/// fictitious points contribute only the alpha-scaled elastic stiffness.
class MechanicsProblem {
public:
    MechanicsProblem(const Discretization& disc, const QuadraturePlan& plan, ElasticLaw elastic,
                     HardeningCurve hardening, ThermalExpansion expansion);

    const Discretization& disc() const { return *disc_; }
    const QuadraturePlan& plan() const { return *plan_; }

    DirichletSet dirichlet;
    ConstraintSet constraints;
    MechLoads loads;
    MoltenRule molten;

    /// Temperature at a physical point (empty: isothermal at T_ref).
    std::function<double(const Vec3&)> temperature;

    std::int64_t n_dofs() const;  // includes constraint auxiliaries

    Eigen::VectorXd external_load() const;

    /// Residual f_int - f_ext and consistent tangent at u with the internal
    /// variables of states_n held fixed. Throws when the store does not
    /// match the quadrature plan.
    void assemble(const Eigen::VectorXd& u, const GaussStateStore& states_n, Eigen::VectorXd& residual,
                  GaussStateStore* trial, SparseSystem* tangent) const;

    NewtonReport newton_solve(Eigen::VectorXd& u, GaussStateStore& states, double tol = 1e-8,
                              int max_iter = 30);

    /// alpha-weighted internal energy over the physical domain.
    double internal_energy(const Eigen::VectorXd& u, const GaussStateStore& states) const;

    /// Cauchy stress at every lattice point (zero at fictitious-only points).
    std::vector<std::vector<SymTensor3>> lattice_stresses(const Eigen::VectorXd& u,
                                                          const GaussStateStore& states) const;

    double temperature_at(const Vec3& x) const { return temperature ? temperature(x) : expansion_.T_ref; }

private:
    const Discretization* disc_;
    const QuadraturePlan* plan_;
    ElasticLaw elastic_;
    HardeningCurve hardening_;
    ThermalExpansion expansion_;

    // cut leaves carry many quadrature points; their elastic stiffness is
    // constant per mesh state and worth caching
    mutable std::map<int, Eigen::MatrixXd> cut_elastic_cache_;
    std::unique_ptr<std::mutex> cache_mutex_ = std::make_unique<std::mutex>();

    void leaf_kernel(int leaf, const Eigen::VectorXd& u, const GaussStateStore& states_n,
                     Eigen::VectorXd* Re, GaussStateStore* trial, Eigen::MatrixXd* Ke) const;
};

}  // namespace hpfcm
