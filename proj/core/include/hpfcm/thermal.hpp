#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hpfcm/assembly.hpp"
#include "hpfcm/embedded_domain.hpp"
#include "hpfcm/material.hpp"
#include "hpfcm/mechanics.hpp"

namespace hpfcm {

/// Ellipsoidal volumetric heat source moving along a torch path.
struct GoldakSource {
    double power = 0.0;        // W
    Vec3 semi_axes{1, 1, 1};   // mm
    std::function<Vec3(double)> center;  // torch position over time

    /// Switch-off outside the path interval.
    double t_on = 0.0;
    double t_off = std::numeric_limits<double>::infinity();
};

/// Volumetric power density in W/mm^3; contributions with an exponent below
/// -36 are machine noise and return zero, keeping assembly local.
double goldak_eval(const GoldakSource& source, const Vec3& point, double time);

/// Smooth liquid fraction over a mushy interval around the melting point.
struct PhaseChangeModel {
    double latent_volumetric = 0.0;  // rho * L, J/mm^3
    double T_melt = 1400.0;
    double interval = 20.0;  // full mushy width in degC

    double fraction(double T) const;
    double derivative(double T) const;
};

struct SurfaceLoss {
    double h_conv = 0.0;     // W/(mm^2 K)
    double emissivity = 0.0;
    double T_ambient = 20.0;
};

constexpr double kStefanBoltzmann = 5.670374419e-14;  // W/(mm^2 K^4)

/// Quadrature points of the heat-losing boundary (embedded isosurface plus
/// physical parts of the computational box faces).
struct LossSurface {
    struct Pt {
        int leaf;
        Vec3 position;
        double weight;
    };
    std::vector<Pt> points;
    double area() const;
};

LossSurface boundary_loss_surface(const Discretization& disc, const ImplicitGeometry& domain,
                                  int embed_depth,
                                  const std::function<bool(const Vec3&)>& exclude = {});

/// Transient nonlinear heat conduction with latent heat, moving sources and
/// convection/radiation losses, backward Euler in time, indicator-weighted
/// quadrature in space.
class ThermalProblem {
public:
    ThermalProblem(const Discretization& disc, const QuadraturePlan& plan,
                   PropertyTable volumetric_heat, PropertyTable conductivity, PhaseChangeModel phase);

    const Discretization& disc() const { return *disc_; }

    DirichletSet dirichlet;
    std::vector<GoldakSource> sources;
    SurfaceLoss loss;
    LossSurface loss_surface;

    /// Backward Euler residual and Jacobian at iterate T for the step
    /// T_old -> T over dt, evaluated at time_new.
    void assemble_step(const Eigen::VectorXd& T, const Eigen::VectorXd& T_old, double dt,
                       double time_new, Eigen::VectorXd& residual, SparseSystem* jacobian) const;

    NewtonReport solve_step(Eigen::VectorXd& T, double dt, double time_new, double tol = 1e-8,
                            int max_iter = 25);

    /// Indicator-weighted enthalpy (sensible + latent) for conservation
    /// checks; exact for temperature-independent heat capacity.
    double total_enthalpy(const Eigen::VectorXd& T) const;

private:
    const Discretization* disc_;
    const QuadraturePlan* plan_;
    PropertyTable rho_c_;
    PropertyTable conductivity_;
    PhaseChangeModel phase_;

    void leaf_kernel(int leaf, const Eigen::VectorXd& T, const Eigen::VectorXd& T_old, double dt,
                     double time_new, Eigen::VectorXd* Re, Eigen::MatrixXd* Je) const;
};

}  // namespace hpfcm
