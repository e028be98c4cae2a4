#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hpfcm/embedded_domain.hpp"
#include "hpfcm/mechanics.hpp"

namespace hpfcm {

/// Polynomial least squares fit of integration point samples over one leaf,
/// shared normal matrix for any number of components. Falls back to lower
/// orders when the sample set cannot resolve the requested space.
struct LeafFit {
    Int3 orders{0, 0, 0};
    Eigen::MatrixXd coeffs;  // one column per component

    double eval(const Vec3& local, int comp) const;
};

LeafFit fit_leaf(std::span<const Vec3> points, const Eigen::MatrixXd& values, Int3 orders);

/// Interpolation inside the bounding box of the integration point lattice:
/// trilinear between 8 surrounding points; points outside the box are
/// projected onto its face (bilinear), edge (linear) or corner (nearest
/// value). Always a convex combination of lattice values.
double interpolate_interface(const Vec3& p, const std::array<std::vector<double>, 3>& axes,
                             std::span<const double> values);

/// A leaf contains the elastic-plastic interface when its physical
/// integration points carry both plastic and elastic states.
std::vector<bool> flag_interfaces(const GaussStateStore& store, const QuadraturePlan& plan,
                                  double threshold = 1e-12);

struct TransferStats {
    int clamped = 0;            // negative equivalent plastic strain clipped
    int clamped_interface = 0;  // of those, on interface-flagged leaves
    int fresh_points = 0;       // new physical points with no old history
};

/// Map internal variables from the old discretization to the quadrature
/// lattice of the new one: least squares polynomials per old leaf, the
/// bounding-box interpolation on leaves containing the plastic front,
/// verbatim copy for unchanged leaves. Transferred states are cleaned up:
/// the equivalent plastic strain is clamped at zero and the plastic strain
/// tensor is re-deviatorized.
GaussStateStore transfer_states(const Discretization& old_disc, const QuadraturePlan& old_plan,
                                const GaussStateStore& old_store, const Discretization& new_disc,
                                const QuadraturePlan& new_plan, TransferStats* stats = nullptr);

/// Global indicator-weighted L2 projection of a (possibly vector valued)
/// primal field onto the new discretization. Integration runs over the
/// finer of the two meshes so nested refinements project exactly.
Eigen::VectorXd l2_project_primal(const Discretization& old_disc, const Eigen::VectorXd& old_dofs,
                                  int ncomp, const Discretization& new_disc,
                                  const QuadraturePlan& new_plan, const QuadraturePlan& old_plan);

}  // namespace hpfcm
