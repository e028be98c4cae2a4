#include "hpfcm/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "hpfcm/assembly.hpp"
#include "hpfcm/polybasis.hpp"

namespace hpfcm {

double LeafFit::eval(const Vec3& local, int comp) const {
    auto row = legendre_vector(orders, local);
    double acc = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * coeffs(static_cast<int>(i), comp);
    return acc;
}

LeafFit fit_leaf(std::span<const Vec3> points, const Eigen::MatrixXd& values, Int3 orders) {
    if (static_cast<int>(points.size()) != values.rows())
        throw std::invalid_argument("fit_leaf: sample count mismatch");
    for (;;) {
        int dim = legendre_vector_size(orders);
        if (static_cast<int>(points.size()) < dim) {
            // not enough samples for this space; shrink
            int big = std::max({orders[0], orders[1], orders[2]});
            if (big == 0) throw std::invalid_argument("fit_leaf: no sample points");
            for (int d = 0; d < 3; ++d) orders[d] = std::min(orders[d], big - 1);
            continue;
        }
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, values.cols());
        for (std::size_t j = 0; j < points.size(); ++j) {
            auto row = legendre_vector(orders, points[j]);
            Eigen::Map<const Eigen::VectorXd> P(row.data(), dim);
            A.selfadjointView<Eigen::Lower>().rankUpdate(P);
            b += P * values.row(static_cast<int>(j));
        }
        A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
            (A.diagonal().array() > 0).all()) {
            Eigen::MatrixXd c = ldlt.solve(b);
            double residual = (A * c - b).norm();
            if (residual <= 1e-8 * std::max(1.0, b.norm())) {
                LeafFit fit;
                fit.orders = orders;
                fit.coeffs = std::move(c);
                return fit;
            }
        }
        // rank deficient sample set: retry with a smaller space
        int big = std::max({orders[0], orders[1], orders[2]});
        if (big == 0) throw std::runtime_error("fit_leaf: rank-deficient even for constants");
        std::cerr << "fit_leaf: rank-deficient normal matrix, falling back to order " << big - 1 << "\n";
        for (int d = 0; d < 3; ++d) orders[d] = std::min(orders[d], big - 1);
    }
}

double interpolate_interface(const Vec3& p, const std::array<std::vector<double>, 3>& axes,
                             std::span<const double> values) {
    int idx0[3], idx1[3];
    double t[3];
    for (int d = 0; d < 3; ++d) {
        const auto& x = axes[d];
        if (x.empty()) throw std::invalid_argument("interpolate_interface: empty lattice axis");
        if (p[d] <= x.front()) {
            idx0[d] = idx1[d] = 0;  // projection onto the lattice box
            t[d] = 0.0;
        } else if (p[d] >= x.back()) {
            idx0[d] = idx1[d] = static_cast<int>(x.size()) - 1;
            t[d] = 0.0;
        } else {
            int i = static_cast<int>(std::upper_bound(x.begin(), x.end(), p[d]) - x.begin());
            idx0[d] = i - 1;
            idx1[d] = i;
            t[d] = (p[d] - x[i - 1]) / (x[i] - x[i - 1]);
        }
    }
    int ny = static_cast<int>(axes[1].size()), nz = static_cast<int>(axes[2].size());
    auto at = [&](int i, int j, int k) { return values[(i * ny + j) * nz + k]; };
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) * (c ? t[2] : 1 - t[2]);
                if (w == 0.0) continue;
                acc += w * at(a ? idx1[0] : idx0[0], b ? idx1[1] : idx0[1], c ? idx1[2] : idx0[2]);
            }
    return acc;
}

std::vector<bool> flag_interfaces(const GaussStateStore& store, const QuadraturePlan& plan,
                                  double threshold) {
    std::vector<bool> flags(store.states.size(), false);
    for (std::size_t leaf = 0; leaf < store.states.size(); ++leaf) {
        bool plastic = false, elastic = false;
        const auto& lq = plan.of(static_cast<int>(leaf));
        for (std::size_t pt = 0; pt < store.states[leaf].size(); ++pt) {
            if (lq.w_phys[pt] == 0.0) continue;
            (store.states[leaf][pt].eps_p_bar > threshold ? plastic : elastic) = true;
        }
        flags[leaf] = plastic && elastic;
    }
    return flags;
}

namespace {

constexpr int kComponents = 7;  // eps_p (6) + eps_p_bar

bool same_lattice(const LeafQuadrature& a, const LeafQuadrature& b) {
    if (a.cut != b.cut || a.points.size() != b.points.size()) return false;
    for (std::size_t i = 0; i < a.points.size(); ++i)
        if (a.points[i] != b.points[i]) return false;
    return true;
}

}  // namespace

GaussStateStore transfer_states(const Discretization& old_disc, const QuadraturePlan& old_plan,
                                const GaussStateStore& old_store, const Discretization& new_disc,
                                const QuadraturePlan& new_plan, TransferStats* stats) {
    const auto& old_mesh = old_disc.mesh;
    const auto& new_mesh = new_disc.mesh;
    auto flags = flag_interfaces(old_store, old_plan);

    // lazy least squares fits per old leaf (physical points only)
    std::vector<char> fit_ready(old_mesh.leaves().size(), 0);
    std::vector<LeafFit> fits(old_mesh.leaves().size());
    auto fit_of = [&](int leaf) -> const LeafFit& {
        if (!fit_ready[leaf]) {
            const auto& lq = old_plan.of(leaf);
            std::vector<Vec3> pts;
            std::vector<int> ids;
            for (int pt = 0; pt < lq.lattice_size(); ++pt)
                if (lq.w_phys[pt] != 0.0) {
                    pts.push_back(lq.lattice_point(pt));
                    ids.push_back(pt);
                }
            Eigen::MatrixXd vals(pts.size(), kComponents);
            for (std::size_t r = 0; r < ids.size(); ++r) {
                const auto& s = old_store.states[leaf][ids[r]];
                for (int c = 0; c < 6; ++c) vals(static_cast<int>(r), c) = s.eps_p[c];
                vals(static_cast<int>(r), 6) = s.eps_p_bar;
            }
            fits[leaf] = fit_leaf(pts, vals, {old_disc.order, old_disc.order, old_disc.order});
            fit_ready[leaf] = 1;
        }
        return fits[leaf];
    };

    GaussStateStore out;
    out.keys.reserve(new_mesh.leaves().size());
    out.states.resize(new_mesh.leaves().size());

    TransferStats local{};
    for (int nl = 0; nl < static_cast<int>(new_mesh.leaves().size()); ++nl) {
        const Leaf& leaf = new_mesh.leaves()[nl];
        out.keys.push_back(leaf.key());
        const auto& lq = new_plan.of(nl);
        out.states[nl].assign(lq.lattice_size(), InternalVariables{});

        // unchanged leaf with identical lattice: verbatim copy
        int same = old_mesh.leaf_index(leaf.key());
        if (same >= 0 && same_lattice(old_plan.of(same), lq)) {
            out.states[nl] = old_store.states[same];
            continue;
        }

        Box box = new_mesh.leaf_box(leaf);
        for (int pt = 0; pt < lq.lattice_size(); ++pt) {
            if (lq.w_phys[pt] == 0.0) continue;
            Vec3 x = box.map_local(lq.lattice_point(pt));
            auto ol = old_mesh.leaf_at(x, /*prefer_lower=*/true);
            if (!ol) {
                local.fresh_points++;  // newly active material starts pristine
                continue;
            }
            Box obox = old_mesh.leaf_box(old_mesh.leaves()[*ol]);
            Vec3 xi = obox.to_local(x);
            for (int d = 0; d < 3; ++d) xi[d] = std::clamp(xi[d], -1.0, 1.0);

            InternalVariables s;
            const auto& olq = old_plan.of(*ol);
            if (flags[*ol]) {
                if (olq.has_lattice()) {
                    std::vector<double> comp(olq.lattice_size());
                    for (int c = 0; c < kComponents; ++c) {
                        for (int q = 0; q < olq.lattice_size(); ++q)
                            comp[q] = c < 6 ? old_store.states[*ol][q].eps_p[c]
                                            : old_store.states[*ol][q].eps_p_bar;
                        double v = interpolate_interface(xi, olq.axes, comp);
                        if (c < 6) s.eps_p[c] = v;
                        else s.eps_p_bar = v;
                    }
                } else {
                    // interface in a cut leaf: nearest physical lattice point
                    double best = 1e300;
                    int pick = -1;
                    for (int q = 0; q < olq.lattice_size(); ++q) {
                        if (olq.w_phys[q] == 0.0) continue;
                        Vec3 d = olq.lattice_point(q) - xi;
                        double dist = dot(d, d);
                        if (dist < best) {
                            best = dist;
                            pick = q;
                        }
                    }
                    if (pick >= 0) s = old_store.states[*ol][pick];
                }
                if (s.eps_p_bar < 0.0) {
                    local.clamped++;
                    local.clamped_interface++;
                    s.eps_p_bar = 0.0;
                }
            } else {
                const LeafFit& fit = fit_of(*ol);
                for (int c = 0; c < 6; ++c) s.eps_p[c] = fit.eval(xi, c);
                s.eps_p_bar = fit.eval(xi, 6);
                if (s.eps_p_bar < 0.0) {
                    local.clamped++;
                    s.eps_p_bar = 0.0;
                }
            }
            // plastic flow is deviatoric; remove any trace picked up in transit
            double tr = s.eps_p.trace() / 3.0;
            s.eps_p[SymTensor3::XX] -= tr;
            s.eps_p[SymTensor3::YY] -= tr;
            s.eps_p[SymTensor3::ZZ] -= tr;
            out.states[nl][pt] = s;
        }
    }
    if (stats) *stats = local;
    return out;
}

Eigen::VectorXd l2_project_primal(const Discretization& old_disc, const Eigen::VectorXd& old_dofs,
                                  int ncomp, const Discretization& new_disc,
                                  const QuadraturePlan& new_plan, const QuadraturePlan& old_plan) {
    if (!(old_disc.mesh.grid().counts == new_disc.mesh.grid().counts))
        throw std::invalid_argument("l2_project_primal: discretizations must share the base grid");

    const auto& new_mesh = new_disc.mesh;
    const auto& old_mesh = old_disc.mesh;

    SparseSystem mass(new_disc, 1);
    mass.set_zero();
    std::vector<Eigen::VectorXd> rhs(ncomp, Eigen::VectorXd::Zero(new_disc.dof_count()));

    auto eval_old = [&](int old_leaf, const Vec3& xi, double* out_comps) {
        auto vals = eval_at_points(old_disc, old_leaf, std::span<const Vec3>(&xi, 1));
        const auto& fns = old_disc.leaf_bases[old_leaf].functions;
        for (int c = 0; c < ncomp; ++c) out_comps[c] = 0.0;
        for (int fn = 0; fn < vals.n_fn; ++fn) {
            double v = vals.val(0, fn);
            for (int c = 0; c < ncomp; ++c)
                out_comps[c] += v * old_dofs[static_cast<std::int64_t>(fns[fn].dof) * ncomp + c];
        }
    };

    std::vector<double> comps(ncomp);
    for (int nl = 0; nl < static_cast<int>(new_mesh.leaves().size()); ++nl) {
        const Leaf& leaf = new_mesh.leaves()[nl];
        Box box = new_mesh.leaf_box(leaf);
        const auto& lq = new_plan.of(nl);
        const auto& fns = new_disc.leaf_bases[nl].functions;
        int n = static_cast<int>(fns.size());
        std::vector<std::int32_t> dofs(n);
        for (int f = 0; f < n; ++f) dofs[f] = fns[f].dof;

        // mass on the new rule
        auto vals = eval_plan_points(new_disc, nl, lq);
        double jac = box.volume() / 8.0;
        Eigen::MatrixXd Me = Eigen::MatrixXd::Zero(n, n);
        for (int pt = 0; pt < lq.lattice_size(); ++pt) {
            double w = (lq.w_phys[pt] + new_plan.alpha_fict * lq.w_fict[pt]) * jac;
            if (w == 0.0) continue;
            for (int i = 0; i < n; ++i) {
                double vi = vals.val(pt, i);
                for (int j = 0; j < n; ++j) Me(i, j) += w * vi * vals.val(pt, j);
            }
        }
        mass.add_block(dofs, Me);

        // rhs over the finer of old and new
        auto center_leaf = old_mesh.leaf_at(box.center());
        bool old_is_finer = false;
        if (center_leaf) old_is_finer = old_mesh.leaves()[*center_leaf].level > leaf.level;

        if (!old_is_finer) {
            for (int pt = 0; pt < lq.lattice_size(); ++pt) {
                double w = (lq.w_phys[pt] + new_plan.alpha_fict * lq.w_fict[pt]) * jac;
                if (w == 0.0) continue;
                Vec3 x = box.map_local(lq.lattice_point(pt));
                auto ol = old_mesh.leaf_at(x, true);
                if (!ol) continue;
                Box obox = old_mesh.leaf_box(old_mesh.leaves()[*ol]);
                Vec3 xi = obox.to_local(x);
                for (int d = 0; d < 3; ++d) xi[d] = std::clamp(xi[d], -1.0, 1.0);
                eval_old(*ol, xi, comps.data());
                for (int i = 0; i < n; ++i) {
                    double v = w * vals.val(pt, i);
                    for (int c = 0; c < ncomp; ++c) rhs[c][dofs[i]] += v * comps[c];
                }
            }
        } else {
            // integrate over the contained old leaves so the piecewise field
            // is polynomial on every quadrature cell
            for (int ol = 0; ol < static_cast<int>(old_mesh.leaves().size()); ++ol) {
                const Leaf& oleaf = old_mesh.leaves()[ol];
                int shift = oleaf.level - leaf.level;
                if (shift < 0) continue;
                if ((oleaf.gx >> shift) != leaf.gx || (oleaf.gy >> shift) != leaf.gy ||
                    (oleaf.gz >> shift) != leaf.gz)
                    continue;
                Box obox = old_mesh.leaf_box(oleaf);
                const auto& olq = old_plan.of(ol);
                double ojac = obox.volume() / 8.0;
                std::vector<Vec3> new_local(olq.lattice_size());
                for (int pt = 0; pt < olq.lattice_size(); ++pt)
                    new_local[pt] = box.to_local(obox.map_local(olq.lattice_point(pt)));
                auto nvals = eval_at_points(new_disc, nl, new_local);
                for (int pt = 0; pt < olq.lattice_size(); ++pt) {
                    double w = (olq.w_phys[pt] + old_plan.alpha_fict * olq.w_fict[pt]) * ojac;
                    if (w == 0.0) continue;
                    eval_old(ol, olq.lattice_point(pt), comps.data());
                    for (int i = 0; i < n; ++i) {
                        double v = w * nvals.val(pt, i);
                        for (int c = 0; c < ncomp; ++c) rhs[c][dofs[i]] += v * comps[c];
                    }
                }
            }
        }
    }

    DirectSolver solver(true);
    solver.factor(mass.matrix());
    Eigen::VectorXd out(new_disc.dof_count() * ncomp);
    for (int c = 0; c < ncomp; ++c) {
        Eigen::VectorXd uc = solver.solve(rhs[c]);
        for (std::int64_t i = 0; i < new_disc.dof_count(); ++i) out[i * ncomp + c] = uc[i];
    }
    return out;
}

}  // namespace hpfcm
