#include "hpfcm/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hpfcm/gauss.hpp"

namespace hpfcm {

GaussStateStore GaussStateStore::zero(const Discretization& disc, const QuadraturePlan& plan) {
    GaussStateStore store;
    store.keys.reserve(disc.mesh.leaves().size());
    store.states.resize(disc.mesh.leaves().size());
    for (std::size_t i = 0; i < disc.mesh.leaves().size(); ++i) {
        store.keys.push_back(disc.mesh.leaves()[i].key());
        store.states[i].assign(plan.of(static_cast<int>(i)).lattice_size(), InternalVariables{});
    }
    return store;
}

MechanicsProblem::MechanicsProblem(const Discretization& disc, const QuadraturePlan& plan,
                                   ElasticLaw elastic, HardeningCurve hardening,
                                   ThermalExpansion expansion)
    : disc_(&disc), plan_(&plan), elastic_(std::move(elastic)), hardening_(std::move(hardening)),
      expansion_(std::move(expansion)) {
    elastic_.check();
}

std::int64_t MechanicsProblem::n_dofs() const { return disc_->dof_count() * 3 + constraints.n_aux; }

Eigen::VectorXd MechanicsProblem::external_load() const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n_dofs());
    const auto& mesh = disc_->mesh;

    for (const auto& load : loads.pressures) {
        for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
            Box box = mesh.leaf_box(mesh.leaves()[leaf]);
            auto pts = embedded_surface_quadrature(box, load.surface, load.depth);
            if (pts.empty()) continue;
            std::vector<Vec3> local;
            local.reserve(pts.size());
            for (const auto& p : pts) {
                Vec3 xi = box.to_local(p.position);
                for (int d = 0; d < 3; ++d) xi[d] = std::clamp(xi[d], -1.0, 1.0);
                local.push_back(xi);
            }
            auto vals = eval_at_points(*disc_, leaf, local);
            const auto& fns = disc_->leaf_bases[leaf].functions;
            for (std::size_t q = 0; q < pts.size(); ++q) {
                Vec3 t = (load.magnitude) * pts[q].normal;
                for (int fn = 0; fn < vals.n_fn; ++fn) {
                    double nv = vals.val(static_cast<int>(q), fn);
                    for (int a = 0; a < 3; ++a)
                        f[static_cast<std::int64_t>(fns[fn].dof) * 3 + a] += pts[q].weight * t[a] * nv;
                }
            }
        }
    }

    const auto& grid = mesh.grid();
    for (const auto& tr : loads.tractions) {
        double plane = tr.side == 0 ? grid.origin[tr.axis]
                                    : grid.origin[tr.axis] + grid.spacing[tr.axis] * grid.counts[tr.axis];
        const GaussRule& rule = gauss_rule(disc_->order + 1);
        for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
            Box box = mesh.leaf_box(mesh.leaves()[leaf]);
            double face = tr.side == 0 ? box.lo[tr.axis] : box.hi[tr.axis];
            if (std::abs(face - plane) > 1e-9 * grid.spacing[tr.axis]) continue;
            int a1 = (tr.axis + 1) % 3, a2 = (tr.axis + 2) % 3;
            double jac = 0.25 * (box.hi[a1] - box.lo[a1]) * (box.hi[a2] - box.lo[a2]);
            std::vector<Vec3> local;
            for (std::size_t i = 0; i < rule.size(); ++i)
                for (std::size_t j = 0; j < rule.size(); ++j) {
                    Vec3 xi;
                    xi[tr.axis] = tr.side == 0 ? -1.0 : 1.0;
                    xi[a1] = rule.points[i];
                    xi[a2] = rule.points[j];
                    local.push_back(xi);
                }
            auto vals = eval_at_points(*disc_, leaf, local);
            const auto& fns = disc_->leaf_bases[leaf].functions;
            int q = 0;
            for (std::size_t i = 0; i < rule.size(); ++i)
                for (std::size_t j = 0; j < rule.size(); ++j, ++q) {
                    double w = rule.weights[i] * rule.weights[j] * jac;
                    for (int fn = 0; fn < vals.n_fn; ++fn) {
                        double nv = vals.val(q, fn);
                        for (int a = 0; a < 3; ++a)
                            f[static_cast<std::int64_t>(fns[fn].dof) * 3 + a] += w * tr.traction[a] * nv;
                    }
                }
        }
    }

    if (loads.body_force[0] != 0 || loads.body_force[1] != 0 || loads.body_force[2] != 0) {
        for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
            const auto& lq = plan_->of(leaf);
            Box box = mesh.leaf_box(mesh.leaves()[leaf]);
            double jac = box.volume() / 8.0;
            auto vals = eval_plan_points(*disc_, leaf, lq);
            const auto& fns = disc_->leaf_bases[leaf].functions;
            for (int pt = 0; pt < lq.lattice_size(); ++pt) {
                double w = (lq.w_phys[pt] + plan_->alpha_fict * lq.w_fict[pt]) * jac;
                if (w == 0.0) continue;
                for (int fn = 0; fn < vals.n_fn; ++fn) {
                    double nv = vals.val(pt, fn);
                    for (int a = 0; a < 3; ++a)
                        f[static_cast<std::int64_t>(fns[fn].dof) * 3 + a] += w * loads.body_force[a] * nv;
                }
            }
        }
    }
    return f;
}

namespace {

struct PointMaterial {
    SymTensor3 stress;
    TangentOperator tangent;
    bool plastic;
};

}  // namespace

void MechanicsProblem::leaf_kernel(int leaf, const Eigen::VectorXd& u, const GaussStateStore& states_n,
                                   Eigen::VectorXd* Re, GaussStateStore* trial,
                                   Eigen::MatrixXd* Ke) const {
    const auto& mesh = disc_->mesh;
    const auto& lq = plan_->of(leaf);
    const auto& fns = disc_->leaf_bases[leaf].functions;
    const int n = static_cast<int>(fns.size());
    const int n_pt = lq.lattice_size();
    Box box = mesh.leaf_box(mesh.leaves()[leaf]);
    const double jac = box.volume() / 8.0;
    const double alpha = plan_->alpha_fict;

    auto vals = eval_plan_points(*disc_, leaf, lq);
    if (Re) Re->setZero(3 * n);

    // element displacement (by function)
    std::vector<std::array<double, 3>> ue(n);
    for (int fn = 0; fn < n; ++fn)
        for (int a = 0; a < 3; ++a) ue[fn][a] = u[static_cast<std::int64_t>(fns[fn].dof) * 3 + a];

    std::vector<PointMaterial> mat(n_pt);
    std::vector<double> Tpt(n_pt, expansion_.T_ref);
    bool any_plastic = false;

    // pass 1: strains, return mapping, residual
    for (int pt = 0; pt < n_pt; ++pt) {
        double wp = lq.w_phys[pt], wf = lq.w_fict[pt];
        if (wp == 0.0 && wf == 0.0) continue;

        SymTensor3 eps;
        for (int fn = 0; fn < n; ++fn) {
            const Vec3& g = vals.grad(pt, fn);
            eps[SymTensor3::XX] += ue[fn][0] * g[0];
            eps[SymTensor3::YY] += ue[fn][1] * g[1];
            eps[SymTensor3::ZZ] += ue[fn][2] * g[2];
            eps[SymTensor3::YZ] += 0.5 * (ue[fn][1] * g[2] + ue[fn][2] * g[1]);
            eps[SymTensor3::XZ] += 0.5 * (ue[fn][0] * g[2] + ue[fn][2] * g[0]);
            eps[SymTensor3::XY] += 0.5 * (ue[fn][0] * g[1] + ue[fn][1] * g[0]);
        }

        Vec3 phys = box.map_local(lq.lattice_point(pt));
        double T = temperature ? temperature(phys) : expansion_.T_ref;
        Tpt[pt] = T;
        bool is_molten = T > molten.melt_temperature;

        if (wp > 0.0 || wp < 0.0) {
            InternalVariables old = states_n.states[leaf][pt];
            if (is_molten && molten.reset_state) old = InternalVariables{};
            SymTensor3 eth = thermal_strain(expansion_.gamma, T, expansion_.T_ref);
            auto rr = radial_return(eps, eth, old, T, elastic_, hardening_);
            mat[pt].stress = rr.stress;
            mat[pt].tangent = rr.tangent;
            mat[pt].plastic = rr.plastic;
            any_plastic = any_plastic || rr.plastic;
            if (trial) trial->states[leaf][pt] = (is_molten && molten.reset_state) ? InternalVariables{} : rr.state;
        } else {
            mat[pt].plastic = false;
            mat[pt].tangent.bulk = elastic_.bulk(T);
            mat[pt].tangent.two_mu_theta = 2.0 * elastic_.mu(T);
            if (trial) trial->states[leaf][pt] = states_n.states[leaf][pt];
        }

        if (Re && lq.w_phys[pt] != 0.0) {
            double w = lq.w_phys[pt] * jac;
            const SymTensor3& s = mat[pt].stress;
            for (int fn = 0; fn < n; ++fn) {
                const Vec3& g = vals.grad(pt, fn);
                (*Re)[3 * fn + 0] += w * (s(0, 0) * g[0] + s(0, 1) * g[1] + s(0, 2) * g[2]);
                (*Re)[3 * fn + 1] += w * (s(1, 0) * g[0] + s(1, 1) * g[1] + s(1, 2) * g[2]);
                (*Re)[3 * fn + 2] += w * (s(2, 0) * g[0] + s(2, 1) * g[1] + s(2, 2) * g[2]);
            }
        }
    }

    if (!Ke) return;

    // constant-coefficient leaves assemble through separable 1D integrals
    bool elastic_const = elastic_.young.temperature.size() == 1 && !temperature;
    bool uniform_measure = !lq.cut;
    if (!any_plastic && elastic_const && lq.cut) {
        std::lock_guard<std::mutex> lock(*cache_mutex_);
        auto it = cut_elastic_cache_.find(leaf);
        if (it != cut_elastic_cache_.end()) {
            *Ke = it->second;
            return;
        }
    }
    if (!any_plastic && elastic_const && uniform_measure) {
        double phys_leaf = 0.0;
        for (double w : lq.w_phys) phys_leaf += w;
        double scale = phys_leaf > 0.0 ? 1.0 : alpha;
        double T0 = expansion_.T_ref;
        double mu = elastic_.mu(T0);
        double lambda = elastic_.bulk(T0) - 2.0 * mu / 3.0;
        auto sep = build_separable_integrals(*disc_, leaf, static_cast<int>(lq.axes[0].size()));
        Ke->setZero(3 * n, 3 * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double I[3][3];
                double trace = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) I[a][b] = sep.stiffness_entry(i, j, a, b);
                trace = I[0][0] + I[1][1] + I[2][2];
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        double v = lambda * I[a][b] + mu * I[b][a];
                        if (a == b) v += mu * trace;
                        (*Ke)(3 * i + a, 3 * j + b) = scale * v;
                    }
            }
        return;
    }

    Ke->setZero(3 * n, 3 * n);
    std::vector<Vec3> G(n);
    std::vector<Vec3> V(n);
    for (int pt = 0; pt < n_pt; ++pt) {
        double wp = lq.w_phys[pt] * jac;
        double wf = lq.w_fict[pt] * jac * alpha;
        if (wp == 0.0 && wf == 0.0) continue;
        for (int fn = 0; fn < n; ++fn) G[fn] = vals.grad(pt, fn);

        // physical: consistent tangent; fictitious: elastic tangent
        for (int pass = 0; pass < 2; ++pass) {
            double w = pass == 0 ? wp : wf;
            if (w == 0.0) continue;
            double kappa, two_mu_th, r1 = 0.0;
            const SymTensor3* nh = nullptr;
            if (pass == 0) {
                kappa = mat[pt].tangent.bulk;
                two_mu_th = mat[pt].tangent.two_mu_theta;
                r1 = mat[pt].tangent.rank1;
                nh = &mat[pt].tangent.nhat;
            } else {
                kappa = elastic_.bulk(Tpt[pt]);
                two_mu_th = 2.0 * elastic_.mu(Tpt[pt]);
            }
            double mu_th = 0.5 * two_mu_th;
            double c1 = kappa - two_mu_th / 3.0;
            bool rank1 = r1 != 0.0;
            if (rank1)
                for (int fn = 0; fn < n; ++fn) V[fn] = hpfcm::apply(*nh, G[fn]);

            for (int i = 0; i < n; ++i) {
                const Vec3& gi = G[i];
                for (int j = 0; j <= i; ++j) {
                    const Vec3& gj = G[j];
                    double S = gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2];
                    double* row0 = Ke->data() + (3 * j) * Ke->rows() + 3 * i;  // column major
                    for (int b = 0; b < 3; ++b) {
                        double* col = row0 + b * Ke->rows();
                        for (int a = 0; a < 3; ++a) {
                            double v = c1 * gi[a] * gj[b] + mu_th * gi[b] * gj[a];
                            if (a == b) v += mu_th * S;
                            if (rank1) v -= r1 * V[i][a] * V[j][b];
                            col[a] += w * v;
                        }
                    }
                }
            }
        }
    }
    // mirror the lower function-triangle
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) (*Ke)(3 * i + a, 3 * j + b) = (*Ke)(3 * j + b, 3 * i + a);

    if (!any_plastic && elastic_const && lq.cut) {
        std::lock_guard<std::mutex> lock(*cache_mutex_);
        cut_elastic_cache_.emplace(leaf, *Ke);
    }
}

void MechanicsProblem::assemble(const Eigen::VectorXd& u, const GaussStateStore& states_n,
                                Eigen::VectorXd& residual, GaussStateStore* trial,
                                SparseSystem* tangent) const {
    const auto& leaves = disc_->mesh.leaves();
    if (states_n.states.size() != leaves.size())
        throw std::runtime_error("MechanicsProblem: state store does not match the mesh");
    for (std::size_t i = 0; i < leaves.size(); ++i)
        if (static_cast<int>(states_n.states[i].size()) != plan_->of(static_cast<int>(i)).lattice_size())
            throw std::runtime_error("MechanicsProblem: state store does not match the quadrature plan");

    residual.setZero(n_dofs());
    if (tangent) tangent->set_zero();

    const int n_leaves = static_cast<int>(leaves.size());
    const int chunk = 16;
    std::vector<Eigen::MatrixXd> Kes(chunk);
    std::vector<Eigen::VectorXd> Res(chunk);
    for (int start = 0; start < n_leaves; start += chunk) {
        int end = std::min(start + chunk, n_leaves);
#pragma omp parallel for schedule(dynamic)
        for (int leaf = start; leaf < end; ++leaf)
            leaf_kernel(leaf, u, states_n, &Res[leaf - start], trial,
                        tangent ? &Kes[leaf - start] : nullptr);
        // deterministic scatter in leaf order
        for (int leaf = start; leaf < end; ++leaf) {
            const auto& fns = disc_->leaf_bases[leaf].functions;
            const Eigen::VectorXd& Re = Res[leaf - start];
            for (std::size_t f = 0; f < fns.size(); ++f)
                for (int a = 0; a < 3; ++a)
                    residual[static_cast<std::int64_t>(fns[f].dof) * 3 + a] += Re[3 * f + a];
            if (tangent) {
                std::vector<std::int32_t> dofs(fns.size());
                for (std::size_t f = 0; f < fns.size(); ++f) dofs[f] = fns[f].dof;
                tangent->add_block(dofs, Kes[leaf - start]);
            }
        }
    }
}

NewtonReport MechanicsProblem::newton_solve(Eigen::VectorXd& u, GaussStateStore& states, double tol,
                                            int max_iter) {
    if (u.size() != n_dofs()) {
        Eigen::VectorXd grown = Eigen::VectorXd::Zero(n_dofs());
        grown.head(std::min<std::int64_t>(u.size(), n_dofs())) = u.head(std::min<std::int64_t>(u.size(), n_dofs()));
        u = grown;
    }
    impose_dirichlet(u, dirichlet);

    Eigen::VectorXd f_ext = external_load();
    SparseSystem K(*disc_, 3);
    GaussStateStore trial = states;

    DirichletSet homog = dirichlet;  // delta corrections are zero at fixed dofs
    for (auto& e : homog.entries) e.second = 0.0;

    // fold slave-dof residual entries onto their masters (rows of the form
    // u_slave - c * u_master = 0) so the norm measures equilibrium in the
    // constrained subspace
    auto reduced_norm = [&](Eigen::VectorXd r) {
        zero_dirichlet(r, homog);
        for (const auto& row : constraints.rows) {
            if (row.terms.size() == 1) {
                r[row.terms[0].first] = 0.0;  // clamped unknown, no equilibrium requirement
            } else if (row.terms.size() == 2) {
                auto [slave, cs] = row.terms[0];
                auto [master, cm] = row.terms[1];
                r[master] += (-cm / cs) * r[slave];
                r[slave] = 0.0;
            }
        }
        return r.norm();
    };

    NewtonReport report;
    Eigen::VectorXd residual(n_dofs());

    assemble(u, states, residual, &trial, &K);
    Eigen::VectorXd r = residual - f_ext;
    double norm = reduced_norm(r);
    report.load_reference = std::max({reduced_norm(f_ext), norm, 1e-30});
    report.residual_norms.push_back(norm);

    for (int it = 0; it < max_iter; ++it) {
        if (norm <= tol * report.load_reference) {
            report.converged = true;
            states = trial;
            report.iterations = it;
            return report;
        }
        Eigen::VectorXd rhs = -r;
        Eigen::VectorXd du;
        auto& Km = K.matrix();
        Eigen::VectorXd rhs_head = rhs.head(Km.rows());
        apply_dirichlet(Km, rhs_head, homog);
        if (constraints.empty()) {
            DirectSolver solver(true);
            solver.factor(Km);
            du = solver.solve(rhs_head);
        } else {
            du = solve_constrained(Km, rhs_head, constraints);
        }

        // backtracking line search on the reduced residual norm
        double step = 1.0;
        Eigen::VectorXd u_next;
        double next_norm = 0.0;
        for (int half = 0; half <= 8; ++half) {
            u_next = u + step * du;
            assemble(u_next, states, residual, &trial, nullptr);
            next_norm = reduced_norm(residual - f_ext);
            if (next_norm <= (1.0 - 1e-4 * step) * norm || half == 8) break;
            step *= 0.5;
        }
        u = u_next;
        // tangent for the next iteration at the accepted iterate
        assemble(u, states, residual, &trial, &K);
        r = residual - f_ext;
        norm = reduced_norm(r);
        report.residual_norms.push_back(norm);
    }
    if (norm <= tol * report.load_reference) {
        report.converged = true;
        states = trial;
        report.iterations = max_iter;
        return report;
    }
    std::ostringstream msg;
    msg << "newton_solve: no convergence after " << max_iter << " iterations; residual history:";
    for (double v : report.residual_norms) msg << " " << v;
    throw std::runtime_error(msg.str());
}

double MechanicsProblem::internal_energy(const Eigen::VectorXd& u, const GaussStateStore& states) const {
    auto sig = lattice_stresses(u, states);
    double total = 0.0;
    const auto& mesh = disc_->mesh;
    for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
        const auto& lq = plan_->of(leaf);
        if (lq.physical_volume() == 0.0) continue;
        Box box = mesh.leaf_box(mesh.leaves()[leaf]);
        double jac = box.volume() / 8.0;
        auto vals = eval_plan_points(*disc_, leaf, lq);
        const auto& fns = disc_->leaf_bases[leaf].functions;
        int n = static_cast<int>(fns.size());
        std::vector<std::array<double, 3>> ue(n);
        for (int fn = 0; fn < n; ++fn)
            for (int a = 0; a < 3; ++a) ue[fn][a] = u[static_cast<std::int64_t>(fns[fn].dof) * 3 + a];
        for (int pt = 0; pt < lq.lattice_size(); ++pt) {
            if (lq.w_phys[pt] == 0.0) continue;
            SymTensor3 eps;
            for (int fn = 0; fn < n; ++fn) {
                const Vec3& g = vals.grad(pt, fn);
                eps[SymTensor3::XX] += ue[fn][0] * g[0];
                eps[SymTensor3::YY] += ue[fn][1] * g[1];
                eps[SymTensor3::ZZ] += ue[fn][2] * g[2];
                eps[SymTensor3::YZ] += 0.5 * (ue[fn][1] * g[2] + ue[fn][2] * g[1]);
                eps[SymTensor3::XZ] += 0.5 * (ue[fn][0] * g[2] + ue[fn][2] * g[0]);
                eps[SymTensor3::XY] += 0.5 * (ue[fn][0] * g[1] + ue[fn][1] * g[0]);
            }
            total += 0.5 * lq.w_phys[pt] * jac * eps.contract(sig[leaf][pt]);
        }
    }
    return total;
}

std::vector<std::vector<SymTensor3>> MechanicsProblem::lattice_stresses(
    const Eigen::VectorXd& u, const GaussStateStore& states) const {
    const auto& mesh = disc_->mesh;
    std::vector<std::vector<SymTensor3>> out(mesh.leaves().size());
#pragma omp parallel for schedule(dynamic)
    for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
        const auto& lq = plan_->of(leaf);
        Box box = mesh.leaf_box(mesh.leaves()[leaf]);
        out[leaf].assign(lq.lattice_size(), SymTensor3{});
        auto vals = eval_plan_points(*disc_, leaf, lq);
        const auto& fns = disc_->leaf_bases[leaf].functions;
        int n = static_cast<int>(fns.size());
        std::vector<std::array<double, 3>> ue(n);
        for (int fn = 0; fn < n; ++fn)
            for (int a = 0; a < 3; ++a) ue[fn][a] = u[static_cast<std::int64_t>(fns[fn].dof) * 3 + a];
        for (int pt = 0; pt < lq.lattice_size(); ++pt) {
            if (lq.w_phys[pt] == 0.0) continue;
            SymTensor3 eps;
            for (int fn = 0; fn < n; ++fn) {
                const Vec3& g = vals.grad(pt, fn);
                eps[SymTensor3::XX] += ue[fn][0] * g[0];
                eps[SymTensor3::YY] += ue[fn][1] * g[1];
                eps[SymTensor3::ZZ] += ue[fn][2] * g[2];
                eps[SymTensor3::YZ] += 0.5 * (ue[fn][1] * g[2] + ue[fn][2] * g[1]);
                eps[SymTensor3::XZ] += 0.5 * (ue[fn][0] * g[2] + ue[fn][2] * g[0]);
                eps[SymTensor3::XY] += 0.5 * (ue[fn][0] * g[1] + ue[fn][1] * g[0]);
            }
            Vec3 phys = box.map_local(lq.lattice_point(pt));
            double T = temperature ? temperature(phys) : expansion_.T_ref;
            SymTensor3 eth = thermal_strain(expansion_.gamma, T, expansion_.T_ref);
            SymTensor3 ee = eps - eth - states.states[leaf][pt].eps_p;
            out[leaf][pt] = elastic_.bulk(T) * ee.trace() * SymTensor3::identity() +
                            2.0 * elastic_.mu(T) * ee.deviator();
        }
    }
    return out;
}

}  // namespace hpfcm
