#include "hpfcm/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hpfcm/gauss.hpp"

namespace hpfcm {

double goldak_eval(const GoldakSource& source, const Vec3& point, double time) {
    if (time < source.t_on || time > source.t_off) return 0.0;
    Vec3 c = source.center ? source.center(time) : Vec3{0, 0, 0};
    double ex = (point[0] - c[0]) / source.semi_axes[0];
    double ey = (point[1] - c[1]) / source.semi_axes[1];
    double ez = (point[2] - c[2]) / source.semi_axes[2];
    double arg = -3.0 * (ex * ex + ey * ey + ez * ez);
    if (arg < -36.0) return 0.0;
    double peak = 6.0 * std::sqrt(3.0) * source.power /
                  (M_PI * std::sqrt(M_PI) * source.semi_axes[0] * source.semi_axes[1] * source.semi_axes[2]);
    return peak * std::exp(arg);
}

double PhaseChangeModel::fraction(double T) const {
    double lo = T_melt - 0.5 * interval;
    if (T <= lo) return 0.0;
    if (T >= T_melt + 0.5 * interval) return 1.0;
    double s = (T - lo) / interval;
    return s * s * (3.0 - 2.0 * s);
}

double PhaseChangeModel::derivative(double T) const {
    double lo = T_melt - 0.5 * interval;
    if (T <= lo || T >= T_melt + 0.5 * interval) return 0.0;
    double s = (T - lo) / interval;
    return 6.0 * s * (1.0 - s) / interval;
}

double LossSurface::area() const {
    double a = 0.0;
    for (const auto& p : points) a += p.weight;
    return a;
}

LossSurface boundary_loss_surface(const Discretization& disc, const ImplicitGeometry& domain,
                                  int embed_depth, const std::function<bool(const Vec3&)>& exclude) {
    LossSurface out;
    const auto& mesh = disc.mesh;
    const auto& grid = mesh.grid();
    Vec3 box_lo = grid.origin;
    Vec3 box_hi{grid.origin[0] + grid.spacing[0] * grid.counts[0],
                grid.origin[1] + grid.spacing[1] * grid.counts[1],
                grid.origin[2] + grid.spacing[2] * grid.counts[2]};

    const GaussRule& rule = gauss_rule(disc.order + 1);
    for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
        Box box = mesh.leaf_box(mesh.leaves()[leaf]);

        if (domain.has_distance())
            for (const auto& p : embedded_surface_quadrature(box, domain, embed_depth))
                if (!exclude || !exclude(p.position)) out.points.push_back({leaf, p.position, p.weight});

        // physical parts of the computational box boundary
        for (int axis = 0; axis < 3; ++axis) {
            for (int side = 0; side < 2; ++side) {
                double plane = side == 0 ? box_lo[axis] : box_hi[axis];
                double face = side == 0 ? box.lo[axis] : box.hi[axis];
                if (std::abs(face - plane) > 1e-9 * grid.spacing[axis]) continue;
                int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
                double jac = 0.25 * (box.hi[a1] - box.lo[a1]) * (box.hi[a2] - box.lo[a2]);
                for (std::size_t i = 0; i < rule.size(); ++i)
                    for (std::size_t j = 0; j < rule.size(); ++j) {
                        Vec3 p;
                        p[axis] = face;
                        p[a1] = box.lo[a1] + 0.5 * (rule.points[i] + 1.0) * (box.hi[a1] - box.lo[a1]);
                        p[a2] = box.lo[a2] + 0.5 * (rule.points[j] + 1.0) * (box.hi[a2] - box.lo[a2]);
                        if (!domain.inside(p)) continue;
                        if (exclude && exclude(p)) continue;
                        out.points.push_back({leaf, p, rule.weights[i] * rule.weights[j] * jac});
                    }
            }
        }
    }
    return out;
}

ThermalProblem::ThermalProblem(const Discretization& disc, const QuadraturePlan& plan,
                               PropertyTable volumetric_heat, PropertyTable conductivity,
                               PhaseChangeModel phase)
    : disc_(&disc), plan_(&plan), rho_c_(std::move(volumetric_heat)),
      conductivity_(std::move(conductivity)), phase_(phase) {}

void ThermalProblem::leaf_kernel(int leaf, const Eigen::VectorXd& T, const Eigen::VectorXd& T_old,
                                 double dt, double time_new, Eigen::VectorXd* Re,
                                 Eigen::MatrixXd* Je) const {
    const auto& lq = plan_->of(leaf);
    const auto& fns = disc_->leaf_bases[leaf].functions;
    const int n = static_cast<int>(fns.size());
    Box box = disc_->mesh.leaf_box(disc_->mesh.leaves()[leaf]);
    const double jac = box.volume() / 8.0;
    const double alpha = plan_->alpha_fict;

    auto vals = eval_plan_points(*disc_, leaf, lq);
    if (Re) Re->setZero(n);
    if (Je) Je->setZero(n, n);

    std::vector<double> Te(n), Toe(n);
    for (int fn = 0; fn < n; ++fn) {
        Te[fn] = T[fns[fn].dof];
        Toe[fn] = T_old[fns[fn].dof];
    }

    for (int pt = 0; pt < lq.lattice_size(); ++pt) {
        double w = (lq.w_phys[pt] + alpha * lq.w_fict[pt]) * jac;
        if (w == 0.0) continue;
        double Tp = 0.0, Top = 0.0;
        Vec3 gradT{0, 0, 0};
        for (int fn = 0; fn < n; ++fn) {
            double v = vals.val(pt, fn);
            Tp += Te[fn] * v;
            Top += Toe[fn] * v;
            const Vec3& g = vals.grad(pt, fn);
            gradT[0] += Te[fn] * g[0];
            gradT[1] += Te[fn] * g[1];
            gradT[2] += Te[fn] * g[2];
        }
        double rc = rho_c_.eval(Tp), drc = rho_c_.derivative(Tp);
        double k = conductivity_.eval(Tp), dk = conductivity_.derivative(Tp);
        double rate = (Tp - Top) / dt;
        double latent_rate = phase_.latent_volumetric * (phase_.fraction(Tp) - phase_.fraction(Top)) / dt;
        double q = 0.0;
        Vec3 phys = box.map_local(lq.lattice_point(pt));
        for (const auto& s : sources) q += goldak_eval(s, phys, time_new);

        if (Re) {
            double bulk = rc * rate + latent_rate - q;
            for (int fn = 0; fn < n; ++fn) {
                const Vec3& g = vals.grad(pt, fn);
                (*Re)[fn] += w * (bulk * vals.val(pt, fn) + k * dot(gradT, g));
            }
        }
        if (Je) {
            double dbulk = rc / dt + drc * rate + phase_.latent_volumetric * phase_.derivative(Tp) / dt;
            for (int i = 0; i < n; ++i) {
                double vi = vals.val(pt, i);
                const Vec3& gi = vals.grad(pt, i);
                double conv_i = dot(gradT, gi);
                for (int j = 0; j < n; ++j) {
                    const Vec3& gj = vals.grad(pt, j);
                    (*Je)(i, j) += w * (dbulk * vi * vals.val(pt, j) + k * dot(gi, gj) +
                                        dk * vals.val(pt, j) * conv_i);
                }
            }
        }
    }
}

void ThermalProblem::assemble_step(const Eigen::VectorXd& T, const Eigen::VectorXd& T_old, double dt,
                                   double time_new, Eigen::VectorXd& residual,
                                   SparseSystem* jacobian) const {
    if (!(dt > 0.0)) throw std::invalid_argument("ThermalProblem: dt must be positive");
    const int n_leaves = static_cast<int>(disc_->mesh.leaves().size());
    residual.setZero(disc_->dof_count());
    if (jacobian) jacobian->set_zero();

    const int chunk = 32;
    std::vector<Eigen::VectorXd> Res(chunk);
    std::vector<Eigen::MatrixXd> Jes(chunk);
    for (int start = 0; start < n_leaves; start += chunk) {
        int end = std::min(start + chunk, n_leaves);
#pragma omp parallel for schedule(dynamic)
        for (int leaf = start; leaf < end; ++leaf)
            leaf_kernel(leaf, T, T_old, dt, time_new, &Res[leaf - start],
                        jacobian ? &Jes[leaf - start] : nullptr);
        for (int leaf = start; leaf < end; ++leaf) {
            const auto& fns = disc_->leaf_bases[leaf].functions;
            for (std::size_t f = 0; f < fns.size(); ++f) residual[fns[f].dof] += Res[leaf - start][f];
            if (jacobian) {
                std::vector<std::int32_t> dofs(fns.size());
                for (std::size_t f = 0; f < fns.size(); ++f) dofs[f] = fns[f].dof;
                jacobian->add_block(dofs, Jes[leaf - start]);
            }
        }
    }

    // convection and radiation over the current loss surface
    if (!loss_surface.points.empty() && (loss.h_conv > 0.0 || loss.emissivity > 0.0)) {
        std::vector<Vec3> local(1);
        for (const auto& sp : loss_surface.points) {
            Box box = disc_->mesh.leaf_box(disc_->mesh.leaves()[sp.leaf]);
            Vec3 xi = box.to_local(sp.position);
            for (int d = 0; d < 3; ++d) xi[d] = std::clamp(xi[d], -1.0, 1.0);
            local[0] = xi;
            auto vals = eval_at_points(*disc_, sp.leaf, local);
            const auto& fns = disc_->leaf_bases[sp.leaf].functions;
            double Tp = 0.0;
            for (int fn = 0; fn < vals.n_fn; ++fn) Tp += T[fns[fn].dof] * vals.val(0, fn);
            double TK = Tp + 273.15, TaK = loss.T_ambient + 273.15;
            double flux = loss.h_conv * (Tp - loss.T_ambient) +
                          loss.emissivity * kStefanBoltzmann * (TK * TK * TK * TK - TaK * TaK * TaK * TaK);
            double dflux = loss.h_conv + 4.0 * loss.emissivity * kStefanBoltzmann * TK * TK * TK;
            for (int i = 0; i < vals.n_fn; ++i)
                residual[fns[i].dof] += sp.weight * flux * vals.val(0, i);
            if (jacobian) {
                Eigen::MatrixXd Je = Eigen::MatrixXd::Zero(vals.n_fn, vals.n_fn);
                for (int i = 0; i < vals.n_fn; ++i)
                    for (int j = 0; j < vals.n_fn; ++j)
                        Je(i, j) = sp.weight * dflux * vals.val(0, i) * vals.val(0, j);
                std::vector<std::int32_t> dofs(vals.n_fn);
                for (int f = 0; f < vals.n_fn; ++f) dofs[f] = fns[f].dof;
                jacobian->add_block(dofs, Je);
            }
        }
    }
}

NewtonReport ThermalProblem::solve_step(Eigen::VectorXd& T, double dt, double time_new, double tol,
                                        int max_iter) {
    Eigen::VectorXd T_old = T;
    impose_dirichlet(T, dirichlet);

    DirichletSet homog = dirichlet;
    for (auto& e : homog.entries) e.second = 0.0;

    SparseSystem J(*disc_, 1);
    Eigen::VectorXd residual(disc_->dof_count());

    NewtonReport report;
    assemble_step(T, T_old, dt, time_new, residual, &J);
    zero_dirichlet(residual, homog);
    double norm = residual.norm();
    report.load_reference = std::max(norm, 1e-30);
    report.residual_norms.push_back(norm);

    for (int it = 0; it < max_iter; ++it) {
        if (norm <= tol * report.load_reference || norm < 1e-14) {
            report.converged = true;
            report.iterations = it;
            return report;
        }
        Eigen::VectorXd rhs = -residual;
        apply_dirichlet(J.matrix(), rhs, homog);
        DirectSolver solver(false);  // conductivity derivative makes J nonsymmetric
        solver.factor(J.matrix());
        Eigen::VectorXd dT = solver.solve(rhs);

        double step = 1.0;
        Eigen::VectorXd T_next;
        double next_norm = 0.0;
        for (int half = 0; half <= 8; ++half) {
            T_next = T + step * dT;
            assemble_step(T_next, T_old, dt, time_new, residual, nullptr);
            zero_dirichlet(residual, homog);
            next_norm = residual.norm();
            if (next_norm <= (1.0 - 1e-4 * step) * norm || half == 8) break;
            step *= 0.5;
        }
        T = T_next;
        assemble_step(T, T_old, dt, time_new, residual, &J);
        zero_dirichlet(residual, homog);
        norm = residual.norm();
        report.residual_norms.push_back(norm);
    }
    if (norm <= tol * report.load_reference || norm < 1e-14) {
        report.converged = true;
        report.iterations = max_iter;
        return report;
    }
    std::ostringstream msg;
    msg << "ThermalProblem::solve_step: no convergence; residual history:";
    for (double v : report.residual_norms) msg << " " << v;
    throw std::runtime_error(msg.str());
}

double ThermalProblem::total_enthalpy(const Eigen::VectorXd& T) const {
    // sensible part integrates the heat-capacity table exactly segmentwise
    auto sensible = [&](double Tp) {
        const auto& tab = rho_c_;
        if (tab.temperature.size() == 1) return tab.value[0] * Tp;
        double acc = 0.0;
        double prevT = 0.0, prevC = tab.eval(0.0);
        for (std::size_t i = 0; i < tab.temperature.size(); ++i) {
            double Ti = tab.temperature[i];
            if (Ti <= 0.0) continue;
            double Tc = std::min(Ti, Tp);
            if (Tc > prevT) {
                double cc = tab.eval(Tc);
                acc += 0.5 * (prevC + cc) * (Tc - prevT);
                prevT = Tc;
                prevC = cc;
            }
            if (Ti >= Tp) break;
        }
        if (Tp > prevT) acc += tab.eval(Tp) * (Tp - prevT);
        return acc;
    };

    double total = 0.0;
    const auto& mesh = disc_->mesh;
    for (int leaf = 0; leaf < static_cast<int>(mesh.leaves().size()); ++leaf) {
        const auto& lq = plan_->of(leaf);
        Box box = mesh.leaf_box(mesh.leaves()[leaf]);
        double jac = box.volume() / 8.0;
        auto vals = eval_plan_points(*disc_, leaf, lq);
        const auto& fns = disc_->leaf_bases[leaf].functions;
        for (int pt = 0; pt < lq.lattice_size(); ++pt) {
            double w = (lq.w_phys[pt] + plan_->alpha_fict * lq.w_fict[pt]) * jac;
            if (w == 0.0) continue;
            double Tp = 0.0;
            for (int fn = 0; fn < vals.n_fn; ++fn) Tp += T[fns[fn].dof] * vals.val(pt, fn);
            total += w * (sensible(Tp) + phase_.latent_volumetric * phase_.fraction(Tp));
        }
    }
    return total;
}

}  // namespace hpfcm
