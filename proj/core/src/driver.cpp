#include "hpfcm/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hpfcm/gauss.hpp"
#include "hpfcm/output.hpp"

namespace hpfcm {

namespace {

double wall_now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

/// Refine every leaf whose box straddles the band around the zero set of
/// the distance field until the band is resolved at max_level.
void refine_toward(MlhpMesh& mesh, const std::function<double(const Vec3&)>& distance, double band) {
    for (int round = 0; round < 2 * mesh.max_level() + 2; ++round) {
        std::vector<int> marks;
        for (int i = 0; i < static_cast<int>(mesh.leaves().size()); ++i) {
            const Leaf& leaf = mesh.leaves()[i];
            if (leaf.level >= mesh.max_level()) continue;
            Box box = mesh.leaf_box(leaf);
            if (std::abs(distance(box.center())) < band + box.half_diagonal()) marks.push_back(i);
        }
        if (marks.empty()) break;
        mesh.refine(marks);
    }
}

/// Remove refinement away from the band. Parents whose 8 children are
/// leaves and lie verifiably outside keep_band are coarsened; protected
/// leaves (persistent refinements) stay.
void coarsen_away(MlhpMesh& mesh, const std::function<double(const Vec3&)>& distance, double keep_band,
                  const std::set<std::uint64_t>& protected_leaves = {}) {
    for (int round = 0; round < mesh.max_level() + 1; ++round) {
        std::map<std::uint64_t, std::pair<ElementKey, int>> candidates;
        for (const Leaf& leaf : mesh.leaves()) {
            if (leaf.level == 0) continue;
            Box box = mesh.leaf_box(leaf);
            if (std::abs(distance(box.center())) < keep_band + box.half_diagonal()) continue;
            if (protected_leaves.count(pack_element_key(leaf.key()))) continue;
            ElementKey parent{leaf.level - 1, leaf.gx >> 1, leaf.gy >> 1, leaf.gz >> 1};
            candidates[pack_element_key(parent)].first = parent;
            candidates[pack_element_key(parent)].second++;
        }
        std::vector<ElementKey> marks;
        for (const auto& [key, entry] : candidates)
            if (entry.second == 8) marks.push_back(entry.first);
        if (marks.empty()) break;
        auto delta = mesh.coarsen(marks);
        if (delta.coarsened.empty()) break;
    }
}

/// Smooth per-leaf polynomial view of the lattice stresses for probing.
class StressField {
public:
    StressField(const MechanicsProblem& prob, const Eigen::VectorXd& u, const GaussStateStore& states)
        : disc_(&prob.disc()), plan_(&prob.plan()), sig_(prob.lattice_stresses(u, states)) {}

    /// Stress at a physical point; zero where no physical material is.
    SymTensor3 operator()(const Vec3& x) const {
        auto leaf = disc_->mesh.leaf_at(x, true);
        if (!leaf) return SymTensor3{};
        const auto& fit = fit_of(*leaf);
        if (fit.coeffs.size() == 0) return SymTensor3{};
        Box box = disc_->mesh.leaf_box(disc_->mesh.leaves()[*leaf]);
        Vec3 xi = box.to_local(x);
        for (int d = 0; d < 3; ++d) xi[d] = std::clamp(xi[d], -1.0, 1.0);
        SymTensor3 s;
        for (int c = 0; c < 6; ++c) s[c] = fit.eval(xi, c);
        return s;
    }

private:
    const Discretization* disc_;
    const QuadraturePlan* plan_;
    std::vector<std::vector<SymTensor3>> sig_;
    mutable std::map<int, LeafFit> fits_;

    const LeafFit& fit_of(int leaf) const {
        auto it = fits_.find(leaf);
        if (it != fits_.end()) return it->second;
        const auto& lq = plan_->of(leaf);
        std::vector<Vec3> pts;
        std::vector<int> ids;
        for (int pt = 0; pt < lq.lattice_size(); ++pt)
            if (lq.w_phys[pt] != 0.0) {
                pts.push_back(lq.lattice_point(pt));
                ids.push_back(pt);
            }
        LeafFit fit;
        if (!pts.empty()) {
            Eigen::MatrixXd vals(pts.size(), 6);
            for (std::size_t r = 0; r < ids.size(); ++r)
                for (int c = 0; c < 6; ++c) vals(static_cast<int>(r), c) = sig_[leaf][ids[r]][c];
            fit = fit_leaf(pts, vals, {disc_->order, disc_->order, disc_->order});
        }
        return fits_.emplace(leaf, std::move(fit)).first->second;
    }
};

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace

// ---------------------------------------------------------------------------
// pressurized shell
// ---------------------------------------------------------------------------

namespace {

struct ShellState {
    std::shared_ptr<MlhpMesh> mesh;
    std::shared_ptr<Discretization> disc;
    std::shared_ptr<QuadraturePlan> plan;
    Eigen::VectorXd u;
    GaussStateStore states;
};

MechanicsProblem make_shell_problem(const ShellConfig& cfg, const Discretization& disc,
                                    const QuadraturePlan& plan, double pressure) {
    ElasticLaw elastic{PropertyTable::constant(cfg.spec.E), cfg.spec.nu};
    MechanicsProblem prob(disc, plan, elastic, HardeningCurve::perfectly_plastic(cfg.spec.sigma_y),
                          ThermalExpansion{PropertyTable::constant(0.0), 0.0});
    for (int axis = 0; axis < 3; ++axis)
        prob.dirichlet.append(dirichlet_plane(disc, axis, 0.0, 0.0, 3, axis));
    prob.loads.pressures.push_back({make_sphere({0, 0, 0}, cfg.spec.r_i), pressure, cfg.solver.quad_depth});
    return prob;
}

}  // namespace

ShellResult run_shell(const ShellConfig& cfg) {
    auto geometry = make_sphere_shell({0, 0, 0}, cfg.spec.r_i, cfg.spec.r_o);
    BaseGrid grid;
    grid.origin = {0, 0, 0};
    grid.spacing = {cfg.box / cfg.base[0], cfg.box / cfg.base[1], cfg.box / cfg.base[2]};
    grid.counts = cfg.base;
    grid.cell_active = active_cells_from_geometry(grid, geometry);

    ensure_dir(cfg.out_dir);
    ShellResult result;
    ShellState state;
    state.mesh = std::make_shared<MlhpMesh>(grid, cfg.max_level);

    double band = cfg.band_factor * grid.spacing[0] / static_cast<double>(1 << cfg.max_level);
    double prev_pressure = 0.0;

    for (double P : cfg.load_steps) {
        double t0 = wall_now();
        double r_p = hill_plastic_front(cfg.spec, P);
        auto front = [r_p](const Vec3& x) { return norm(x) - r_p; };

        MlhpMesh mesh = *state.mesh;
        refine_toward(mesh, front, band);
        coarsen_away(mesh, front, 2.0 * band);
        auto disc = std::make_shared<Discretization>(build_discretization(mesh, cfg.order));
        auto plan = std::make_shared<QuadraturePlan>(
            build_quadrature_plan(*disc, geometry, cfg.solver.alpha, cfg.solver.quad_depth));

        ShellStepSummary summary;
        summary.pressure = P;

        if (state.disc) {
            Eigen::VectorXd u_new =
                l2_project_primal(*state.disc, state.u.head(state.disc->dof_count() * 3), 3, *disc,
                                  *plan, *state.plan);
            auto states_new = transfer_states(*state.disc, *state.plan, state.states, *disc, *plan);
            state.u = u_new;
            state.states = states_new;

            // equilibrium of the transferred fields under the previous load
            MechanicsProblem check = make_shell_problem(cfg, *disc, *plan, prev_pressure);
            Eigen::VectorXd f_ext = check.external_load();
            Eigen::VectorXd residual(check.n_dofs());
            Eigen::VectorXd u_chk = Eigen::VectorXd::Zero(check.n_dofs());
            u_chk.head(state.u.size()) = state.u;
            check.assemble(u_chk, state.states, residual, nullptr, nullptr);
            Eigen::VectorXd r = residual - f_ext;
            DirichletSet homog = check.dirichlet;
            for (auto& e : homog.entries) e.second = 0.0;
            zero_dirichlet(r, homog);
            zero_dirichlet(f_ext, homog);
            summary.transfer_residual_ratio = r.norm() / std::max(f_ext.norm(), 1e-30);
        } else {
            state.u = Eigen::VectorXd::Zero(disc->dof_count() * 3);
            state.states = GaussStateStore::zero(*disc, *plan);
        }
        state.mesh = std::make_shared<MlhpMesh>(std::move(mesh));
        state.disc = disc;
        state.plan = plan;

        MechanicsProblem prob = make_shell_problem(cfg, *disc, *plan, P);
        auto report = prob.newton_solve(state.u, state.states, cfg.solver.newton_tol, cfg.solver.max_newton);
        prev_pressure = P;

        summary.dofs = disc->dof_count() * 3;
        summary.leaves = static_cast<int>(disc->mesh.leaves().size());
        summary.newton_iterations = report.iterations;
        summary.energy = prob.internal_energy(state.u, state.states);

        // radial probes along the space diagonal, kink band excluded
        StressField stress(prob, state.u, state.states);
        Vec3 dir{1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
        double h_fine = grid.spacing[0] / static_cast<double>(1 << cfg.max_level);
        double acc_rr = 0, acc_hoop = 0;
        int used = 0;
        std::vector<double> col_r, col_srr, col_srr_exact, col_shoop, col_shoop_exact;
        for (int i = 0; i < cfg.probe_count; ++i) {
            double r = cfg.spec.r_i + (i + 0.5) / cfg.probe_count * (cfg.spec.r_o - cfg.spec.r_i);
            SymTensor3 s = stress(r * dir);
            Vec3 er = dir;
            double srr = dot(hpfcm::apply(s, er), er);
            double shoop = 0.5 * (s.trace() - srr);  // spherical symmetry: average tangential
            auto exact = hill_stresses(cfg.spec, r_p, r);
            col_r.push_back(r);
            col_srr.push_back(srr);
            col_srr_exact.push_back(exact.rr);
            col_shoop.push_back(shoop);
            col_shoop_exact.push_back(exact.hoop);
            if (std::abs(r - r_p) < h_fine) continue;
            acc_rr += (srr - exact.rr) * (srr - exact.rr);
            acc_hoop += (shoop - exact.hoop) * (shoop - exact.hoop);
            ++used;
        }
        summary.rms_rr = std::sqrt(acc_rr / std::max(used, 1));
        summary.rms_hoop = std::sqrt(acc_hoop / std::max(used, 1));
        summary.wall_seconds = wall_now() - t0;
        result.steps.push_back(summary);

        if (!cfg.out_dir.empty()) {
            std::ostringstream name;
            name << cfg.out_dir << "/shell_probes_P" << P << ".csv";
            std::vector<CsvColumn> cols{{"radius [mm]", col_r},
                                        {"sigma_rr [MPa]", col_srr},
                                        {"sigma_rr_exact [MPa]", col_srr_exact},
                                        {"sigma_hoop [MPa]", col_shoop},
                                        {"sigma_hoop_exact [MPa]", col_shoop_exact}};
            write_csv(name.str(), cols);
            if (cfg.write_fields) {
                std::ostringstream vtk;
                vtk << cfg.out_dir << "/shell_P" << P << ".vtk";
                const Eigen::VectorXd& u = state.u;
                const Discretization& d = *disc;
                std::vector<VtkPointField> pf{
                    {"displacement", 3, [&](const Vec3& x, double* out) {
                         for (int c = 0; c < 3; ++c) {
                             out[c] = 0.0;
                             eval_field(d, std::span<const double>(u.data(), u.size()), x, out[c], 3, c);
                         }
                     }}};
                std::vector<VtkCellField> cf{
                    {"level", 1, [&](int leaf, double* out) { out[0] = d.mesh.leaves()[leaf].level; }},
                    {"sigma_rr", 1, [&](int leaf, double* out) {
                         Vec3 c = d.mesh.leaf_box(d.mesh.leaves()[leaf]).center();
                         double r = std::max(norm(c), 1e-9);
                         Vec3 er = (1.0 / r) * c;
                         out[0] = dot(hpfcm::apply(stress(c), er), er);
                     }}};
                write_vtk(vtk.str(), d, pf, cf);
            }
        }
    }

    if (!cfg.out_dir.empty()) {
        std::ofstream os(cfg.out_dir + "/shell_summary.txt");
        os << "# pressurized shell run\n";
        for (const auto& s : result.steps)
            os << "P " << s.pressure << " MPa: dofs " << s.dofs << " leaves " << s.leaves
               << " newton " << s.newton_iterations << " rms_rr " << s.rms_rr << " rms_hoop "
               << s.rms_hoop << " transfer_ratio " << s.transfer_residual_ratio << " energy "
               << s.energy << " wall " << s.wall_seconds << " s\n";
    }
    return result;
}

std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& cfg) {
    auto geometry = make_sphere_shell({0, 0, 0}, cfg.spec.r_i, cfg.spec.r_o);
    BaseGrid grid;
    grid.origin = {0, 0, 0};
    grid.spacing = {cfg.box / cfg.base[0], cfg.box / cfg.base[1], cfg.box / cfg.base[2]};
    grid.counts = cfg.base;
    grid.cell_active = active_cells_from_geometry(grid, geometry);

    double r_p = hill_plastic_front(cfg.spec, cfg.pressure);
    double U_ex = hill_exact_energy(cfg.spec, cfg.pressure, r_p);
    auto front = [r_p](const Vec3& x) { return norm(x) - r_p; };

    std::vector<ConvergenceRow> rows;
    for (int level : cfg.levels) {
        MlhpMesh mesh(grid, level);
        if (level > 0) {
            double band = cfg.band_factor * grid.spacing[0] / static_cast<double>(1 << level);
            refine_toward(mesh, front, band);
        }
        for (int p : cfg.orders) {
            double t0 = wall_now();
            auto disc = build_discretization(mesh, p);
            auto plan = build_quadrature_plan(disc, geometry, cfg.solver.alpha, cfg.solver.quad_depth);

            ShellConfig step_cfg;
            step_cfg.spec = cfg.spec;
            step_cfg.solver = cfg.solver;
            MechanicsProblem prob = make_shell_problem(step_cfg, disc, plan, cfg.pressure);
            Eigen::VectorXd u = Eigen::VectorXd::Zero(disc.dof_count() * 3);
            auto states = GaussStateStore::zero(disc, plan);
            prob.newton_solve(u, states, cfg.solver.newton_tol, cfg.solver.max_newton);

            ConvergenceRow row;
            row.order = p;
            row.level = level;
            row.dofs = disc.dof_count() * 3;
            row.energy = prob.internal_energy(u, states);
            row.error_percent = relative_energy_error(row.energy, U_ex);
            row.wall_seconds = wall_now() - t0;
            rows.push_back(row);
            std::cout << "convergence p=" << p << " level=" << level << " dofs=" << row.dofs
                      << " e%=" << row.error_percent << " (" << row.wall_seconds << " s)\n";
        }
    }
    if (!cfg.csv_path.empty()) {
        std::vector<CsvColumn> cols(5);
        cols[0].header = "order [-]";
        cols[1].header = "levels [-]";
        cols[2].header = "dofs [-]";
        cols[3].header = "energy [N mm]";
        cols[4].header = "energy_error [%]";
        for (const auto& r : rows) {
            cols[0].values.push_back(r.order);
            cols[1].values.push_back(r.level);
            cols[2].values.push_back(static_cast<double>(r.dofs));
            cols[3].values.push_back(r.energy);
            cols[4].values.push_back(r.error_percent);
        }
        write_csv(cfg.csv_path, cols);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// solidifying bar
// ---------------------------------------------------------------------------

namespace {

struct FieldSide {
    std::shared_ptr<MlhpMesh> mesh;
    std::shared_ptr<Discretization> disc;
    std::shared_ptr<QuadraturePlan> plan;
};

/// Temperature evaluator bound to a snapshot of the thermal state.
std::function<double(const Vec3&)> temperature_field(std::shared_ptr<Discretization> disc,
                                                     std::shared_ptr<Eigen::VectorXd> T,
                                                     double fallback) {
    return [disc = std::move(disc), T = std::move(T), fallback](const Vec3& x) {
        double v = fallback;
        if (!eval_field(*disc, std::span<const double>(T->data(), T->size()), x, v)) return fallback;
        return v;
    };
}

}  // namespace

BarResult run_bar(const BarConfig& cfg) {
    const BarSpec& spec = cfg.spec;
    const double lambda = neumann_lambda(spec);
    const double m = spec.hardness_m();
    InterfacePair pair{0.0, 0.0};
    if (cfg.mech_enabled) pair = weiner_boley_interfaces(lambda, m);

    ensure_dir(cfg.out_dir);
    BarResult result;
    result.lambda = lambda;

    // thermal side
    BaseGrid tgrid;
    tgrid.origin = {0, 0, 0};
    tgrid.spacing = {cfg.length / cfg.thermal_elements, cfg.cross_section, cfg.cross_section};
    tgrid.counts = {cfg.thermal_elements, 1, 1};
    FieldSide thermal;
    thermal.mesh = std::make_shared<MlhpMesh>(tgrid, cfg.thermal_levels);
    auto all = make_all();

    PhaseChangeModel phase{spec.density * spec.latent, spec.T_m, cfg.mushy_interval};
    PropertyTable rho_c = PropertyTable::constant(spec.density * spec.heat_capacity);
    PropertyTable conductivity = PropertyTable::constant(spec.conductivity());

    // mechanical side
    BaseGrid mgrid;
    mgrid.origin = {0, 0, 0};
    mgrid.spacing = {cfg.length / cfg.mech_elements, cfg.cross_section, cfg.cross_section};
    mgrid.counts = {cfg.mech_elements, 1, 1};
    FieldSide mech;
    mech.mesh = std::make_shared<MlhpMesh>(mgrid, cfg.mech_levels);
    GaussStateStore states;
    Eigen::VectorXd u;

    double time = std::max(cfg.start_time, 0.0);
    auto analytic_T = [&](const Vec3& x) {
        return time > 0.0 ? neumann_temperature(spec, lambda, x[0], time) : spec.T_i;
    };

    // initial thermal state (discretization built after the first adapt)
    auto T = std::make_shared<Eigen::VectorXd>();
    bool first = true;

    const double t_end = cfg.probe_times.empty() ? 1.0 : cfg.probe_times.back();
    double band_t = cfg.band_factor * tgrid.spacing[0] / static_cast<double>(1 << cfg.thermal_levels);
    double band_m = cfg.band_factor * mgrid.spacing[0] / static_cast<double>(1 << cfg.mech_levels);

    auto front_of = [&](const Discretization& disc, const Eigen::VectorXd& field) {
        // locate the melting isotherm along the axis by sampling + bisection
        Vec3 probe{0, 0.5 * cfg.cross_section, 0.5 * cfg.cross_section};
        auto T_at = [&](double x) {
            double v = spec.T_i;
            probe[0] = x;
            eval_field(disc, std::span<const double>(field.data(), field.size()),
                       {x, probe[1], probe[2]}, v);
            return v;
        };
        double prev_x = 0.0, prev_v = T_at(0.0);
        for (int i = 1; i <= 400; ++i) {
            double x = cfg.length * i / 400.0;
            double v = T_at(x);
            if ((prev_v - spec.T_m) * (v - spec.T_m) <= 0.0 && prev_v != v) {
                double a = prev_x, b = x;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (a + b);
                    ((T_at(mid) - spec.T_m) * (prev_v - spec.T_m) > 0.0 ? a : b) = mid;
                }
                return 0.5 * (a + b);
            }
            prev_x = x;
            prev_v = v;
        }
        return 0.0;
    };

    std::size_t next_probe = 0;
    while (next_probe < cfg.probe_times.size() && cfg.probe_times[next_probe] <= time + 1e-9) ++next_probe;

    while (time < t_end - 1e-9 || first) {
        // --- thermal mesh update + primal transfer ---
        double front_target = first ? neumann_interface(spec, lambda, std::max(time, cfg.dt))
                                    : front_of(*thermal.disc, *T);
        auto dist_t = [&](const Vec3& x) { return x[0] - front_target; };
        MlhpMesh tmesh = *thermal.mesh;
        refine_toward(tmesh, dist_t, band_t);
        coarsen_away(tmesh, dist_t, 2.0 * band_t);
        bool changed = !(tmesh == *thermal.mesh) || first;
        if (changed) {
            auto ndisc = std::make_shared<Discretization>(build_discretization(tmesh, cfg.thermal_order));
            auto nplan = std::make_shared<QuadraturePlan>(
                build_quadrature_plan(*ndisc, all, cfg.solver.alpha, 0));
            auto nT = std::make_shared<Eigen::VectorXd>();
            if (first) {
                *nT = project_function(*ndisc, analytic_T);
            } else {
                *nT = l2_project_primal(*thermal.disc, *T, 1, *ndisc, *nplan, *thermal.plan);
            }
            thermal.mesh = std::make_shared<MlhpMesh>(std::move(tmesh));
            thermal.disc = ndisc;
            thermal.plan = nplan;
            T = nT;
        }

        if (!first || cfg.start_time == 0.0) {
            // nothing extra: uniform start is the projected constant
        }

        // --- thermal solve ---
        double t_new = time + cfg.dt;
        {
            ThermalProblem prob(*thermal.disc, *thermal.plan, rho_c, conductivity, phase);
            prob.dirichlet.append(dirichlet_plane(*thermal.disc, 0, 0.0, spec.T_w));
            prob.dirichlet.append(dirichlet_plane(*thermal.disc, 0, cfg.length, spec.T_i));
            prob.solve_step(*T, cfg.dt, t_new, cfg.solver.newton_tol, cfg.solver.max_newton);
        }
        time = t_new;
        first = false;

        // --- mechanical update ---
        if (cfg.mech_enabled) {
            double X_now = front_of(*thermal.disc, *T);
            auto dist_m = [&](const Vec3& x) {
                double d = std::abs(x[0] - X_now);
                d = std::min(d, std::abs(x[0] - pair.x1 * X_now));
                d = std::min(d, std::abs(x[0] - pair.x2 * X_now));
                return d;
            };
            MlhpMesh mmesh = *mech.mesh;
            refine_toward(mmesh, dist_m, band_m);
            coarsen_away(mmesh, dist_m, 2.0 * band_m);

            auto T_eval = temperature_field(thermal.disc, T, spec.T_i);
            ImplicitGeometry solid;
            solid.inside = [T_eval, Tm = spec.T_m](const Vec3& x) { return T_eval(x) <= Tm; };

            auto ndisc = std::make_shared<Discretization>(build_discretization(mmesh, cfg.mech_order));
            auto nplan = std::make_shared<QuadraturePlan>(
                build_quadrature_plan(*ndisc, solid, cfg.solver.alpha, cfg.solver.quad_depth));
            if (mech.disc) {
                Eigen::VectorXd u_new = l2_project_primal(*mech.disc, u.head(mech.disc->dof_count() * 3),
                                                          3, *ndisc, *nplan, *mech.plan);
                states = transfer_states(*mech.disc, *mech.plan, states, *ndisc, *nplan);
                u = u_new;
            } else {
                u = Eigen::VectorXd::Zero(ndisc->dof_count() * 3);
                states = GaussStateStore::zero(*ndisc, *nplan);
            }
            mech.mesh = std::make_shared<MlhpMesh>(std::move(mmesh));
            mech.disc = ndisc;
            mech.plan = nplan;

            ElasticLaw elastic{PropertyTable::constant(spec.E), spec.nu};
            MechanicsProblem prob(*mech.disc, *mech.plan, elastic,
                                  HardeningCurve::thermal_linear(spec.sigma_y0, spec.T_m, spec.T_w),
                                  ThermalExpansion{PropertyTable::constant(spec.gamma), spec.T_m});
            prob.temperature = T_eval;
            prob.molten.melt_temperature = spec.T_m;
            prob.dirichlet.append(dirichlet_plane(*mech.disc, 0, 0.0, 0.0, 3, 0));
            auto cy = extended_plane_strain(*mech.disc, 1, 3);
            auto cz = extended_plane_strain(*mech.disc, 2, 3);
            ConstraintSet both = cy;
            std::int64_t base = mech.disc->dof_count() * 3;
            for (auto row : cz.rows) {
                for (auto& term : row.terms)
                    if (term.first >= base) term.first += 1;
                both.rows.push_back(row);
            }
            both.n_aux = 2;
            prob.constraints = both;
            prob.newton_solve(u, states, cfg.solver.newton_tol, cfg.solver.max_newton);

            // --- probes ---
            if (next_probe < cfg.probe_times.size() &&
                std::abs(time - cfg.probe_times[next_probe]) < 0.5 * cfg.dt) {
                BarProbe probe;
                probe.time = time;
                probe.front_numeric = X_now;
                probe.front_analytic = neumann_interface(spec, lambda, time);
                probe.thermal_dofs = thermal.disc->dof_count();
                probe.mech_dofs = mech.disc->dof_count() * 3;

                double X = probe.front_analytic;
                double h_fine_m = mgrid.spacing[0] / static_cast<double>(1 << cfg.mech_levels);
                StressField stress(prob, u, states);
                std::vector<double> cx, cT, cTex, cs, csex;
                double scale = spec.stress_scale();
                for (int i = 0; i < cfg.probe_count; ++i) {
                    double x = (i + 0.5) / cfg.probe_count * cfg.length;
                    double Tn = spec.T_i;
                    eval_field(*thermal.disc, std::span<const double>(T->data(), T->size()),
                               {x, 0.5 * cfg.cross_section, 0.5 * cfg.cross_section}, Tn);
                    double Tex = neumann_temperature(spec, lambda, x, time);
                    probe.max_T_error =
                        std::max(probe.max_T_error, std::abs(Tn - Tex) / (spec.T_i - spec.T_w));
                    double s_num =
                        stress({x, 0.5 * cfg.cross_section, 0.5 * cfg.cross_section})[SymTensor3::ZZ];
                    double s_ex = scale * weiner_boley_stress(lambda, m, pair, x / X);
                    cx.push_back(x);
                    cT.push_back(Tn);
                    cTex.push_back(Tex);
                    cs.push_back(s_num);
                    csex.push_back(s_ex);
                    bool excluded = std::abs(x - X) < h_fine_m ||
                                    std::abs(x - pair.x1 * X) < h_fine_m ||
                                    std::abs(x - pair.x2 * X) < h_fine_m;
                    if (!excluded)
                        probe.max_stress_error =
                            std::max(probe.max_stress_error, std::abs(s_num - s_ex) / scale);
                }
                result.probes.push_back(probe);
                if (!cfg.out_dir.empty()) {
                    std::ostringstream name;
                    name << cfg.out_dir << "/bar_t" << time << ".csv";
                    std::vector<CsvColumn> cols{{"x [mm]", cx},
                                                {"T [degC]", cT},
                                                {"T_exact [degC]", cTex},
                                                {"sigma_zz [MPa]", cs},
                                                {"sigma_zz_exact [MPa]", csex}};
                    write_csv(name.str(), cols);
                }
                ++next_probe;
            }
        } else if (next_probe < cfg.probe_times.size() &&
                   std::abs(time - cfg.probe_times[next_probe]) < 0.5 * cfg.dt) {
            BarProbe probe;
            probe.time = time;
            probe.front_numeric = front_of(*thermal.disc, *T);
            probe.front_analytic = neumann_interface(spec, lambda, time);
            probe.thermal_dofs = thermal.disc->dof_count();
            for (int i = 0; i < cfg.probe_count; ++i) {
                double x = (i + 0.5) / cfg.probe_count * cfg.length;
                double Tn = spec.T_i;
                eval_field(*thermal.disc, std::span<const double>(T->data(), T->size()),
                           {x, 0.5 * cfg.cross_section, 0.5 * cfg.cross_section}, Tn);
                double Tex = neumann_temperature(spec, lambda, x, time);
                probe.max_T_error = std::max(probe.max_T_error, std::abs(Tn - Tex) / (spec.T_i - spec.T_w));
            }
            result.probes.push_back(probe);
            ++next_probe;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// single-bead weld
// ---------------------------------------------------------------------------

GoldakCheck goldak_power_check(const WeldConfig& cfg) {
    GoldakCheck check;
    check.declared_power = cfg.declared_power;
    check.power_from_heat_input = cfg.heat_per_mm * cfg.speed;
    if (std::abs(check.power_from_heat_input - cfg.declared_power) > 1e-3 * cfg.declared_power)
        throw std::runtime_error("goldak_power_check: heat input x speed does not match the declared power");

    GoldakSource src;
    src.power = check.power_from_heat_input;
    src.semi_axes = cfg.goldak_axes;
    src.center = [](double) { return Vec3{0, 0, 0}; };
    const GaussRule& rule = gauss_rule(6);
    int panels = 20;
    double integral = 0.0;
    Vec3 r = cfg.goldak_axes;
    for (int ix = 0; ix < panels; ++ix)
        for (int iy = 0; iy < panels; ++iy)
            for (int iz = 0; iz < panels / 2; ++iz) {
                double xa = -5.0 * r[0] + 10.0 * r[0] * ix / panels, xb = xa + 10.0 * r[0] / panels;
                double ya = -5.0 * r[1] + 10.0 * r[1] * iy / panels, yb = ya + 10.0 * r[1] / panels;
                double za = -5.0 * r[2] + 5.0 * r[2] * iz * 2.0 / panels, zb = za + 10.0 * r[2] / panels;
                if (zb > 0.0) zb = 0.0;
                if (za >= zb) continue;
                for (std::size_t a = 0; a < rule.size(); ++a)
                    for (std::size_t b = 0; b < rule.size(); ++b)
                        for (std::size_t c = 0; c < rule.size(); ++c) {
                            Vec3 p{0.5 * (xa + xb) + 0.5 * (xb - xa) * rule.points[a],
                                   0.5 * (ya + yb) + 0.5 * (yb - ya) * rule.points[b],
                                   0.5 * (za + zb) + 0.5 * (zb - za) * rule.points[c]};
                            integral += 0.125 * (xb - xa) * (yb - ya) * (zb - za) * rule.weights[a] *
                                        rule.weights[b] * rule.weights[c] * goldak_eval(src, p, 0.0);
                        }
            }
    check.half_space_integral = integral;
    if (std::abs(integral - check.power_from_heat_input) > 1e-3 * check.power_from_heat_input)
        throw std::runtime_error("goldak_power_check: half-space integral deviates from the power");
    check.ok = true;
    return check;
}

WeldResult run_weld(const WeldConfig& cfg) {
    ensure_dir(cfg.out_dir);
    WeldResult result;

    const double bead_half = 0.5 * cfg.bead_width;
    const double plate_top = cfg.plate_thickness;
    const double bead_top = plate_top + cfg.bead_thickness;
    const double x0 = 0.5 * (cfg.domain[0] - cfg.bead_length);  // weld start
    const double x1 = x0 + cfg.bead_length;
    const double weld_time = cfg.bead_length / cfg.speed;
    const double dt_weld = cfg.travel_per_step / cfg.speed;

    Box plate_box{{0, 0, 0}, {cfg.domain[0], cfg.domain[1], plate_top}};
    Box bead_full{{x0, 0, plate_top}, {x1, bead_half, bead_top}};
    result.bead_volume_half = bead_full.volume();

    auto torch_x = [&](double t) { return x0 + cfg.speed * std::min(t, weld_time); };
    auto deposited_box = [&](double t) {
        Box b = bead_full;
        b.hi[0] = std::clamp(torch_x(t), x0 + 1e-9, x1);
        return b;
    };

    // material state container, decoupled from both meshes
    BaseGrid grid;
    grid.origin = {0, 0, 0};
    grid.spacing = {cfg.domain[0] / cfg.base[0], cfg.domain[1] / cfg.base[1], cfg.domain[2] / cfg.base[2]};
    grid.counts = cfg.base;
    double finest = std::min({grid.spacing[0], grid.spacing[1], grid.spacing[2]}) /
                    static_cast<double>(1 << cfg.max_level);
    VoxelStateGrid voxels(Box{{0, 0, 0}, cfg.domain}, 0.5 * finest);
    voxels.set_region(make_box_region(plate_box), MatState::Base);

    auto domain_geometry = [&](double t) {
        // the state container is authoritative for the indicator; the
        // analytic union provides the distance used by cut detection
        ImplicitGeometry geo;
        auto analytic = make_union(make_box_region(plate_box), make_box_region(deposited_box(t)));
        geo.inside = [&voxels](const Vec3& x) {
            return voxels.box().contains(x) && voxels.classify(x) != MatState::Air;
        };
        geo.signed_distance = analytic.signed_distance;
        return geo;
    };

    MaterialDef mat = material_316l(cfg.hardening);
    PropertyTable rho_c = mat.volumetric_heat();
    PropertyTable conductivity = mat.conductivity();
    PhaseChangeModel phase{mat.volumetric_latent(), mat.T_melt, mat.mushy_interval};
    ElasticLaw elastic = mat.elastic();
    ThermalExpansion expansion = mat.expansion();

    GoldakSource torch;
    torch.power = cfg.heat_per_mm * cfg.speed;
    torch.semi_axes = cfg.goldak_axes;
    torch.center = [&, x0](double t) { return Vec3{torch_x(t), 0.0, bead_top}; };
    torch.t_off = weld_time;

    SurfaceLoss loss{cfg.h_conv_W_m2K * 1e-6, cfg.emissivity, cfg.T_ambient};
    auto exclude_symmetry = [](const Vec3& x) { return x[1] < 1e-9; };

    FieldSide thermal, mech;
    thermal.mesh = std::make_shared<MlhpMesh>(grid, cfg.max_level);
    mech.mesh = std::make_shared<MlhpMesh>(grid, cfg.max_level);
    auto T = std::make_shared<Eigen::VectorXd>();
    Eigen::VectorXd u;
    GaussStateStore states;

    // persistent refinement along the weld line (mechanical mesh only)
    std::set<std::uint64_t> weld_line;
    {
        std::vector<int> marks;
        for (int i = 0; i < static_cast<int>(mech.mesh->leaves().size()); ++i) {
            Box b = mech.mesh->leaf_box(mech.mesh->leaves()[i]);
            bool along = b.hi[0] > x0 - 1e-9 && b.lo[0] < x1 + 1e-9 && b.lo[1] < bead_half + 1e-9 &&
                         b.hi[2] > plate_top - 1e-9;
            if (along) marks.push_back(i);
        }
        auto delta = mech.mesh->refine(marks);
        for (const auto& [parent, children] : delta.refined)
            for (const auto& child : children) weld_line.insert(pack_element_key(child));
    }

    double torch_r = std::max({cfg.goldak_axes[0], cfg.goldak_axes[1], cfg.goldak_axes[2]});
    auto torch_distance = [&](double t) {
        return [xt = torch_x(t), bead_top](const Vec3& x) {
            Vec3 d{x[0] - xt, x[1], x[2] - bead_top};
            return norm(d);
        };
    };

    double time = 0.0;
    double dt = dt_weld;
    bool cooling = false;
    int step = 0;
    std::ofstream summary;
    if (!cfg.out_dir.empty()) summary.open(cfg.out_dir + "/weld_summary.txt");

    std::shared_ptr<MechanicsProblem> last_prob;
    while (true) {
        double t_new = time + dt;
        double t_wall = wall_now();
        if (!cooling && t_new >= weld_time - 1e-9) t_new = weld_time;

        // 1) deposition update of the material state container
        if (!cooling) voxels.deposit(make_box_region(deposited_box(t_new)), t_new);

        auto geo = domain_geometry(t_new);
        auto dist = torch_distance(t_new);
        double refine_band = cfg.refine_radii * torch_r;
        double keep_band = cfg.coarsen_radii * torch_r;

        // 2) thermal mesh update + primal transfer + thermal solve
        {
            MlhpMesh tmesh = *thermal.mesh;
            if (!cooling) refine_toward(tmesh, dist, refine_band);
            coarsen_away(tmesh, dist, keep_band);
            auto ndisc = std::make_shared<Discretization>(build_discretization(tmesh, cfg.order));
            auto nplan = std::make_shared<QuadraturePlan>(
                build_quadrature_plan(*ndisc, geo, cfg.solver.alpha, cfg.solver.quad_depth));
            auto nT = std::make_shared<Eigen::VectorXd>();
            if (thermal.disc)
                *nT = l2_project_primal(*thermal.disc, *T, 1, *ndisc, *nplan, *thermal.plan);
            else
                *nT = uniform_field(*ndisc, cfg.T_ambient);
            thermal.mesh = std::make_shared<MlhpMesh>(std::move(tmesh));
            thermal.disc = ndisc;
            thermal.plan = nplan;
            T = nT;

            ThermalProblem prob(*thermal.disc, *thermal.plan, rho_c, conductivity, phase);
            prob.sources.push_back(torch);
            prob.loss = loss;
            prob.loss_surface = boundary_loss_surface(*thermal.disc, geo, 3, exclude_symmetry);
            prob.solve_step(*T, t_new - time, t_new, cfg.solver.newton_tol, cfg.solver.max_newton);
        }

        // 3) temperature on the mechanical quadrature points via the field
        auto T_eval = temperature_field(thermal.disc, T, cfg.T_ambient);

        // 4) mechanical mesh update + primal/internal transfer
        {
            MlhpMesh mmesh = *mech.mesh;
            if (!cooling) refine_toward(mmesh, dist, refine_band);
            coarsen_away(mmesh, dist, keep_band, weld_line);
            auto ndisc = std::make_shared<Discretization>(build_discretization(mmesh, cfg.order));
            auto nplan = std::make_shared<QuadraturePlan>(
                build_quadrature_plan(*ndisc, geo, cfg.solver.alpha, cfg.solver.quad_depth));
            if (mech.disc) {
                Eigen::VectorXd u_new = l2_project_primal(*mech.disc, u.head(mech.disc->dof_count() * 3),
                                                          3, *ndisc, *nplan, *mech.plan);
                states = transfer_states(*mech.disc, *mech.plan, states, *ndisc, *nplan);
                u = u_new;
            } else {
                u = Eigen::VectorXd::Zero(ndisc->dof_count() * 3);
                states = GaussStateStore::zero(*ndisc, *nplan);
            }
            mech.mesh = std::make_shared<MlhpMesh>(std::move(mmesh));
            mech.disc = ndisc;
            mech.plan = nplan;
        }

        // 5) mechanical solve
        {
            last_prob = std::make_shared<MechanicsProblem>(*mech.disc, *mech.plan, elastic,
                                                           mat.hardening, expansion);
            last_prob->temperature = T_eval;
            last_prob->molten.melt_temperature = mat.T_melt;
            last_prob->molten.reset_state = mat.reset_state_above_melt;
            last_prob->dirichlet.append(dirichlet_plane(*mech.disc, 1, 0.0, 0.0, 3, 1));
            ConstraintSet support;
            support.rows.push_back(point_constraint(*mech.disc, {0.5 * cfg.domain[0], 0.0, 0.0}, 0, 3));
            support.rows.push_back(point_constraint(*mech.disc, {grid.spacing[0], 0.0, 0.0}, 2, 3));
            support.rows.push_back(
                point_constraint(*mech.disc, {cfg.domain[0] - grid.spacing[0], 0.0, 0.0}, 2, 3));
            last_prob->constraints = support;
            last_prob->newton_solve(u, states, cfg.solver.newton_tol, cfg.solver.max_newton);
        }

        time = t_new;
        ++step;

        // temperature extremum for the cooldown criterion
        double maxT = -1e300;
        for (const Leaf& leaf : thermal.disc->mesh.leaves()) {
            Vec3 c = thermal.disc->mesh.leaf_box(leaf).center();
            maxT = std::max(maxT, T_eval(c));
        }
        if (summary.is_open())
            summary << "step " << step << " t " << time << " s dt " << dt << " thermal_dofs "
                    << thermal.disc->dof_count() << " mech_dofs " << mech.disc->dof_count() * 3
                    << " maxT " << maxT << " wall " << (wall_now() - t_wall) << " s\n";

        if (!cooling && time >= weld_time - 1e-9) {
            cooling = true;
            dt = dt_weld;
        } else if (cooling) {
            dt = std::min(dt * cfg.cooldown_growth, cfg.cooldown_max_dt);
        }
        if (cooling && maxT <= cfg.T_ambient + cfg.cooldown_tolerance) break;
        if (time > 50000.0) break;  // safety stop
        result.max_T_final = maxT;
    }

    result.steps = step;
    result.end_time = time;
    result.deposited_volume = voxels.state_volume(MatState::Deposited);

    // persistent weld line refinement must have survived every step
    result.weld_line_refinement_kept = true;
    for (std::uint64_t key : weld_line) {
        ElementKey ek;
        ek.level = static_cast<int>(key >> 60);
        ek.gx = static_cast<int>((key >> 36) & 0x3FFFF);
        ek.gy = static_cast<int>((key >> 18) & 0x3FFFF);
        ek.gz = static_cast<int>(key & 0x3FFFF);
        auto status = mech.mesh->element_status(ek);
        if (status != ElementStatus::Leaf && status != ElementStatus::Refined)
            result.weld_line_refinement_kept = false;
    }

    // residual stress probes: line AB transverse on the top surface at mid
    // length, line CD through the thickness under the weld center
    StressField stress(*last_prob, u, states);
    double xm = 0.5 * cfg.domain[0];
    double z_probe = plate_top - 0.25;
    int nb = 120;
    for (int i = 0; i < nb; ++i) {
        double y = (i + 0.5) / nb * cfg.domain[1];
        SymTensor3 s = stress({xm, y, z_probe});
        result.line_ab_y.push_back(y);
        result.line_ab_sxx.push_back(s[SymTensor3::XX]);
        result.line_ab_syy.push_back(s[SymTensor3::YY]);
    }
    for (int i = 0; i < 60; ++i) {
        double z = plate_top - (i + 0.5) / 60.0 * plate_top;
        SymTensor3 s = stress({xm, 0.25, z});
        result.line_cd_z.push_back(z);
        result.line_cd_sxx.push_back(s[SymTensor3::XX]);
        result.line_cd_syy.push_back(s[SymTensor3::YY]);
    }
    for (std::size_t i = 0; i < result.line_ab_y.size(); ++i)
        if (result.line_ab_sxx[i] > result.peak_sxx) {
            result.peak_sxx = result.line_ab_sxx[i];
            result.peak_sxx_y = result.line_ab_y[i];
        }

    if (!cfg.out_dir.empty()) {
        write_csv(cfg.out_dir + "/weld_line_ab.csv",
                  std::vector<CsvColumn>{{"y [mm]", result.line_ab_y},
                                         {"sigma_xx [MPa]", result.line_ab_sxx},
                                         {"sigma_yy [MPa]", result.line_ab_syy}});
        write_csv(cfg.out_dir + "/weld_line_cd.csv",
                  std::vector<CsvColumn>{{"z [mm]", result.line_cd_z},
                                         {"sigma_xx [MPa]", result.line_cd_sxx},
                                         {"sigma_yy [MPa]", result.line_cd_syy}});
        if (cfg.write_fields) {
            auto T_final = temperature_field(thermal.disc, T, cfg.T_ambient);
            std::vector<VtkPointField> pf{
                {"temperature", 1, [&](const Vec3& x, double* out) { out[0] = T_final(x); }},
                {"displacement", 3, [&](const Vec3& x, double* out) {
                     for (int c = 0; c < 3; ++c) {
                         out[c] = 0.0;
                         eval_field(*mech.disc, std::span<const double>(u.data(), u.size()), x, out[c],
                                    3, c);
                     }
                 }}};
            std::vector<VtkCellField> cf{
                {"sigma_xx", 1,
                 [&](int leaf, double* out) {
                     Vec3 c = mech.disc->mesh.leaf_box(mech.disc->mesh.leaves()[leaf]).center();
                     out[0] = stress(c)[SymTensor3::XX];
                 }},
                {"eps_p_bar", 1, [&](int leaf, double* out) {
                     double v = 0.0;
                     for (const auto& s : states.states[leaf]) v = std::max(v, s.eps_p_bar);
                     out[0] = v;
                 }}};
            write_vtk(cfg.out_dir + "/weld_final.vtk", *mech.disc, pf, cf);
        }
        std::ofstream os(cfg.out_dir + "/weld_result.txt");
        os << "steps " << result.steps << "\nend_time " << result.end_time << "\npeak_sxx "
           << result.peak_sxx << " MPa at y " << result.peak_sxx_y << " mm\ndeposited_volume "
           << result.deposited_volume << " mm^3 (half bead " << result.bead_volume_half << ")\n";
    }
    return result;
}

// ---------------------------------------------------------------------------
// scenario files
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

SolverConfig parse_solver(const json& j) {
    SolverConfig s;
    maybe(j, "newton_tol", s.newton_tol);
    maybe(j, "max_newton", s.max_newton);
    maybe(j, "alpha", s.alpha);
    maybe(j, "quad_depth", s.quad_depth);
    return s;
}

}  // namespace

int run_scenario_file(const std::string& path, const std::string& out_dir_override,
                      std::optional<int> quad_depth, std::optional<double> alpha) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("run_scenario_file: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error("run_scenario_file: " + path + ": " + e.what());
    }
    std::string type = j.at("type").get<std::string>();
    SolverConfig solver = parse_solver(j.value("solver", json::object()));
    if (quad_depth) solver.quad_depth = *quad_depth;
    if (alpha) solver.alpha = *alpha;

    if (type == "shell") {
        ShellConfig cfg;
        cfg.solver = solver;
        maybe(j, "order", cfg.order);
        maybe(j, "max_level", cfg.max_level);
        maybe(j, "box", cfg.box);
        maybe(j, "band_factor", cfg.band_factor);
        maybe(j, "load_steps", cfg.load_steps);
        maybe(j, "probe_count", cfg.probe_count);
        maybe(j, "write_fields", cfg.write_fields);
        if (j.contains("base"))
            cfg.base = {j["base"][0].get<int>(), j["base"][1].get<int>(), j["base"][2].get<int>()};
        cfg.out_dir = out_dir_override.empty() ? j.value("out_dir", "out/shell") : out_dir_override;
        auto result = run_shell(cfg);
        for (const auto& s : result.steps)
            std::cout << "P=" << s.pressure << " MPa: rms_rr=" << s.rms_rr
                      << " MPa rms_hoop=" << s.rms_hoop << " MPa dofs=" << s.dofs << "\n";
        return 0;
    }
    if (type == "convergence") {
        ConvergenceConfig cfg;
        cfg.solver = solver;
        maybe(j, "orders", cfg.orders);
        maybe(j, "levels", cfg.levels);
        maybe(j, "pressure", cfg.pressure);
        maybe(j, "band_factor", cfg.band_factor);
        cfg.csv_path = out_dir_override.empty() ? j.value("csv", "convergence.csv")
                                                : out_dir_override + "/convergence.csv";
        if (!out_dir_override.empty()) ensure_dir(out_dir_override);
        run_convergence(cfg);
        return 0;
    }
    if (type == "bar") {
        BarConfig cfg;
        cfg.solver = solver;
        maybe(j, "dt", cfg.dt);
        maybe(j, "thermal_elements", cfg.thermal_elements);
        maybe(j, "thermal_order", cfg.thermal_order);
        maybe(j, "thermal_levels", cfg.thermal_levels);
        maybe(j, "mech_elements", cfg.mech_elements);
        maybe(j, "mech_order", cfg.mech_order);
        maybe(j, "mech_levels", cfg.mech_levels);
        maybe(j, "mushy_interval", cfg.mushy_interval);
        maybe(j, "start_time", cfg.start_time);
        maybe(j, "probe_times", cfg.probe_times);
        maybe(j, "mech_enabled", cfg.mech_enabled);
        cfg.out_dir = out_dir_override.empty() ? j.value("out_dir", "out/bar") : out_dir_override;
        auto result = run_bar(cfg);
        for (const auto& p : result.probes)
            std::cout << "t=" << p.time << " s: front=" << p.front_numeric << " mm (exact "
                      << p.front_analytic << "), max T err=" << p.max_T_error * 100.0
                      << "% of span, max stress err=" << p.max_stress_error * 100.0 << "% of scale\n";
        return 0;
    }
    if (type == "weld") {
        WeldConfig cfg;
        cfg.solver = solver;
        maybe(j, "order", cfg.order);
        maybe(j, "max_level", cfg.max_level);
        maybe(j, "travel_per_step", cfg.travel_per_step);
        maybe(j, "refine_levels", cfg.refine_levels);
        if (j.contains("base"))
            cfg.base = {j["base"][0].get<int>(), j["base"][1].get<int>(), j["base"][2].get<int>()};
        if (j.contains("domain"))
            cfg.domain = {j["domain"][0].get<double>(), j["domain"][1].get<double>(),
                          j["domain"][2].get<double>()};
        if (j.contains("hardening"))
            cfg.hardening = j["hardening"].get<std::string>() == "IH" ? HardeningMode::IH
                                                                      : HardeningMode::MIH;
        cfg.out_dir = out_dir_override.empty() ? j.value("out_dir", "out/weld") : out_dir_override;
        goldak_power_check(cfg);
        auto result = run_weld(cfg);
        std::cout << "weld finished after " << result.steps << " steps, t=" << result.end_time
                  << " s; peak sigma_xx=" << result.peak_sxx << " MPa at y=" << result.peak_sxx_y
                  << " mm\n";
        return 0;
    }
    throw std::runtime_error("run_scenario_file: unknown scenario type '" + type + "'");
}

}  // namespace hpfcm
