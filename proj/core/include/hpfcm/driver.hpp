#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hpfcm/bench_oracles.hpp"
#include "hpfcm/material.hpp"
#include "hpfcm/mechanics.hpp"
#include "hpfcm/thermal.hpp"
#include "hpfcm/transfer.hpp"

namespace hpfcm {

struct SolverConfig {
    double newton_tol = 1e-8;
    int max_newton = 30;
    double alpha = 1e-8;
    int quad_depth = 4;
};

/// Pressurized-shell scenario: embedded octant of a spherical shell with
/// incremental loading and dynamic refinement toward the plastic front.
struct ShellConfig {
    ShellSpec spec;
    Int3 base{4, 4, 4};
    double box = 100.0;  // mm
    int order = 4;
    int max_level = 3;
    std::vector<double> load_steps{40.0, 45.0, 50.0};
    double band_factor = 1.0;  // refinement band in units of the finest leaf
    SolverConfig solver;
    int probe_count = 100;
    std::string out_dir;  // empty: no artifacts
    bool write_fields = false;
};

struct ShellStepSummary {
    double pressure = 0.0;
    std::int64_t dofs = 0;
    int leaves = 0;
    int newton_iterations = 0;
    double rms_rr = 0.0;    // MPa, against the closed form, kink band excluded
    double rms_hoop = 0.0;
    double transfer_residual_ratio = 0.0;  // pre-Newton residual / load reference
    double energy = 0.0;
    double wall_seconds = 0.0;
};

struct ShellResult {
    std::vector<ShellStepSummary> steps;
};

ShellResult run_shell(const ShellConfig& config);

/// p- and level-sweep of the single-step shell problem.
struct ConvergenceConfig {
    ShellSpec spec;
    Int3 base{4, 4, 4};
    double box = 100.0;
    std::vector<int> orders{1, 2, 3, 4};
    std::vector<int> levels{0, 1, 2, 3};
    double pressure = 50.0;
    double band_factor = 1.0;
    SolverConfig solver;
    std::string csv_path;
};

struct ConvergenceRow {
    int order = 0;
    int level = 0;
    std::int64_t dofs = 0;
    double energy = 0.0;
    double error_percent = 0.0;
    double wall_seconds = 0.0;
};

std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& config);

/// Solidifying bar: coupled thermal/mechanical run on separate meshes with
/// extended plane strain, compared against the closed-form solutions.
struct BarConfig {
    BarSpec spec;
    double length = 100.0;
    double cross_section = 6.25;
    int thermal_elements = 32;
    int thermal_order = 3;
    int thermal_levels = 3;
    int mech_elements = 16;
    int mech_order = 4;
    int mech_levels = 2;
    double dt = 0.1;
    double mushy_interval = 2.0;
    double start_time = 0.5;  // > 0 starts from the similarity profile
    std::vector<double> probe_times{1.0, 5.1, 13.2};
    double band_factor = 1.0;
    SolverConfig solver;
    int probe_count = 200;
    std::string out_dir;
    bool mech_enabled = true;
};

struct BarProbe {
    double time = 0.0;
    double front_numeric = 0.0;   // mm
    double front_analytic = 0.0;
    double max_T_error = 0.0;       // fraction of (T_i - T_w)
    double max_stress_error = 0.0;  // fraction of the stress scale, kink bands excluded
    std::int64_t thermal_dofs = 0;
    std::int64_t mech_dofs = 0;
};

struct BarResult {
    std::vector<BarProbe> probes;
    double lambda = 0.0;
};

BarResult run_bar(const BarConfig& config);

/// Single-bead weld on a plate, desk-scale by default.
struct WeldConfig {
    Int3 base{15, 6, 4};
    Vec3 domain{180.0, 60.0, 18.6};
    int order = 2;
    int max_level = 2;
    double plate_thickness = 17.0;
    double bead_width = 5.0;      // full width; the model holds half
    double bead_thickness = 0.8;
    double bead_length = 60.0;
    double speed = 2.27;          // mm/s
    double heat_per_mm = 633.0;   // J/mm
    double declared_power = 1437.0;  // W
    Vec3 goldak_axes{1.9, 3.2, 2.8};
    double travel_per_step = 3.0;  // mm (desk scale doubles the 1.5 mm step)
    HardeningMode hardening = HardeningMode::MIH;
    double h_conv_W_m2K = 10.0;
    double emissivity = 0.75;
    double T_ambient = 20.0;
    double cooldown_growth = 1.2;
    double cooldown_max_dt = 30.0;
    double cooldown_tolerance = 1.0;  // degC above ambient
    SolverConfig solver;
    std::string out_dir;
    bool write_fields = false;
    int refine_levels = 2;        // toward the torch
    double refine_radii = 2.0;    // band in torch radii
    double coarsen_radii = 4.0;
};

struct WeldResult {
    // transverse line on the top surface at mid length, from the weld center
    // to the plate edge
    std::vector<double> line_ab_y;
    std::vector<double> line_ab_sxx;
    std::vector<double> line_ab_syy;
    // through-thickness line under the weld center
    std::vector<double> line_cd_z;
    std::vector<double> line_cd_sxx;
    std::vector<double> line_cd_syy;

    double peak_sxx = 0.0;
    double peak_sxx_y = 0.0;
    double deposited_volume = 0.0;   // modeled half
    double bead_volume_half = 0.0;
    bool weld_line_refinement_kept = false;
    int steps = 0;
    double end_time = 0.0;
    double max_T_final = 0.0;
};

WeldResult run_weld(const WeldConfig& config);

struct GoldakCheck {
    double power_from_heat_input = 0.0;  // W
    double declared_power = 0.0;
    double half_space_integral = 0.0;
    bool ok = false;
};

/// Validates the source definition: power = heat input x speed must match
/// the declared value, and the half-space integral of the density must
/// recover the power. Throws on mismatch beyond 0.1%.
GoldakCheck goldak_power_check(const WeldConfig& config);

/// Scenario file entry points (key/value configuration with nested
/// sections; see the shipped files under configs/).
int run_scenario_file(const std::string& path, const std::string& out_dir_override = "",
                      std::optional<int> quad_depth = {}, std::optional<double> alpha = {});

}  // namespace hpfcm
