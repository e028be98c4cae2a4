#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hpfcm/bench_oracles.hpp"
#include "hpfcm/driver.hpp"
#include "hpfcm/output.hpp"

using namespace hpfcm;

namespace {

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int dump_oracle(const std::string& name, const std::string& csv, double time, double pressure) {
    std::vector<CsvColumn> cols;
    if (name == "shell-stress") {
        ShellSpec spec;
        double rp = hill_plastic_front(spec, pressure);
        CsvColumn r{"radius [mm]", {}}, srr{"sigma_rr [MPa]", {}}, hoop{"sigma_hoop [MPa]", {}};
        for (int i = 0; i <= 400; ++i) {
            double rr = spec.r_i + (spec.r_o - spec.r_i) * i / 400.0;
            auto s = hill_stresses(spec, rp, rr);
            r.values.push_back(rr);
            srr.values.push_back(s.rr);
            hoop.values.push_back(s.hoop);
        }
        cols = {r, srr, hoop};
    } else if (name == "bar-temperature") {
        BarSpec spec = BarSpec::calibrated();
        double lambda = neumann_lambda(spec);
        CsvColumn x{"x [mm]", {}}, T{"T [degC]", {}};
        for (int i = 0; i <= 400; ++i) {
            double xx = 100.0 * i / 400.0;
            x.values.push_back(xx);
            T.values.push_back(neumann_temperature(spec, lambda, xx, time));
        }
        cols = {x, T};
    } else if (name == "bar-stress") {
        BarSpec spec = BarSpec::calibrated();
        double lambda = neumann_lambda(spec);
        double m = spec.hardness_m();
        auto pair = weiner_boley_interfaces(lambda, m);
        CsvColumn x{"xhat [-]", {}}, s{"sigma_hat [-]", {}}, sd{"sigma_zz [MPa]", {}};
        for (int i = 0; i <= 480; ++i) {
            double xh = 1.2 * i / 480.0;
            x.values.push_back(xh);
            double v = weiner_boley_stress(lambda, m, pair, xh);
            s.values.push_back(v);
            sd.values.push_back(v * spec.stress_scale());
        }
        cols = {x, s, sd};
    } else {
        std::cerr << "unknown oracle '" << name
                  << "' (available: shell-stress, bar-temperature, bar-stress)\n";
        return 1;
    }
    write_csv(csv, cols);
    std::cout << "wrote " << csv << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-order immersed-domain thermo-elasto-plastic solver"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0: hardware default)");

    std::string out_dir;
    std::optional<int> quad_depth;
    std::optional<double> alpha;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out-dir", out_dir, "output directory override");
        cmd->add_option("--quad-depth", quad_depth, "cut-cell bisection depth override");
        cmd->add_option("--alpha", alpha, "fictitious-domain stiffness scaling override");
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a scenario configuration file");
    run->add_option("config", config_path, "scenario file (JSON)")->required();
    add_common(run);

    std::string bench_name;
    auto* bench = app.add_subcommand("bench", "run a built-in benchmark (shell, bar, net)");
    bench->add_option("name", bench_name, "shell | bar | net")->required();
    add_common(bench);

    std::string study_path;
    auto* conv = app.add_subcommand("convergence", "run a convergence study file");
    conv->add_option("config", study_path, "study file (JSON)")->required();
    add_common(conv);

    std::string oracle_name, oracle_csv = "oracle.csv";
    double oracle_time = 1.0, oracle_pressure = 50.0;
    auto* oracle = app.add_subcommand("oracle", "dump a closed-form reference curve to CSV");
    oracle->add_option("name", oracle_name, "shell-stress | bar-temperature | bar-stress")->required();
    oracle->add_option("--csv", oracle_csv, "output path");
    oracle->add_option("--time", oracle_time, "evaluation time [s]");
    oracle->add_option("--pressure", oracle_pressure, "internal pressure [MPa]");

    CLI11_PARSE(app, argc, argv);
    set_threads(threads);

    try {
        if (run->parsed()) return run_scenario_file(config_path, out_dir, quad_depth, alpha);
        if (conv->parsed()) return run_scenario_file(study_path, out_dir, quad_depth, alpha);
        if (oracle->parsed()) return dump_oracle(oracle_name, oracle_csv, oracle_time, oracle_pressure);
        if (bench->parsed()) {
            if (bench_name == "shell") {
                ShellConfig cfg;
                if (quad_depth) cfg.solver.quad_depth = *quad_depth;
                if (alpha) cfg.solver.alpha = *alpha;
                cfg.out_dir = out_dir.empty() ? "out/shell" : out_dir;
                cfg.write_fields = true;
                auto result = run_shell(cfg);
                for (const auto& s : result.steps)
                    std::cout << "P=" << s.pressure << " MPa: rms_rr=" << s.rms_rr
                              << " MPa rms_hoop=" << s.rms_hoop << " dofs=" << s.dofs << " newton="
                              << s.newton_iterations << "\n";
                return 0;
            }
            if (bench_name == "bar") {
                BarConfig cfg;
                if (quad_depth) cfg.solver.quad_depth = *quad_depth;
                if (alpha) cfg.solver.alpha = *alpha;
                cfg.out_dir = out_dir.empty() ? "out/bar" : out_dir;
                auto result = run_bar(cfg);
                for (const auto& p : result.probes)
                    std::cout << "t=" << p.time << " s: max T err=" << p.max_T_error * 100.0
                              << "%, max stress err=" << p.max_stress_error * 100.0 << "%\n";
                return 0;
            }
            if (bench_name == "net") {
                WeldConfig cfg;
                if (quad_depth) cfg.solver.quad_depth = *quad_depth;
                if (alpha) cfg.solver.alpha = *alpha;
                cfg.out_dir = out_dir.empty() ? "out/weld" : out_dir;
                cfg.write_fields = true;
                goldak_power_check(cfg);
                auto result = run_weld(cfg);
                std::cout << "finished after " << result.steps << " steps (t=" << result.end_time
                          << " s); peak sigma_xx=" << result.peak_sxx << " MPa at y="
                          << result.peak_sxx_y << " mm\n";
                return 0;
            }
            std::cerr << "unknown benchmark '" << bench_name << "'\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
