#include "hpfcm/bench_oracles.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hpfcm/gauss.hpp"

namespace hpfcm {

double ShellSpec::pressure_of_front(double r_p) const {
    return 2.0 * sigma_y * std::log(r_p / r_i) + (2.0 * sigma_y / 3.0) * (1.0 - r_p * r_p * r_p / (r_o * r_o * r_o));
}

double hill_plastic_front(const ShellSpec& spec, double P) {
    double lo = spec.elastic_limit_pressure(), hi = spec.collapse_pressure();
    if (P < lo - 1e-12 * spec.sigma_y) {
        std::ostringstream m;
        m << "hill_plastic_front: P = " << P << " MPa is below the elastic limit " << lo
          << " MPa (shell fully elastic)";
        throw std::domain_error(m.str());
    }
    if (P > hi + 1e-12 * spec.sigma_y) {
        std::ostringstream m;
        m << "hill_plastic_front: P = " << P << " MPa exceeds the collapse pressure " << hi
          << " MPa (shell fully plastic)";
        throw std::domain_error(m.str());
    }
    double a = spec.r_i, b = spec.r_o;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        (spec.pressure_of_front(mid) < P ? a : b) = mid;
        if (b - a < 1e-12 * spec.r_o) break;
    }
    return 0.5 * (a + b);
}

ShellStresses hill_stresses(const ShellSpec& spec, double r_p, double r) {
    if (r < spec.r_i - 1e-9 || r > spec.r_o + 1e-9)
        throw std::domain_error("hill_stresses: radius outside the shell");
    double sy = spec.sigma_y;
    double c = (1.0 / 3.0) * (1.0 - r_p * r_p * r_p / (spec.r_o * spec.r_o * spec.r_o));
    ShellStresses s;
    if (r <= r_p) {
        s.rr = -2.0 * sy * (std::log(r_p / r) + c);
        s.hoop = 2.0 * sy * (0.5 - std::log(r_p / r) - c);
    } else {
        double a = 2.0 * sy * r_p * r_p * r_p / (3.0 * spec.r_o * spec.r_o * spec.r_o);
        double rat = spec.r_o * spec.r_o * spec.r_o / (r * r * r);
        s.rr = -a * (rat - 1.0);
        s.hoop = a * (0.5 * rat + 1.0);
    }
    return s;
}

double hill_displacement(const ShellSpec& spec, double r_p, double r) {
    // Elastic zone: u = r [ (1-nu) sigma_hoop - nu sigma_rr ] / E.
    // Plastic zone: plastic flow is isochoric, so the volumetric strain is
    // elastic:  u' + 2u/r = (1-2nu)(sigma_rr + 2 sigma_hoop)/E, integrated
    // inward from the continuity point at r_p.
    auto elastic_u = [&](double rr) {
        auto s = hill_stresses(spec, r_p, rr);
        return rr * ((1.0 - spec.nu) * s.hoop - spec.nu * s.rr) / spec.E;
    };
    if (r >= r_p) return elastic_u(r);

    auto g = [&](double rr) {
        auto s = hill_stresses(spec, r_p, rr);
        return (1.0 - 2.0 * spec.nu) * (s.rr + 2.0 * s.hoop) / spec.E;
    };
    // (r^2 u)' = r^2 g(r); integrate r_p -> r with composite Gauss
    const GaussRule& rule = gauss_rule(8);
    int panels = 200;
    double acc = r_p * r_p * elastic_u(r_p);
    double h = (r - r_p) / panels;  // negative
    for (int i = 0; i < panels; ++i) {
        double a = r_p + i * h, b = a + h;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double s = 0.5 * (a + b) + 0.5 * (b - a) * rule.points[q];
            acc += 0.5 * (b - a) * rule.weights[q] * s * s * g(s);
        }
    }
    return acc / (r * r);
}

double hill_exact_energy(const ShellSpec& spec, double P, double r_p) {
    double ri3 = spec.r_i * spec.r_i * spec.r_i;
    double ratio3 = r_p * r_p * r_p / ri3;
    double ro3 = spec.r_o * spec.r_o * spec.r_o;
    return M_PI * P * spec.sigma_y * ri3 / (4.0 * spec.E) *
           ((1.0 - spec.nu) * ratio3 -
            (2.0 / 3.0) * (1.0 - 2.0 * spec.nu) *
                (1.0 - r_p * r_p * r_p / ro3 + 3.0 * std::log(r_p / spec.r_i)));
}

double neumann_lambda(const BarSpec& spec) {
    double dTw = spec.T_m - spec.T_w;
    auto residual = [&](double l) {
        return std::exp(-l * l) / std::erf(l) +
               std::exp(-l * l) * (spec.T_m - spec.T_i) / (std::erfc(l) * dTw) -
               l * spec.latent * std::sqrt(M_PI) / (spec.heat_capacity * dTw);
    };
    double a = 1e-8, b = 5.0;
    double fa = residual(a), fb = residual(b);
    if (!(fa > 0.0) || !(fb < 0.0))
        throw std::runtime_error("neumann_lambda: no sign change in the bracket");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        double fm = residual(mid);
        ((fm > 0.0) == (fa > 0.0) ? a : b) = mid;
        if (b - a < 1e-16) break;
    }
    double lambda = 0.5 * (a + b);
    if (std::abs(residual(lambda)) > 1e-10)
        throw std::runtime_error("neumann_lambda: residual check failed");
    return lambda;
}

double neumann_interface(const BarSpec& spec, double lambda, double t) {
    return 2.0 * lambda * std::sqrt(spec.alpha_diff * t);
}

double neumann_temperature(const BarSpec& spec, double lambda, double x, double t) {
    if (!(t > 0.0)) throw std::domain_error("neumann_temperature: t must be positive");
    double arg = x / (2.0 * std::sqrt(spec.alpha_diff * t));
    if (x <= neumann_interface(spec, lambda, t))
        return spec.T_w + (spec.T_m - spec.T_w) * std::erf(arg) / std::erf(lambda);
    return spec.T_i + (spec.T_m - spec.T_i) * std::erfc(arg) / std::erfc(lambda);
}

void weiner_boley_residuals(double l, double m, double x1, double x2, double* r1, double* r2) {
    double e1 = std::exp(-l * l * x1 * x1);
    double e2 = std::exp(-l * l * x2 * x2);
    *r1 = 2.0 * (1.0 - m) * l * l * x1 * e1 * (x1 - x2) -
          ((1.0 + m) * e2 - (1.0 - m) * e1 - m * (std::exp(-l * l) + 1.0));
    *r2 = 2.0 * (1.0 - m) * l * x1 * e1 / std::sqrt(M_PI) * std::log(x1 / x2) -
          ((1.0 - m) * std::erf(l * x1) - (1.0 + m) * std::erf(l * x2) + 2.0 * m * std::erf(l));
}

namespace {

/// Inner root of the first interface equation: x2 in (0, x1) for given x1.
bool inner_root(double l, double m, double x1, double& x2) {
    auto f = [&](double v) {
        double r1, r2;
        weiner_boley_residuals(l, m, x1, v, &r1, &r2);
        return r1;
    };
    double a = 1e-12, b = x1 * (1.0 - 1e-12);
    double fa = f(a), fb = f(b);
    if ((fa > 0.0) == (fb > 0.0)) return false;
    for (int it = 0; it < 120; ++it) {
        double mid = 0.5 * (a + b);
        ((f(mid) > 0.0) == (fa > 0.0) ? a : b) = mid;
    }
    x2 = 0.5 * (a + b);
    return true;
}

}  // namespace

InterfacePair weiner_boley_interfaces(double lambda, double m) {
    if (!(m > 0.0) || !(m < 1.0))
        throw std::domain_error("weiner_boley_interfaces: need 0 < m < 1");
    auto outer = [&](double x1, double& x2) -> std::pair<bool, double> {
        if (!inner_root(lambda, m, x1, x2)) return {false, 0.0};
        double r1, r2;
        weiner_boley_residuals(lambda, m, x1, x2, &r1, &r2);
        return {true, r2};
    };
    // bracketing scan over x1
    const int n = 400;
    double prev_x1 = 0.0, prev_val = 0.0;
    bool have_prev = false;
    double root_lo = -1.0, root_hi = -1.0;
    for (int i = 1; i <= n; ++i) {
        double x1 = static_cast<double>(i) / (n + 1);
        double x2;
        auto [ok, val] = outer(x1, x2);
        if (!ok) {
            have_prev = false;
            continue;
        }
        if (have_prev && (val > 0.0) != (prev_val > 0.0)) {
            root_lo = prev_x1;
            root_hi = x1;
            break;
        }
        prev_x1 = x1;
        prev_val = val;
        have_prev = true;
    }
    if (root_lo < 0.0)
        throw std::runtime_error(
            "weiner_boley_interfaces: no admissible root with 0 < x2 < x1 < 1; the material does "
            "not develop two plastic fronts for these parameters");
    double x2 = 0.0;
    for (int it = 0; it < 120; ++it) {
        double mid = 0.5 * (root_lo + root_hi);
        double v2;
        auto [ok, val] = outer(mid, v2);
        (void)ok;
        double lo_val;
        double v2lo;
        lo_val = outer(root_lo, v2lo).second;
        ((val > 0.0) == (lo_val > 0.0) ? root_lo : root_hi) = mid;
        x2 = v2;
    }
    InterfacePair pair{0.5 * (root_lo + root_hi), x2};
    inner_root(lambda, m, pair.x1, pair.x2);
    double r1, r2;
    weiner_boley_residuals(lambda, m, pair.x1, pair.x2, &r1, &r2);
    if (std::abs(r1) > 1e-10 || std::abs(r2) > 1e-10)
        throw std::runtime_error("weiner_boley_interfaces: residual check failed");
    return pair;
}

double weiner_boley_fit_m(double lambda, double x1, double x2) {
    // both equations are affine in m: r_i(m) = a_i m + b_i
    double b1, b2, r1, r2;
    weiner_boley_residuals(lambda, 0.0, x1, x2, &b1, &b2);
    weiner_boley_residuals(lambda, 1.0, x1, x2, &r1, &r2);
    double a1 = r1 - b1, a2 = r2 - b2;
    return -(a1 * b1 + a2 * b2) / (a1 * a1 + a2 * a2);
}

double weiner_boley_stress(double lambda, double m, const InterfacePair& pair, double xhat) {
    if (xhat < 0.0) throw std::domain_error("weiner_boley_stress: xhat must be >= 0");
    if (xhat > 1.0) return 0.0;
    double D = 1.0 / std::erf(lambda);
    if (xhat < pair.x2) return m * (D * std::erf(lambda * xhat) - 1.0);
    if (xhat <= pair.x1) {
        double e1 = std::exp(-lambda * lambda * pair.x1 * pair.x1);
        return m * (1.0 - D * std::erf(lambda * pair.x1)) +
               D * (std::erf(lambda * pair.x1) - std::erf(lambda * xhat)) -
               (2.0 / std::sqrt(M_PI)) * D * (1.0 - m) * lambda * pair.x1 * e1 *
                   std::log(pair.x1 / xhat);
    }
    return m * (1.0 - D * std::erf(lambda * xhat));
}

double weiner_boley_stress(double lambda, double m, double xhat) {
    if (xhat > 1.0) return 0.0;
    return weiner_boley_stress(lambda, m, weiner_boley_interfaces(lambda, m), xhat);
}

double relative_energy_error(double U_num, double U_ex) {
    if (!(U_ex > 0.0)) throw std::domain_error("relative_energy_error: U_ex must be positive");
    return std::sqrt(std::abs(U_ex - U_num) / U_ex) * 100.0;
}

}  // namespace hpfcm
