#include "hpfcm/material.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hpfcm {

double PropertyTable::eval(double T) const {
    if (temperature.empty()) throw std::runtime_error("PropertyTable: empty table");
    if (temperature.size() == 1 || T <= temperature.front()) return value.front();
    if (T >= temperature.back()) return value.back();
    auto it = std::upper_bound(temperature.begin(), temperature.end(), T);
    std::size_t i = static_cast<std::size_t>(it - temperature.begin());
    double t = (T - temperature[i - 1]) / (temperature[i] - temperature[i - 1]);
    return (1.0 - t) * value[i - 1] + t * value[i];
}

double PropertyTable::derivative(double T) const {
    if (temperature.empty()) throw std::runtime_error("PropertyTable: empty table");
    if (temperature.size() == 1 || T <= temperature.front() || T >= temperature.back()) return 0.0;
    auto it = std::upper_bound(temperature.begin(), temperature.end(), T);
    std::size_t i = static_cast<std::size_t>(it - temperature.begin());
    return (value[i] - value[i - 1]) / (temperature[i] - temperature[i - 1]);
}

double property_at(const PropertyTable& table, double T) { return table.eval(T); }

void ElasticLaw::check() const {
    for (double v : young.value)
        if (!(v > 0.0)) throw std::invalid_argument("ElasticLaw: E must be positive");
    if (!(poisson > 0.0) || !(poisson < 0.5))
        throw std::invalid_argument("ElasticLaw: need 0 < nu < 0.5");
}

namespace {

/// Piecewise linear curve value and slope with the IH/MIH tail rules.
void row_eval(const HardeningCurve::Row& row, double eps, HardeningMode mode, double cap,
              double& sigma, double& slope) {
    const auto& e = row.plastic_strain;
    const auto& s = row.stress;
    if (e.empty()) throw std::runtime_error("HardeningCurve: empty row");
    if (mode == HardeningMode::MIH) eps = std::min(eps, cap);
    if (e.size() == 1) {
        sigma = s.front();
        slope = 0.0;
        return;
    }
    if (eps <= e.front()) {
        sigma = s.front();
        slope = 0.0;  // no softening below the first tabulated strain
        return;
    }
    std::size_t i;
    if (eps >= e.back()) {
        i = e.size() - 1;  // extrapolate the last segment (IH)
    } else {
        i = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), eps) - e.begin());
    }
    slope = (s[i] - s[i - 1]) / (e[i] - e[i - 1]);
    sigma = s[i - 1] + slope * (eps - e[i - 1]);
    if (mode == HardeningMode::MIH && eps >= cap) slope = 0.0;
}

void curve_eval(const HardeningCurve& c, double eps, double T, double& sigma, double& slope) {
    if (c.rows.empty()) throw std::runtime_error("HardeningCurve: no rows");
    if (c.rows.size() == 1 || T <= c.rows.front().temperature) {
        row_eval(c.rows.front(), eps, c.mode, c.cap_strain, sigma, slope);
        return;
    }
    if (T >= c.rows.back().temperature) {
        row_eval(c.rows.back(), eps, c.mode, c.cap_strain, sigma, slope);
        return;
    }
    std::size_t i = 1;
    while (c.rows[i].temperature < T) ++i;
    double t = (T - c.rows[i - 1].temperature) / (c.rows[i].temperature - c.rows[i - 1].temperature);
    double s0, h0, s1, h1;
    row_eval(c.rows[i - 1], eps, c.mode, c.cap_strain, s0, h0);
    row_eval(c.rows[i], eps, c.mode, c.cap_strain, s1, h1);
    sigma = (1.0 - t) * s0 + t * s1;
    slope = (1.0 - t) * h0 + t * h1;
}

}  // namespace

double HardeningCurve::sigma_y(double eps_bar, double T) const {
    double s, h;
    curve_eval(*this, eps_bar, T, s, h);
    return s;
}

double HardeningCurve::hardening_modulus(double eps_bar, double T) const {
    double s, h;
    curve_eval(*this, eps_bar, T, s, h);
    return h;
}

HardeningCurve HardeningCurve::perfectly_plastic(double sy) {
    HardeningCurve c;
    c.rows.push_back({0.0, {0.0}, {sy}});
    return c;
}

HardeningCurve HardeningCurve::linear(double sy0, double H) {
    HardeningCurve c;
    c.rows.push_back({0.0, {0.0, 1.0}, {sy0, sy0 + H}});
    return c;
}

HardeningCurve HardeningCurve::thermal_linear(double sy0, double T_melt, double T_wall) {
    HardeningCurve c;
    c.rows.push_back({T_wall, {0.0}, {sy0}});
    c.rows.push_back({T_melt, {0.0}, {0.0}});
    return c;
}

double yield_stress_bar(double T, double sy0, double T_m, double T_w) {
    if (T > T_m) return 0.0;
    if (T < T_w) return sy0;
    return sy0 * (T_m - T) / (T_m - T_w);
}

SymTensor3 thermal_strain(const ThermalExpansion& expansion, double T) {
    return thermal_strain(expansion.gamma, T, expansion.T_ref);
}

SymTensor3 thermal_strain(const PropertyTable& gamma, double T, double T_ref) {
    return SymTensor3::isotropic(gamma.eval(T) * (T - T_ref));
}

double yield_function(const SymTensor3& stress, double eps_p_bar, double T,
                      const HardeningCurve& hardening) {
    SymTensor3 s = stress.deviator();
    double j2 = 0.5 * s.contract(s);
    return std::sqrt(3.0 * j2) - hardening.sigma_y(eps_p_bar, T);
}

ReturnMapResult radial_return(const SymTensor3& strain_total, const SymTensor3& strain_thermal,
                              const InternalVariables& state_old, double T, const ElasticLaw& elastic,
                              const HardeningCurve& hardening) {
    const double mu = elastic.mu(T);
    const double kappa = elastic.bulk(T);

    SymTensor3 eps_el = strain_total - strain_thermal - state_old.eps_p;
    SymTensor3 dev = eps_el.deviator();
    SymTensor3 s_trial = 2.0 * mu * dev;
    double pressure = kappa * eps_el.trace();
    double s_norm = s_trial.frobenius_norm();
    double q_trial = std::sqrt(1.5) * s_norm;

    ReturnMapResult out;
    out.state = state_old;
    out.tangent.bulk = kappa;
    out.tangent.two_mu_theta = 2.0 * mu;
    out.tangent.rank1 = 0.0;

    double sy = hardening.sigma_y(state_old.eps_p_bar, T);
    if (q_trial - sy <= 1e-12 * std::max(sy, 1.0)) {
        out.stress = s_trial + SymTensor3::isotropic(pressure);
        return out;
    }

    // scalar Newton on the plastic multiplier; the residual is piecewise
    // linear and strictly decreasing, so this terminates in a few segment hops
    double dgamma = 0.0;
    double residual = q_trial - sy;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        double H = hardening.hardening_modulus(state_old.eps_p_bar + dgamma, T);
        double step = residual / (3.0 * mu + H);
        dgamma += step;
        if (dgamma < 0.0) dgamma = 0.5 * (dgamma - step);  // fallback bisection toward 0
        residual = q_trial - 3.0 * mu * dgamma - hardening.sigma_y(state_old.eps_p_bar + dgamma, T);
        if (std::abs(residual) <= 1e-12 * std::max(q_trial, 1.0)) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "radial_return: hardening Newton stalled, residual " << residual << " at T " << T;
        throw std::runtime_error(msg.str());
    }

    SymTensor3 nhat = (1.0 / s_norm) * s_trial;
    out.plastic = true;
    out.state.eps_p_bar = state_old.eps_p_bar + dgamma;
    out.state.eps_p = state_old.eps_p + (std::sqrt(1.5) * dgamma) * nhat;
    SymTensor3 s_new = (1.0 - 3.0 * mu * dgamma / q_trial) * s_trial;
    out.stress = s_new + SymTensor3::isotropic(pressure);

    double H = hardening.hardening_modulus(out.state.eps_p_bar, T);
    double theta = 1.0 - 3.0 * mu * dgamma / q_trial;
    double theta_bar = 3.0 * mu / (3.0 * mu + H) - (1.0 - theta);
    out.tangent.two_mu_theta = 2.0 * mu * theta;
    out.tangent.rank1 = 2.0 * mu * theta_bar;
    out.tangent.nhat = nhat;
    return out;
}

ElasticLaw MaterialDef::elastic() const {
    ElasticLaw law;
    law.young = young_GPa;
    for (auto& v : law.young.value) v *= 1.0e3;  // GPa -> MPa
    law.poisson = poisson;
    return law;
}

PropertyTable MaterialDef::conductivity() const {
    PropertyTable k = conductivity_W_per_mC;
    for (auto& v : k.value) v *= 1.0e-3;  // W/(m C) -> W/(mm C)
    return k;
}

PropertyTable MaterialDef::volumetric_heat() const {
    PropertyTable c = specific_heat_kJ_per_kgC;  // kJ/(kg C) == J/(g C)
    double rho = density_kg_per_m3 * 1.0e-6;     // g/mm^3
    for (auto& v : c.value) v *= rho;            // J/(mm^3 C)
    return c;
}

double MaterialDef::volumetric_latent() const {
    return latent_kJ_per_kg * density_kg_per_m3 * 1.0e-6;  // J/mm^3
}

ThermalExpansion MaterialDef::expansion() const {
    ThermalExpansion ex;
    ex.gamma = expansion_e6_per_C;
    for (auto& v : ex.gamma.value) v *= 1.0e-6;
    ex.T_ref = T_ref;
    return ex;
}

namespace {

using nlohmann::json;

json table_to_json(const PropertyTable& t) {
    json rows = json::array();
    for (std::size_t i = 0; i < t.temperature.size(); ++i)
        rows.push_back({t.temperature[i], t.value[i]});
    return rows;
}

PropertyTable table_from_json(const json& j) {
    PropertyTable t;
    for (const auto& row : j) {
        t.temperature.push_back(row.at(0).get<double>());
        t.value.push_back(row.at(1).get<double>());
    }
    return t;
}

}  // namespace

void write_material(const MaterialDef& def, std::ostream& out) {
    json j;
    j["name"] = def.name;
    j["specific_heat_kJ_per_kgC"] = table_to_json(def.specific_heat_kJ_per_kgC);
    j["conductivity_W_per_mC"] = table_to_json(def.conductivity_W_per_mC);
    j["expansion_e6_per_C"] = table_to_json(def.expansion_e6_per_C);
    j["young_GPa"] = table_to_json(def.young_GPa);
    j["poisson"] = def.poisson;
    j["density_kg_per_m3"] = def.density_kg_per_m3;
    j["latent_kJ_per_kg"] = def.latent_kJ_per_kg;
    j["T_melt"] = def.T_melt;
    j["mushy_interval"] = def.mushy_interval;
    j["T_ref"] = def.T_ref;
    j["reset_state_above_melt"] = def.reset_state_above_melt;
    j["hardening"]["mode"] = def.hardening.mode == HardeningMode::IH ? "IH" : "MIH";
    j["hardening"]["cap_strain"] = def.hardening.cap_strain;
    json rows = json::array();
    for (const auto& r : def.hardening.rows)
        rows.push_back({{"temperature", r.temperature},
                        {"plastic_strain", r.plastic_strain},
                        {"stress", r.stress}});
    j["hardening"]["rows"] = rows;
    out << j.dump(2) << "\n";
}

MaterialDef parse_material(std::istream& in) {
    json j = json::parse(in);
    MaterialDef def;
    def.name = j.value("name", "");
    def.specific_heat_kJ_per_kgC = table_from_json(j.at("specific_heat_kJ_per_kgC"));
    def.conductivity_W_per_mC = table_from_json(j.at("conductivity_W_per_mC"));
    def.expansion_e6_per_C = table_from_json(j.at("expansion_e6_per_C"));
    def.young_GPa = table_from_json(j.at("young_GPa"));
    def.poisson = j.at("poisson").get<double>();
    def.density_kg_per_m3 = j.at("density_kg_per_m3").get<double>();
    def.latent_kJ_per_kg = j.at("latent_kJ_per_kg").get<double>();
    def.T_melt = j.at("T_melt").get<double>();
    def.mushy_interval = j.at("mushy_interval").get<double>();
    def.T_ref = j.at("T_ref").get<double>();
    def.reset_state_above_melt = j.value("reset_state_above_melt", true);
    const auto& h = j.at("hardening");
    def.hardening.mode = h.at("mode").get<std::string>() == "MIH" ? HardeningMode::MIH : HardeningMode::IH;
    def.hardening.cap_strain = h.at("cap_strain").get<double>();
    for (const auto& r : h.at("rows")) {
        HardeningCurve::Row row;
        row.temperature = r.at("temperature").get<double>();
        row.plastic_strain = r.at("plastic_strain").get<std::vector<double>>();
        row.stress = r.at("stress").get<std::vector<double>>();
        def.hardening.rows.push_back(std::move(row));
    }
    return def;
}

MaterialDef load_material(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_material: cannot open " + path);
    return parse_material(in);
}

void save_material(const MaterialDef& def, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_material: cannot open " + path);
    write_material(def, out);
}

MaterialDef material_316l(HardeningMode mode) {
    MaterialDef def;
    def.name = "AISI 316L";
    def.specific_heat_kJ_per_kgC = {
        {20, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100, 1200, 1300, 1400},
        {0.492, 0.502, 0.514, 0.526, 0.538, 0.550, 0.562, 0.575, 0.587, 0.599, 0.611, 0.623, 0.635,
         0.647, 0.659}};
    def.conductivity_W_per_mC = {
        {20, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100, 1200, 1300, 1400},
        {14.12, 15.26, 16.69, 18.11, 19.54, 20.96, 22.38, 23.81, 25.23, 26.66, 28.08, 29.50, 30.93,
         32.35, 33.78}};
    def.expansion_e6_per_C = {
        {20, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100, 1200, 1300, 1400},
        {14.56, 15.39, 16.21, 16.86, 17.37, 17.78, 18.12, 18.43, 18.72, 18.99, 19.27, 19.53, 19.79,
         20.02, 20.21}};
    def.young_GPa = {{20, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100, 1200, 1300, 1400},
                     {195.6, 191.2, 185.4, 179.6, 172.6, 164.5, 155.0, 144.1, 131.4, 116.8, 100.0,
                      80.0, 57.0, 30.0, 2.0}};
    def.poisson = 0.294;
    def.density_kg_per_m3 = 7966.0;
    def.latent_kJ_per_kg = 260.0;
    def.T_melt = 1400.0;
    def.mushy_interval = 20.0;
    def.T_ref = 20.0;
    def.hardening.mode = mode;
    def.hardening.cap_strain = 0.01;
    auto pct = [](std::initializer_list<double> v) {
        std::vector<double> out;
        for (double x : v) out.push_back(x / 100.0);
        return out;
    };
    def.hardening.rows = {
        {23, pct({0, 0.2, 1, 2, 5, 10, 20, 30, 40}), {210, 238, 292, 325, 393, 494, 648, 775, 880}},
        {275, pct({0, 0.2, 1, 2, 5, 10, 20, 30}), {150, 173.7, 217, 249, 325, 424, 544, 575}},
        {550, pct({0, 0.2, 1, 2, 5, 10, 20, 30}), {112, 142.3, 178, 211, 286, 380, 480, 500}},
        {750, pct({0, 0.2, 1, 2, 5, 10, 20, 30}), {95, 114.7, 147, 167, 195, 216, 231, 236}},
        {800, pct({0, 0.2, 1, 2, 5, 10, 20}), {88, 112, 120, 129, 150, 169, 183}},
        {900, pct({0, 0.2, 1, 2, 5, 10}), {69, 70, 71, 73, 76, 81}},
        {1100, pct({0}), {22.4}},
        {1400, pct({0}), {2.7}},
    };
    return def;
}

}  // namespace hpfcm
