#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hpfcm/geometry.hpp"

namespace hpfcm {

/// Piecewise linear property over temperature, clamped outside the table
/// range (values above the last row, e.g. past melting, stay constant).
struct PropertyTable {
    std::vector<double> temperature;
    std::vector<double> value;

    double eval(double T) const;
    double derivative(double T) const;
    static PropertyTable constant(double v) { return {{0.0}, {v}}; }
    bool operator==(const PropertyTable&) const = default;
};

double property_at(const PropertyTable& table, double T);

struct ElasticLaw {
    PropertyTable young;  // MPa
    double poisson = 0.3;

    double E(double T) const { return young.eval(T); }
    double mu(double T) const { return 0.5 * E(T) / (1.0 + poisson); }
    double bulk(double T) const { return E(T) / (3.0 * (1.0 - 2.0 * poisson)); }
    void check() const;
};

enum class HardeningMode { IH, MIH };

/// Yield stress as a function of equivalent plastic strain and temperature.
/// Rows are per-temperature stress/strain curves (piecewise linear, linear
/// in temperature between rows, clamped outside). IH extrapolates the last
/// segment slope; MIH is perfectly plastic above cap_strain.
struct HardeningCurve {
    struct Row {
        double temperature = 0.0;
        std::vector<double> plastic_strain;
        std::vector<double> stress;  // MPa
        bool operator==(const Row&) const = default;
    };
    HardeningMode mode = HardeningMode::IH;
    double cap_strain = 0.01;
    std::vector<Row> rows;  // ascending temperature

    double sigma_y(double eps_bar, double T) const;
    double hardening_modulus(double eps_bar, double T) const;

    static HardeningCurve perfectly_plastic(double sy);
    static HardeningCurve linear(double sy0, double H);
    /// Yield decaying linearly to zero at the melting temperature.
    static HardeningCurve thermal_linear(double sy0, double T_melt, double T_wall);
    bool operator==(const HardeningCurve&) const = default;
};

/// sy0 * (T_m - T) / (T_m - T_w) on [T_w, T_m]; 0 above T_m, sy0 below T_w.
double yield_stress_bar(double T, double sy0, double T_m, double T_w);

struct ThermalExpansion {
    PropertyTable gamma;  // 1/degC
    double T_ref = 20.0;
};

/// gamma(T) * (T - T_ref) * I
SymTensor3 thermal_strain(const ThermalExpansion& expansion, double T);
SymTensor3 thermal_strain(const PropertyTable& gamma, double T, double T_ref);

struct InternalVariables {
    SymTensor3 eps_p;        // plastic strain, trace-free
    double eps_p_bar = 0.0;  // equivalent plastic strain
};

/// Algorithmically consistent tangent of the return mapping:
///   D : e = bulk tr(e) I + two_mu_theta dev(e) - rank1 (nhat : e) nhat
struct TangentOperator {
    double bulk = 0.0;
    double two_mu_theta = 0.0;
    double rank1 = 0.0;
    SymTensor3 nhat;

    SymTensor3 apply(const SymTensor3& e) const {
        SymTensor3 r = bulk * e.trace() * SymTensor3::identity() + two_mu_theta * e.deviator();
        if (rank1 != 0.0) r -= (rank1 * nhat.contract(e)) * nhat;
        return r;
    }
};

double yield_function(const SymTensor3& stress, double eps_p_bar, double T,
                      const HardeningCurve& hardening);

struct ReturnMapResult {
    SymTensor3 stress;
    InternalVariables state;
    TangentOperator tangent;
    bool plastic = false;
};

/// Backward Euler radial return for von Mises plasticity with isotropic
/// hardening and thermal strain. Temperature-dependent quantities are
/// evaluated at the given (end of step) temperature.
ReturnMapResult radial_return(const SymTensor3& strain_total, const SymTensor3& strain_thermal,
                              const InternalVariables& state_old, double T, const ElasticLaw& elastic,
                              const HardeningCurve& hardening);

/// Full material description, stored in the units the tables are commonly
/// published in; accessors convert to the internal mm/MPa/W/g system.
struct MaterialDef {
    std::string name;
    PropertyTable specific_heat_kJ_per_kgC;
    PropertyTable conductivity_W_per_mC;
    PropertyTable expansion_e6_per_C;  // printed as x1e6 1/degC
    PropertyTable young_GPa;
    double poisson = 0.3;
    double density_kg_per_m3 = 7966.0;
    double latent_kJ_per_kg = 0.0;
    double T_melt = 1400.0;
    double mushy_interval = 20.0;
    double T_ref = 20.0;
    bool reset_state_above_melt = true;
    HardeningCurve hardening;

    ElasticLaw elastic() const;
    PropertyTable conductivity() const;     // W/(mm degC)
    PropertyTable volumetric_heat() const;  // rho*c, J/(mm^3 degC)
    double volumetric_latent() const;       // rho*L, J/mm^3
    ThermalExpansion expansion() const;     // 1/degC with T_ref

    bool operator==(const MaterialDef&) const = default;
};

MaterialDef load_material(const std::string& path);
MaterialDef parse_material(std::istream& in);
void save_material(const MaterialDef& def, const std::string& path);
void write_material(const MaterialDef& def, std::ostream& out);

/// AISI 316L data set used by the single-bead weld scenario.
MaterialDef material_316l(HardeningMode mode);

}  // namespace hpfcm
