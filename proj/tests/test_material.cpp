#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hpfcm/material.hpp"

using namespace hpfcm;

namespace {

ElasticLaw simple_elastic(double E = 1.0e4, double nu = 0.3) {
    return ElasticLaw{PropertyTable::constant(E), nu};
}

SymTensor3 random_strain(std::mt19937& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    SymTensor3 e;
    for (int i = 0; i < 6; ++i) e[i] = u(rng);
    return e;
}

SymTensor3 rotate(const SymTensor3& a, const double R[3][3]) {
    double full[3][3], tmp[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) full[i][j] = a(i, j);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            tmp[i][j] = 0;
            for (int k = 0; k < 3; ++k) tmp[i][j] += R[i][k] * full[k][j];
        }
    SymTensor3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double v = 0;
            for (int k = 0; k < 3; ++k) v += tmp[i][k] * R[j][k];
            out.set(i, j, v);
        }
    return out;
}

void random_rotation(std::mt19937& rng, double R[3][3]) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // Rodrigues formula for a random axis and angle
    double ax = u(rng), ay = u(rng), az = u(rng);
    double n = std::sqrt(ax * ax + ay * ay + az * az);
    ax /= n; ay /= n; az /= n;
    double th = u(rng) * M_PI;
    double c = std::cos(th), s = std::sin(th), C = 1 - c;
    double M[3][3] = {{c + ax * ax * C, ax * ay * C - az * s, ax * az * C + ay * s},
                      {ay * ax * C + az * s, c + ay * ay * C, ay * az * C - ax * s},
                      {az * ax * C - ay * s, az * ay * C + ax * s, c + az * az * C}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R[i][j] = M[i][j];
}

}  // namespace

TEST_CASE("yield function") {
    auto hard = HardeningCurve::perfectly_plastic(41.7939);

    SUBCASE("hydrostatic stress gives -sigma_y") {
        SymTensor3 sig = SymTensor3::isotropic(123.0);
        CHECK(yield_function(sig, 0.0, 20.0, hard) == doctest::Approx(-41.7939).epsilon(1e-12));
    }
    SUBCASE("uniaxial at yield gives zero") {
        SymTensor3 sig;
        sig[SymTensor3::XX] = 41.7939;
        CHECK(yield_function(sig, 0.0, 20.0, hard) == doctest::Approx(0.0).scale(41.79).epsilon(1e-12));
    }
    SUBCASE("biaxial against a brute-force deviator computation") {
        SymTensor3 sig;
        sig[SymTensor3::XX] = 100.0;
        sig[SymTensor3::YY] = 50.0;
        // independent oracle: build the full tensor, subtract the mean,
        // compute sqrt(3/2 s:s)
        double m = (100.0 + 50.0 + 0.0) / 3.0;
        double s[3] = {100.0 - m, 50.0 - m, -m};
        double vm = std::sqrt(1.5 * (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]));
        CHECK(vm == doctest::Approx(std::sqrt(100.0 * 100.0 - 100.0 * 50.0 + 50.0 * 50.0)).epsilon(1e-13));
        CHECK(yield_function(sig, 0.0, 20.0, hard) == doctest::Approx(vm - 41.7939).epsilon(1e-12));
    }
}

TEST_CASE("radial return: elastic trial keeps the state") {
    auto el = simple_elastic();
    auto hard = HardeningCurve::perfectly_plastic(100.0);
    SymTensor3 eps;
    eps[SymTensor3::XX] = 1e-4;
    eps[SymTensor3::XY] = 2e-5;
    InternalVariables old;
    old.eps_p[SymTensor3::XY] = 1e-6;  // pre-existing deviatoric plastic strain
    old.eps_p[SymTensor3::XX] = 5e-7;
    old.eps_p[SymTensor3::YY] = -5e-7;
    auto res = radial_return(eps, SymTensor3{}, old, 20.0, el, hard);
    CHECK(!res.plastic);
    CHECK(res.state.eps_p_bar == old.eps_p_bar);
    // stress equals D^e : (eps - eps_p)
    SymTensor3 ee = eps - old.eps_p;
    SymTensor3 expect = el.bulk(20) * ee.trace() * SymTensor3::identity() + 2 * el.mu(20) * ee.deviator();
    for (int i = 0; i < 6; ++i) CHECK(res.stress[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("radial return: perfectly plastic cap") {
    auto el = simple_elastic();
    double sy = 41.79389833783693;
    auto hard = HardeningCurve::perfectly_plastic(sy);
    InternalVariables state;
    SymTensor3 eps;
    for (int step = 1; step <= 5; ++step) {
        eps[SymTensor3::XX] = 4e-3 * step;
        eps[SymTensor3::YY] = -2e-3 * step;
        eps[SymTensor3::ZZ] = -2e-3 * step;
        auto res = radial_return(eps, SymTensor3{}, state, 20.0, el, hard);
        state = res.state;
        double vm = yield_function(res.stress, 0.0, 20.0, HardeningCurve::perfectly_plastic(0.0));
        if (step >= 1) CHECK(vm == doctest::Approx(sy).epsilon(1e-8));
    }
    CHECK(state.eps_p_bar > 0.0);
}

TEST_CASE("radial return: linear hardening matches the 1d return formula") {
    double E = 2.0e5, nu = 0.3, sy0 = 200.0, H = 5.0e3;
    auto el = simple_elastic(E, nu);
    auto hard = HardeningCurve::linear(sy0, H);
    double mu = el.mu(0);

    // deviatoric strain drive: eps = diag(e, -e/2, -e/2)
    double e = 5e-3;
    SymTensor3 eps;
    eps[SymTensor3::XX] = e;
    eps[SymTensor3::YY] = -0.5 * e;
    eps[SymTensor3::ZZ] = -0.5 * e;
    // independent 1d oracle: q_trial = 3 mu e_vm with e_vm = sqrt(2/3)|dev|
    double e_vm = std::sqrt(2.0 / 3.0 * (e * e + 0.5 * e * e));
    double q_trial = 3.0 * mu * e_vm;
    REQUIRE(q_trial > sy0);
    double dgamma = (q_trial - sy0) / (3.0 * mu + H);
    double sigma_vm_expect = sy0 + H * dgamma;

    auto res = radial_return(eps, SymTensor3{}, InternalVariables{}, 0.0, el, hard);
    CHECK(res.plastic);
    CHECK(res.state.eps_p_bar == doctest::Approx(dgamma).epsilon(1e-12));
    SymTensor3 s = res.stress.deviator();
    CHECK(std::sqrt(1.5) * s.frobenius_norm() == doctest::Approx(sigma_vm_expect).epsilon(1e-12));
}

TEST_CASE("consistent tangent matches finite differences") {
    std::mt19937 rng(11);
    auto el = simple_elastic(2.0e5, 0.29);
    int checked_plastic = 0, checked_elastic = 0;
    for (int trial = 0; trial < 20; ++trial) {
        bool perfect = trial % 2 == 0;
        auto hard = perfect ? HardeningCurve::perfectly_plastic(150.0)
                            : HardeningCurve::linear(150.0, 8.0e3);
        InternalVariables old;
        old.eps_p_bar = (trial % 3) * 1e-3;
        SymTensor3 dev = random_strain(rng, 1e-3).deviator();
        old.eps_p = (old.eps_p_bar / std::max(1e-12, std::sqrt(2.0 / 3.0) * dev.frobenius_norm())) *
                    std::sqrt(2.0 / 3.0) * dev;
        SymTensor3 eps = random_strain(rng, trial < 6 ? 2e-4 : 2e-3);  // small strains stay elastic
        SymTensor3 eth = SymTensor3::isotropic(1e-4 * (trial % 4));

        auto base = radial_return(eps, eth, old, 20.0, el, hard);
        (base.plastic ? checked_plastic : checked_elastic)++;

        const double h = 1e-8;
        for (int dir = 0; dir < 6; ++dir) {
            SymTensor3 de;
            de[dir] = 1.0;
            SymTensor3 ep = eps, em = eps;
            ep[dir] += h;
            em[dir] -= h;
            auto rp = radial_return(ep, eth, old, 20.0, el, hard);
            auto rm = radial_return(em, eth, old, 20.0, el, hard);
            if (rp.plastic != rm.plastic) continue;  // FD across the yield transition is meaningless
            SymTensor3 fd = (1.0 / (2.0 * h)) * (rp.stress - rm.stress);
            SymTensor3 an = base.tangent.apply(de);
            double scale = std::max(1.0, an.frobenius_norm());
            for (int i = 0; i < 6; ++i) CHECK(std::abs(fd[i] - an[i]) / scale < 1e-6);
        }
    }
    CHECK(checked_plastic >= 5);
    CHECK(checked_elastic >= 1);
}

TEST_CASE("plastic flow is deviatoric and isotropic") {
    std::mt19937 rng(23);
    auto el = simple_elastic(2.0e5, 0.3);
    auto hard = HardeningCurve::linear(100.0, 2.0e3);
    for (int trial = 0; trial < 10; ++trial) {
        SymTensor3 eps = random_strain(rng, 4e-3);
        auto res = radial_return(eps, SymTensor3{}, InternalVariables{}, 20.0, el, hard);
        SymTensor3 dep = res.state.eps_p;
        CHECK(std::abs(dep.trace()) < 1e-12);

        // objectivity: rotating the input strain rotates the output stress
        double R[3][3];
        random_rotation(rng, R);
        auto rotated = radial_return(rotate(eps, R), SymTensor3{}, InternalVariables{}, 20.0, el, hard);
        SymTensor3 expect = rotate(res.stress, R);
        for (int i = 0; i < 6; ++i)
            CHECK(std::abs(rotated.stress[i] - expect[i]) < 1e-10 * std::max(1.0, expect.frobenius_norm()));
    }
}

TEST_CASE("hydrostatic strain increments leave the plastic state alone") {
    auto el = simple_elastic(2.0e5, 0.3);
    auto hard = HardeningCurve::linear(100.0, 2.0e3);
    SymTensor3 eps;
    eps[SymTensor3::XX] = 3e-3;
    eps[SymTensor3::XY] = 1e-3;
    auto a = radial_return(eps, SymTensor3{}, InternalVariables{}, 20.0, el, hard);
    REQUIRE(a.plastic);
    SymTensor3 eps2 = eps + SymTensor3::isotropic(5e-4);
    auto b = radial_return(eps2, SymTensor3{}, InternalVariables{}, 20.0, el, hard);
    CHECK(b.state.eps_p_bar == doctest::Approx(a.state.eps_p_bar).epsilon(1e-13));
    for (int i = 0; i < 6; ++i)
        CHECK(b.stress.deviator()[i] == doctest::Approx(a.stress.deviator()[i]).scale(100).epsilon(1e-12));
    CHECK(b.stress.trace() - a.stress.trace() ==
          doctest::Approx(3.0 * el.bulk(20.0) * 3.0 * 5e-4).epsilon(1e-10));
}

TEST_CASE("thermal strain") {
    auto m316 = material_316l(HardeningMode::IH);
    auto ex = m316.expansion();

    SUBCASE("zero at the reference temperature") {
        auto e = thermal_strain(ex, 20.0);
        for (int i = 0; i < 6; ++i) CHECK(e[i] == 0.0);
    }
    SUBCASE("table value at 100C") {
        auto e = thermal_strain(ex.gamma, 100.0, 20.0);
        CHECK(e[SymTensor3::XX] == doctest::Approx(15.39e-6 * 80.0).epsilon(1e-12));
        CHECK(e[SymTensor3::YY] == e[SymTensor3::XX]);
        CHECK(e[SymTensor3::ZZ] == e[SymTensor3::XX]);
    }
    SUBCASE("purely hydrostatic") {
        auto e = thermal_strain(ex.gamma, 432.1, 20.0);
        CHECK(e.deviator().frobenius_norm() < 1e-18);
    }
}

TEST_CASE("property tables") {
    auto m316 = material_316l(HardeningMode::IH);
    CHECK(property_at(m316.conductivity_W_per_mC, 200.0) == doctest::Approx(16.69));
    CHECK(property_at(m316.conductivity_W_per_mC, 1600.0) == doctest::Approx(33.78));  // clamped
    CHECK(property_at(m316.young_GPa, 150.0) == doctest::Approx(0.5 * (191.2 + 185.4)));
    CHECK_THROWS(property_at(PropertyTable{}, 100.0));
}

TEST_CASE("yield stress decaying toward the melting point") {
    double sy0 = 85.7142857142857, Tm = 1000.0, Tw = 0.0;
    CHECK(yield_stress_bar(Tm, sy0, Tm, Tw) == doctest::Approx(0.0));
    CHECK(yield_stress_bar(Tm + 1.0, sy0, Tm, Tw) == 0.0);
    CHECK(yield_stress_bar(Tw, sy0, Tm, Tw) == doctest::Approx(sy0));
    CHECK(yield_stress_bar(0.5 * (Tw + Tm), sy0, Tm, Tw) == doctest::Approx(0.5 * sy0));
    CHECK(yield_stress_bar(Tw - 5.0, sy0, Tm, Tw) == doctest::Approx(sy0));  // clamped below

    // the equivalent two-row hardening curve agrees with the closed form
    auto curve = HardeningCurve::thermal_linear(sy0, Tm, Tw);
    for (double T : {0.0, 123.4, 500.0, 999.0, 1000.0, 1200.0})
        CHECK(curve.sigma_y(0.0, T) == doctest::Approx(yield_stress_bar(T, sy0, Tm, Tw)).epsilon(1e-12));
}

TEST_CASE("modified isotropic hardening caps above one percent") {
    auto ih = material_316l(HardeningMode::IH);
    auto mih = material_316l(HardeningMode::MIH);
    double T = 23.0;
    CHECK(ih.hardening.sigma_y(0.01, T) == doctest::Approx(292.0));
    CHECK(mih.hardening.sigma_y(0.01, T) == doctest::Approx(292.0));
    CHECK(ih.hardening.sigma_y(0.05, T) == doctest::Approx(393.0));
    CHECK(mih.hardening.sigma_y(0.05, T) == doctest::Approx(292.0));  // perfectly plastic tail
    CHECK(mih.hardening.hardening_modulus(0.05, T) == 0.0);
    // IH extrapolates the last tabulated slope
    double slope = (880.0 - 775.0) / 0.10;
    CHECK(ih.hardening.sigma_y(0.50, T) == doctest::Approx(880.0 + slope * 0.10));
}

TEST_CASE("material file round-trip is value-exact") {
    auto def = material_316l(HardeningMode::MIH);
    std::stringstream buffer;
    write_material(def, buffer);
    auto back = parse_material(buffer);
    CHECK(back == def);
    // and a second echo is byte-identical
    std::stringstream again;
    write_material(back, again);
    std::stringstream first;
    write_material(def, first);
    CHECK(again.str() == first.str());
}
