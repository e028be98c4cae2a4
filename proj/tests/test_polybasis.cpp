#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hpfcm/gauss.hpp"
#include "hpfcm/polybasis.hpp"

using namespace hpfcm;

TEST_CASE("1d nodal interpolation at endpoints") {
    ShapeSet1D s(1);
    auto v = s.eval(-1.0);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-15));
    auto w = s.eval(1.0);
    CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("internal modes vanish at the vertices") {
    for (int p = 2; p <= 8; ++p) {
        ShapeSet1D s(p);
        for (double xi : {-1.0, 1.0}) {
            auto v = s.eval(xi);
            for (int k = 2; k <= p; ++k) CHECK(std::abs(v[k]) < 1e-14);
        }
    }
}

TEST_CASE("first internal mode equals the integral of the Legendre polynomial") {
    // N_2(xi) = sqrt(3/2) * int_{-1}^{xi} L_1(t) dt, checked by quadrature at xi = 0.
    const GaussRule& rule = gauss_rule(4);
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        double t = -1.0 + 0.5 * (rule.points[q] + 1.0);  // map to [-1, 0]
        integral += 0.5 * rule.weights[q] * t;           // L_1(t) = t
    }
    double oracle = std::sqrt(1.5) * integral;
    auto v = ShapeSet1D(2).eval(0.0);
    CHECK(v[2] == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(oracle == doctest::Approx(-std::sqrt(3.0 / 8.0)).epsilon(1e-14));
}

TEST_CASE("domain check") {
    CHECK_THROWS_AS(ShapeSet1D(2).eval(1.0 + 1e-9), std::domain_error);
    CHECK_NOTHROW(ShapeSet1D(2).eval(1.0 + 1e-13));
}

TEST_CASE("hex basis: partition of unity of the nodal subset") {
    HexBasis basis(3);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v;
    std::vector<Vec3> g;
    for (int trial = 0; trial < 5; ++trial) {
        Vec3 x{u(rng), u(rng), u(rng)};
        basis.eval(x, v, g);
        double sum = 0.0;
        for (int f = 0; f < basis.count(); ++f)
            if (basis.component(f).type == ComponentType::Vertex) sum += v[f];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("hex basis: symmetric mode has zero gradient at the center") {
    HexBasis basis(2);
    std::vector<double> v;
    std::vector<Vec3> g;
    basis.eval({0, 0, 0}, v, g);
    // the (2,2,2) interior bubble is even in every direction
    for (int f = 0; f < basis.count(); ++f) {
        Int3 fi = basis.factor_indices(f);
        if (fi[0] == 2 && fi[1] == 2 && fi[2] == 2)
            for (int d = 0; d < 3; ++d) CHECK(std::abs(g[f][d]) < 1e-14);
    }
}

TEST_CASE("hex basis: gradients match central finite differences") {
    HexBasis basis(4);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    std::vector<double> v0, vp, vm;
    std::vector<Vec3> g0, gtmp;
    const double h = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        Vec3 x{u(rng), u(rng), u(rng)};
        basis.eval(x, v0, g0);
        for (int d = 0; d < 3; ++d) {
            Vec3 xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            basis.eval(xp, vp, gtmp);
            basis.eval(xm, vm, gtmp);
            for (int f = 0; f < basis.count(); ++f) {
                double fd = (vp[f] - vm[f]) / (2.0 * h);
                double scale = std::max(1.0, std::abs(g0[f][d]));
                CHECK(std::abs(fd - g0[f][d]) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("hex basis: function count and component ownership") {
    HexBasis basis(Int3{2, 3, 4});
    CHECK(basis.count() == 3 * 4 * 5);
    int per_type[4] = {0, 0, 0, 0};
    for (int f = 0; f < basis.count(); ++f) per_type[static_cast<int>(basis.component(f).type)]++;
    CHECK(per_type[0] == 8);
    CHECK(per_type[1] == 4 * (1 + 2 + 3));                       // edges per axis: 4*(p-1)
    CHECK(per_type[2] == 2 * (2 * 3 + 1 * 3 + 1 * 2));           // faces: 2 per normal axis
    CHECK(per_type[3] == 1 * 2 * 3);
}

TEST_CASE("1d set is linearly independent: Gram matrix has full rank") {
    for (int p : {2, 4, 6}) {
        ShapeSet1D s(p);
        const GaussRule& rule = gauss_rule(p + 1);  // degree 2p+1 >= 2p
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            auto v = s.eval(rule.points[q]);
            for (int i = 0; i <= p; ++i)
                for (int j = 0; j <= p; ++j) gram(i, j) += rule.weights[q] * v[i] * v[j];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        CHECK(lu.rank() == p + 1);
    }
}

TEST_CASE("legendre vector spans the tensor space") {
    auto row = legendre_vector({2, 2, 2}, {0.3, -0.4, 0.9});
    CHECK(row.size() == 27);
    CHECK(row[0] == doctest::Approx(1.0));  // constant mode first

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 3; ++t) {
        Vec3 x{u(rng), u(rng), u(rng)};
        CHECK(legendre_vector({3, 2, 1}, x)[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("gauss rules integrate polynomials exactly") {
    for (int n : {1, 2, 5, 9}) {
        const GaussRule& rule = gauss_rule(n);
        for (int deg = 0; deg <= 2 * n - 1; ++deg) {
            double val = 0.0;
            for (std::size_t q = 0; q < rule.size(); ++q)
                val += rule.weights[q] * std::pow(rule.points[q], deg);
            double exact = (deg % 2 == 0) ? 2.0 / (deg + 1) : 0.0;
            CHECK(val == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}
