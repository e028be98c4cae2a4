#include "hpfcm/polybasis.hpp"

#include <cmath>
#include <stdexcept>

namespace hpfcm {

namespace {

void check_range(double xi) {
    if (std::abs(xi) > 1.0 + 1e-12) throw std::domain_error("ShapeSet1D: coordinate outside [-1,1]");
}

}  // namespace

ShapeSet1D::ShapeSet1D(int p) : order(p) {
    if (p < 1) throw std::invalid_argument("ShapeSet1D: order must be >= 1");
}

void legendre(int n, double xi, std::vector<double>& values) {
    values.resize(n + 1);
    values[0] = 1.0;
    if (n == 0) return;
    values[1] = xi;
    for (int k = 2; k <= n; ++k)
        values[k] = ((2.0 * k - 1.0) * xi * values[k - 1] - (k - 1.0) * values[k - 2]) / k;
}

std::vector<double> ShapeSet1D::eval(double xi) const {
    check_range(xi);
    std::vector<double> leg;
    legendre(order, xi, leg);
    std::vector<double> values(order + 1);
    values[0] = 0.5 * (1.0 - xi);
    values[1] = 0.5 * (1.0 + xi);
    for (int k = 2; k <= order; ++k)
        values[k] = (leg[k] - leg[k - 2]) / std::sqrt(4.0 * k - 2.0);
    return values;
}

void ShapeSet1D::eval(double xi, std::vector<double>& values, std::vector<double>& derivatives) const {
    check_range(xi);
    std::vector<double> leg;
    legendre(order, xi, leg);
    values.resize(order + 1);
    derivatives.resize(order + 1);
    values[0] = 0.5 * (1.0 - xi);
    values[1] = 0.5 * (1.0 + xi);
    derivatives[0] = -0.5;
    derivatives[1] = 0.5;
    // N_k' = sqrt((2k-1)/2) L_{k-1}
    for (int k = 2; k <= order; ++k) {
        values[k] = (leg[k] - leg[k - 2]) / std::sqrt(4.0 * k - 2.0);
        derivatives[k] = std::sqrt((2.0 * k - 1.0) / 2.0) * leg[k - 1];
    }
}

HexBasis::HexBasis(Int3 p) : orders(p) {
    for (int d = 0; d < 3; ++d)
        if (p[d] < 1) throw std::invalid_argument("HexBasis: order must be >= 1");
}

Int3 HexBasis::factor_indices(int function) const {
    int nk = orders[2] + 1, nj = orders[1] + 1;
    int k = function % nk;
    int j = (function / nk) % nj;
    int i = function / (nk * nj);
    return {i, j, k};
}

TopologicalComponent HexBasis::component(int function) const {
    Int3 f = factor_indices(function);
    bool nodal[3] = {f[0] < 2, f[1] < 2, f[2] < 2};
    int n_internal = (!nodal[0]) + (!nodal[1]) + (!nodal[2]);
    switch (n_internal) {
        case 0:
            return {ComponentType::Vertex, f[0] + 2 * f[1] + 4 * f[2]};
        case 1: {
            if (!nodal[0]) return {ComponentType::Edge, 0 + f[1] + 2 * f[2]};
            if (!nodal[1]) return {ComponentType::Edge, 4 + f[0] + 2 * f[2]};
            return {ComponentType::Edge, 8 + f[0] + 2 * f[1]};
        }
        case 2: {
            if (nodal[0]) return {ComponentType::Face, 0 + f[0]};
            if (nodal[1]) return {ComponentType::Face, 2 + f[1]};
            return {ComponentType::Face, 4 + f[2]};
        }
        default:
            return {ComponentType::Volume, 0};
    }
}

void HexBasis::eval(const Vec3& local, std::vector<double>& values, std::vector<Vec3>& gradients) const {
    std::array<std::vector<double>, 3> v, d;
    for (int axis = 0; axis < 3; ++axis) ShapeSet1D(orders[axis]).eval(local[axis], v[axis], d[axis]);

    int n = count();
    values.resize(n);
    gradients.resize(n);
    int idx = 0;
    for (int i = 0; i <= orders[0]; ++i)
        for (int j = 0; j <= orders[1]; ++j)
            for (int k = 0; k <= orders[2]; ++k, ++idx) {
                values[idx] = v[0][i] * v[1][j] * v[2][k];
                gradients[idx] = {d[0][i] * v[1][j] * v[2][k],
                                  v[0][i] * d[1][j] * v[2][k],
                                  v[0][i] * v[1][j] * d[2][k]};
            }
}

std::vector<double> legendre_vector(const Int3& orders, const Vec3& local) {
    std::array<std::vector<double>, 3> leg;
    for (int axis = 0; axis < 3; ++axis) legendre(orders[axis], local[axis], leg[axis]);
    std::vector<double> row(legendre_vector_size(orders));
    int idx = 0;
    for (int i = 0; i <= orders[0]; ++i)
        for (int j = 0; j <= orders[1]; ++j)
            for (int k = 0; k <= orders[2]; ++k, ++idx)
                row[idx] = leg[0][i] * leg[1][j] * leg[2][k];
    return row;
}

}  // namespace hpfcm
