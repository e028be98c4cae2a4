#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hpfcm/leaf_basis.hpp"

namespace hpfcm {

/// Continuous field sampled at the leaf corners (point data).
struct VtkPointField {
    std::string name;
    int ncomp = 1;  // 1 scalar, 3 vector
    std::function<void(const Vec3&, double*)> eval;
};

/// Piecewise field reported once per leaf (cell data).
struct VtkCellField {
    std::string name;
    int ncomp = 1;
    std::function<void(int leaf, double*)> eval;
};

/// Legacy ASCII unstructured grid of the leaf elements as hexahedra.
void write_vtk(const std::string& path, const Discretization& disc,
               std::span<const VtkPointField> point_fields,
               std::span<const VtkCellField> cell_fields);

struct CsvColumn {
    std::string header;  // name incl. unit, e.g. "radius [mm]"
    std::vector<double> values;
};

void write_csv(const std::string& path, std::span<const CsvColumn> columns);

}  // namespace hpfcm
