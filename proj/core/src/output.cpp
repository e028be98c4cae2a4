#include "hpfcm/output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hpfcm {

namespace {

void print_number(std::ofstream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    os << buf;
}

}  // namespace

void write_vtk(const std::string& path, const Discretization& disc,
               std::span<const VtkPointField> point_fields,
               std::span<const VtkCellField> cell_fields) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_vtk: cannot open " + path);
    const auto& leaves = disc.mesh.leaves();
    const int n_leaf = static_cast<int>(leaves.size());

    os << "# vtk DataFile Version 3.0\nleaf mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << n_leaf * 8 << " double\n";
    // VTK hexahedron corner order
    const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                              {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    for (int l = 0; l < n_leaf; ++l) {
        Box box = disc.mesh.leaf_box(leaves[l]);
        for (const auto& c : corner) {
            Vec3 p{c[0] ? box.hi[0] : box.lo[0], c[1] ? box.hi[1] : box.lo[1], c[2] ? box.hi[2] : box.lo[2]};
            print_number(os, p[0]);
            os << " ";
            print_number(os, p[1]);
            os << " ";
            print_number(os, p[2]);
            os << "\n";
        }
    }
    os << "CELLS " << n_leaf << " " << n_leaf * 9 << "\n";
    for (int l = 0; l < n_leaf; ++l) {
        os << 8;
        for (int c = 0; c < 8; ++c) os << " " << l * 8 + c;
        os << "\n";
    }
    os << "CELL_TYPES " << n_leaf << "\n";
    for (int l = 0; l < n_leaf; ++l) os << "12\n";

    if (!point_fields.empty()) {
        os << "POINT_DATA " << n_leaf * 8 << "\n";
        for (const auto& field : point_fields) {
            if (field.ncomp == 1)
                os << "SCALARS " << field.name << " double 1\nLOOKUP_TABLE default\n";
            else
                os << "VECTORS " << field.name << " double\n";
            double vals[3];
            for (int l = 0; l < n_leaf; ++l) {
                Box box = disc.mesh.leaf_box(leaves[l]);
                for (const auto& c : corner) {
                    Vec3 p{c[0] ? box.hi[0] : box.lo[0], c[1] ? box.hi[1] : box.lo[1],
                           c[2] ? box.hi[2] : box.lo[2]};
                    field.eval(p, vals);
                    for (int k = 0; k < field.ncomp; ++k) {
                        if (k) os << " ";
                        print_number(os, vals[k]);
                    }
                    os << "\n";
                }
            }
        }
    }
    if (!cell_fields.empty()) {
        os << "CELL_DATA " << n_leaf << "\n";
        for (const auto& field : cell_fields) {
            if (field.ncomp == 1)
                os << "SCALARS " << field.name << " double 1\nLOOKUP_TABLE default\n";
            else
                os << "VECTORS " << field.name << " double\n";
            double vals[3];
            for (int l = 0; l < n_leaf; ++l) {
                field.eval(l, vals);
                for (int k = 0; k < field.ncomp; ++k) {
                    if (k) os << " ";
                    print_number(os, vals[k]);
                }
                os << "\n";
            }
        }
    }
}

void write_csv(const std::string& path, std::span<const CsvColumn> columns) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) os << ",";
        os << columns[c].header;
    }
    os << "\n";
    std::size_t rows = columns.empty() ? 0 : columns[0].values.size();
    char buf[32];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) os << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", columns[c].values[r]);
            os << buf;
        }
        os << "\n";
    }
}

}  // namespace hpfcm
