#include "hpfcm/embedded_domain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "hpfcm/gauss.hpp"
#include "hpfcm/polybasis.hpp"

namespace hpfcm {

ImplicitGeometry make_sphere_shell(Vec3 center, double r_inner, double r_outer) {
    ImplicitGeometry g;
    g.inside = [=](const Vec3& x) {
        double r = norm(x - center);
        return r >= r_inner && r <= r_outer;
    };
    // distance to the nearest of the two surfaces, negative inside the shell
    g.signed_distance = [=](const Vec3& x) {
        double r = norm(x - center);
        return std::max(r_inner - r, r - r_outer);
    };
    return g;
}

ImplicitGeometry make_sphere(Vec3 center, double r) {
    ImplicitGeometry g;
    g.inside = [=](const Vec3& x) { return norm(x - center) <= r; };
    g.signed_distance = [=](const Vec3& x) { return norm(x - center) - r; };
    return g;
}

ImplicitGeometry make_halfspace(Vec3 point, Vec3 normal) {
    double n = norm(normal);
    Vec3 unit{normal[0] / n, normal[1] / n, normal[2] / n};
    ImplicitGeometry g;
    g.inside = [=](const Vec3& x) { return dot(x - point, unit) <= 0.0; };
    g.signed_distance = [=](const Vec3& x) { return dot(x - point, unit); };
    return g;
}

ImplicitGeometry make_box_region(Box box) {
    ImplicitGeometry g;
    g.inside = [=](const Vec3& x) { return box.contains(x); };
    g.signed_distance = [=](const Vec3& x) {
        // exact box SDF
        Vec3 c = box.center();
        Vec3 h = 0.5 * box.size();
        Vec3 q{std::abs(x[0] - c[0]) - h[0], std::abs(x[1] - c[1]) - h[1], std::abs(x[2] - c[2]) - h[2]};
        Vec3 qp{std::max(q[0], 0.0), std::max(q[1], 0.0), std::max(q[2], 0.0)};
        double outside = norm(qp);
        double inside = std::min(std::max({q[0], q[1], q[2]}), 0.0);
        return outside + inside;
    };
    return g;
}

ImplicitGeometry make_union(ImplicitGeometry a, ImplicitGeometry b) {
    ImplicitGeometry g;
    g.inside = [a, b](const Vec3& x) { return a.inside(x) || b.inside(x); };
    if (a.has_distance() && b.has_distance()) {
        // min-combination: exact outside the union, a lower bound on the
        // magnitude inside
        g.signed_distance = [a, b](const Vec3& x) {
            return std::min(a.signed_distance(x), b.signed_distance(x));
        };
    }
    return g;
}

ImplicitGeometry make_all() {
    ImplicitGeometry g;
    g.inside = [](const Vec3&) { return true; };
    return g;
}

IndicatorAlpha::IndicatorAlpha(double a) : alpha_fict(a) {
    if (!(alpha_fict > 0.0) || alpha_fict >= 1.0)
        throw std::invalid_argument("IndicatorAlpha: need 0 < alpha_fict < 1");
    if (alpha_fict > 1e-4) {
        std::cerr << "warning: alpha_fict = " << alpha_fict << " > 1e-4 weakens the fictitious domain\n";
        warned = true;
    }
}

std::vector<QuadraturePoint> LeafQuadrature::flatten(double alpha_fict) const {
    std::vector<QuadraturePoint> out;
    out.reserve(w_phys.size());
    for (int i = 0; i < lattice_size(); ++i) {
        if (w_phys[i] != 0.0) out.push_back({points[i], w_phys[i], 1.0});
        if (w_fict[i] != 0.0) out.push_back({points[i], w_fict[i], alpha_fict});
    }
    return out;
}

double LeafQuadrature::physical_volume() const {
    double v = 0.0;
    for (double w : w_phys) v += w;
    return v;
}

namespace {

enum class BoxState { Physical, Fictitious, Cut };

BoxState classify_box(const Box& box, const ImplicitGeometry& geometry) {
    bool any_in = false, any_out = false;
    for (int c = 0; c < 8; ++c) {
        Vec3 p{(c & 1) ? box.hi[0] : box.lo[0], (c & 2) ? box.hi[1] : box.lo[1],
               (c & 4) ? box.hi[2] : box.lo[2]};
        (geometry.inside(p) ? any_in : any_out) = true;
        if (any_in && any_out) return BoxState::Cut;
    }
    Vec3 center = box.center();
    bool cin = geometry.inside(center);
    if ((cin && any_out) || (!cin && any_in)) return BoxState::Cut;
    if (geometry.has_distance() && std::abs(geometry.signed_distance(center)) < box.half_diagonal())
        return BoxState::Cut;  // surface may pass between samples
    return cin ? BoxState::Physical : BoxState::Fictitious;
}

void emit_gauss(const Box& leaf_box, const Box& sub, const ImplicitGeometry& geometry, int order,
                double alpha_fict, std::optional<bool> uniform_state, std::vector<QuadraturePoint>& out) {
    const GaussRule& rule = gauss_rule(order);
    Vec3 lsz = leaf_box.size();
    double frac = sub.volume() / leaf_box.volume();
    for (std::size_t i = 0; i < rule.size(); ++i)
        for (std::size_t j = 0; j < rule.size(); ++j)
            for (std::size_t k = 0; k < rule.size(); ++k) {
                Vec3 phys = sub.map_local({rule.points[i], rule.points[j], rule.points[k]});
                Vec3 local{2.0 * (phys[0] - leaf_box.lo[0]) / lsz[0] - 1.0,
                           2.0 * (phys[1] - leaf_box.lo[1]) / lsz[1] - 1.0,
                           2.0 * (phys[2] - leaf_box.lo[2]) / lsz[2] - 1.0};
                double w = rule.weights[i] * rule.weights[j] * rule.weights[k] * frac;
                bool physical = uniform_state ? *uniform_state : geometry.inside(phys);
                out.push_back({local, w, physical ? 1.0 : alpha_fict});
            }
}

/// Max-depth cut boxes: split every quadrature line at the interface
/// crossing so the two material sides carry their own 1D rules. Exact for
/// planar interfaces, high order for smooth ones. Falls back to per-point
/// tagging on lines with no single crossing.
void emit_split_lines(const Box& leaf_box, const Box& sub, const ImplicitGeometry& geometry, int order,
                      double alpha_fict, std::vector<QuadraturePoint>& out) {
    // split along the axis with the strongest distance variation
    int axis = 0;
    if (geometry.has_distance()) {
        Vec3 c = sub.center();
        double best = -1.0;
        for (int d = 0; d < 3; ++d) {
            Vec3 p = c, m = c;
            p[d] = sub.hi[d];
            m[d] = sub.lo[d];
            double g = std::abs(geometry.signed_distance(p) - geometry.signed_distance(m));
            if (g > best) {
                best = g;
                axis = d;
            }
        }
    }
    int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    const GaussRule& rule = gauss_rule(order);
    Vec3 lsz = leaf_box.size();
    auto to_local = [&](const Vec3& phys) {
        return Vec3{2.0 * (phys[0] - leaf_box.lo[0]) / lsz[0] - 1.0,
                    2.0 * (phys[1] - leaf_box.lo[1]) / lsz[1] - 1.0,
                    2.0 * (phys[2] - leaf_box.lo[2]) / lsz[2] - 1.0};
    };
    double transverse_frac = (sub.hi[a1] - sub.lo[a1]) / lsz[a1] * (sub.hi[a2] - sub.lo[a2]) / lsz[a2] * 4.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
        for (std::size_t j = 0; j < rule.size(); ++j) {
            Vec3 A, B;
            A[a1] = B[a1] = sub.lo[a1] + 0.5 * (rule.points[i] + 1.0) * (sub.hi[a1] - sub.lo[a1]);
            A[a2] = B[a2] = sub.lo[a2] + 0.5 * (rule.points[j] + 1.0) * (sub.hi[a2] - sub.lo[a2]);
            A[axis] = sub.lo[axis];
            B[axis] = sub.hi[axis];
            bool fa = geometry.inside(A), fb = geometry.inside(B);
            double wt = rule.weights[i] * rule.weights[j] * transverse_frac / 4.0;
            auto emit_segment = [&](double lo, double hi, bool physical) {
                if (hi - lo < 1e-14 * (sub.hi[axis] - sub.lo[axis])) return;
                double frac = (hi - lo) / lsz[axis] * 2.0;
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    Vec3 p = A;
                    p[axis] = lo + 0.5 * (rule.points[q] + 1.0) * (hi - lo);
                    out.push_back({to_local(p), rule.weights[q] * 0.5 * frac * wt,
                                   physical ? 1.0 : alpha_fict});
                }
            };
            if (fa == fb) {
                // zero or an even number of crossings: per-point tagging
                double frac = (sub.hi[axis] - sub.lo[axis]) / lsz[axis] * 2.0;
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    Vec3 p = A;
                    p[axis] = sub.lo[axis] + 0.5 * (rule.points[q] + 1.0) * (sub.hi[axis] - sub.lo[axis]);
                    out.push_back({to_local(p), rule.weights[q] * 0.5 * frac * wt,
                                   geometry.inside(p) ? 1.0 : alpha_fict});
                }
                continue;
            }
            double lo = A[axis], hi = B[axis];
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                Vec3 p = A;
                p[axis] = mid;
                (geometry.inside(p) == fa ? lo : hi) = mid;
            }
            double root = 0.5 * (lo + hi);
            emit_segment(sub.lo[axis], root, fa);
            emit_segment(root, sub.hi[axis], fb);
        }
}

void bisect(const Box& leaf_box, const Box& sub, const ImplicitGeometry& geometry, int depth, int order,
            double alpha_fict, std::vector<QuadraturePoint>& out) {
    BoxState state = classify_box(sub, geometry);
    if (state == BoxState::Physical) {
        emit_gauss(leaf_box, sub, geometry, order, alpha_fict, true, out);
        return;
    }
    if (state == BoxState::Fictitious) {
        emit_gauss(leaf_box, sub, geometry, order, alpha_fict, false, out);
        return;
    }
    if (depth == 0) {
        emit_split_lines(leaf_box, sub, geometry, order, alpha_fict, out);
        return;
    }
    Vec3 c = sub.center();
    for (int o = 0; o < 8; ++o) {
        Box child = sub;
        for (int d = 0; d < 3; ++d) {
            if (o & (1 << d)) child.lo[d] = c[d];
            else child.hi[d] = c[d];
        }
        bisect(leaf_box, child, geometry, depth - 1, order, alpha_fict, out);
    }
}

}  // namespace

std::vector<QuadraturePoint> build_octree_rule(const Box& leaf_box, const ImplicitGeometry& geometry,
                                               int depth, int gauss_order, double alpha_fict) {
    if (depth < 0) throw std::invalid_argument("build_octree_rule: depth must be >= 0");
    if (gauss_order < 1) throw std::invalid_argument("build_octree_rule: gauss order must be >= 1");
    std::vector<QuadraturePoint> out;
    bisect(leaf_box, leaf_box, geometry, depth, gauss_order, alpha_fict, out);
    return out;
}

namespace {

/// Crossings of the interface along the segment A->B (positions of sign
/// changes of inside()), found by scanning plus bisection. Returns false
/// when the sampling is ambiguous (more crossings than the scan resolves).
bool line_crossings(const ImplicitGeometry& geometry, const Vec3& A, const Vec3& B, int axis,
                    int samples, std::vector<double>& roots) {
    roots.clear();
    double lo = A[axis], hi = B[axis];
    bool prev = geometry.inside(A);
    double prev_x = lo;
    for (int s = 1; s <= samples; ++s) {
        double x = lo + (hi - lo) * s / samples;
        Vec3 p = A;
        p[axis] = x;
        bool cur = geometry.inside(p);
        if (cur != prev) {
            double a = prev_x, b = x;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (a + b);
                Vec3 q = A;
                q[axis] = mid;
                (geometry.inside(q) == prev ? a : b) = mid;
            }
            roots.push_back(0.5 * (a + b));
            prev = cur;
        }
        prev_x = x;
    }
    return true;
}

}  // namespace

LeafQuadrature build_quadrature(const Box& leaf_box, const ImplicitGeometry& geometry, int depth,
                                int gauss_order, int lattice_order) {
    if (gauss_order < lattice_order + 1)
        throw std::invalid_argument("build_quadrature: gauss order must be >= p + 1");
    (void)depth;
    LeafQuadrature out;
    BoxState state = classify_box(leaf_box, geometry);
    if (state != BoxState::Cut) {
        const GaussRule& rule = gauss_rule(gauss_order);
        for (int d = 0; d < 3; ++d) out.axes[d] = rule.points;
        int n = static_cast<int>(rule.size());
        out.points.reserve(n * n * n);
        out.w_phys.assign(n * n * n, 0.0);
        out.w_fict.assign(n * n * n, 0.0);
        auto& w = (state == BoxState::Physical) ? out.w_phys : out.w_fict;
        int idx = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k, ++idx) {
                    out.points.push_back({rule.points[i], rule.points[j], rule.points[k]});
                    w[idx] = rule.weights[i] * rule.weights[j] * rule.weights[k];
                }
        return out;
    }

    out.cut = true;
    // split axis: strongest variation of the distance (or x without one)
    int axis = 0;
    if (geometry.has_distance()) {
        Vec3 c = leaf_box.center();
        double best = -1.0;
        for (int d = 0; d < 3; ++d) {
            Vec3 p = c, m = c;
            p[d] = leaf_box.hi[d];
            m[d] = leaf_box.lo[d];
            double g = std::abs(geometry.signed_distance(p) - geometry.signed_distance(m));
            if (g > best) {
                best = g;
                axis = d;
            }
        }
    }
    int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    const GaussRule& line_rule = gauss_rule(gauss_order);
    const GaussRule& transverse = gauss_rule(lattice_order + 2);
    int scan = 3 * gauss_order + 4;

    std::vector<double> roots;
    for (std::size_t i = 0; i < transverse.size(); ++i)
        for (std::size_t j = 0; j < transverse.size(); ++j) {
            Vec3 A, B;
            A[a1] = B[a1] = transverse.points[i];
            A[a2] = B[a2] = transverse.points[j];
            A[axis] = -1.0;
            B[axis] = 1.0;
            Vec3 Ap = leaf_box.map_local(A), Bp = leaf_box.map_local(B);
            line_crossings(geometry, Ap, Bp, axis, scan, roots);
            double wt = transverse.weights[i] * transverse.weights[j];
            // segment bounds in local coordinates along the split axis
            std::vector<double> bounds{-1.0};
            for (double r : roots)
                bounds.push_back(2.0 * (r - leaf_box.lo[axis]) / (leaf_box.hi[axis] - leaf_box.lo[axis]) -
                                 1.0);
            bounds.push_back(1.0);
            for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
                double lo = bounds[s], hi = bounds[s + 1];
                if (hi - lo < 1e-13) continue;
                Vec3 mid = A;
                mid[axis] = 0.5 * (lo + hi);
                bool physical = geometry.inside(leaf_box.map_local(mid));
                for (std::size_t q = 0; q < line_rule.size(); ++q) {
                    Vec3 p = A;
                    p[axis] = lo + 0.5 * (line_rule.points[q] + 1.0) * (hi - lo);
                    double w = wt * line_rule.weights[q] * 0.5 * (hi - lo);
                    out.points.push_back(p);
                    out.w_phys.push_back(physical ? w : 0.0);
                    out.w_fict.push_back(physical ? 0.0 : w);
                }
            }
        }
    return out;
}

BasisValues eval_plan_points(const Discretization& disc, int leaf, const LeafQuadrature& rule) {
    if (rule.has_lattice()) return eval_on_tensor_grid(disc, leaf, rule.axes[0], rule.axes[1], rule.axes[2]);
    return eval_at_points(disc, leaf, rule.points);
}

QuadraturePlan build_quadrature_plan(const Discretization& disc, const ImplicitGeometry& geometry,
                                     double alpha_fict, int depth, int gauss_order) {
    QuadraturePlan plan;
    plan.alpha_fict = IndicatorAlpha(alpha_fict).alpha_fict;
    plan.depth = depth;
    int order = std::max(gauss_order, disc.order + 1);
    plan.leaves.resize(disc.mesh.leaves().size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(plan.leaves.size()); ++i)
        plan.leaves[i] = build_quadrature(disc.mesh.leaf_box(disc.mesh.leaves()[i]), geometry, depth,
                                          order, disc.order);
    return plan;
}

namespace {

Vec3 edge_root(const Vec3& a, const Vec3& b, double da, double db, const ImplicitGeometry& geometry) {
    // bisection on the segment; da and db have opposite signs
    Vec3 lo = a, hi = b;
    double flo = da;
    for (int it = 0; it < 60; ++it) {
        Vec3 mid = 0.5 * (lo + hi);
        double fm = geometry.signed_distance(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

Vec3 distance_gradient(const ImplicitGeometry& geometry, const Vec3& x, double h) {
    Vec3 g;
    for (int d = 0; d < 3; ++d) {
        Vec3 p = x, m = x;
        p[d] += h;
        m[d] -= h;
        g[d] = (geometry.signed_distance(p) - geometry.signed_distance(m)) / (2.0 * h);
    }
    return g;
}

void project_to_surface(const ImplicitGeometry& geometry, Vec3& x, double h) {
    for (int it = 0; it < 5; ++it) {
        double d = geometry.signed_distance(x);
        if (std::abs(d) < 1e-12) break;
        Vec3 g = distance_gradient(geometry, x, h);
        double g2 = dot(g, g);
        if (g2 < 1e-30) break;
        x = x - (d / g2) * g;
    }
}

/// Kuhn subdivision of a box into 6 tetrahedra sharing the main diagonal.
constexpr int kTetCorners[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                   {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};

void marching_tets(const Box& box, const ImplicitGeometry& geometry, int points_per_triangle,
                   std::vector<SurfacePoint>& out) {
    Vec3 corners[8];
    double dist[8];
    for (int c = 0; c < 8; ++c) {
        corners[c] = {(c & 1) ? box.hi[0] : box.lo[0], (c & 2) ? box.hi[1] : box.lo[1],
                      (c & 4) ? box.hi[2] : box.lo[2]};
        dist[c] = geometry.signed_distance(corners[c]);
    }
    double h = 1e-6 * box.half_diagonal();

    auto emit_triangle = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
        Vec3 u = b - a, v = c - a;
        Vec3 cr{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
        double area = 0.5 * norm(cr);
        if (area < 1e-30) return;
        std::vector<std::pair<Vec3, double>> pts;  // point, weight fraction
        if (points_per_triangle <= 1) {
            pts.push_back({(1.0 / 3.0) * (a + b + c), 1.0});
        } else if (points_per_triangle <= 3) {
            pts.push_back({0.5 * (a + b), 1.0 / 3.0});
            pts.push_back({0.5 * (b + c), 1.0 / 3.0});
            pts.push_back({0.5 * (a + c), 1.0 / 3.0});
        } else {
            // 7-point degree-5 rule
            const double a1 = 0.0597158717897698, b1 = 0.4701420641051151, w1 = 0.1323941527885062;
            const double a2 = 0.7974269853530873, b2 = 0.1012865073234563, w2 = 0.1259391805448271;
            auto bary = [&](double l1, double l2, double l3) {
                return Vec3{l1 * a[0] + l2 * b[0] + l3 * c[0], l1 * a[1] + l2 * b[1] + l3 * c[1],
                            l1 * a[2] + l2 * b[2] + l3 * c[2]};
            };
            pts.push_back({bary(1.0 / 3, 1.0 / 3, 1.0 / 3), 9.0 / 40.0});
            pts.push_back({bary(a1, b1, b1), w1});
            pts.push_back({bary(b1, a1, b1), w1});
            pts.push_back({bary(b1, b1, a1), w1});
            pts.push_back({bary(a2, b2, b2), w2});
            pts.push_back({bary(b2, a2, b2), w2});
            pts.push_back({bary(b2, b2, a2), w2});
        }
        for (auto [p, frac] : pts) {
            project_to_surface(geometry, p, h);
            Vec3 g = distance_gradient(geometry, p, h);
            double gn = norm(g);
            if (gn < 1e-30) continue;
            out.push_back({p, area * frac, (1.0 / gn) * g});
        }
    };

    for (const auto& tet : kTetCorners) {
        const Vec3* p[4];
        double d[4];
        int inside_mask = 0;
        for (int v = 0; v < 4; ++v) {
            p[v] = &corners[tet[v]];
            d[v] = dist[tet[v]];
            if (d[v] < 0.0) inside_mask |= 1 << v;
        }
        if (inside_mask == 0 || inside_mask == 15) continue;
        // collect the edge crossings
        Vec3 cross[4];
        int n_cross = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if ((d[a] < 0.0) != (d[b] < 0.0))
                    cross[n_cross++] = edge_root(*p[a], *p[b], d[a], d[b], geometry);
        if (n_cross == 3) {
            emit_triangle(cross[0], cross[1], cross[2]);
        } else if (n_cross == 4) {
            // quad; split along a diagonal. Order the points so the quad is
            // convex: the four crossings of a tet always form edges
            // (iso surface is planar-ish); sort by angle around the centroid.
            Vec3 ctr = 0.25 * (cross[0] + cross[1] + cross[2] + cross[3]);
            Vec3 n = distance_gradient(geometry, ctr, h);
            Vec3 e0 = cross[0] - ctr;
            double e0n = norm(e0);
            if (e0n < 1e-30) continue;
            e0 = (1.0 / e0n) * e0;
            Vec3 e1{n[1] * e0[2] - n[2] * e0[1], n[2] * e0[0] - n[0] * e0[2], n[0] * e0[1] - n[1] * e0[0]};
            double e1n = norm(e1);
            if (e1n > 1e-30) e1 = (1.0 / e1n) * e1;
            std::array<std::pair<double, int>, 4> ang;
            for (int i = 0; i < 4; ++i) {
                Vec3 r = cross[i] - ctr;
                ang[i] = {std::atan2(dot(r, e1), dot(r, e0)), i};
            }
            std::sort(ang.begin(), ang.end());
            emit_triangle(cross[ang[0].second], cross[ang[1].second], cross[ang[2].second]);
            emit_triangle(cross[ang[0].second], cross[ang[2].second], cross[ang[3].second]);
        }
    }
}

void surface_recurse(const Box& box, const ImplicitGeometry& geometry, int depth,
                     int points_per_triangle, std::vector<SurfacePoint>& out) {
    // prune boxes verifiably away from the surface
    double dc = geometry.signed_distance(box.center());
    if (std::abs(dc) > 1.2 * box.half_diagonal()) return;
    if (depth == 0) {
        marching_tets(box, geometry, points_per_triangle, out);
        return;
    }
    Vec3 c = box.center();
    for (int o = 0; o < 8; ++o) {
        Box child = box;
        for (int d = 0; d < 3; ++d) {
            if (o & (1 << d)) child.lo[d] = c[d];
            else child.hi[d] = c[d];
        }
        surface_recurse(child, geometry, depth - 1, points_per_triangle, out);
    }
}

}  // namespace

std::vector<SurfacePoint> embedded_surface_quadrature(const Box& leaf_box,
                                                      const ImplicitGeometry& geometry, int depth,
                                                      int points_per_triangle) {
    if (!geometry.has_distance())
        throw std::invalid_argument("embedded_surface_quadrature: geometry needs a signed distance");
    std::vector<SurfacePoint> out;
    surface_recurse(leaf_box, geometry, depth, points_per_triangle, out);
    return out;
}

VoxelStateGrid::VoxelStateGrid(Box box, double resolution, MatState initial)
    : box_(box), resolution_(resolution) {
    if (!(resolution > 0)) throw std::invalid_argument("VoxelStateGrid: resolution must be > 0");
    nodes_.push_back(VNode{-1, initial, 0.0f});
}

void VoxelStateGrid::split(int node) {
    nodes_[node].first_child = static_cast<std::int32_t>(nodes_.size());
    for (int o = 0; o < 8; ++o) nodes_.push_back(VNode{-1, nodes_[node].state, nodes_[node].time});
}

void VoxelStateGrid::apply(int node, const Box& box, const ImplicitGeometry& region, MatState state,
                           double time, bool monotone) {
    BoxState bs = classify_box(box, region);
    if (bs == BoxState::Fictitious) return;  // region does not reach this voxel

    bool at_resolution = box.size()[0] <= resolution_ && box.size()[1] <= resolution_ &&
                         box.size()[2] <= resolution_;

    if (bs == BoxState::Physical && nodes_[node].is_leaf()) {
        // fully covered uniform voxel
        if (!monotone || nodes_[node].state == MatState::Air) {
            nodes_[node].state = state;
            nodes_[node].time = static_cast<float>(time);
        }
        return;
    }
    if (bs == BoxState::Cut && at_resolution && nodes_[node].is_leaf()) {
        if (region.inside(box.center()) && (!monotone || nodes_[node].state == MatState::Air)) {
            nodes_[node].state = state;
            nodes_[node].time = static_cast<float>(time);
        }
        return;
    }
    if (nodes_[node].is_leaf()) split(node);
    Vec3 c = box.center();
    for (int o = 0; o < 8; ++o) {
        Box child = box;
        for (int d = 0; d < 3; ++d) {
            if (o & (1 << d)) child.lo[d] = c[d];
            else child.hi[d] = c[d];
        }
        apply(nodes_[node].first_child + o, child, region, state, time, monotone);
    }
}

void VoxelStateGrid::set_region(const ImplicitGeometry& region, MatState state, double time) {
    apply(0, box_, region, state, time, /*monotone=*/false);
}

void VoxelStateGrid::deposit(const ImplicitGeometry& region, double time) {
    apply(0, box_, region, MatState::Deposited, time, /*monotone=*/true);
}

MatState VoxelStateGrid::classify(const Vec3& point) const {
    if (!box_.contains(point)) throw std::out_of_range("VoxelStateGrid::classify: point outside box");
    int node = 0;
    Box box = box_;
    while (!nodes_[node].is_leaf()) {
        Vec3 c = box.center();
        int o = 0;
        for (int d = 0; d < 3; ++d) {
            if (point[d] >= c[d]) {
                o |= 1 << d;
                box.lo[d] = c[d];
            } else {
                box.hi[d] = c[d];
            }
        }
        node = nodes_[node].first_child + o;
    }
    return nodes_[node].state;
}

double VoxelStateGrid::deposit_time(const Vec3& point) const {
    if (!box_.contains(point)) throw std::out_of_range("VoxelStateGrid::deposit_time: point outside box");
    int node = 0;
    Box box = box_;
    while (!nodes_[node].is_leaf()) {
        Vec3 c = box.center();
        int o = 0;
        for (int d = 0; d < 3; ++d) {
            if (point[d] >= c[d]) {
                o |= 1 << d;
                box.lo[d] = c[d];
            } else {
                box.hi[d] = c[d];
            }
        }
        node = nodes_[node].first_child + o;
    }
    return nodes_[node].time;
}

double VoxelStateGrid::state_volume(MatState state) const {
    double total = 0.0;
    struct Item { int node; Box box; };
    std::vector<Item> stack{{0, box_}};
    while (!stack.empty()) {
        auto [node, box] = stack.back();
        stack.pop_back();
        if (nodes_[node].is_leaf()) {
            if (nodes_[node].state == state) total += box.volume();
            continue;
        }
        Vec3 c = box.center();
        for (int o = 0; o < 8; ++o) {
            Box child = box;
            for (int d = 0; d < 3; ++d) {
                if (o & (1 << d)) child.lo[d] = c[d];
                else child.hi[d] = c[d];
            }
            stack.push_back({nodes_[node].first_child + o, child});
        }
    }
    return total;
}

void VoxelStateGrid::snapshot(std::ostream& os) const {
    os << "# center_x center_y center_z size_x size_y size_z state time\n";
    struct Item { int node; Box box; };
    std::vector<Item> stack{{0, box_}};
    while (!stack.empty()) {
        auto [node, box] = stack.back();
        stack.pop_back();
        if (nodes_[node].is_leaf()) {
            Vec3 c = box.center(), s = box.size();
            os << c[0] << " " << c[1] << " " << c[2] << " " << s[0] << " " << s[1] << " " << s[2] << " "
               << static_cast<int>(nodes_[node].state) << " " << nodes_[node].time << "\n";
            continue;
        }
        Vec3 c = box.center();
        for (int o = 7; o >= 0; --o) {
            Box child = box;
            for (int d = 0; d < 3; ++d) {
                if (o & (1 << d)) child.lo[d] = c[d];
                else child.hi[d] = c[d];
            }
            stack.push_back({nodes_[node].first_child + o, child});
        }
    }
}

std::vector<std::uint8_t> active_cells_from_geometry(const BaseGrid& grid,
                                                     const ImplicitGeometry& geometry) {
    std::vector<std::uint8_t> mask(grid.cell_count(), 1);
    for (int c = 0; c < grid.cell_count(); ++c) {
        auto ijk = grid.cell_coords(c);
        Box box = grid.cell_box(ijk[0], ijk[1], ijk[2]);
        BoxState st = classify_box(box, geometry);
        mask[c] = (st == BoxState::Fictitious) ? 0 : 1;
    }
    return mask;
}

}  // namespace hpfcm
