// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifray/material.hpp"
#include "ifray/vec3.hpp"

namespace ifray::geometry {

inline constexpr double kSelfHitGuard = 1e-6; // m, self-intersection guard
inline constexpr int kHallParent = -1;

/// Planar rectangle with an outward normal. Vertices are ordered so that
/// (v1-v0) x (v3-v0) points along the normal.
struct Facet {
    std::array<Vec3, 4> v;
    Vec3 normal;
    std::string material;
    int parent = kHallParent; // object index, or kHallParent for the shell
    int id = -1;

    Vec3 edge_u() const { return v[1] - v[0]; }
    Vec3 edge_w() const { return v[3] - v[0]; }
    double area() const { return edge_u().norm() * edge_w().norm(); }
};

struct OrientedBox {
    Vec3 center;
    Vec3 half_extents;          // strictly positive
    double yaw_rad = 0.0;       // rotation about z
    std::string material;
    std::string label;

    /// Local-to-world basis vectors of the footprint axes.
    Vec3 axis_u() const { return {std::cos(yaw_rad), std::sin(yaw_rad), 0.0}; }
    Vec3 axis_v() const { return {-std::sin(yaw_rad), std::cos(yaw_rad), 0.0}; }
    double footprint_area() const { return 4.0 * half_extents.x * half_extents.y; }

    bool contains_2d(double px, double py) const {
        const Vec3 d{px - center.x, py - center.y, 0.0};
        return std::abs(d.dot(axis_u())) <= half_extents.x &&
               std::abs(d.dot(axis_v())) <= half_extents.y;
    }
};

struct Hall {
    double length = 0.0, width = 0.0, height = 0.0; // x, y, z extents
};

/// Wedge edge between two facets. `n` is the exterior wedge parameter
/// (n = 2 - interior_angle/pi); right-angle box edges give n = 1.5.
/// Concave shell corners are listed but flagged; the tracer skips them.
struct Edge {
    Vec3 a, b;
    int facet0 = -1, facet1 = -1;
    double n = 1.5;
    bool concave = false;
    int id = -1;
    // wedge frame: e_hat along the edge, t0 in face0 pointing away from the
    // edge, n0 the outward normal of face0; the exterior region is swept by
    // rotating t0 about e_hat through angle n*pi.
    Vec3 e_hat, t0, n0;

    Vec3 point(double t) const { return a + (b - a) * t; }
    double length() const { return (b - a).norm(); }
};

struct Hit {
    int facet_id = -1;
    double t = 0.0;
    Vec3 point;
    Vec3 normal;
};

namespace detail {
/// Uniform grid over the hall volume holding facet indices per cell.
struct UniformGrid {
    Vec3 lo, hi;
    int nx = 1, ny = 1, nz = 1;
    Vec3 cell;
    std::vector<std::vector<int>> cells;

    void build(const Vec3& lo_, const Vec3& hi_, const std::vector<Facet>& facets);
    int index(int i, int j, int k) const { return (k * ny + j) * nx + i; }
    // Visit facet indices of all cells pierced by the segment o -> o + d*tmax.
    template <typename F>
    void traverse(const Vec3& o, const Vec3& d, double tmax, F&& visit) const;
};
} // namespace detail

class Scene {
  public:
    Hall hall;
    std::vector<OrientedBox> objects;
    std::map<std::string, Material> materials;
    std::string name;

    /// Builds facets and the acceleration grid; validates all invariants.
    /// Throws std::invalid_argument with the offending path on failure.
    void finalize();

    const std::vector<Facet>& facets() const { return facets_; }
    const Facet& facet(int id) const { return facets_[static_cast<size_t>(id)]; }
    const Material& material_of(const Facet& f) const { return materials.at(f.material); }
    bool finalized() const { return !facets_.empty(); }

    bool inside_hall(const Vec3& p) const {
        return p.x > 0 && p.x < hall.length && p.y > 0 && p.y < hall.width && p.z > 0 &&
               p.z < hall.height;
    }

    /// Nearest facet intersection with t in (kSelfHitGuard, t_max). Open-set
    /// rule: grazing along a facet plane or touching its boundary is a miss.
    /// `skip_parent` (if >= kHallParent) excludes facets of one parent object.
    std::optional<Hit> intersect(const Vec3& origin, const Vec3& dir, double t_max,
                                 int skip_facet = -2, int skip_parent = -2) const;

    /// First crossing of a given object's facets along the ray (used for
    /// slab-transmission exit points).
    std::optional<Hit> intersect_object(const Vec3& origin, const Vec3& dir, double t_max,
                                        int parent) const;

    bool segment_clear(const Vec3& a, const Vec3& b, int skip_facet_a = -2,
                       int skip_facet_b = -2) const;

  private:
    std::vector<Facet> facets_;
    detail::UniformGrid grid_;
    void add_box_facets(const OrientedBox& box, int parent);
    void add_hall_facets();
};

enum class Visibility { LoS, NLoS };

/// LoS iff the open segment (a,b) has no facet intersection.
Visibility classify_visibility(const Scene& scene, const Vec3& a, const Vec3& b);

/// Union of object footprints over hall floor area; 0.05 m rasterization.
double clutter_density(const Scene& scene);

/// All box wedge edges (convex, n = 1.5) plus the 12 shell corner edges
/// (flagged concave; excluded from diffraction downstream).
std::vector<Edge> extract_edges(const Scene& scene);

template <typename F>
void detail::UniformGrid::traverse(const Vec3& o, const Vec3& d, double tmax, F&& visit) const {
    // 3D-DDA through the grid cells pierced by the segment.
    auto clampi = [](int v, int lo_, int hi_) { return v < lo_ ? lo_ : (v > hi_ ? hi_ : v); };
    int i = clampi(static_cast<int>((o.x - lo.x) / cell.x), 0, nx - 1);
    int j = clampi(static_cast<int>((o.y - lo.y) / cell.y), 0, ny - 1);
    int k = clampi(static_cast<int>((o.z - lo.z) / cell.z), 0, nz - 1);

    const double inf = std::numeric_limits<double>::infinity();
    int step[3];
    double t_next[3], t_delta[3];
    const double dc[3] = {d.x, d.y, d.z};
    const double oc[3] = {o.x, o.y, o.z};
    const double loc[3] = {lo.x, lo.y, lo.z};
    const double cc[3] = {cell.x, cell.y, cell.z};
    int idx[3] = {i, j, k};
    for (int ax = 0; ax < 3; ++ax) {
        if (dc[ax] > 1e-15) {
            step[ax] = 1;
            t_next[ax] = (loc[ax] + (idx[ax] + 1) * cc[ax] - oc[ax]) / dc[ax];
            t_delta[ax] = cc[ax] / dc[ax];
        } else if (dc[ax] < -1e-15) {
            step[ax] = -1;
            t_next[ax] = (loc[ax] + idx[ax] * cc[ax] - oc[ax]) / dc[ax];
            t_delta[ax] = -cc[ax] / dc[ax];
        } else {
            step[ax] = 0;
            t_next[ax] = inf;
            t_delta[ax] = inf;
        }
    }
    const int dims[3] = {nx, ny, nz};
    while (true) {
        int ax = 0;
        if (t_next[1] < t_next[ax]) ax = 1;
        if (t_next[2] < t_next[ax]) ax = 2;
        const double t_exit = t_next[ax];
        if (!visit(cells[static_cast<size_t>(index(idx[0], idx[1], idx[2]))], t_exit)) return;
        if (t_exit > tmax) return;
        idx[ax] += step[ax];
        if (idx[ax] < 0 || idx[ax] >= dims[ax]) return;
        t_next[ax] += t_delta[ax];
    }
}

} // namespace ifray::geometry
