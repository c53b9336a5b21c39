// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ifray::geometry {

namespace detail {

void UniformGrid::build(const Vec3& lo_, const Vec3& hi_, const std::vector<Facet>& facets) {
    lo = lo_;
    hi = hi_;
    const Vec3 ext = hi - lo;
    auto ncells = [](double e) { return std::max(1, std::min(128, static_cast<int>(e / 1.5) + 1)); };
    nx = ncells(ext.x);
    ny = ncells(ext.y);
    nz = ncells(ext.z);
    cell = {ext.x / nx, ext.y / ny, ext.z / nz};
    cells.assign(static_cast<size_t>(nx) * ny * nz, {});
    for (const auto& f : facets) {
        Vec3 flo = f.v[0], fhi = f.v[0];
        for (const auto& p : f.v) {
            flo = {std::min(flo.x, p.x), std::min(flo.y, p.y), std::min(flo.z, p.z)};
            fhi = {std::max(fhi.x, p.x), std::max(fhi.y, p.y), std::max(fhi.z, p.z)};
        }
        auto cl = [&](double v, double l, double c, int n) {
            return std::clamp(static_cast<int>((v - l) / c), 0, n - 1);
        };
        const int i0 = cl(flo.x, lo.x, cell.x, nx), i1 = cl(fhi.x, lo.x, cell.x, nx);
        const int j0 = cl(flo.y, lo.y, cell.y, ny), j1 = cl(fhi.y, lo.y, cell.y, ny);
        const int k0 = cl(flo.z, lo.z, cell.z, nz), k1 = cl(fhi.z, lo.z, cell.z, nz);
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i)
                    cells[static_cast<size_t>(index(i, j, k))].push_back(f.id);
    }
}

} // namespace detail

namespace {

constexpr double kBoundaryMargin = 1e-9; // open-set rule: facet boundary excluded

// Intersection with one rectangular facet; open-set semantics.
std::optional<double> facet_hit_t(const Facet& f, const Vec3& o, const Vec3& d, double t_lo,
                                  double t_hi) {
    const double denom = d.dot(f.normal);
    if (std::abs(denom) < 1e-12) return std::nullopt; // grazing along plane
    const double t = (f.v[0] - o).dot(f.normal) / denom;
    if (t <= t_lo || t >= t_hi) return std::nullopt;
    const Vec3 p = o + d * t;
    const Vec3 eu = f.edge_u(), ew = f.edge_w();
    const double u = (p - f.v[0]).dot(eu) / eu.norm2();
    const double w = (p - f.v[0]).dot(ew) / ew.norm2();
    if (u <= kBoundaryMargin || u >= 1.0 - kBoundaryMargin) return std::nullopt;
    if (w <= kBoundaryMargin || w >= 1.0 - kBoundaryMargin) return std::nullopt;
    return t;
}

} // namespace

void Scene::add_box_facets(const OrientedBox& box, int parent) {
    const Vec3 u = box.axis_u() * box.half_extents.x;
    const Vec3 v = box.axis_v() * box.half_extents.y;
    const Vec3 w = Vec3{0, 0, 1} * box.half_extents.z;
    const Vec3 c = box.center;
    // 6 faces: +u, -u, +v, -v, +w(top), -w(bottom)
    struct Face {
        Vec3 n_axis, a, b;
    };
    const Face faces[6] = {
        {u, v, w}, {-1.0 * u, w, v}, {v, w, u}, {-1.0 * v, u, w}, {w, u, v}, {-1.0 * w, v, u},
    };
    for (const auto& fc : faces) {
        Facet f;
        const Vec3 o = c + fc.n_axis;
        f.v = {o - fc.a - fc.b, o + fc.a - fc.b, o + fc.a + fc.b, o - fc.a + fc.b};
        f.normal = fc.n_axis.normalized();
        f.material = box.material;
        f.parent = parent;
        f.id = static_cast<int>(facets_.size());
        facets_.push_back(f);
    }
}

void Scene::add_hall_facets() {
    const double L = hall.length, W = hall.width, H = hall.height;
    // shell facets use "floor"/"ceiling"/"wall" materials when present
    auto pick = [&](const std::string& preferred) -> std::string {
        if (materials.count(preferred)) return preferred;
        if (materials.count("wall")) return "wall";
        return materials.begin()->first;
    };
    std::string mat = pick("wall");
    auto push = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d, Vec3 n) {
        Facet f;
        f.v = {a, b, c, d};
        f.normal = n;
        f.material = f.normal.z > 0.5 ? pick("floor") : (f.normal.z < -0.5 ? pick("ceiling") : mat);
        f.parent = kHallParent;
        f.id = static_cast<int>(facets_.size());
        facets_.push_back(f);
    };
    // normals point into the room; winding keeps (v1-v0) x (v3-v0) along the normal
    push({0, 0, 0}, {L, 0, 0}, {L, W, 0}, {0, W, 0}, {0, 0, 1});          // floor
    push({0, 0, H}, {0, W, H}, {L, W, H}, {L, 0, H}, {0, 0, -1});         // ceiling
    push({0, 0, 0}, {0, 0, H}, {L, 0, H}, {L, 0, 0}, {0, 1, 0});          // wall y=0
    push({0, W, 0}, {L, W, 0}, {L, W, H}, {0, W, H}, {0, -1, 0});         // wall y=W
    push({0, 0, 0}, {0, W, 0}, {0, W, H}, {0, 0, H}, {1, 0, 0});          // wall x=0
    push({L, 0, 0}, {L, 0, H}, {L, W, H}, {L, W, 0}, {-1, 0, 0});         // wall x=L
}

void Scene::finalize() {
    if (hall.length <= 0 || hall.width <= 0 || hall.height <= 0)
        throw std::invalid_argument("hall: non-positive dimension");
    if (materials.empty()) throw std::invalid_argument("materials: table is empty");
    for (const auto& [nm, m] : materials) m.validate();

    for (size_t i = 0; i < objects.size(); ++i) {
        const auto& b = objects[i];
        const std::string path = "objects[" + std::to_string(i) + "]";
        if (b.half_extents.x <= 0 || b.half_extents.y <= 0 || b.half_extents.z <= 0)
            throw std::invalid_argument(path + ": non-positive half_extents");
        if (!materials.count(b.material))
            throw std::invalid_argument(path + ": unknown material '" + b.material + "'");
        // all 4 footprint corners and z extent inside the hall
        const Vec3 u = b.axis_u() * b.half_extents.x, v = b.axis_v() * b.half_extents.y;
        for (int su : {-1, 1})
            for (int sv : {-1, 1}) {
                const Vec3 c = b.center + u * su + v * sv;
                if (c.x < 0 || c.x > hall.length || c.y < 0 || c.y > hall.width)
                    throw std::invalid_argument(path + ": object outside hall footprint");
            }
        if (b.center.z - b.half_extents.z < 0 || b.center.z + b.half_extents.z > hall.height)
            throw std::invalid_argument(path + ": object outside hall height");
    }

    facets_.clear();
    add_hall_facets();
    for (size_t i = 0; i < objects.size(); ++i) add_box_facets(objects[i], static_cast<int>(i));
    for (const auto& f : facets_)
        if (!materials.count(f.material))
            throw std::invalid_argument("facet " + std::to_string(f.id) + ": unknown material '" +
                                        f.material + "'");
    grid_.build({0, 0, 0}, {hall.length, hall.width, hall.height}, facets_);
}

std::optional<Hit> Scene::intersect(const Vec3& origin, const Vec3& dir, double t_max,
                                    int skip_facet, int skip_parent) const {
    std::optional<Hit> best;
    double best_t = t_max;
    grid_.traverse(origin, dir, t_max, [&](const std::vector<int>& ids, double t_exit) {
        for (int id : ids) {
            const Facet& f = facets_[static_cast<size_t>(id)];
            if (id == skip_facet || (skip_parent >= kHallParent && f.parent == skip_parent))
                continue;
            if (auto t = facet_hit_t(f, origin, dir, kSelfHitGuard, best_t)) {
                best_t = *t;
                best = Hit{id, *t, origin + dir * *t, f.normal};
            }
        }
        return !(best && best_t <= t_exit);
    });
    return best;
}

std::optional<Hit> Scene::intersect_object(const Vec3& origin, const Vec3& dir, double t_max,
                                           int parent) const {
    std::optional<Hit> best;
    double best_t = t_max;
    for (const auto& f : facets_) {
        if (f.parent != parent) continue;
        if (auto t = facet_hit_t(f, origin, dir, kSelfHitGuard, best_t)) {
            best_t = *t;
            best = Hit{f.id, *t, origin + dir * *t, f.normal};
        }
    }
    return best;
}

bool Scene::segment_clear(const Vec3& a, const Vec3& b, int skip_facet_a, int skip_facet_b) const {
    const Vec3 d = b - a;
    const double len = d.norm();
    if (len < 2.0 * kSelfHitGuard) return true;
    const Vec3 dir = d / len;
    bool clear = true;
    grid_.traverse(a, dir, len - kSelfHitGuard, [&](const std::vector<int>& ids, double) {
        for (int id : ids) {
            if (id == skip_facet_a || id == skip_facet_b) continue;
            if (facet_hit_t(facets_[static_cast<size_t>(id)], a, dir, kSelfHitGuard,
                            len - kSelfHitGuard)) {
                clear = false;
                return false;
            }
        }
        return true;
    });
    return clear;
}

Visibility classify_visibility(const Scene& scene, const Vec3& a, const Vec3& b) {
    return scene.segment_clear(a, b) ? Visibility::LoS : Visibility::NLoS;
}

double clutter_density(const Scene& scene) {
    if (scene.objects.empty()) return 0.0;
    constexpr double res = 0.05;
    const int nx = static_cast<int>(std::ceil(scene.hall.length / res));
    const int ny = static_cast<int>(std::ceil(scene.hall.width / res));
    // per-object footprint AABBs in grid coordinates keep this cheap
    struct Box2 {
        double x0, x1, y0, y1;
        const OrientedBox* b;
    };
    std::vector<Box2> bbs;
    for (const auto& b : scene.objects) {
        const Vec3 u = b.axis_u() * b.half_extents.x, v = b.axis_v() * b.half_extents.y;
        const double ex = std::abs(u.x) + std::abs(v.x), ey = std::abs(u.y) + std::abs(v.y);
        bbs.push_back({b.center.x - ex, b.center.x + ex, b.center.y - ey, b.center.y + ey, &b});
    }
    long covered = 0;
    for (int j = 0; j < ny; ++j) {
        const double py = (j + 0.5) * res;
        for (int i = 0; i < nx; ++i) {
            const double px = (i + 0.5) * res;
            for (const auto& bb : bbs) {
                if (px < bb.x0 || px > bb.x1 || py < bb.y0 || py > bb.y1) continue;
                if (bb.b->contains_2d(px, py)) {
                    ++covered;
                    break;
                }
            }
        }
    }
    return (covered * res * res) / (scene.hall.length * scene.hall.width);
}

namespace {

// Builds one wedge edge between two facets sharing segment [a,b].
// The exterior region is swept from t0 (in face0) about e_hat through n*pi.
Edge make_edge(const Vec3& a, const Vec3& b, const Facet& f0, const Facet& f1, double n,
               bool concave) {
    Edge e;
    e.a = a;
    e.b = b;
    e.facet0 = f0.id;
    e.facet1 = f1.id;
    e.n = n;
    e.concave = concave;
    e.n0 = f0.normal;
    Vec3 eh = (b - a).normalized();
    // t0: in the plane of face0, perpendicular to the edge, pointing into face0
    const Vec3 mid = (a + b) * 0.5;
    Vec3 c0{0, 0, 0};
    for (const auto& p : f0.v) c0 += p * 0.25;
    Vec3 t0 = c0 - mid;
    t0 = (t0 - eh * t0.dot(eh)).normalized();
    // orient e_hat so that rotating t0 towards +n0 is the positive (exterior) sweep:
    // phi is measured from t0 with the exterior directly above face0 (along n0).
    if (eh.cross(t0).dot(f0.normal) < 0) eh = -1.0 * eh;
    e.e_hat = eh;
    e.t0 = t0;
    return e;
}

} // namespace

std::vector<Edge> extract_edges(const Scene& scene) {
    std::vector<Edge> edges;
    const auto& fs = scene.facets();
    // Box edges: adjacent non-coplanar facet pairs of each object (12 per box).
    for (size_t bi = 0; bi < scene.objects.size(); ++bi) {
        std::vector<const Facet*> bf;
        for (const auto& f : fs)
            if (f.parent == static_cast<int>(bi)) bf.push_back(&f);
        for (size_t i = 0; i < bf.size(); ++i)
            for (size_t j = i + 1; j < bf.size(); ++j) {
                if (std::abs(bf[i]->normal.dot(bf[j]->normal)) > 0.5) continue; // parallel pair
                // shared edge: the two vertices of facet i lying on facet j's plane
                std::vector<Vec3> shared;
                for (const auto& p : bf[i]->v)
                    if (std::abs((p - bf[j]->v[0]).dot(bf[j]->normal)) < 1e-9) shared.push_back(p);
                if (shared.size() != 2) continue;
                edges.push_back(make_edge(shared[0], shared[1], *bf[i], *bf[j], 1.5, false));
            }
    }
    // Shell corner edges (concave from inside the room): 4 vertical + 8 horizontal.
    std::vector<const Facet*> shell;
    for (const auto& f : fs)
        if (f.parent == kHallParent) shell.push_back(&f);
    for (size_t i = 0; i < shell.size(); ++i)
        for (size_t j = i + 1; j < shell.size(); ++j) {
            if (std::abs(shell[i]->normal.dot(shell[j]->normal)) > 0.5) continue;
            std::vector<Vec3> shared;
            for (const auto& p : shell[i]->v)
                if (std::abs((p - shell[j]->v[0]).dot(shell[j]->normal)) < 1e-9)
                    for (const auto& q : shell[j]->v)
                        if ((p - q).norm() < 1e-9) shared.push_back(p);
            if (shared.size() != 2) continue;
            edges.push_back(make_edge(shared[0], shared[1], *shell[i], *shell[j], 1.5, true));
        }
    for (size_t i = 0; i < edges.size(); ++i) edges[i].id = static_cast<int>(i);
    return edges;
}

} // namespace ifray::geometry
