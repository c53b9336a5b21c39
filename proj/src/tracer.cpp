// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <unordered_map>

#include "ifray/parallel.hpp"

namespace ifray::tracer {

namespace {
constexpr double pi = std::numbers::pi;
using geometry::Edge;
using geometry::Facet;
using geometry::Scene;
} // namespace

std::vector<Vec3> launch_directions(int n) {
    if (n < 1) throw std::invalid_argument("launch_directions: n must be >= 1");
    std::vector<Vec3> dirs;
    dirs.reserve(static_cast<size_t>(n));
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double az = golden * i;
        dirs.push_back({r * std::cos(az), r * std::sin(az), z});
    }
    return dirs;
}

AnglePair bearing(const Vec3& dir) {
    AnglePair a;
    a.az_rad = std::atan2(dir.y, dir.x);
    if (a.az_rad < 0) a.az_rad += 2.0 * pi;
    a.el_rad = std::atan2(dir.z, std::hypot(dir.x, dir.y));
    return a;
}

std::string path_signature(const std::vector<Interaction>& interactions) {
    if (interactions.empty()) return "L";
    std::string s;
    for (const auto& i : interactions) {
        if (!s.empty()) s += '|';
        switch (i.kind) {
            case InteractionKind::Reflection: s += 'R' + std::to_string(i.facet_id); break;
            case InteractionKind::Diffraction: s += 'D' + std::to_string(i.edge_id); break;
            case InteractionKind::Transmission: s += 'T' + std::to_string(i.object_id); break;
            case InteractionKind::Diffuse:
                s += 'S' + std::to_string(i.facet_id) + ':' + std::to_string(i.tile_index);
                break;
        }
    }
    return s;
}

namespace {

Vec3 mirror(const Vec3& p, const Facet& f) {
    const double d = (p - f.v[0]).dot(f.normal);
    return p - f.normal * (2.0 * d);
}

// Plane intersection point of segment a -> b with facet plane (no bounds check).
std::optional<Vec3> plane_point(const Vec3& a, const Vec3& b, const Facet& f) {
    const Vec3 d = b - a;
    const double denom = d.dot(f.normal);
    if (std::abs(denom) < 1e-14) return std::nullopt;
    const double t = (f.v[0] - a).dot(f.normal) / denom;
    if (t <= 0.0 || t >= 1.0) return std::nullopt;
    return a + d * t;
}

bool on_facet(const Vec3& p, const Facet& f) {
    const Vec3 eu = f.edge_u(), ew = f.edge_w();
    const double u = (p - f.v[0]).dot(eu) / eu.norm2();
    const double w = (p - f.v[0]).dot(ew) / ew.norm2();
    return u > 1e-9 && u < 1.0 - 1e-9 && w > 1e-9 && w < 1.0 - 1e-9;
}

// Angle of the unit vector w (perpendicular to e.e_hat) measured from e.t0
// about e.e_hat, in [0, 2pi).
double wedge_angle(const Edge& e, const Vec3& w) {
    const Vec3 b = e.e_hat.cross(e.t0);
    double a = std::atan2(w.dot(b), w.dot(e.t0));
    if (a < 0) a += 2.0 * pi;
    return a;
}

struct WedgeAngles {
    double phi_i, phi_d, beta0;
};

// Incident propagation direction d_i into the edge, outgoing d_o; both unit.
std::optional<WedgeAngles> wedge_angles(const Edge& e, const Vec3& d_i, const Vec3& d_o) {
    const double cb = std::clamp(d_i.dot(e.e_hat), -1.0, 1.0);
    const double beta0 = std::acos(cb);
    if (beta0 < 1e-6 || beta0 > pi - 1e-6) return std::nullopt;
    Vec3 wi = (-1.0 * d_i) - e.e_hat * (-1.0 * d_i).dot(e.e_hat);
    Vec3 wo = d_o - e.e_hat * d_o.dot(e.e_hat);
    const double ni = wi.norm(), no = wo.norm();
    if (ni < 1e-12 || no < 1e-12) return std::nullopt;
    const double phi_i = wedge_angle(e, wi / ni);
    const double phi_d = wedge_angle(e, wo / no);
    const double lim = e.n * pi;
    if (phi_i <= 1e-9 || phi_i >= lim - 1e-9) return std::nullopt;
    if (phi_d <= 1e-9 || phi_d >= lim - 1e-9) return std::nullopt;
    return WedgeAngles{phi_i, phi_d, beta0};
}

// ---------------------------------------------------------------------------
// Signature-driven geometric refinement.
//
// A captured SBR candidate is only a facet/edge id sequence; the exact
// geometry is re-solved with the image method (and 1D Fermat minimization on
// the edge for diffracted paths), then every free segment is validated
// against the scene including the expected slab crossings.
// ---------------------------------------------------------------------------

struct ChainItem {
    InteractionKind kind;
    int facet_id = -1; // reflections
    int edge_id = -1;  // diffraction
    int object_id = -1; // transmission
};

// Walks segment a -> b expecting, in order, slab crossings of the listed
// objects; appends Transmission interactions. Returns false on any other
// obstruction.
bool walk_segment(const Scene& scene, const Vec3& a, const Vec3& b, int skip_a, int skip_b,
                  const std::vector<int>& expected_objects, std::vector<Interaction>& out) {
    Vec3 cur = a;
    int skip = skip_a;
    size_t next_obj = 0;
    const Vec3 d = b - a;
    const double total = d.norm();
    if (total < 2.0 * geometry::kSelfHitGuard) return expected_objects.empty();
    const Vec3 dir = d / total;
    double travelled = 0.0;
    for (int guard = 0; guard < 64; ++guard) {
        const double remain = total - travelled - geometry::kSelfHitGuard;
        if (remain <= geometry::kSelfHitGuard) break;
        auto hit = scene.intersect(cur, dir, remain, skip);
        if (!hit) break;
        const Facet& f = scene.facet(hit->facet_id);
        if (hit->facet_id == skip_b && travelled + hit->t > total - 1e-6) break;
        if (f.parent == geometry::kHallParent) return false; // shell blocks
        if (next_obj >= expected_objects.size() || f.parent != expected_objects[next_obj])
            return false;
        // cross the slab: exit through the same object
        auto exit = scene.intersect_object(hit->point, dir, remain - hit->t, f.parent);
        if (!exit) return false;
        Interaction tr;
        tr.kind = InteractionKind::Transmission;
        tr.facet_id = hit->facet_id;
        tr.object_id = f.parent;
        tr.point = hit->point;
        out.push_back(tr);
        ++next_obj;
        travelled += hit->t + exit->t;
        cur = exit->point;
        skip = exit->facet_id;
    }
    return next_obj == expected_objects.size();
}

struct RefineContext {
    const Scene& scene;
    const std::vector<Edge>& edges;
    Vec3 tx, rx;
};

// Solves the reflection chain a -> facets... -> b by mirror images. Returns
// the reflection points, or nothing if a point falls off its facet or the
// approach side is wrong.
std::optional<std::vector<Vec3>> solve_chain(const Scene& scene, const Vec3& a, const Vec3& b,
                                             const std::vector<int>& facet_ids) {
    const size_t m = facet_ids.size();
    std::vector<Vec3> images(m + 1);
    images[m] = b;
    for (size_t k = m; k-- > 0;)
        images[k] = mirror(images[k + 1], scene.facet(facet_ids[k]));
    std::vector<Vec3> pts(m);
    Vec3 cur = a;
    for (size_t k = 0; k < m; ++k) {
        const Facet& f = scene.facet(facet_ids[k]);
        auto p = plane_point(cur, images[k], f);
        if (!p || !on_facet(*p, f)) return std::nullopt;
        if ((cur - *p).dot(f.normal) <= 1e-9) return std::nullopt; // must approach front side
        pts[k] = *p;
        cur = *p;
    }
    return pts;
}

double chain_distance(const Scene& scene, const Vec3& a, const Vec3& b,
                      const std::vector<int>& facet_ids) {
    Vec3 img = a;
    for (int id : facet_ids) img = mirror(img, scene.facet(id));
    return (img - b).norm();
}

std::optional<PropagationPath> refine(const RefineContext& ctx,
                                      const std::vector<ChainItem>& chain) {
    // split at the (single) diffraction, collect reflection facets and the
    // transmission objects expected on each free segment
    int edge_id = -1;
    std::vector<int> pre_f, post_f;
    // expected transmissions per segment slot: slot i precedes geometric node i
    std::vector<std::vector<int>> pre_t(1), post_t(1);
    bool after_d = false;
    for (const auto& it : chain) {
        switch (it.kind) {
            case InteractionKind::Reflection:
                (after_d ? post_f : pre_f).push_back(it.facet_id);
                (after_d ? post_t : pre_t).emplace_back();
                break;
            case InteractionKind::Diffraction:
                if (after_d || edge_id >= 0) return std::nullopt;
                after_d = true;
                edge_id = it.edge_id;
                break;
            case InteractionKind::Transmission:
                (after_d ? post_t : pre_t).back().push_back(it.object_id);
                break;
            case InteractionKind::Diffuse: return std::nullopt;
        }
    }

    std::vector<Vec3> nodes; // geometric nodes between tx and rx
    std::vector<ChainItem> node_items;
    if (edge_id < 0) {
        auto pts = solve_chain(ctx.scene, ctx.tx, ctx.rx, pre_f);
        if (!pts) return std::nullopt;
        nodes = *pts;
        for (int id : pre_f)
            node_items.push_back({InteractionKind::Reflection, id, -1, -1});
    } else {
        const Edge& e = ctx.edges[static_cast<size_t>(edge_id)];
        // Fermat point on the edge via golden-section over the unfolded length
        Vec3 img_tx = ctx.tx, img_rx = ctx.rx;
        for (int id : pre_f) img_tx = mirror(img_tx, ctx.scene.facet(id));
        for (size_t k = post_f.size(); k-- > 0;) img_rx = mirror(img_rx, ctx.scene.facet(post_f[k]));
        auto len_at = [&](double t) {
            const Vec3 p = e.point(t);
            return (img_tx - p).norm() + (img_rx - p).norm();
        };
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = 0.0, hi = 1.0;
        double t1 = hi - gr * (hi - lo), t2 = lo + gr * (hi - lo);
        double f1 = len_at(t1), f2 = len_at(t2);
        for (int it = 0; it < 80; ++it) {
            if (f1 < f2) {
                hi = t2;
                t2 = t1;
                f2 = f1;
                t1 = hi - gr * (hi - lo);
                f1 = len_at(t1);
            } else {
                lo = t1;
                t1 = t2;
                f1 = f2;
                t2 = lo + gr * (hi - lo);
                f2 = len_at(t2);
            }
        }
        const double t_star = 0.5 * (lo + hi);
        if (t_star < 1e-6 || t_star > 1.0 - 1e-6) return std::nullopt; // corner, not wedge
        const Vec3 dp = e.point(t_star);
        auto pre_pts = solve_chain(ctx.scene, ctx.tx, dp, pre_f);
        if (!pre_pts) return std::nullopt;
        // post chain solved from the diffraction point towards rx
        auto post_pts = solve_chain(ctx.scene, dp, ctx.rx, post_f);
        if (!post_pts) return std::nullopt;
        for (size_t k = 0; k < pre_pts->size(); ++k) {
            nodes.push_back((*pre_pts)[k]);
            node_items.push_back({InteractionKind::Reflection, pre_f[k], -1, -1});
        }
        nodes.push_back(dp);
        node_items.push_back({InteractionKind::Diffraction, -1, edge_id, -1});
        for (size_t k = 0; k < post_pts->size(); ++k) {
            nodes.push_back((*post_pts)[k]);
            node_items.push_back({InteractionKind::Reflection, post_f[k], -1, -1});
        }
        // wedge validity of the refined geometry
        const Vec3 before = pre_pts->empty() ? ctx.tx : pre_pts->back();
        const Vec3 after = post_pts->empty() ? ctx.rx : (*post_pts)[0];
        const Vec3 d_i = (dp - before).normalized();
        const Vec3 d_o = (after - dp).normalized();
        if (!wedge_angles(e, d_i, d_o)) return std::nullopt;
    }

    // expected transmissions per segment, in node order
    std::vector<std::vector<int>> seg_t;
    for (auto& v : pre_t) seg_t.push_back(v);
    if (edge_id >= 0)
        for (auto& v : post_t) seg_t.push_back(v);
    // seg_t.size() == nodes.size() + 1

    PropagationPath path;
    path.points.push_back(ctx.tx);
    Vec3 prev = ctx.tx;
    int prev_facet = -2;
    for (size_t k = 0; k <= nodes.size(); ++k) {
        const Vec3 next = (k == nodes.size()) ? ctx.rx : nodes[k];
        int next_facet = -2;
        if (k < nodes.size() && node_items[k].kind == InteractionKind::Reflection)
            next_facet = node_items[k].facet_id;
        std::vector<Interaction> crossings;
        if (!walk_segment(ctx.scene, prev, next, prev_facet, next_facet, seg_t[k], crossings))
            return std::nullopt;
        for (auto& tr : crossings) {
            path.interactions.push_back(tr);
            path.points.push_back(tr.point);
        }
        if (k < nodes.size()) {
            Interaction in;
            in.kind = node_items[k].kind;
            in.facet_id = node_items[k].facet_id;
            in.edge_id = node_items[k].edge_id;
            in.point = nodes[k];
            path.interactions.push_back(in);
            path.points.push_back(nodes[k]);
            prev_facet = next_facet;
        }
        prev = next;
    }
    path.points.push_back(ctx.rx);

    path.unfolded_length = 0.0;
    for (size_t i = 0; i + 1 < path.points.size(); ++i)
        path.unfolded_length += (path.points[i + 1] - path.points[i]).norm();
    path.depart_dir = (path.points[1] - path.points[0]).normalized();
    path.arrive_dir =
        (path.points[path.points.size() - 1] - path.points[path.points.size() - 2]).normalized();
    path.signature = path_signature(path.interactions);
    return path;
}

// ---------------------------------------------------------------------------
// SBR marching
// ---------------------------------------------------------------------------

struct EdgeGrid {
    geometry::detail::UniformGrid grid;
    std::vector<const Edge*> edges;

    void build(const Scene& scene, const std::vector<Edge>& all) {
        // reuse the facet grid by packing edge AABBs (dilated by the largest
        // plausible capture radius) as degenerate facets
        std::vector<Facet> boxes;
        for (const auto& e : all) {
            if (e.concave) continue;
            edges.push_back(&e);
            Facet f;
            const double m = 1.6; // dilation covers the capture corridor
            Vec3 lo{std::min(e.a.x, e.b.x) - m, std::min(e.a.y, e.b.y) - m,
                    std::min(e.a.z, e.b.z) - m};
            Vec3 hi{std::max(e.a.x, e.b.x) + m, std::max(e.a.y, e.b.y) + m,
                    std::max(e.a.z, e.b.z) + m};
            f.v = {lo, Vec3{hi.x, lo.y, lo.z}, hi, Vec3{lo.x, hi.y, hi.z}};
            f.id = static_cast<int>(edges.size()) - 1;
            boxes.push_back(f);
        }
        grid.build({-2, -2, -2},
                   {scene.hall.length + 2, scene.hall.width + 2, scene.hall.height + 2}, boxes);
    }
};

// distance between segment p + t*dp (t in [0,len]) and edge segment; returns
// (distance, t_on_ray, s_on_edge in [0,1])
struct SegDist {
    double dist, t_ray, s_edge;
};

SegDist segment_edge_distance(const Vec3& p, const Vec3& d, double len, const Edge& e) {
    const Vec3 u = d * len;
    const Vec3 v = e.b - e.a;
    const Vec3 w = p - e.a;
    const double a = u.dot(u), b = u.dot(v), c = v.dot(v), dd = u.dot(w), ee = v.dot(w);
    const double den = a * c - b * b;
    double s, t;
    if (den < 1e-12) {
        s = 0.0;
        t = c > 1e-12 ? ee / c : 0.0;
    } else {
        s = (b * ee - c * dd) / den;
        t = (a * ee - b * dd) / den;
    }
    s = std::clamp(s, 0.0, 1.0);
    t = std::clamp(t, 0.0, 1.0);
    // one re-projection pass after clamping
    if (c > 1e-12) t = std::clamp((v.dot(w + u * s)) / c, 0.0, 1.0);
    if (a > 1e-12) s = std::clamp((u.dot(e.a + v * t - p)) / a, 0.0, 1.0);
    const Vec3 pr = p + u * s;
    const Vec3 pe = e.a + v * t;
    return {(pr - pe).norm(), s * len, t};
}

struct TraceState {
    const Scene* scene = nullptr;
    const EdgeGrid* egrid = nullptr;
    Vec3 tx, rx;
    InteractionBudget budget;
    double alpha = 0.0; // launch angular spacing
};

void record_candidate(std::map<std::string, std::vector<ChainItem>>& out,
                      const std::vector<ChainItem>& chain) {
    if (chain.empty()) return; // LoS handled analytically
    std::vector<Interaction> tmp;
    for (const auto& c : chain) {
        Interaction i;
        i.kind = c.kind;
        i.facet_id = c.facet_id;
        i.edge_id = c.edge_id;
        i.object_id = c.object_id;
        tmp.push_back(i);
    }
    out.emplace(path_signature(tmp), chain);
}

void march(const TraceState& st, std::map<std::string, std::vector<ChainItem>>& out, Vec3 origin,
           Vec3 dir, double len_so_far, std::vector<ChainItem> chain, int refl_left, int diff_left,
           int trans_left, int skip_facet, double alpha) {
    const Scene& scene = *st.scene;
    for (int step = 0; step < 24; ++step) {
        auto hit = scene.intersect(origin, dir, 1e9, skip_facet);
        const double seg_len = hit ? hit->t : 1e3;

        // reception sphere test on this segment
        {
            const double t_close = std::clamp((st.rx - origin).dot(dir), 0.0, seg_len);
            const Vec3 cp = origin + dir * t_close;
            const double l_at = len_so_far + t_close;
            const double radius = l_at * alpha / std::sqrt(3.0);
            if ((st.rx - cp).norm() <= radius) record_candidate(out, chain);
        }

        // Keller-cone fans at nearby convex edges
        if (diff_left > 0 && st.egrid) {
            std::vector<int> cand;
            st.egrid->grid.traverse(origin, dir, seg_len, [&](const std::vector<int>& ids, double) {
                for (int id : ids) cand.push_back(id);
                return true;
            });
            std::sort(cand.begin(), cand.end());
            cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
            for (int ci : cand) {
                const Edge& e = *st.egrid->edges[static_cast<size_t>(ci)];
                const auto sd = segment_edge_distance(origin, dir, seg_len, e);
                const double l_at = len_so_far + sd.t_ray;
                const double radius = l_at * alpha / std::sqrt(3.0);
                if (sd.dist > radius || sd.s_edge < 1e-4 || sd.s_edge > 1.0 - 1e-4) continue;
                const Vec3 dp = e.point(sd.s_edge);
                // incident side must be in the wedge exterior
                Vec3 wi = (-1.0 * dir) - e.e_hat * (-1.0 * dir).dot(e.e_hat);
                const double win = wi.norm();
                if (win < 1e-9) continue;
                const double phi_i = wedge_angle(e, wi / win);
                if (phi_i <= 1e-6 || phi_i >= e.n * pi - 1e-6) continue;
                const double cb = dir.dot(e.e_hat);
                const double sb = std::sqrt(std::max(0.0, 1.0 - cb * cb));
                if (sb < 1e-6) continue;
                const Vec3 u_ax = e.t0;
                const Vec3 v_ax = e.e_hat.cross(e.t0);
                std::vector<ChainItem> dchain = chain;
                dchain.push_back({InteractionKind::Diffraction, -1, e.id, -1});
                // The receiver may lie anywhere on the Keller cone; record the
                // edge as a terminal candidate and let refinement solve the
                // exact diffraction point (it validates geometry/occlusion).
                record_candidate(out, dchain);
                // Fan rays are spaced ~2pi/M apart around the cone, far coarser
                // than the launch lattice, so they carry their own capture alpha.
                const double fan_alpha =
                    std::max(alpha, 2.0 * pi / st.budget.diffraction_fan);
                for (int m = 0; m < st.budget.diffraction_fan; ++m) {
                    const double psi = 2.0 * pi * (m + 0.5) / st.budget.diffraction_fan;
                    // keep the exterior-region samples of the Keller cone
                    if (psi >= e.n * pi) continue;
                    const Vec3 nd =
                        e.e_hat * cb + (u_ax * std::cos(psi) + v_ax * std::sin(psi)) * sb;
                    march(st, out, dp, nd, len_so_far + sd.t_ray, dchain, refl_left, 0, trans_left,
                          -2, fan_alpha);
                }
            }
        }

        if (!hit) return; // escaped (numerically); nothing further to do
        const Facet& f = scene.facet(hit->facet_id);
        const double facing = dir.dot(f.normal);
        if (facing >= 0.0) return; // back side, dead branch

        // transmission continuation through object slabs
        if (trans_left > 0 && f.parent != geometry::kHallParent) {
            auto exit = scene.intersect_object(hit->point, dir, 1e9, f.parent);
            if (exit) {
                std::vector<ChainItem> tchain = chain;
                tchain.push_back({InteractionKind::Transmission, hit->facet_id, -1, f.parent});
                march(st, out, exit->point, dir, len_so_far + hit->t + exit->t, tchain, refl_left,
                      diff_left, trans_left - 1, exit->facet_id, alpha);
            }
        }

        if (refl_left <= 0) return;
        chain.push_back({InteractionKind::Reflection, hit->facet_id, -1, -1});
        dir = dir - f.normal * (2.0 * facing);
        origin = hit->point;
        len_so_far += hit->t;
        skip_facet = hit->facet_id;
        --refl_left;
    }
}

std::vector<PropagationPath> finalize_paths(const Scene& scene, const std::vector<Edge>& edges,
                                            const Vec3& tx, const Vec3& rx,
                                            std::map<std::string, std::vector<ChainItem>>& cands,
                                            bool include_los) {
    RefineContext ctx{scene, edges, tx, rx};
    std::map<std::string, PropagationPath> unique;
    const bool dbg = std::getenv("IFRAY_TRACE_DEBUG") != nullptr;
    for (auto& [sig, chain] : cands) {
        auto p = refine(ctx, chain);
        if (p && p->signature == sig)
            unique.emplace(p->signature, std::move(*p));
        else if (dbg)
            std::fprintf(stderr, "refine drop: cand=%s got=%s\n", sig.c_str(),
                         p ? p->signature.c_str() : "(null)");
    }
    if (include_los && geometry::classify_visibility(scene, tx, rx) == geometry::Visibility::LoS) {
        PropagationPath los;
        los.points = {tx, rx};
        los.unfolded_length = (rx - tx).norm();
        los.depart_dir = (rx - tx).normalized();
        los.arrive_dir = los.depart_dir;
        los.signature = "L";
        unique.emplace("L", std::move(los));
    }
    std::vector<PropagationPath> out;
    out.reserve(unique.size());
    for (auto& [_, p] : unique) out.push_back(std::move(p));
    std::sort(out.begin(), out.end(), [](const PropagationPath& a, const PropagationPath& b) {
        if (a.unfolded_length != b.unfolded_length) return a.unfolded_length < b.unfolded_length;
        return a.signature < b.signature;
    });
    return out;
}

} // namespace

std::vector<PropagationPath> trace_specular(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                            const InteractionBudget& budget, int n_rays) {
    if (!(scene.inside_hall(tx) && scene.inside_hall(rx)))
        throw std::invalid_argument("trace_specular: tx/rx must be inside the hall");
    if ((tx - rx).norm() < 1e-9) throw std::invalid_argument("trace_specular: tx == rx");

    const std::vector<Edge> edges = geometry::extract_edges(scene);
    const auto dirs = launch_directions(n_rays);

    EdgeGrid egrid;
    TraceState st;
    st.scene = &scene;
    st.tx = tx;
    st.rx = rx;
    st.budget = budget;
    // The golden-angle lattice has covering radius ~0.70*sqrt(4pi/n) while the
    // reception sphere spans alpha/sqrt(3) ~ 0.58*alpha, so inflate alpha to
    // guarantee every geometric path is captured; refinement discards any
    // spurious captures whose signature cannot be reproduced exactly.
    st.alpha = 1.35 * std::sqrt(4.0 * pi / n_rays);
    if (budget.max_diffractions > 0) {
        egrid.build(scene, edges);
        st.egrid = &egrid;
    }

    const int chunks = 64;
    std::vector<std::map<std::string, std::vector<ChainItem>>> partial(chunks);
    parallel_chunks(dirs.size(), chunks, [&](int c, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i)
            march(st, partial[static_cast<size_t>(c)], tx, dirs[i], 0.0, {},
                  budget.max_reflections, budget.max_diffractions, budget.max_transmissions, -2,
                  st.alpha);
    });
    std::map<std::string, std::vector<ChainItem>> cands;
    for (auto& m : partial)
        for (auto& [sig, chain] : m) cands.emplace(sig, std::move(chain));
    return finalize_paths(scene, edges, tx, rx, cands, true);
}

std::vector<PropagationPath> image_method_paths(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                                int max_order) {
    if (!scene.objects.empty())
        throw std::invalid_argument("image_method_paths: scene must have no objects");
    if (max_order > 3) throw std::invalid_argument("image_method_paths: max_order must be <= 3");
    const std::vector<Edge> edges = geometry::extract_edges(scene);
    std::map<std::string, std::vector<ChainItem>> cands;
    std::vector<ChainItem> chain;
    const int n_shell = static_cast<int>(scene.facets().size()); // 6
    auto rec = [&](auto&& self, int depth) -> void {
        if (!chain.empty()) {
            std::vector<Interaction> tmp;
            for (const auto& c : chain) {
                Interaction i;
                i.kind = c.kind;
                i.facet_id = c.facet_id;
                tmp.push_back(i);
            }
            cands.emplace(path_signature(tmp), chain);
        }
        if (depth == max_order) return;
        for (int fid = 0; fid < n_shell; ++fid) {
            if (!chain.empty() && chain.back().facet_id == fid) continue;
            chain.push_back({InteractionKind::Reflection, fid, -1, -1});
            self(self, depth + 1);
            chain.pop_back();
        }
    };
    rec(rec, 0);
    return finalize_paths(scene, edges, tx, rx, cands, true);
}

std::vector<PropagationPath> enumerate_diffuse(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                               double tile_size_m,
                                               const std::vector<std::string>& surface_filter) {
    if (tile_size_m <= 0.0) throw std::invalid_argument("enumerate_diffuse: tile_size must be > 0");
    const bool want_walls =
        std::find(surface_filter.begin(), surface_filter.end(), "walls") != surface_filter.end();
    auto facet_selected = [&](const Facet& f) {
        if (f.parent == geometry::kHallParent)
            return want_walls && std::abs(f.normal.z) < 0.5; // vertical shell facets
        const std::string& label = scene.objects[static_cast<size_t>(f.parent)].label;
        for (const auto& pat : surface_filter)
            if (pat != "walls" && label.find(pat) != std::string::npos) return true;
        return false;
    };

    std::vector<PropagationPath> out;
    for (const auto& f : scene.facets()) {
        if (!facet_selected(f)) continue;
        // both endpoints must face the facet front
        if ((tx - f.v[0]).dot(f.normal) <= 0.0 || (rx - f.v[0]).dot(f.normal) <= 0.0) continue;
        const Vec3 eu = f.edge_u(), ew = f.edge_w();
        const double lu = eu.norm(), lw = ew.norm();
        const int nu = std::max(1, static_cast<int>(std::ceil(lu / tile_size_m)));
        const int nw = std::max(1, static_cast<int>(std::ceil(lw / tile_size_m)));
        const double du = lu / nu, dw = lw / nw;
        for (int jw = 0; jw < nw; ++jw)
            for (int iu = 0; iu < nu; ++iu) {
                const Vec3 p = f.v[0] + eu * ((iu + 0.5) / nu) + ew * ((jw + 0.5) / nw);
                if (!scene.segment_clear(tx, p, -2, f.id)) continue;
                if (!scene.segment_clear(p, rx, f.id, -2)) continue;
                Interaction s;
                s.kind = InteractionKind::Diffuse;
                s.facet_id = f.id;
                s.tile_index = jw * nu + iu;
                s.point = p;
                s.tile_area = du * dw;
                s.r_i = (tx - p).norm();
                s.r_s = (rx - p).norm();
                s.theta_i = std::acos(std::clamp((tx - p).normalized().dot(f.normal), -1.0, 1.0));
                s.theta_s = std::acos(std::clamp((rx - p).normalized().dot(f.normal), -1.0, 1.0));
                PropagationPath path;
                path.interactions = {s};
                path.points = {tx, p, rx};
                path.unfolded_length = s.r_i + s.r_s;
                path.depart_dir = (p - tx).normalized();
                path.arrive_dir = (rx - p).normalized();
                path.signature = path_signature(path.interactions);
                out.push_back(std::move(path));
            }
    }
    std::sort(out.begin(), out.end(), [](const PropagationPath& a, const PropagationPath& b) {
        if (a.unfolded_length != b.unfolded_length) return a.unfolded_length < b.unfolded_length;
        return a.signature < b.signature;
    });
    return out;
}

namespace {

// Scalar polarization pick for the vertical-pol scenario: dominant branch of
// the (assumed vertical) E field relative to the local plane of incidence.
em::Polarization pick_polarization(const Vec3& dir, const Vec3& normal) {
    Vec3 e_dir = Vec3{0, 0, 1} - dir * dir.z;
    const double en = e_dir.norm();
    if (en < 1e-9) return em::Polarization::TM; // propagation along z
    e_dir = e_dir / en;
    Vec3 binorm = dir.cross(normal);
    const double bn = binorm.norm();
    if (bn < 1e-9) return em::Polarization::TM; // normal incidence: branches equal
    return std::abs(e_dir.dot(binorm / bn)) > std::sqrt(0.5) ? em::Polarization::TE
                                                             : em::Polarization::TM;
}

} // namespace

std::vector<MultipathComponent> assemble_mpcs(const std::vector<PropagationPath>& paths,
                                              const Scene& scene, const em::RadioConfig& radio,
                                              const calib::CalibrationConfig& calib_cfg) {
    radio.validate();
    const double f = radio.frequency_hz;
    const double lam = radio.wavelength();
    std::vector<Edge> edges;
    for (const auto& p : paths)
        if (p.has(InteractionKind::Diffraction)) {
            edges = geometry::extract_edges(scene);
            break;
        }

    std::vector<MultipathComponent> mpcs;
    mpcs.reserve(paths.size());
    for (const auto& p : paths) {
        MultipathComponent m;
        m.delay_s = p.unfolded_length / em::kSpeedOfLight;
        m.signature = p.signature;
        m.aod = bearing(p.depart_dir);
        m.aoa = bearing(-1.0 * p.arrive_dir);
        const double g_tx = em::antenna_gain(radio.tx_antenna, p.depart_dir);
        const double g_rx = em::antenna_gain(radio.rx_antenna, -1.0 * p.arrive_dir);

        double gain = 0.0;
        double coef_phase = 0.0;
        if (p.interactions.empty()) {
            m.cls = MpcClass::LoS;
            gain = em::friis_gain(f, p.unfolded_length) * g_tx * g_rx;
        } else if (p.has(InteractionKind::Diffuse)) {
            m.cls = MpcClass::DMPC;
            const Interaction& s = p.interactions.front();
            const Material& mat = scene.material_of(scene.facet(s.facet_id));
            gain = em::lambertian_scatter_gain(mat.scattering_s, s.tile_area, s.theta_i, s.theta_s,
                                               s.r_i, s.r_s, f) *
                   g_tx * g_rx;
        } else {
            m.cls = MpcClass::SMPC;
            std::complex<double> chain{1.0, 0.0};
            double spread_mag = 1.0 / p.unfolded_length; // replaced when a wedge is present
            // cumulative distance from tx along the polyline per node
            double along = 0.0;
            for (size_t k = 0; k < p.interactions.size(); ++k) {
                const Interaction& it = p.interactions[k];
                const Vec3& prev = p.points[k];
                const Vec3& here = p.points[k + 1];
                along += (here - prev).norm();
                const Vec3 d_in = (here - prev).normalized();
                if (it.kind == InteractionKind::Reflection ||
                    it.kind == InteractionKind::Transmission) {
                    const Facet& fc = scene.facet(it.facet_id);
                    const Material& mat = scene.materials.at(fc.material);
                    const double ct = std::clamp(std::abs(d_in.dot(fc.normal)), 0.0, 1.0);
                    const double theta = std::acos(std::min(ct, 1.0 - 1e-12));
                    const auto pol = pick_polarization(d_in, fc.normal);
                    std::complex<double> eps{1.0, 0.0};
                    if (!mat.is_pec) eps = complex_permittivity(mat, f);
                    const auto rt =
                        em::fresnel_slab(eps, theta, pol, f, mat.thickness_m, mat.is_pec);
                    chain *= (it.kind == InteractionKind::Reflection) ? rt.R : rt.T;
                } else if (it.kind == InteractionKind::Diffraction) {
                    const Edge& e = edges[static_cast<size_t>(it.edge_id)];
                    const Vec3& next = p.points[k + 2];
                    const Vec3 d_out = (next - here).normalized();
                    auto wa = wedge_angles(e, d_in, d_out);
                    if (!wa) {
                        chain = 0.0;
                        break;
                    }
                    const double s_i = along;
                    const double s_d = p.unfolded_length - along;
                    em::WedgeFaces wf;
                    wf.n = e.n;
                    const Material& m0 = scene.material_of(scene.facet(e.facet0));
                    const Material& m1 = scene.material_of(scene.facet(e.facet1));
                    wf.pec = m0.is_pec && m1.is_pec;
                    if (!m0.is_pec) {
                        wf.eps0 = complex_permittivity(m0, f);
                        wf.thickness0_m = m0.thickness_m;
                    }
                    if (!m1.is_pec) {
                        wf.epsn = complex_permittivity(m1, f);
                        wf.thicknessn_m = m1.thickness_m;
                    }
                    const auto pol = pick_polarization(d_in, e.n0);
                    const auto d_scaled = em::utd_diffraction(wf, s_i, s_d, wa->phi_i, wa->phi_d,
                                                              wa->beta0, f, pol);
                    chain *= d_scaled;
                    spread_mag = 1.0 / s_i; // D carries sqrt(s_i/(s_d(s_i+s_d)))
                }
            }
            const double a = lam / (4.0 * pi) * spread_mag;
            gain = a * a * std::norm(chain) * g_tx * g_rx;
            coef_phase = std::arg(chain);
        }
        const double phase = -2.0 * pi * f * m.delay_s + coef_phase;
        m.power_dbm = radio.tx_power_dbm + (gain > 0.0 ? em::to_db(gain)
                                                       : -std::numeric_limits<double>::infinity());
        m.amplitude = std::sqrt(std::max(gain, 0.0)) *
                      std::complex<double>{std::cos(phase), std::sin(phase)};
        mpcs.push_back(std::move(m));
    }
    calib::apply_offsets(mpcs, calib_cfg);
    for (auto& m : mpcs) m.sub_noise = m.power_dbm < radio.noise_floor_dbm;
    std::sort(mpcs.begin(), mpcs.end(), [](const MultipathComponent& a,
                                           const MultipathComponent& b) {
        if (a.delay_s != b.delay_s) return a.delay_s < b.delay_s;
        return a.signature < b.signature;
    });
    return mpcs;
}

} // namespace ifray::tracer
