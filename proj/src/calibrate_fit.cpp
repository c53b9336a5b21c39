// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/calibrate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ifray::calib {
namespace {

// Inverse CDF by linear interpolation; points sorted by value with
// non-decreasing probability.
double quantile(const std::vector<std::pair<double, double>>& cdf, double p) {
    if (cdf.empty()) throw std::invalid_argument("quantile: empty cdf");
    if (p <= cdf.front().second) return cdf.front().first;
    if (p >= cdf.back().second) return cdf.back().first;
    for (std::size_t i = 1; i < cdf.size(); ++i) {
        if (cdf[i].second >= p) {
            const auto& [x0, p0] = cdf[i - 1];
            const auto& [x1, p1] = cdf[i];
            if (p1 <= p0) return x1;
            return x0 + (x1 - x0) * (p - p0) / (p1 - p0);
        }
    }
    return cdf.back().first;
}

// Least-squares slope of power (dB) vs delay (ns); needs >= 2 distinct
// delays, otherwise 0.
double ls_slope(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-12) return 0.0;
    return (n * sxy - sx * sy) / den;
}

double decile_rmse(std::vector<double> sim_ds_s,
                   const std::vector<std::pair<double, double>>& ref_cdf_s) {
    if (sim_ds_s.empty() || ref_cdf_s.empty()) return 0.0;
    const auto sim_cdf = channel::empirical_cdf(std::move(sim_ds_s));
    double sse = 0.0;
    for (int d = 1; d <= 9; ++d) {
        const double p = d / 10.0;
        const double diff_ns = (quantile(sim_cdf, p) - quantile(ref_cdf_s, p)) * 1e9;
        sse += diff_ns * diff_ns;
    }
    return std::sqrt(sse / 9.0);
}

constexpr double kSlopeWindowNs = 200.0;

} // namespace

double objective(const std::vector<channel::UtResult>& sim, const MeasurementReference& ref,
                 const ObjectiveWeights& weights) {
    if (sim.empty()) throw std::invalid_argument("objective: no simulated UT records");
    if (ref.empty()) throw std::invalid_argument("objective: empty measurement reference");

    std::vector<double> ds_los, ds_nlos;
    std::vector<std::pair<double, double>> pdp_pts; // (delay ns, power dBm)
    double sim_max = -std::numeric_limits<double>::infinity();
    for (const auto& ut : sim) {
        if (!ut.error.empty()) continue;
        (ut.los_class == geometry::Visibility::LoS ? ds_los : ds_nlos).push_back(ut.lsp.rms_ds_s);
        for (const auto& bin : ut.pdp.bins) {
            const double delay_ns = bin.delay_s * 1e9;
            if (delay_ns <= kSlopeWindowNs) pdp_pts.emplace_back(delay_ns, bin.power_dbm);
            sim_max = std::max(sim_max, bin.power_dbm);
        }
    }

    double score = 0.0;
    int cdf_terms = 0;
    double cdf_sum = 0.0;
    if (!ref.ds_cdf_los.empty() && !ds_los.empty()) {
        cdf_sum += decile_rmse(ds_los, ref.ds_cdf_los);
        ++cdf_terms;
    }
    if (!ref.ds_cdf_nlos.empty() && !ds_nlos.empty()) {
        cdf_sum += decile_rmse(ds_nlos, ref.ds_cdf_nlos);
        ++cdf_terms;
    }
    if (cdf_terms > 0) score += weights.ds_per_ns * cdf_sum / cdf_terms;

    if (!ref.pdp_envelope.empty() && !pdp_pts.empty()) {
        std::vector<std::pair<double, double>> ref_pts;
        for (const auto& [delay_s, p_dbm] : ref.pdp_envelope) {
            const double delay_ns = delay_s * 1e9;
            if (delay_ns <= kSlopeWindowNs) ref_pts.emplace_back(delay_ns, p_dbm);
        }
        score += weights.slope_per_db_ns * std::abs(ls_slope(pdp_pts) - ls_slope(ref_pts));
    }

    if (ref.max_power_dbm.has_value() && std::isfinite(sim_max))
        score += weights.max_power_per_db * std::abs(sim_max - *ref.max_power_dbm);

    return score;
}

namespace {

struct CachedUt {
    Vec3 position;
    geometry::Visibility los_class = geometry::Visibility::LoS;
    std::vector<tracer::MultipathComponent> base_mpcs; // offset-free powers
};

// Re-applies offsets to the cached offset-free MPCs and re-derives the
// per-UT extracted parameters; this is the whole per-evaluation cost.
std::vector<channel::UtResult> evaluate_offsets(const std::vector<CachedUt>& cache,
                                                const em::RadioConfig& radio, double diffraction_db,
                                                double diffuse_db) {
    CalibrationConfig cfg;
    cfg.diffraction_offset_db = diffraction_db;
    cfg.diffuse_offset_db = diffuse_db;

    std::vector<channel::UtResult> out;
    out.reserve(cache.size());
    for (const auto& ut : cache) {
        channel::UtResult r;
        r.position = ut.position;
        r.los_class = ut.los_class;
        r.mpcs = ut.base_mpcs;
        apply_offsets(r.mpcs, cfg);
        for (auto& m : r.mpcs) m.sub_noise = m.power_dbm < radio.noise_floor_dbm;
        r.pdp = channel::compute_pdp(r.mpcs, radio);
        r.lsp.los_class = ut.los_class;
        try {
            r.lsp.rms_ds_s = channel::rms_delay_spread(r.mpcs, radio.noise_floor_dbm);
        } catch (const std::exception&) {
            r.error = "all components below noise floor";
            out.push_back(std::move(r));
            continue;
        }
        double lin = 0.0;
        for (const auto& m : r.mpcs)
            if (!m.sub_noise) lin += em::from_db(m.power_dbm);
        r.lsp.total_power_dbm = em::to_db(lin);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

FitResult fit_offsets(const geometry::Scene& scene, const Vec3& bs,
                      const std::vector<Vec3>& ut_list, const em::RadioConfig& radio,
                      const tracer::InteractionBudget& budget, const MeasurementReference& ref,
                      const OffsetSearch& search, int n_rays) {
    if (ref.empty()) throw std::invalid_argument("fit_offsets: empty measurement reference");
    if (search.step_db <= 0.0) throw std::invalid_argument("fit_offsets: step must be positive");

    // Trace once with zero offsets; every grid evaluation reuses these.
    std::vector<CachedUt> cache;
    cache.reserve(ut_list.size());
    for (const auto& ut : ut_list) {
        CachedUt c;
        c.position = ut;
        c.los_class = geometry::classify_visibility(scene, bs, ut);
        c.base_mpcs = channel::simulate_link(scene, bs, ut, radio, budget,
                                             CalibrationConfig::disabled(), n_rays);
        cache.push_back(std::move(c));
    }

    FitResult result;
    std::map<std::pair<long, long>, double> seen; // grid-index memo
    const auto score_at = [&](double d_db, double s_db) {
        const auto key = std::make_pair(std::lround(d_db / search.step_db),
                                        std::lround(s_db / search.step_db));
        if (auto it = seen.find(key); it != seen.end()) return it->second;
        const double s = objective(evaluate_offsets(cache, radio, d_db, s_db), ref);
        seen.emplace(key, s);
        ++result.evaluations;
        return s;
    };

    double d_cur = std::clamp(0.0, search.diffraction_min_db, search.diffraction_max_db);
    double s_cur = std::clamp(0.0, search.diffuse_min_db, search.diffuse_max_db);
    double best = score_at(d_cur, s_cur);
    result.iterations.push_back({d_cur, s_cur, best});

    bool improved = true;
    while (improved && result.evaluations < search.max_evaluations) {
        improved = false;
        // One coordinate at a time; among equal scores prefer the smaller
        // |offset| so the descent cannot wander on flat regions.
        struct Move {
            double d, s;
        };
        const Move moves[] = {{d_cur - search.step_db, s_cur},
                              {d_cur + search.step_db, s_cur},
                              {d_cur, s_cur - search.step_db},
                              {d_cur, s_cur + search.step_db}};
        double best_d = d_cur, best_s = s_cur, best_score = best;
        for (const auto& mv : moves) {
            if (mv.d < search.diffraction_min_db - 1e-9 ||
                mv.d > search.diffraction_max_db + 1e-9 || mv.s < search.diffuse_min_db - 1e-9 ||
                mv.s > search.diffuse_max_db + 1e-9)
                continue;
            if (result.evaluations >= search.max_evaluations) break;
            const double sc = score_at(mv.d, mv.s);
            const bool better = sc < best_score - 1e-12;
            const bool tie_smaller = std::abs(sc - best_score) <= 1e-12 &&
                                     std::abs(mv.d) + std::abs(mv.s) <
                                         std::abs(best_d) + std::abs(best_s);
            if (better || tie_smaller) {
                best_score = sc;
                best_d = mv.d;
                best_s = mv.s;
            }
        }
        if (best_d != d_cur || best_s != s_cur) {
            d_cur = best_d;
            s_cur = best_s;
            best = best_score;
            improved = true;
            result.iterations.push_back({d_cur, s_cur, best});
        }
    }

    result.config.diffraction_offset_db = d_cur;
    result.config.diffuse_offset_db = s_cur;
    result.config.enabled = true;
    result.score = best;
    return result;
}

} // namespace ifray::calib
