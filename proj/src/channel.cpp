// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "ifray/parallel.hpp"

namespace ifray::channel {

using tracer::MultipathComponent;

PowerDelayProfile compute_pdp(const std::vector<MultipathComponent>& mpcs,
                              const em::RadioConfig& radio) {
    PowerDelayProfile pdp;
    pdp.bin_width_s = 1.0 / radio.bandwidth_hz;
    pdp.noise_floor_dbm = radio.noise_floor_dbm;
    std::map<long, double> acc; // bin index -> linear power sum (mW)
    for (const auto& m : mpcs) {
        if (m.power_dbm < radio.noise_floor_dbm) continue;
        const long bin = static_cast<long>(std::floor(m.delay_s / pdp.bin_width_s));
        acc[bin] += em::from_db(m.power_dbm);
    }
    for (const auto& [bin, lin] : acc) {
        const double dbm = em::to_db(lin);
        if (dbm < radio.noise_floor_dbm) continue;
        pdp.bins.push_back({(bin + 0.5) * pdp.bin_width_s, dbm});
    }
    return pdp;
}

double rms_delay_spread(const std::vector<MultipathComponent>& mpcs, double noise_floor_dbm,
                        std::optional<double> rel_threshold_db) {
    double max_dbm = -std::numeric_limits<double>::infinity();
    for (const auto& m : mpcs)
        if (m.power_dbm >= noise_floor_dbm) max_dbm = std::max(max_dbm, m.power_dbm);
    double p_sum = 0.0, pt_sum = 0.0, pt2_sum = 0.0;
    for (const auto& m : mpcs) {
        if (m.power_dbm < noise_floor_dbm) continue;
        if (rel_threshold_db && m.power_dbm < max_dbm - *rel_threshold_db) continue;
        const double p = em::from_db(m.power_dbm);
        p_sum += p;
        pt_sum += p * m.delay_s;
        pt2_sum += p * m.delay_s * m.delay_s;
    }
    if (p_sum <= 0.0)
        throw std::invalid_argument("rms_delay_spread: no MPC above threshold");
    const double mean = pt_sum / p_sum;
    const double var = std::max(0.0, pt2_sum / p_sum - mean * mean);
    return std::sqrt(var);
}

std::vector<AoaBin> aoa_spectrum(const std::vector<MultipathComponent>& mpcs, double bin_deg,
                                 double noise_floor_dbm) {
    if (bin_deg <= 0.0 || std::abs(360.0 / bin_deg - std::round(360.0 / bin_deg)) > 1e-9)
        throw std::invalid_argument("aoa_spectrum: bin_deg must divide 360");
    const int n = static_cast<int>(std::round(360.0 / bin_deg));
    std::vector<double> lin(static_cast<size_t>(n), 0.0);
    std::vector<bool> used(static_cast<size_t>(n), false);
    for (const auto& m : mpcs) {
        if (m.power_dbm < noise_floor_dbm) continue;
        double az = m.aoa.az_rad * 180.0 / std::numbers::pi;
        az = std::fmod(az, 360.0);
        if (az < 0) az += 360.0;
        int b = std::min(n - 1, static_cast<int>(az / bin_deg));
        lin[static_cast<size_t>(b)] += em::from_db(m.power_dbm);
        used[static_cast<size_t>(b)] = true;
    }
    std::vector<AoaBin> out(static_cast<size_t>(n));
    for (int b = 0; b < n; ++b) {
        out[static_cast<size_t>(b)].az_deg = b * bin_deg;
        out[static_cast<size_t>(b)].empty = !used[static_cast<size_t>(b)];
        out[static_cast<size_t>(b)].power_dbm =
            used[static_cast<size_t>(b)] ? em::to_db(lin[static_cast<size_t>(b)])
                                         : -std::numeric_limits<double>::infinity();
    }
    return out;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("empirical_cdf: empty input");
    std::stable_sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(values.size());
    for (size_t i = 0; i < values.size(); ++i)
        out.emplace_back(values[i], static_cast<double>(i + 1) / n);
    return out;
}

std::vector<MultipathComponent> simulate_link(const geometry::Scene& scene, const Vec3& tx,
                                              const Vec3& rx, const em::RadioConfig& radio,
                                              const tracer::InteractionBudget& budget,
                                              const calib::CalibrationConfig& calib, int n_rays) {
    auto paths = tracer::trace_specular(scene, tx, rx, budget, n_rays);
    if (budget.diffuse_enabled) {
        auto diffuse = tracer::enumerate_diffuse(scene, tx, rx, budget.diffuse_tile_m,
                                                 budget.diffuse_surfaces);
        paths.insert(paths.end(), std::make_move_iterator(diffuse.begin()),
                     std::make_move_iterator(diffuse.end()));
    }
    return tracer::assemble_mpcs(paths, scene, radio, calib);
}

namespace {

LargeScaleParams extract_lsp(const std::vector<MultipathComponent>& mpcs,
                             const em::RadioConfig& radio, double aoa_bin_deg,
                             geometry::Visibility vis) {
    LargeScaleParams lsp;
    lsp.los_class = vis;
    double lin = 0.0;
    for (const auto& m : mpcs)
        if (m.power_dbm >= radio.noise_floor_dbm) lin += em::from_db(m.power_dbm);
    lsp.total_power_dbm = lin > 0.0 ? em::to_db(lin) : -std::numeric_limits<double>::infinity();
    lsp.rms_ds_s = lin > 0.0 ? rms_delay_spread(mpcs, radio.noise_floor_dbm) : 0.0;
    lsp.aoa_spectrum = aoa_spectrum(mpcs, aoa_bin_deg, radio.noise_floor_dbm);
    return lsp;
}

} // namespace

std::vector<UtResult> run_p2mp(const geometry::Scene& scene, const Vec3& bs,
                               const std::vector<Vec3>& ut_list, const em::RadioConfig& radio,
                               const tracer::InteractionBudget& budget,
                               const calib::CalibrationConfig& calib, const P2mpOptions& opts) {
    std::vector<UtResult> results(ut_list.size());
    parallel_chunks(ut_list.size(), static_cast<int>(ut_list.size()), [&](int, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            UtResult& r = results[i];
            r.position = ut_list[i];
            try {
                r.los_class = geometry::classify_visibility(scene, bs, ut_list[i]);
                r.mpcs = simulate_link(scene, bs, ut_list[i], radio, budget, calib, opts.n_rays);
                r.lsp = extract_lsp(r.mpcs, radio, opts.aoa_bin_deg, r.los_class);
                r.pdp = compute_pdp(r.mpcs, radio);
            } catch (const std::exception& ex) {
                r.error = ex.what();
            }
        }
    });
    return results;
}

CoverageMap coverage_map(const geometry::Scene& scene, const Vec3& bs,
                         const em::RadioConfig& radio, const tracer::InteractionBudget& budget,
                         const calib::CalibrationConfig& calib, const CoverageOptions& opts) {
    if (opts.resolution_m <= 0.0)
        throw std::invalid_argument("coverage_map: resolution must be > 0");
    CoverageMap map;
    map.resolution_m = opts.resolution_m;
    map.nx = static_cast<int>(std::ceil(scene.hall.length / opts.resolution_m));
    map.ny = static_cast<int>(std::ceil(scene.hall.width / opts.resolution_m));
    map.cells.resize(static_cast<size_t>(map.nx) * map.ny);
    parallel_chunks(map.cells.size(), static_cast<int>(map.cells.size()),
                    [&](int, size_t b, size_t e) {
        for (size_t idx = b; idx < e; ++idx) {
            const int i = static_cast<int>(idx) % map.nx;
            const int j = static_cast<int>(idx) / map.nx;
            CoverageCell& cell = map.cells[idx];
            cell.center = {(i + 0.5) * opts.resolution_m, (j + 0.5) * opts.resolution_m,
                           opts.ut_height_m};
            if (!scene.inside_hall(cell.center)) continue;
            if ((cell.center - bs).norm() < 1e-6) continue;
            std::vector<MultipathComponent> mpcs;
            try {
                mpcs = simulate_link(scene, bs, cell.center, radio, budget, calib, opts.n_rays);
            } catch (const std::exception&) {
                continue; // e.g. cell center inside an object
            }
            double lin = 0.0;
            for (const auto& m : mpcs)
                if (m.power_dbm >= radio.noise_floor_dbm) lin += em::from_db(m.power_dbm);
            if (lin > 0.0) {
                cell.power_dbm = em::to_db(lin);
                cell.below_floor = false;
            }
        }
    });
    return map;
}

} // namespace ifray::channel
