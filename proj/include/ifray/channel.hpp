// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ifray/calibrate.hpp"
#include "ifray/geometry.hpp"
#include "ifray/paths.hpp"
#include "ifray/tracer.hpp"

namespace ifray::channel {

struct PdpBin {
    double delay_s = 0.0; // bin center
    double power_dbm = 0.0;
};

struct PowerDelayProfile {
    double bin_width_s = 0.0; // 1 / bandwidth
    std::vector<PdpBin> bins; // sorted by delay, all >= noise floor
    double noise_floor_dbm = -145.0;
};

struct AoaBin {
    double az_deg = 0.0; // bin lower edge
    double power_dbm = 0.0;
    bool empty = true;
};

struct LargeScaleParams {
    double total_power_dbm = 0.0;
    double rms_ds_s = 0.0;
    std::vector<AoaBin> aoa_spectrum;
    geometry::Visibility los_class = geometry::Visibility::LoS;
};

/// Bandwidth-binned PDP: linear MPC powers summed per 1/B bin; sub-floor bins
/// omitted.
PowerDelayProfile compute_pdp(const std::vector<tracer::MultipathComponent>& mpcs,
                              const em::RadioConfig& radio);

/// Power-weighted RMS delay spread over MPCs at or above the noise floor
/// (and, if set, within rel_threshold_db of the strongest retained MPC).
/// Throws std::invalid_argument when nothing is retained.
double rms_delay_spread(const std::vector<tracer::MultipathComponent>& mpcs,
                        double noise_floor_dbm,
                        std::optional<double> rel_threshold_db = std::nullopt);

/// Azimuth AoA power spectrum; bin_deg must divide 360.
std::vector<AoaBin> aoa_spectrum(const std::vector<tracer::MultipathComponent>& mpcs,
                                 double bin_deg, double noise_floor_dbm);

/// Empirical CDF with steps p = rank/n at each sorted value.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);

struct CoverageCell {
    Vec3 center;
    double power_dbm = 0.0;
    bool below_floor = true;
};

struct CoverageMap {
    int nx = 0, ny = 0;
    double resolution_m = 2.0;
    std::vector<CoverageCell> cells; // row-major, y-major rows
};

struct CoverageOptions {
    double resolution_m = 2.0;
    double ut_height_m = 1.44;
    int n_rays = 20000;
};

CoverageMap coverage_map(const geometry::Scene& scene, const Vec3& bs,
                         const em::RadioConfig& radio, const tracer::InteractionBudget& budget,
                         const calib::CalibrationConfig& calib, const CoverageOptions& opts);

struct UtResult {
    Vec3 position;
    geometry::Visibility los_class = geometry::Visibility::LoS;
    std::vector<tracer::MultipathComponent> mpcs;
    LargeScaleParams lsp;
    PowerDelayProfile pdp;
    std::string error; // non-empty when this UT failed
};

struct P2mpOptions {
    int n_rays = 50000;
    double aoa_bin_deg = 5.0;
};

/// Point-to-multipoint batch: traces, assembles, and extracts per UT.
/// Per-UT failures are reported in the result, not thrown.
std::vector<UtResult> run_p2mp(const geometry::Scene& scene, const Vec3& bs,
                               const std::vector<Vec3>& ut_list, const em::RadioConfig& radio,
                               const tracer::InteractionBudget& budget,
                               const calib::CalibrationConfig& calib, const P2mpOptions& opts);

/// Shared single-link pipeline: specular trace, optional diffuse enumeration,
/// assembly.
std::vector<tracer::MultipathComponent> simulate_link(const geometry::Scene& scene, const Vec3& tx,
                                                      const Vec3& rx, const em::RadioConfig& radio,
                                                      const tracer::InteractionBudget& budget,
                                                      const calib::CalibrationConfig& calib,
                                                      int n_rays);

} // namespace ifray::channel
