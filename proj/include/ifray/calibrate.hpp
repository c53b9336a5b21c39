// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ifray/geometry.hpp"
#include "ifray/paths.hpp"

namespace ifray::calib {

struct MaterialOverride {
    std::string label_pattern; // substring match against object labels
    Material material;
    bool keep_scattering = true; // preserve the original material's S
};

struct CalibrationConfig {
    double diffraction_offset_db = -10.0;
    double diffuse_offset_db = 12.0;
    std::vector<MaterialOverride> material_overrides;
    bool enabled = true;

    static CalibrationConfig disabled() {
        CalibrationConfig c;
        c.diffraction_offset_db = 0.0;
        c.diffuse_offset_db = 0.0;
        c.enabled = false;
        return c;
    }
    /// Offsets only (-10 dB diffraction, +12 dB diffuse); pair with
    /// paper_machine_override for the machine material swap.
    static CalibrationConfig paper_preset() { return CalibrationConfig{}; }
};

/// Equivalent machine material: eps' = 3, eps'' = 0.1 at 3.7 GHz / 0.09 at
/// 28 GHz, 40 cm slab; scattering strength kept from the original material.
MaterialOverride paper_machine_override();

/// Adds the per-class dB offsets once per MPC: any diffraction -> diffraction
/// offset, DMPC -> diffuse offset. Not idempotent; assemble_mpcs owns the call.
void apply_offsets(std::vector<tracer::MultipathComponent>& mpcs, const CalibrationConfig& config);

/// Returns a scene with override materials applied to matching objects.
/// Patterns matching nothing leave the scene unchanged (warning on stderr).
geometry::Scene swap_materials(const geometry::Scene& scene, const CalibrationConfig& config);

struct MeasurementReference {
    std::vector<std::pair<double, double>> ds_cdf_los;  // (ds seconds, probability)
    std::vector<std::pair<double, double>> ds_cdf_nlos;
    std::vector<std::pair<double, double>> pdp_envelope; // (delay s, power dBm)
    std::optional<double> max_power_dbm;

    bool empty() const {
        return ds_cdf_los.empty() && ds_cdf_nlos.empty() && pdp_envelope.empty() &&
               !max_power_dbm.has_value();
    }
};

MeasurementReference load_reference_file(const std::string& path);
std::string save_config(const CalibrationConfig& config);
CalibrationConfig load_config_file(const std::string& path);

} // namespace ifray::calib
