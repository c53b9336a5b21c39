// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/calibrate.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace ifray::calib {

using nlohmann::json;

MaterialOverride paper_machine_override() {
    MaterialOverride ov;
    ov.label_pattern = "machine";
    ov.material.name = "machine_equivalent";
    ov.material.permittivity = {{3.7e9, 3.0, 0.10}, {28e9, 3.0, 0.09}};
    ov.material.thickness_m = 0.40;
    ov.keep_scattering = true;
    return ov;
}

void apply_offsets(std::vector<tracer::MultipathComponent>& mpcs,
                   const CalibrationConfig& config) {
    if (!config.enabled) return;
    for (auto& m : mpcs) {
        if (m.cls == tracer::MpcClass::DMPC) {
            m.power_dbm += config.diffuse_offset_db;
        } else if (m.signature.find('D') != std::string::npos) {
            m.power_dbm += config.diffraction_offset_db;
        }
    }
}

geometry::Scene swap_materials(const geometry::Scene& scene, const CalibrationConfig& config) {
    geometry::Scene out = scene;
    for (const auto& ov : config.material_overrides) {
        Material mat = ov.material;
        bool matched = false;
        for (auto& obj : out.objects) {
            if (obj.label.find(ov.label_pattern) == std::string::npos) continue;
            if (ov.keep_scattering)
                mat.scattering_s = scene.materials.at(obj.material).scattering_s;
            obj.material = mat.name;
            matched = true;
        }
        if (matched) {
            out.materials[mat.name] = mat;
        } else {
            std::cerr << "warning: material override pattern '" << ov.label_pattern
                      << "' matched no object\n";
        }
    }
    out.finalize();
    return out;
}

MeasurementReference load_reference_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open reference file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("reference parse error: ") + e.what());
    }
    MeasurementReference ref;
    auto points = [](const json& arr, double xscale) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : arr) out.emplace_back(p[0].get<double>() * xscale, p[1].get<double>());
        return out;
    };
    if (doc.contains("ds_cdf")) {
        if (doc["ds_cdf"].contains("los")) ref.ds_cdf_los = points(doc["ds_cdf"]["los"], 1e-9);
        if (doc["ds_cdf"].contains("nlos")) ref.ds_cdf_nlos = points(doc["ds_cdf"]["nlos"], 1e-9);
    }
    if (doc.contains("pdp")) ref.pdp_envelope = points(doc["pdp"], 1e-9);
    if (doc.contains("max_power_dbm")) ref.max_power_dbm = doc["max_power_dbm"].get<double>();
    for (auto& cdf : {&ref.ds_cdf_los, &ref.ds_cdf_nlos})
        for (size_t i = 1; i < cdf->size(); ++i)
            if ((*cdf)[i].second < (*cdf)[i - 1].second)
                throw std::invalid_argument("reference: ds_cdf probabilities must be non-decreasing");
    return ref;
}

std::string save_config(const CalibrationConfig& config) {
    json doc;
    doc["diffraction_offset_db"] = config.diffraction_offset_db;
    doc["diffuse_offset_db"] = config.diffuse_offset_db;
    doc["enabled"] = config.enabled;
    json ovs = json::array();
    for (const auto& ov : config.material_overrides) {
        json perms = json::array();
        for (const auto& p : ov.material.permittivity)
            perms.push_back(
                {{"freq_hz", p.freq_hz}, {"eps_real", p.eps_real}, {"eps_imag", p.eps_imag}});
        ovs.push_back({{"label_pattern", ov.label_pattern},
                       {"material_name", ov.material.name},
                       {"permittivity", perms},
                       {"thickness_m", ov.material.thickness_m},
                       {"keep_scattering", ov.keep_scattering}});
    }
    doc["material_overrides"] = ovs;
    return doc.dump(2) + "\n";
}

CalibrationConfig load_config_file(const std::string& path) {
    if (path == "paper") {
        CalibrationConfig c = CalibrationConfig::paper_preset();
        c.material_overrides.push_back(paper_machine_override());
        return c;
    }
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open calibration config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("calibration config parse error: ") + e.what());
    }
    CalibrationConfig c;
    if (doc.contains("diffraction_offset_db"))
        c.diffraction_offset_db = doc["diffraction_offset_db"].get<double>();
    if (doc.contains("diffuse_offset_db"))
        c.diffuse_offset_db = doc["diffuse_offset_db"].get<double>();
    if (doc.contains("enabled")) c.enabled = doc["enabled"].get<bool>();
    if (doc.contains("material_overrides")) {
        for (const auto& oj : doc["material_overrides"]) {
            MaterialOverride ov;
            ov.label_pattern = oj.at("label_pattern").get<std::string>();
            ov.material.name = oj.at("material_name").get<std::string>();
            for (const auto& pj : oj.at("permittivity"))
                ov.material.permittivity.push_back({pj.at("freq_hz").get<double>(),
                                                    pj.at("eps_real").get<double>(),
                                                    pj.at("eps_imag").get<double>()});
            ov.material.thickness_m = oj.at("thickness_m").get<double>();
            if (oj.contains("keep_scattering"))
                ov.keep_scattering = oj["keep_scattering"].get<bool>();
            ov.material.validate();
            c.material_overrides.push_back(ov);
        }
    }
    return c;
}

} // namespace ifray::calib
