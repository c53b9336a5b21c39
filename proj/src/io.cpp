// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ifray::io {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kRadToDeg = 180.0 / kPi;

std::complex<double> from_db_amplitude(double power_dbm) {
    return {std::pow(10.0, power_dbm / 20.0), 0.0};
}
} // namespace

std::string fmt(double v, int decimals) {
    if (v == 0.0) v = 0.0; // collapse -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string mpcs_jsonl(const std::vector<tracer::MultipathComponent>& mpcs) {
    std::string out;
    for (const auto& m : mpcs) {
        nlohmann::ordered_json j;
        // Fixed-precision strings would break JSON number typing; round the
        // values instead so serialization stays deterministic.
        j["delay_ns"] = std::stod(fmt(m.delay_s * 1e9, 4));
        j["power_dbm"] = std::stod(fmt(m.power_dbm, 4));
        j["aod_az_deg"] = std::stod(fmt(m.aod.az_rad * kRadToDeg, 3));
        j["aod_el_deg"] = std::stod(fmt(m.aod.el_rad * kRadToDeg, 3));
        j["aoa_az_deg"] = std::stod(fmt(m.aoa.az_rad * kRadToDeg, 3));
        j["aoa_el_deg"] = std::stod(fmt(m.aoa.el_rad * kRadToDeg, 3));
        j["class"] = tracer::to_string(m.cls);
        j["signature"] = m.signature;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<tracer::MultipathComponent> load_mpcs_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open MPC file: " + path);
    std::vector<tracer::MultipathComponent> mpcs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        tracer::MultipathComponent m;
        m.delay_s = j.at("delay_ns").get<double>() * 1e-9;
        m.power_dbm = j.at("power_dbm").get<double>();
        m.amplitude = from_db_amplitude(m.power_dbm);
        m.aod.az_rad = j.at("aod_az_deg").get<double>() / kRadToDeg;
        m.aod.el_rad = j.at("aod_el_deg").get<double>() / kRadToDeg;
        m.aoa.az_rad = j.at("aoa_az_deg").get<double>() / kRadToDeg;
        m.aoa.el_rad = j.at("aoa_el_deg").get<double>() / kRadToDeg;
        const std::string cls = j.at("class").get<std::string>();
        if (cls == "LoS")
            m.cls = tracer::MpcClass::LoS;
        else if (cls == "DMPC")
            m.cls = tracer::MpcClass::DMPC;
        else
            m.cls = tracer::MpcClass::SMPC;
        m.signature = j.at("signature").get<std::string>();
        mpcs.push_back(std::move(m));
    }
    return mpcs;
}

std::string pdp_csv(const channel::PowerDelayProfile& pdp) {
    std::string out = "delay_ns,power_dbm\n";
    for (const auto& b : pdp.bins)
        out += fmt(b.delay_s * 1e9, 4) + "," + fmt(b.power_dbm, 4) + "\n";
    return out;
}

std::string aoa_csv(const std::vector<channel::AoaBin>& spectrum) {
    std::string out = "az_deg,power_dbm\n";
    for (const auto& b : spectrum) {
        out += fmt(b.az_deg, 1) + ",";
        out += b.empty ? std::string("-inf") : fmt(b.power_dbm, 4);
        out += "\n";
    }
    return out;
}

std::string ds_cdf_csv(const std::vector<std::pair<double, double>>& cdf_s) {
    std::string out = "ds_ns,probability\n";
    for (const auto& [ds_s, p] : cdf_s) out += fmt(ds_s * 1e9, 4) + "," + fmt(p, 6) + "\n";
    return out;
}

std::string coverage_csv(const channel::CoverageMap& map) {
    std::string out = "x_m,y_m,power_dbm\n";
    for (const auto& c : map.cells) {
        out += fmt(c.center.x, 3) + "," + fmt(c.center.y, 3) + ",";
        out += c.below_floor ? std::string("-inf") : fmt(c.power_dbm, 4);
        out += "\n";
    }
    return out;
}

std::string coverage_pgm(const channel::CoverageMap& map, double min_dbm, double max_dbm) {
    if (!(max_dbm > min_dbm)) throw std::invalid_argument("coverage_pgm: max_dbm must exceed min_dbm");
    std::string out = "P5\n" + std::to_string(map.nx) + " " + std::to_string(map.ny) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(map.nx) * map.ny);
    // Row 0 at the top of the image = highest y, the usual map orientation.
    for (int row = map.ny - 1; row >= 0; --row) {
        for (int col = 0; col < map.nx; ++col) {
            const auto& c = map.cells[static_cast<std::size_t>(row) * map.nx + col];
            unsigned char px = 0;
            if (!c.below_floor) {
                const double t = std::clamp((c.power_dbm - min_dbm) / (max_dbm - min_dbm), 0.0, 1.0);
                px = static_cast<unsigned char>(std::lround(t * 255.0));
            }
            out.push_back(static_cast<char>(px));
        }
    }
    return out;
}

std::string lsp_summary_csv(const std::vector<channel::UtResult>& uts) {
    std::string out = "x_m,y_m,z_m,los_class,total_power_dbm,rms_ds_ns\n";
    for (const auto& u : uts) {
        out += fmt(u.position.x, 3) + "," + fmt(u.position.y, 3) + "," + fmt(u.position.z, 3) + ",";
        out += (u.los_class == geometry::Visibility::LoS) ? "LoS" : "NLoS";
        out += ",";
        if (!u.error.empty()) {
            out += "nan,nan\n";
            continue;
        }
        out += fmt(u.lsp.total_power_dbm, 4) + "," + fmt(u.lsp.rms_ds_s * 1e9, 4) + "\n";
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace ifray::io
