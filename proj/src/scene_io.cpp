// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/scene_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ifray::geometry {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw std::invalid_argument(path + ": unknown field '" + key + "'");
}

double num(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw std::invalid_argument(path + "." + key + ": missing or not a number");
    return obj[key].get<double>();
}

Vec3 vec3_of(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.size() != 3)
        throw std::invalid_argument(path + ": expected [x,y,z]");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

} // namespace

Scene load_scene(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("parse error: top level is not an object");
    reject_unknown(doc, {"hall", "materials", "objects", "name"}, "$");

    Scene scene;
    if (doc.contains("name")) scene.name = doc["name"].get<std::string>();

    if (!doc.contains("hall")) throw std::invalid_argument("$.hall: missing");
    const json& hall = doc["hall"];
    reject_unknown(hall, {"length", "width", "height"}, "$.hall");
    scene.hall = {num(hall, "length", "$.hall"), num(hall, "width", "$.hall"),
                  num(hall, "height", "$.hall")};

    if (!doc.contains("materials") || !doc["materials"].is_object())
        throw std::invalid_argument("$.materials: missing or not an object");
    for (const auto& [mname, mj] : doc["materials"].items()) {
        const std::string mpath = "$.materials." + mname;
        reject_unknown(mj, {"permittivity", "thickness_m", "scattering_s", "is_pec"}, mpath);
        Material m;
        m.name = mname;
        if (mj.contains("is_pec")) m.is_pec = mj["is_pec"].get<bool>();
        if (mj.contains("thickness_m")) m.thickness_m = num(mj, "thickness_m", mpath);
        if (mj.contains("scattering_s")) m.scattering_s = num(mj, "scattering_s", mpath);
        if (mj.contains("permittivity")) {
            if (!mj["permittivity"].is_array())
                throw std::invalid_argument(mpath + ".permittivity: not an array");
            for (size_t i = 0; i < mj["permittivity"].size(); ++i) {
                const json& pj = mj["permittivity"][i];
                const std::string ppath = mpath + ".permittivity[" + std::to_string(i) + "]";
                reject_unknown(pj, {"freq_hz", "eps_real", "eps_imag"}, ppath);
                m.permittivity.push_back({num(pj, "freq_hz", ppath), num(pj, "eps_real", ppath),
                                          num(pj, "eps_imag", ppath)});
            }
        }
        try {
            m.validate();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(mpath + ": " + e.what());
        }
        scene.materials[mname] = m;
    }

    if (doc.contains("objects")) {
        if (!doc["objects"].is_array())
            throw std::invalid_argument("$.objects: not an array");
        for (size_t i = 0; i < doc["objects"].size(); ++i) {
            const json& oj = doc["objects"][i];
            const std::string opath = "$.objects[" + std::to_string(i) + "]";
            reject_unknown(oj, {"label", "center", "half_extents", "yaw_rad", "material"}, opath);
            OrientedBox b;
            if (oj.contains("label")) b.label = oj["label"].get<std::string>();
            b.center = vec3_of(oj.at("center"), opath + ".center");
            b.half_extents = vec3_of(oj.at("half_extents"), opath + ".half_extents");
            if (oj.contains("yaw_rad")) b.yaw_rad = num(oj, "yaw_rad", opath);
            if (!oj.contains("material"))
                throw std::invalid_argument(opath + ".material: missing");
            b.material = oj["material"].get<std::string>();
            if (!scene.materials.count(b.material))
                throw std::invalid_argument(opath + ".material: unknown material '" + b.material +
                                            "'");
            scene.objects.push_back(b);
        }
    }

    scene.finalize();
    return scene;
}

Scene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scene file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scene(ss.str());
}

std::string save_scene(const Scene& scene) {
    json doc;
    doc["name"] = scene.name;
    doc["hall"] = {{"length", scene.hall.length},
                   {"width", scene.hall.width},
                   {"height", scene.hall.height}};
    json mats = json::object();
    for (const auto& [mname, m] : scene.materials) {
        json mj;
        json perms = json::array();
        for (const auto& p : m.permittivity)
            perms.push_back(
                {{"freq_hz", p.freq_hz}, {"eps_real", p.eps_real}, {"eps_imag", p.eps_imag}});
        mj["permittivity"] = perms;
        mj["thickness_m"] = m.thickness_m;
        mj["scattering_s"] = m.scattering_s;
        mj["is_pec"] = m.is_pec;
        mats[mname] = mj;
    }
    doc["materials"] = mats;
    json objs = json::array();
    for (const auto& b : scene.objects)
        objs.push_back({{"label", b.label},
                        {"center", {b.center.x, b.center.y, b.center.z}},
                        {"half_extents", {b.half_extents.x, b.half_extents.y, b.half_extents.z}},
                        {"yaw_rad", b.yaw_rad},
                        {"material", b.material}});
    doc["objects"] = objs;
    return doc.dump(2) + "\n";
}

} // namespace ifray::geometry
