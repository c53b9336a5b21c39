// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/paper_scene.hpp"

#include <random>

namespace ifray::geometry {

namespace {

std::map<std::string, Material> factory_materials() {
    std::map<std::string, Material> mats;
    Material wall;
    wall.name = "wall";
    wall.permittivity = {{3.7e9, 5.24, 0.62}, {28e9, 5.24, 0.40}};
    wall.thickness_m = 0.30;
    wall.scattering_s = 0.3;
    mats["wall"] = wall;

    Material metal;
    metal.name = "metal";
    metal.is_pec = true;
    metal.thickness_m = 0.05;
    metal.scattering_s = 0.3;
    mats["metal"] = metal;

    Material wood;
    wood.name = "wood";
    wood.permittivity = {{3.7e9, 1.99, 0.10}, {28e9, 1.99, 0.10}};
    wood.thickness_m = 0.05;
    wood.scattering_s = 0.0;
    mats["wood"] = wood;
    return mats;
}

} // namespace

Scene build_paper_scene(std::uint32_t seed) {
    Scene scene;
    scene.name = "factory-hall-seed" + std::to_string(seed);
    scene.hall = {74.4, 24.4, 4.6};
    scene.materials = factory_materials();

    std::mt19937 rng(seed);
    auto jitter = [&](double span) {
        std::uniform_real_distribution<double> d(-span, span);
        return d(rng);
    };
    auto add = [&](const std::string& label, const std::string& mat, double cx, double cy,
                   double hx, double hy, double hz) {
        OrientedBox b;
        b.center = {cx, cy, hz};
        b.half_extents = {hx, hy, hz};
        b.material = mat;
        b.label = label;
        scene.objects.push_back(b);
    };

    // One contiguous machine row separates the corridor (y ~ 12.2) from the
    // NLoS strip (y ~ 4), blocking every BS-to-NLoS-UT segment. Not jittered.
    for (int k = 0; k < 11; ++k) add("machine", "metal", 3.35 + 6.7 * k, 9.0, 3.35, 1.2, 1.0);

    // wall-side clutter; jitter keeps layouts seed-dependent without touching
    // the corridor or the UT rows
    for (int k = 0; k < 6; ++k)
        add("worktable", "wood", 6.0 + 11.0 * k + jitter(0.3), 1.5 + jitter(0.2), 3.0, 1.0, 0.4);
    for (int k = 0; k < 8; ++k)
        add("rack", "metal", 5.0 + 9.0 * k + jitter(0.3), 22.5 + jitter(0.2), 1.15, 0.55, 2.0);
    for (int k = 0; k < 8; ++k)
        add("cupboard", "wood", 9.0 + 8.5 * k + jitter(0.3), 19.5 + jitter(0.2), 0.9, 0.5, 1.8);
    for (int k = 0; k < 6; ++k)
        add("table", "wood", 10.0 + 11.0 * k + jitter(0.3), 16.5 + jitter(0.2), 1.6, 0.8, 0.25);
    for (int k = 0; k < 6; ++k)
        add("crate", "wood", 8.0 + 12.0 * k + jitter(0.3), 6.0 + jitter(0.2), 1.0, 0.75, 0.5);

    scene.finalize();
    return scene;
}

PaperPositions paper_positions() {
    PaperPositions p;
    p.bs = {2.0, 12.2, 1.85};
    for (int k = 1; k <= 38; ++k) p.uts.push_back({2.0 + k, 12.2, 1.44}); // corridor, LoS
    for (int k = 39; k <= 75; ++k)
        p.uts.push_back({17.0 + (k - 39), 4.0, 1.44}); // behind machine row, NLoS
    return p;
}

} // namespace ifray::geometry
