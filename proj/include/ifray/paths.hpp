// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ifray/em.hpp"
#include "ifray/vec3.hpp"

namespace ifray::tracer {

enum class InteractionKind { Reflection, Diffraction, Transmission, Diffuse };

struct Interaction {
    InteractionKind kind = InteractionKind::Reflection;
    int facet_id = -1;  // reflections/transmissions/diffuse
    int edge_id = -1;   // diffractions
    int object_id = -1; // transmissions: the crossed box
    int tile_index = -1; // diffuse: tile index on the facet
    Vec3 point;
    // diffuse tile data
    double tile_area = 0.0;
    double theta_i = 0.0, theta_s = 0.0;
    double r_i = 0.0, r_s = 0.0;
};

struct InteractionBudget {
    int max_reflections = 2;
    int max_diffractions = 1;
    int max_transmissions = 1;
    bool diffuse_enabled = false;
    std::vector<std::string> diffuse_surfaces = {"walls", "machine"};
    double diffuse_tile_m = 1.0;
    int diffraction_fan = 64; // Keller-cone samples per edge encounter
};

struct PropagationPath {
    std::vector<Interaction> interactions;
    std::vector<Vec3> points; // tx, interaction points..., rx
    double unfolded_length = 0.0;
    Vec3 depart_dir; // propagation direction leaving tx
    Vec3 arrive_dir; // propagation direction arriving at rx
    std::string signature;

    bool has(InteractionKind k) const {
        for (const auto& i : interactions)
            if (i.kind == k) return true;
        return false;
    }
};

enum class MpcClass { LoS, SMPC, DMPC };

inline const char* to_string(MpcClass c) {
    switch (c) {
        case MpcClass::LoS: return "LoS";
        case MpcClass::SMPC: return "SMPC";
        default: return "DMPC";
    }
}

struct AnglePair {
    double az_rad = 0.0; // [0, 2pi)
    double el_rad = 0.0; // from horizontal, [-pi/2, pi/2]
};

/// Bearing of a unit direction: azimuth in [0, 2pi), elevation from horizontal.
AnglePair bearing(const Vec3& dir);

struct MultipathComponent {
    double delay_s = 0.0;
    double power_dbm = 0.0;
    std::complex<double> amplitude; // reference phase at carrier
    AnglePair aod;
    AnglePair aoa;
    MpcClass cls = MpcClass::SMPC;
    std::string signature;
    bool sub_noise = false;
};

std::string path_signature(const std::vector<Interaction>& interactions);

} // namespace ifray::tracer
