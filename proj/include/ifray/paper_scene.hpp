// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ifray/geometry.hpp"

namespace ifray::geometry {

/// 74.4 x 24.4 x 4.6 m factory hall with a central clear corridor, one
/// contiguous machine row and wall-side clutter rows. Deterministic per seed;
/// clutter density ~18.3%, mean object height ~2.1 m.
Scene build_paper_scene(std::uint32_t seed);

/// Default link geometry: BS at 1.85 m, 75 UT positions at 1.44 m
/// (1-38 along the corridor, LoS; 39-75 behind the machine row, NLoS).
struct PaperPositions {
    Vec3 bs;
    std::vector<Vec3> uts; // uts[0] is position 1
};

PaperPositions paper_positions();

} // namespace ifray::geometry
