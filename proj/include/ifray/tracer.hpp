// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <vector>

#include "ifray/calibrate.hpp"
#include "ifray/geometry.hpp"
#include "ifray/paths.hpp"

namespace ifray::tracer {

/// Golden-angle (Fibonacci) spherical spiral, near-uniform solid angle.
std::vector<Vec3> launch_directions(int n);

/// Shooting-and-bouncing rays with reception spheres r = L * alpha / sqrt(3).
/// Duplicate signatures are collapsed to the image-refined representative;
/// the LoS path is included iff the link is geometrically LoS. Output sorted
/// by (delay, signature). Deterministic for fixed inputs and any worker count.
std::vector<PropagationPath> trace_specular(const geometry::Scene& scene, const Vec3& tx,
                                            const Vec3& rx, const InteractionBudget& budget,
                                            int n_rays);

/// Exact mirror-image enumeration for empty rectangular rooms (<= order 3);
/// independent oracle for trace_specular. Throws if the scene has objects.
std::vector<PropagationPath> image_method_paths(const geometry::Scene& scene, const Vec3& tx,
                                                const Vec3& rx, int max_order);

/// Single-bounce diffuse paths tx -> tile -> rx from tiled facets matching
/// the surface filter ("walls" selects hall walls, other entries match object
/// labels by substring).
std::vector<PropagationPath> enumerate_diffuse(const geometry::Scene& scene, const Vec3& tx,
                                               const Vec3& rx, double tile_size_m,
                                               const std::vector<std::string>& surface_filter);

/// Field assembly: Friis spreading, Fresnel slab R/T, UTD diffraction with
/// spreading correction, Lambertian tile gain for diffuse paths, antenna
/// gains, then calibration offsets. Sub-noise components are retained and
/// flagged.
std::vector<MultipathComponent> assemble_mpcs(const std::vector<PropagationPath>& paths,
                                              const geometry::Scene& scene,
                                              const em::RadioConfig& radio,
                                              const calib::CalibrationConfig& calib);

} // namespace ifray::tracer
