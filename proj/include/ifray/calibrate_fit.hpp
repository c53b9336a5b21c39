// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "ifray/calibrate.hpp"
#include "ifray/channel.hpp"

namespace ifray::calib {

struct ObjectiveWeights {
    double ds_per_ns = 1.0;
    double slope_per_db_ns = 100.0;
    double max_power_per_db = 0.5;
};

/// Weighted mismatch: DS-CDF decile RMSE (ns) + PDP power-decay slope delta
/// (dB/ns over 0-200 ns) + max-power delta (dB). Missing reference parts
/// contribute zero. Throws on empty input.
double objective(const std::vector<channel::UtResult>& sim, const MeasurementReference& ref,
                 const ObjectiveWeights& weights = {});

struct OffsetSearch {
    double diffraction_min_db = -20.0, diffraction_max_db = 0.0;
    double diffuse_min_db = 0.0, diffuse_max_db = 20.0;
    double step_db = 1.0;
    int max_evaluations = 200;
};

struct FitTrace {
    double diffraction_db, diffuse_db, score;
};

struct FitResult {
    CalibrationConfig config;
    double score = 0.0;
    int evaluations = 0;
    std::vector<FitTrace> iterations;
};

/// Coordinate descent over the 2D offset grid from (0,0). Paths are traced
/// once; each evaluation only re-applies offsets and re-extracts parameters.
/// Ties break toward smaller |offset|.
FitResult fit_offsets(const geometry::Scene& scene, const Vec3& bs,
                      const std::vector<Vec3>& ut_list, const em::RadioConfig& radio,
                      const tracer::InteractionBudget& budget, const MeasurementReference& ref,
                      const OffsetSearch& search = {}, int n_rays = 50000);

} // namespace ifray::calib
