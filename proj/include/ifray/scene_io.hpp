// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <string>

#include "ifray/geometry.hpp"

namespace ifray::geometry {

/// Parses the JSON scene document. Unknown fields are rejected; parse and
/// validation failures throw std::invalid_argument naming the offending path.
Scene load_scene(const std::string& text);

Scene load_scene_file(const std::string& path);

/// Canonical JSON serialization (stable key and array ordering).
std::string save_scene(const Scene& scene);

} // namespace ifray::geometry
