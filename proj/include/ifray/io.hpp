// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <string>
#include <vector>

#include "ifray/channel.hpp"
#include "ifray/paths.hpp"

namespace ifray::io {

/// Fixed-precision decimal (snprintf "%.*f") so outputs are byte-stable
/// across platforms and worker counts.
std::string fmt(double v, int decimals);

/// One JSON line per MPC: delay_ns, power_dbm, aod_az_deg, aod_el_deg,
/// aoa_az_deg, aoa_el_deg, class, signature. Input order preserved (callers
/// pass the canonical (delay, signature) order).
std::string mpcs_jsonl(const std::vector<tracer::MultipathComponent>& mpcs);
std::vector<tracer::MultipathComponent> load_mpcs_jsonl(const std::string& path);

std::string pdp_csv(const channel::PowerDelayProfile& pdp);
std::string aoa_csv(const std::vector<channel::AoaBin>& spectrum);
std::string ds_cdf_csv(const std::vector<std::pair<double, double>>& cdf_s);
std::string coverage_csv(const channel::CoverageMap& map);

/// 8-bit grayscale PGM; powers clamped to [min_dbm, max_dbm], below-floor
/// cells rendered black.
std::string coverage_pgm(const channel::CoverageMap& map, double min_dbm, double max_dbm);

std::string lsp_summary_csv(const std::vector<channel::UtResult>& uts);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace ifray::io
