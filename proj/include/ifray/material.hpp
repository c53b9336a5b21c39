// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifray {

struct PermittivityEntry {
    double freq_hz = 0.0;
    double eps_real = 1.0; // relative permittivity, real part
    double eps_imag = 0.0; // loss part, >= 0 (convention eps = eps' - j eps'')
};

/// Slab material attached to a facet. A perfect electric conductor carries
/// no permittivity table; everything else needs at least one entry.
struct Material {
    std::string name;
    std::vector<PermittivityEntry> permittivity;
    double thickness_m = 0.1;
    double scattering_s = 0.0; // effective-roughness coefficient S in [0,1]
    bool is_pec = false;

    void validate() const {
        if (thickness_m <= 0.0)
            throw std::invalid_argument("material '" + name + "': thickness must be > 0");
        if (scattering_s < 0.0 || scattering_s > 1.0)
            throw std::invalid_argument("material '" + name + "': scattering_s outside [0,1]");
        if (!is_pec && permittivity.empty())
            throw std::invalid_argument("material '" + name + "': no permittivity entries");
        for (const auto& e : permittivity) {
            if (e.eps_real < 1.0)
                throw std::invalid_argument("material '" + name + "': eps_real < 1");
            if (e.eps_imag < 0.0)
                throw std::invalid_argument("material '" + name + "': eps_imag < 0");
        }
    }
};

/// Nearest-frequency lookup, no interpolation. PEC is handled by the callers
/// (fresnel treats it as |R| = 1); calling this on a PEC is a usage error.
inline std::complex<double> complex_permittivity(const Material& m, double f_hz) {
    if (m.is_pec)
        throw std::logic_error("complex_permittivity called on PEC material '" + m.name + "'");
    if (m.permittivity.empty())
        throw std::logic_error("material '" + m.name + "' has no permittivity entries");
    const PermittivityEntry* best = &m.permittivity.front();
    for (const auto& e : m.permittivity)
        if (std::abs(e.freq_hz - f_hz) < std::abs(best->freq_hz - f_hz)) best = &e;
    return {best->eps_real, -best->eps_imag};
}

} // namespace ifray
