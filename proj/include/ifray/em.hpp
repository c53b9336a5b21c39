// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <complex>
#include <optional>

#include "ifray/material.hpp"
#include "ifray/vec3.hpp"

namespace ifray::em {

inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s

enum class Polarization { TE, TM };

enum class AntennaModel { Isotropic, HalfWaveDipole };

struct Antenna {
    AntennaModel model = AntennaModel::Isotropic;
};

struct RadioConfig {
    double frequency_hz = 3.7e9;
    double bandwidth_hz = 80e6;
    double tx_power_dbm = 0.0;
    double noise_floor_dbm = -145.0;
    Antenna tx_antenna;
    Antenna rx_antenna;

    void validate() const {
        if (frequency_hz <= 0) throw std::invalid_argument("radio: frequency must be > 0");
        if (bandwidth_hz <= 0) throw std::invalid_argument("radio: bandwidth must be > 0");
        if (noise_floor_dbm >= tx_power_dbm)
            throw std::invalid_argument("radio: noise floor must be below tx power");
    }
    double wavelength() const { return kSpeedOfLight / frequency_hz; }
};

struct SlabCoefficients {
    std::complex<double> R;
    std::complex<double> T;
};

/// Coherent two-interface slab in air. eps = eps' - j eps'' (eps'' >= 0).
/// PEC is requested with pec=true (eps ignored): R = -1 (TE) / +1 (TM), T = 0.
SlabCoefficients fresnel_slab(std::complex<double> eps, double theta_i, Polarization pol,
                              double f_hz, double thickness_m, bool pec = false);

/// Single air/dielectric interface reflection coefficient (no slab).
std::complex<double> fresnel_interface(std::complex<double> eps, double theta_i, Polarization pol);

/// Wedge description for UTD. Faces 0 and n carry slab materials unless pec.
struct WedgeFaces {
    double n = 1.5; // exterior angle parameter, wedge exterior spans n*pi
    bool pec = false;
    std::complex<double> eps0{1.0, 0.0};
    std::complex<double> epsn{1.0, 0.0};
    double thickness0_m = 0.1;
    double thicknessn_m = 0.1;
};

/// UTD transition function F(X) for X >= 0.
std::complex<double> utd_transition(double x);

/// Kouyoumjian-Pathak wedge coefficient with Luebbers-style lossy-face
/// weighting, already scaled by sqrt(s_i / (s_d * (s_i + s_d))). Multiplying
/// the incident field at the edge by the result and by exp(-j k s_d) gives
/// the diffracted field at the receiver. Angles: phi_i (incidence) and phi_d
/// (diffraction) measured from face 0 into the exterior, both in (0, n*pi);
/// beta0 in (0, pi) is the angle between the incident ray and the edge.
std::complex<double> utd_diffraction(const WedgeFaces& wedge, double s_i, double s_d, double phi_i,
                                     double phi_d, double beta0, double f_hz, Polarization pol);

/// Single-lobe Lambertian effective-roughness tile gain (linear power,
/// isotropic antennas): (lambda/4pi)^2 S^2 dA cos(ti) cos(ts) / (pi ri^2 rs^2).
double lambertian_scatter_gain(double s_coeff, double tile_area_m2, double theta_i, double theta_s,
                               double r_i, double r_s, double f_hz);

/// Free-space power gain (lambda / 4 pi d)^2.
double friis_gain(double f_hz, double d_m);

/// Linear gain towards a unit direction; theta measured from the vertical
/// dipole axis (z).
double antenna_gain(const Antenna& antenna, const Vec3& direction);

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

} // namespace ifray::em
