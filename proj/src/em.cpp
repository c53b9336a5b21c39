// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "ifray/em.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ifray::em {

namespace {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;
const cplx j1i{0.0, 1.0};

// sqrt branch with Re >= 0, Im <= 0: decaying wave for eps = eps' - j eps''.
cplx passive_sqrt(cplx z) {
    cplx s = std::sqrt(z);
    if (s.real() < 0.0 || (s.real() == 0.0 && s.imag() > 0.0)) s = -s;
    return s;
}

} // namespace

std::complex<double> fresnel_interface(std::complex<double> eps, double theta_i, Polarization pol) {
    if (theta_i < 0.0 || theta_i >= pi / 2.0)
        throw std::domain_error("fresnel: incidence angle outside [0, pi/2)");
    const double c = std::cos(theta_i);
    const double s2 = std::sin(theta_i) * std::sin(theta_i);
    const cplx q = passive_sqrt(eps - s2);
    if (pol == Polarization::TE) return (c - q) / (c + q);
    return (eps * c - q) / (eps * c + q);
}

SlabCoefficients fresnel_slab(std::complex<double> eps, double theta_i, Polarization pol,
                              double f_hz, double thickness_m, bool pec) {
    if (theta_i < 0.0 || theta_i >= pi / 2.0)
        throw std::domain_error("fresnel_slab: incidence angle outside [0, pi/2)");
    if (thickness_m <= 0.0) throw std::domain_error("fresnel_slab: thickness must be > 0");
    if (pec) return {pol == Polarization::TE ? cplx{-1.0, 0.0} : cplx{1.0, 0.0}, cplx{0.0, 0.0}};

    const double s2 = std::sin(theta_i) * std::sin(theta_i);
    const cplx q = passive_sqrt(eps - s2); // kz / k0 inside the slab
    const cplx r = fresnel_interface(eps, theta_i, pol);
    const double k0 = 2.0 * pi * f_hz / kSpeedOfLight;
    const cplx ph = std::exp(-j1i * k0 * q * thickness_m); // one-way internal propagation
    const cplx ph2 = ph * ph;
    const cplx denom = 1.0 - r * r * ph2;
    SlabCoefficients out;
    out.R = r * (1.0 - ph2) / denom;
    out.T = (1.0 - r * r) * ph / denom;
    return out;
}

std::complex<double> utd_transition(double x) {
    if (x < 0.0) x = 0.0;
    if (x < 1e-12) return {0.0, 0.0};
    if (x >= 10.0) {
        // large-argument asymptotic series
        const double ix = 1.0 / x;
        return cplx{1.0, 0.0} + j1i * (0.5 * ix) - 0.75 * ix * ix - j1i * (1.875 * ix * ix * ix) +
               4.6875 * ix * ix * ix * ix;
    }
    // F(X) = 2 j sqrt(X) e^{jX} Int_{sqrt(X)}^inf e^{-j tau^2} dtau;
    // the finite part is smooth on [0, sqrt(5.5)], Gauss-Legendre suffices.
    static const double gl_x[8] = {-0.9602898564975362, -0.7966664774136267, -0.5255324099163290,
                                   -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975362};
    static const double gl_w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                   0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
    const double up = std::sqrt(x);
    cplx finite{0.0, 0.0};
    const int panels = 4;
    for (int p = 0; p < panels; ++p) {
        const double a = up * p / panels, b = up * (p + 1) / panels;
        const double h = 0.5 * (b - a), m = 0.5 * (a + b);
        for (int i = 0; i < 8; ++i) {
            const double tau = m + h * gl_x[i];
            finite += gl_w[i] * h * std::exp(-j1i * tau * tau);
        }
    }
    const cplx full = 0.5 * std::sqrt(pi) * std::exp(-j1i * pi / 4.0);
    return 2.0 * j1i * up * std::exp(j1i * x) * (full - finite);
}

namespace {

// One cotangent term of the KP coefficient, with the standard small-argument
// regularization across shadow/reflection boundaries. sign: +1 for the
// (pi + beta) terms, -1 for the (pi - beta) terms.
cplx cot_term(double n, double k_l, double beta, int sign) {
    const double big_n = std::round((beta + sign * pi) / (2.0 * pi * n));
    const double co = std::cos((2.0 * pi * n * big_n - beta) * 0.5);
    const double a = 2.0 * co * co;
    // distance from the boundary where cot blows up
    const double eps_b = sign > 0 ? (beta + pi - 2.0 * pi * n * big_n)
                                  : (pi - (beta - 2.0 * pi * n * big_n));
    if (std::abs(eps_b) < 1e-5) {
        const double sg = eps_b > 0 ? 1.0 : (eps_b < 0 ? -1.0 : 0.0);
        const cplx e4 = std::exp(j1i * pi / 4.0);
        return n * e4 * (std::sqrt(2.0 * pi * k_l) * sg - 2.0 * k_l * eps_b * e4);
    }
    const double arg = (pi + sign * beta) / (2.0 * n);
    return (std::cos(arg) / std::sin(arg)) * utd_transition(k_l * a);
}

} // namespace

std::complex<double> utd_diffraction(const WedgeFaces& wedge, double s_i, double s_d, double phi_i,
                                     double phi_d, double beta0, double f_hz, Polarization pol) {
    if (!(beta0 > 0.0 && beta0 < pi)) throw std::domain_error("utd: beta0 outside (0, pi)");
    if (s_i <= 0.0 || s_d <= 0.0) throw std::domain_error("utd: distances must be > 0");
    const double n = wedge.n;
    if (!(phi_i >= 0.0 && phi_i <= n * pi && phi_d >= 0.0 && phi_d <= n * pi))
        throw std::domain_error("utd: face angles outside wedge exterior");

    const double k = 2.0 * pi * f_hz / kSpeedOfLight;
    const double sb = std::sin(beta0);
    const double l_par = s_i * s_d / (s_i + s_d) * sb * sb;
    const double bm = phi_d - phi_i;
    const double bp = phi_d + phi_i;

    // Luebbers weighting: face reflection coefficients at the grazing-side
    // angles; PEC reduces to the classic soft/hard wedge.
    cplx r0, rn;
    if (wedge.pec) {
        r0 = rn = (pol == Polarization::TE) ? cplx{-1.0, 0.0} : cplx{1.0, 0.0};
    } else {
        auto clamp_angle = [](double th) {
            return std::min(std::max(th, 0.0), pi / 2.0 - 1e-9);
        };
        const double th0 = clamp_angle(pi / 2.0 - phi_i);
        const double thn = clamp_angle(pi / 2.0 - (n * pi - phi_d));
        r0 = fresnel_slab(wedge.eps0, th0, pol, f_hz, wedge.thickness0_m).R;
        rn = fresnel_slab(wedge.epsn, thn, pol, f_hz, wedge.thicknessn_m).R;
    }

    const double kl = k * l_par;
    const cplx pref = -std::exp(-j1i * pi / 4.0) / (2.0 * n * std::sqrt(2.0 * pi * k) * sb);
    const cplx d_coef = pref * (cot_term(n, kl, bm, +1) + cot_term(n, kl, bm, -1) +
                                r0 * cot_term(n, kl, bp, -1) + rn * cot_term(n, kl, bp, +1));
    return d_coef * std::sqrt(s_i / (s_d * (s_i + s_d)));
}

double lambertian_scatter_gain(double s_coeff, double tile_area_m2, double theta_i, double theta_s,
                               double r_i, double r_s, double f_hz) {
    if (r_i <= 0.0 || r_s <= 0.0 || tile_area_m2 <= 0.0)
        throw std::domain_error("lambertian: distances and area must be > 0");
    const double ci = std::cos(theta_i), cs = std::cos(theta_s);
    if (ci <= 0.0 || cs <= 0.0) return 0.0;
    const double lam = kSpeedOfLight / f_hz;
    const double a = lam / (4.0 * pi);
    return a * a * s_coeff * s_coeff * tile_area_m2 * ci * cs / (pi * r_i * r_i * r_s * r_s);
}

double friis_gain(double f_hz, double d_m) {
    if (d_m <= 0.0) throw std::domain_error("friis: distance must be > 0");
    const double a = kSpeedOfLight / f_hz / (4.0 * pi * d_m);
    return a * a;
}

double antenna_gain(const Antenna& antenna, const Vec3& direction) {
    if (antenna.model == AntennaModel::Isotropic) return 1.0;
    const double ct = direction.z; // cos(theta) for a vertical dipole axis
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    if (st < 1e-9) return 0.0;
    const double num = std::cos(pi / 2.0 * ct) / st;
    return 1.643 * num * num;
}

} // namespace ifray::em
