// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// End-to-end acceptance checks. Each check prints exactly one PASS/FAIL line;
// the exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ifray/calibrate_fit.hpp"
#include "ifray/channel.hpp"
#include "ifray/em.hpp"
#include "ifray/io.hpp"
#include "ifray/paper_scene.hpp"
#include "ifray/tracer.hpp"

using namespace ifray;
using std::complex;

namespace {

constexpr double kPi = 3.14159265358979323846;
const complex<double> kJ{0.0, 1.0};

geometry::Scene empty_room(double l, double w, double h) {
    geometry::Scene s;
    s.hall = {l, w, h};
    Material m;
    m.name = "concrete";
    m.permittivity = {{3.7e9, 5.24, 0.62}, {28e9, 5.24, 0.40}};
    m.thickness_m = 0.3;
    m.scattering_s = 0.3;
    s.materials["concrete"] = m;
    s.finalize();
    return s;
}

struct Check {
    std::string detail; // set when the check fails
    bool ok = true;

    void require(bool cond, const std::string& why) {
        if (!cond && ok) {
            ok = false;
            detail = why;
        }
    }
};

int g_failures = 0;

void run_check(int number, const std::string& title, double budget_s,
               const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    c.require(elapsed < budget_s, "runtime budget exceeded");
    if (!c.ok) ++g_failures;
    std::printf("%s  [%2d] %-34s (%.1f s / %.0f s)%s%s\n", c.ok ? "PASS" : "FAIL", number,
                title.c_str(), elapsed, budget_s, c.ok ? "" : " -- ",
                c.ok ? "" : c.detail.c_str());
    std::fflush(stdout);
}

// total field near a PEC half-plane shadow boundary, in dB relative to the
// free-space field at the direct-path distance
double half_plane_total_db(double s_i, double s_d, double phi_i, double phi_d, double f_hz) {
    em::WedgeFaces wedge;
    wedge.n = 2.0;
    wedge.pec = true;
    const double k = 2.0 * kPi * f_hz / em::kSpeedOfLight;
    const complex<double> d_coef =
        em::utd_diffraction(wedge, s_i, s_d, phi_i, phi_d, kPi / 2.0, f_hz, em::Polarization::TE);
    complex<double> total = std::exp(-kJ * (k * s_i)) / s_i * d_coef * std::exp(-kJ * (k * s_d));
    const Vec3 tx{s_i * std::cos(phi_i), s_i * std::sin(phi_i), 0.0};
    const Vec3 rx{s_d * std::cos(phi_d), s_d * std::sin(phi_d), 0.0};
    const double d_direct = (rx - tx).norm();
    const double boundary = kPi + phi_i;
    double w = 0.0;
    if (phi_d < boundary - 1e-12)
        w = 1.0;
    else if (std::abs(phi_d - boundary) <= 1e-12)
        w = 0.5;
    total += w * std::exp(-kJ * (k * d_direct)) / d_direct;
    return 20.0 * std::log10(std::abs(total) * d_direct);
}

double total_power_dbm(const std::vector<tracer::MultipathComponent>& mpcs, double floor_dbm) {
    double lin = 0.0;
    for (const auto& m : mpcs)
        if (m.power_dbm >= floor_dbm) lin += em::from_db(m.power_dbm);
    return em::to_db(lin);
}

int count_above(const std::vector<tracer::MultipathComponent>& mpcs, double floor_dbm) {
    int n = 0;
    for (const auto& m : mpcs)
        if (m.power_dbm >= floor_dbm) ++n;
    return n;
}

std::string serialize_run(const std::vector<channel::UtResult>& results) {
    std::string blob;
    for (const auto& r : results) {
        blob += r.error.empty() ? io::mpcs_jsonl(r.mpcs) : ("error: " + r.error + "\n");
        std::ostringstream os;
        os << r.lsp.total_power_dbm << " " << r.lsp.rms_ds_s << "\n";
        blob += os.str();
    }
    return blob;
}

// ---------------------------------------------------------------------------

void check_friis_anchor(Check& c) {
    const auto scene = empty_room(12, 8, 3);
    const Vec3 tx{2, 4, 1.5}, rx{8.1, 4, 1.5}; // 6.1 m apart
    tracer::InteractionBudget b;
    b.max_reflections = 0;
    b.max_diffractions = 0;
    b.max_transmissions = 0;
    for (const auto& [f_hz, expect_dbm] : {std::pair{3.7e9, -59.5}, std::pair{28e9, -77.1}}) {
        em::RadioConfig radio;
        radio.frequency_hz = f_hz;
        radio.tx_power_dbm = 0.0;
        const auto mpcs = channel::simulate_link(scene, tx, rx, radio, b,
                                                 calib::CalibrationConfig::disabled(), 5000);
        c.require(mpcs.size() == 1, "expected exactly the LoS component");
        if (mpcs.empty()) return;
        c.require(std::abs(mpcs[0].power_dbm - expect_dbm) <= 0.2,
                  "LoS power off at " + std::to_string(f_hz) + " Hz: " +
                      std::to_string(mpcs[0].power_dbm));
        c.require(std::abs(mpcs[0].delay_s * 1e9 - 20.35) <= 0.05,
                  "time of flight off: " + std::to_string(mpcs[0].delay_s * 1e9));
    }
}

void check_oracle_equivalence(Check& c) {
    const auto scene = empty_room(10, 8, 3);
    em::RadioConfig radio;
    tracer::InteractionBudget b;
    b.max_reflections = 2;
    b.max_diffractions = 0;
    b.max_transmissions = 0;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ux(0.5, 9.5), uy(0.5, 7.5), uz(0.5, 2.5);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 tx{ux(rng), uy(rng), uz(rng)};
        Vec3 rx{ux(rng), uy(rng), uz(rng)};
        while ((rx - tx).norm() < 1.0) rx = {ux(rng), uy(rng), uz(rng)};

        const auto sbr = tracer::trace_specular(scene, tx, rx, b, 200000);
        const auto oracle = tracer::image_method_paths(scene, tx, rx, 2);
        std::map<std::string, const tracer::PropagationPath*> by_sig;
        for (const auto& p : sbr) by_sig[p.signature] = &p;
        c.require(sbr.size() == oracle.size(),
                  "trial " + std::to_string(trial) + ": path count " +
                      std::to_string(sbr.size()) + " vs " + std::to_string(oracle.size()));
        for (const auto& q : oracle) {
            auto it = by_sig.find(q.signature);
            c.require(it != by_sig.end(), "trial " + std::to_string(trial) +
                                              ": missing signature " + q.signature);
            if (it == by_sig.end()) continue;
            const double d_ns =
                std::abs(it->second->unfolded_length - q.unfolded_length) / em::kSpeedOfLight * 1e9;
            c.require(d_ns <= 0.1, "delay mismatch at " + q.signature);
        }
        const auto m_sbr = tracer::assemble_mpcs(sbr, scene, radio,
                                                 calib::CalibrationConfig::disabled());
        const auto m_or = tracer::assemble_mpcs(oracle, scene, radio,
                                                calib::CalibrationConfig::disabled());
        std::map<std::string, double> p_sbr;
        for (const auto& m : m_sbr) p_sbr[m.signature] = m.power_dbm;
        for (const auto& m : m_or) {
            auto it = p_sbr.find(m.signature);
            if (it != p_sbr.end())
                c.require(std::abs(it->second - m.power_dbm) <= 0.5,
                          "power mismatch at " + m.signature);
        }
    }
}

void check_knife_edge(Check& c) {
    const double f_hz = 28e9, s_i = 50.0, s_d = 25.0, phi_i = kPi / 2.0;
    const double boundary = kPi + phi_i;
    const double at_boundary = half_plane_total_db(s_i, s_d, phi_i, boundary, f_hz);
    c.require(std::abs(at_boundary - (-6.02)) <= 0.1,
              "shadow-boundary level " + std::to_string(at_boundary));
    double prev = 0.0;
    bool first = true;
    for (int step = -10; step <= 10; ++step) {
        const double phi_d = boundary + step * (0.05 * kPi / 180.0);
        const double total_db = half_plane_total_db(s_i, s_d, phi_i, phi_d, f_hz);
        if (!first)
            c.require(std::abs(total_db - prev) <= 0.5,
                      "jump near boundary at step " + std::to_string(step));
        prev = total_db;
        first = false;
    }
}

void check_fresnel_properties(Check& c) {
    const complex<double> eps3{3.0, 0.0};
    c.require(std::abs(em::fresnel_interface(eps3, 60.0 * kPi / 180.0, em::Polarization::TM)) <
                  1e-6,
              "Brewster null missing");
    c.require(std::abs(std::abs(em::fresnel_interface(eps3, 0.0, em::Polarization::TE)) - 0.2679) <=
                  1e-4,
              "normal-incidence |r| off");
    for (int mi = 0; mi < 50; ++mi) {
        const complex<double> eps{1.0 + 9.0 * (mi % 10) / 9.0, -2.0 * (mi / 10) / 4.0};
        const double thick = 0.02 + 0.001 * mi;
        for (int ai = 0; ai < 90; ++ai) {
            const double theta = ai * (89.5 / 89.0) * kPi / 180.0;
            for (auto pol : {em::Polarization::TE, em::Polarization::TM}) {
                const auto sc = em::fresnel_slab(eps, theta, pol, 3.7e9, thick);
                const double sum = std::norm(sc.R) + std::norm(sc.T);
                c.require(sum <= 1.0 + 1e-9, "slab passivity violated");
            }
        }
    }
}

void check_offset_application(Check& c) {
    // traced path set with reflection, diffraction, transmission, and diffuse
    geometry::Scene s = empty_room(10, 8, 3);
    geometry::OrientedBox box;
    box.center = {5, 4, 1.25};
    box.half_extents = {0.5, 2.0, 1.25};
    box.material = "concrete";
    s.objects.push_back(box);
    s.finalize();
    em::RadioConfig radio;
    tracer::InteractionBudget b; // 2r 1d 1t
    b.diffuse_enabled = true;
    const auto base = channel::simulate_link(s, {1, 4, 2.5}, {9, 4, 1.5}, radio, b,
                                             calib::CalibrationConfig::disabled(), 20000);
    bool saw_d = false, saw_s = false, saw_plain = false;
    auto shifted = base;
    calib::apply_offsets(shifted, calib::CalibrationConfig::paper_preset());
    c.require(base.size() == shifted.size(), "offset application changed the MPC count");
    for (size_t i = 0; i < base.size() && i < shifted.size(); ++i) {
        const double delta = shifted[i].power_dbm - base[i].power_dbm;
        if (base[i].cls == tracer::MpcClass::DMPC) {
            saw_s = true;
            c.require(std::abs(delta - 12.0) < 1e-9, "DMPC offset not exactly +12 dB");
        } else if (base[i].signature.find('D') != std::string::npos) {
            saw_d = true;
            c.require(std::abs(delta + 10.0) < 1e-9, "diffraction offset not exactly -10 dB");
        } else {
            saw_plain = true;
            c.require(delta == 0.0, "untouched class was shifted"); // bit-identical
        }
    }
    c.require(saw_d && saw_s && saw_plain, "path set missing a class");
}

void check_offset_recovery(Check& c) {
    const auto scene0 = geometry::build_paper_scene(1);
    const auto pos = geometry::paper_positions();
    calib::CalibrationConfig truth = calib::CalibrationConfig::paper_preset();
    truth.material_overrides.push_back(calib::paper_machine_override());
    const auto scene = calib::swap_materials(scene0, truth);
    em::RadioConfig radio;
    tracer::InteractionBudget b;
    b.diffuse_enabled = true;
    const int n_rays = 50000;

    // 10-UT subsample: 5 from the LoS block, 5 from the NLoS block
    std::vector<Vec3> uts;
    for (int i = 0; i < 5; ++i) uts.push_back(pos.uts[static_cast<size_t>(i * 38 / 5)]);
    for (int i = 0; i < 5; ++i) uts.push_back(pos.uts[static_cast<size_t>(38 + i * 37 / 5)]);

    channel::P2mpOptions opts;
    opts.n_rays = n_rays;
    const auto obs = channel::run_p2mp(scene, pos.bs, uts, radio, b, truth, opts);
    calib::MeasurementReference ref;
    std::vector<double> los_ds, nlos_ds;
    double max_p = -1e9;
    for (const auto& ut : obs) {
        c.require(ut.error.empty(), "reference UT failed: " + ut.error);
        if (!ut.error.empty()) return;
        (ut.los_class == geometry::Visibility::LoS ? los_ds : nlos_ds).push_back(ut.lsp.rms_ds_s);
        for (const auto& bin : ut.pdp.bins) max_p = std::max(max_p, bin.power_dbm);
    }
    ref.ds_cdf_los = channel::empirical_cdf(los_ds);
    ref.ds_cdf_nlos = channel::empirical_cdf(nlos_ds);
    ref.max_power_dbm = max_p;

    const auto fit = calib::fit_offsets(scene, pos.bs, uts, radio, b, ref, {}, n_rays);
    c.require(fit.evaluations <= 200,
              "evaluation budget exceeded: " + std::to_string(fit.evaluations));
    c.require(std::abs(fit.config.diffraction_offset_db + 10.0) <= 1.0,
              "diffraction offset recovered as " +
                  std::to_string(fit.config.diffraction_offset_db));
    c.require(std::abs(fit.config.diffuse_offset_db - 12.0) <= 1.0,
              "diffuse offset recovered as " + std::to_string(fit.config.diffuse_offset_db));
}

void check_scene_statistics(Check& c) {
    const auto scene = geometry::build_paper_scene(1);
    const double density = geometry::clutter_density(scene) * 100.0;
    c.require(std::abs(density - 18.33) <= 0.5,
              "clutter density " + std::to_string(density) + "%");
    const auto pos = geometry::paper_positions();
    int los = 0, nlos = 0;
    for (const auto& ut : pos.uts)
        (geometry::classify_visibility(scene, pos.bs, ut) == geometry::Visibility::LoS ? los
                                                                                       : nlos)++;
    c.require(los == 38 && nlos == 37,
              "LoS/NLoS split " + std::to_string(los) + "/" + std::to_string(nlos));
}

void check_ds_fixtures(Check& c) {
    auto mk = [](double delay_ns, double power_dbm) {
        tracer::MultipathComponent m;
        m.delay_s = delay_ns * 1e-9;
        m.power_dbm = power_dbm;
        return m;
    };
    const double floor = -145.0;
    c.require(channel::rms_delay_spread({mk(42, -60)}, floor) == 0.0, "single path DS != 0");
    const double two = channel::rms_delay_spread({mk(0, -60), mk(100, -60)}, floor);
    c.require(std::abs(two - 50e-9) <= 1e-15, "equal two-path DS != 50 ns");
    const double three = channel::rms_delay_spread(
        {mk(0, 0), mk(50, -10 * std::log10(2.0)), mk(100, -20 * std::log10(2.0))}, floor);
    c.require(std::abs(three * 1e9 - 36.42) <= 0.01,
              "three-path DS " + std::to_string(three * 1e9) + " ns");
}

void check_determinism(Check& c) {
    const auto scene0 = geometry::build_paper_scene(1);
    const auto pos = geometry::paper_positions();
    calib::CalibrationConfig cal = calib::CalibrationConfig::paper_preset();
    cal.material_overrides.push_back(calib::paper_machine_override());
    const auto scene = calib::swap_materials(scene0, cal);
    em::RadioConfig radio;
    tracer::InteractionBudget b;
    b.diffuse_enabled = true;
    channel::P2mpOptions opts;
    opts.n_rays = 50000;

    std::vector<std::string> blobs;
    const std::vector<const char*> worker_caps = {"1", "4", nullptr};
    for (const char* threads : worker_caps) {
        if (threads)
            setenv("IFRAY_THREADS", threads, 1);
        else
            unsetenv("IFRAY_THREADS");
        blobs.push_back(
            serialize_run(channel::run_p2mp(scene, pos.bs, pos.uts, radio, b, cal, opts)));
    }
    unsetenv("IFRAY_THREADS");
    c.require(blobs[0] == blobs[1], "outputs differ between 1 and 4 workers");
    c.require(blobs[0] == blobs[2], "outputs differ between 1 and max workers");
}

void check_diffuse_and_class_power(Check& c) {
    const auto scene0 = geometry::build_paper_scene(1);
    const auto pos = geometry::paper_positions();
    calib::CalibrationConfig cal = calib::CalibrationConfig::paper_preset();
    cal.material_overrides.push_back(calib::paper_machine_override());
    const auto scene = calib::swap_materials(scene0, cal);
    em::RadioConfig radio;
    const double floor = radio.noise_floor_dbm;
    tracer::InteractionBudget with_d, without_d;
    with_d.diffuse_enabled = true;
    without_d.diffuse_enabled = false;
    const int n_rays = 20000;

    const std::vector<size_t> tested = {0, 10, 25, 37, 40, 55, 70};
    std::map<size_t, double> totals;
    for (size_t idx : tested) {
        const auto off = channel::simulate_link(scene, pos.bs, pos.uts[idx], radio, without_d,
                                                cal, n_rays);
        const auto on =
            channel::simulate_link(scene, pos.bs, pos.uts[idx], radio, with_d, cal, n_rays);
        c.require(count_above(on, floor) > count_above(off, floor),
                  "diffuse did not increase the MPC count at ut " + std::to_string(idx + 1));
        c.require(channel::rms_delay_spread(on, floor) > channel::rms_delay_spread(off, floor),
                  "diffuse did not increase the delay spread at ut " + std::to_string(idx + 1));
        totals[idx] = total_power_dbm(on, floor);
    }

    // NLoS weaker than LoS at matched BS distance (tested indices >= 38 are NLoS)
    for (size_t idx : tested) {
        if (idx < 38) continue;
        const double d_nlos = (pos.uts[idx] - pos.bs).norm();
        size_t best = 0;
        double best_gap = 1e9;
        for (size_t j : tested) {
            if (j >= 38) continue;
            const double gap = std::abs((pos.uts[j] - pos.bs).norm() - d_nlos);
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        c.require(totals[idx] < totals[best],
                  "NLoS ut " + std::to_string(idx + 1) + " not weaker than LoS ut " +
                      std::to_string(best + 1));
    }
}

} // namespace

int main() {
    run_check(1, "free-space anchor", 1.0, check_friis_anchor);
    run_check(2, "mirror-oracle equivalence", 120.0, check_oracle_equivalence);
    run_check(3, "half-plane shadow boundary", 5.0, check_knife_edge);
    run_check(4, "interface and slab properties", 5.0, check_fresnel_properties);
    run_check(5, "exact per-class offsets", 1.0, check_offset_application);
    run_check(6, "offset recovery round trip", 600.0, check_offset_recovery);
    run_check(7, "preset scene statistics", 1.0, check_scene_statistics);
    run_check(8, "delay-spread fixtures", 1.0, check_ds_fixtures);
    run_check(9, "worker-count determinism", 900.0, check_determinism);
    run_check(10, "diffuse growth and class power", 300.0, check_diffuse_and_class_power);
    std::printf("%d of 10 checks passed\n", 10 - g_failures);
    return g_failures;
}
