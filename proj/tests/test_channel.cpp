// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ifray/channel.hpp"

using namespace ifray;
using tracer::MultipathComponent;
using tracer::MpcClass;

namespace {

MultipathComponent mpc(double delay_ns, double power_dbm, double aoa_az_deg = 0.0) {
    MultipathComponent m;
    m.delay_s = delay_ns * 1e-9;
    m.power_dbm = power_dbm;
    m.aoa.az_rad = aoa_az_deg * std::numbers::pi / 180.0;
    return m;
}

em::RadioConfig radio_80mhz() {
    em::RadioConfig r;
    r.frequency_hz = 3.7e9;
    r.bandwidth_hz = 80e6;
    r.noise_floor_dbm = -145.0;
    return r;
}

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

} // namespace

TEST_CASE("pdp bins are 1/bandwidth wide and sum linear power") {
    const auto radio = radio_80mhz(); // 12.5 ns bins
    std::vector<MultipathComponent> mpcs = {
        mpc(3.0, -50.0), mpc(10.0, -50.0), // both in bin [0, 12.5)
        mpc(20.0, -60.0),                  // bin [12.5, 25)
    };
    const auto pdp = channel::compute_pdp(mpcs, radio);
    CHECK(pdp.bin_width_s == doctest::Approx(12.5e-9).epsilon(1e-12));
    REQUIRE(pdp.bins.size() == 2);
    CHECK(pdp.bins[0].delay_s == doctest::Approx(6.25e-9).epsilon(1e-12));
    // two equal powers add 3.0103 dB
    CHECK(pdp.bins[0].power_dbm == doctest::Approx(-50.0 + 10.0 * std::log10(2.0)).epsilon(1e-9));
    CHECK(pdp.bins[1].delay_s == doctest::Approx(18.75e-9).epsilon(1e-12));
    CHECK(pdp.bins[1].power_dbm == doctest::Approx(-60.0).epsilon(1e-9));
}

TEST_CASE("pdp omits components and bins below the noise floor") {
    const auto radio = radio_80mhz();
    std::vector<MultipathComponent> mpcs = {mpc(5.0, -150.0), mpc(30.0, -144.0)};
    const auto pdp = channel::compute_pdp(mpcs, radio);
    REQUIRE(pdp.bins.size() == 1);
    CHECK(pdp.bins[0].power_dbm == doctest::Approx(-144.0));
    CHECK(channel::compute_pdp({mpc(5.0, -150.0)}, radio).bins.empty());
}

TEST_CASE("rms delay spread fixtures") {
    const double floor = -145.0;
    // single component: zero spread
    CHECK(channel::rms_delay_spread({mpc(37.0, -60.0)}, floor) == doctest::Approx(0.0));
    // two equal components 100 ns apart: half the separation
    CHECK(channel::rms_delay_spread({mpc(0.0, -60.0), mpc(100.0, -60.0)}, floor) ==
          doctest::Approx(50e-9).epsilon(1e-9));
    // three taps at 0/50/100 ns with powers 1, 1/2, 1/4 (0/-3.0103/-6.0206 dB)
    const std::vector<MultipathComponent> three = {
        mpc(0.0, 0.0), mpc(50.0, -10.0 * std::log10(2.0)), mpc(100.0, -20.0 * std::log10(2.0))};
    CHECK(channel::rms_delay_spread(three, floor) == doctest::Approx(36.42e-9).epsilon(0.0003));
    // components under the floor are ignored
    CHECK(channel::rms_delay_spread({mpc(0.0, -60.0), mpc(100.0, -150.0)}, floor) ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(channel::rms_delay_spread({}, floor), std::invalid_argument);
    CHECK_THROWS_AS(channel::rms_delay_spread({mpc(0.0, -150.0)}, floor), std::invalid_argument);
}

TEST_CASE("rms delay spread honours the relative threshold") {
    // taps 1 and 1/2 at 0/50 ns survive a 4 dB window; the -6.02 dB tap is cut
    const std::vector<MultipathComponent> three = {
        mpc(0.0, 0.0), mpc(50.0, -10.0 * std::log10(2.0)), mpc(100.0, -20.0 * std::log10(2.0))};
    const double mean = (0.5 * 50e-9) / 1.5;
    const double var = (0.5 * 50e-9 * 50e-9) / 1.5 - mean * mean;
    CHECK(channel::rms_delay_spread(three, -145.0, 4.0) ==
          doctest::Approx(std::sqrt(var)).epsilon(1e-9));
}

TEST_CASE("aoa spectrum bins powers by azimuth") {
    const double floor = -145.0;
    std::vector<MultipathComponent> mpcs = {
        mpc(0.0, -50.0, 2.0), mpc(1.0, -50.0, 4.9), // both in [0, 5)
        mpc(2.0, -70.0, 181.0),                     // bin [180, 185)
        mpc(3.0, -150.0, 90.0),                     // below floor, ignored
    };
    const auto spec = channel::aoa_spectrum(mpcs, 5.0, floor);
    REQUIRE(spec.size() == 72);
    CHECK(spec[0].az_deg == doctest::Approx(0.0));
    CHECK_FALSE(spec[0].empty);
    CHECK(spec[0].power_dbm == doctest::Approx(-50.0 + 10.0 * std::log10(2.0)).epsilon(1e-9));
    CHECK(spec[36].az_deg == doctest::Approx(180.0));
    CHECK(spec[36].power_dbm == doctest::Approx(-70.0));
    CHECK(spec[18].empty); // 90 degrees held only the sub-floor component
    int occupied = 0;
    for (const auto& b : spec)
        if (!b.empty) ++occupied;
    CHECK(occupied == 2);
    CHECK_THROWS_AS(channel::aoa_spectrum(mpcs, 7.0, floor), std::invalid_argument);
    CHECK_THROWS_AS(channel::aoa_spectrum(mpcs, 0.0, floor), std::invalid_argument);
}

TEST_CASE("empirical cdf steps at rank/n") {
    const auto cdf = channel::empirical_cdf({3.0, 1.0, 2.0});
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0].first == doctest::Approx(1.0));
    CHECK(cdf[0].second == doctest::Approx(1.0 / 3.0));
    CHECK(cdf[1].first == doctest::Approx(2.0));
    CHECK(cdf[1].second == doctest::Approx(2.0 / 3.0));
    CHECK(cdf[2].first == doctest::Approx(3.0));
    CHECK(cdf[2].second == doctest::Approx(1.0));
    CHECK_THROWS_AS(channel::empirical_cdf({}), std::invalid_argument);
}

TEST_CASE("simulate_link reproduces the free-space link in an empty room") {
    const auto s = empty_room(10, 8, 3);
    auto radio = radio_80mhz();
    radio.tx_power_dbm = 0.0;
    tracer::InteractionBudget b;
    b.max_reflections = 0;
    b.max_diffractions = 0;
    b.max_transmissions = 0;
    const Vec3 tx{2, 4, 1.5}, rx{2 + 6.1, 4, 1.5};
    const auto mpcs =
        channel::simulate_link(s, tx, rx, radio, b, calib::CalibrationConfig::disabled(), 20000);
    REQUIRE(mpcs.size() == 1);
    CHECK(mpcs[0].cls == MpcClass::LoS);
    CHECK(mpcs[0].power_dbm == doctest::Approx(-59.5).epsilon(0.001));
    CHECK(mpcs[0].delay_s == doctest::Approx(20.35e-9).epsilon(0.0005));
}

TEST_CASE("run_p2mp reports per-terminal errors instead of throwing") {
    const auto s = empty_room(10, 8, 3);
    const auto radio = radio_80mhz();
    tracer::InteractionBudget b;
    b.max_reflections = 1;
    b.max_diffractions = 0;
    b.max_transmissions = 0;
    const Vec3 bs{1, 1, 2.5};
    const std::vector<Vec3> uts = {{5, 4, 1.44}, {1, 1, 2.5} /* coincides with bs */};
    channel::P2mpOptions opts;
    opts.n_rays = 20000;
    const auto res =
        channel::run_p2mp(s, bs, uts, radio, b, calib::CalibrationConfig::disabled(), opts);
    REQUIRE(res.size() == 2);
    CHECK(res[0].error.empty());
    CHECK(res[0].los_class == geometry::Visibility::LoS);
    CHECK(!res[0].mpcs.empty());
    CHECK(std::isfinite(res[0].lsp.total_power_dbm));
    CHECK(res[0].lsp.aoa_spectrum.size() == 72);
    CHECK(!res[1].error.empty());
}

TEST_CASE("coverage map dimensions round up and cells carry power") {
    const auto s = empty_room(5, 4, 3);
    const auto radio = radio_80mhz();
    tracer::InteractionBudget b;
    b.max_reflections = 0;
    b.max_diffractions = 0;
    b.max_transmissions = 0;
    channel::CoverageOptions opts;
    opts.resolution_m = 2.0;
    opts.n_rays = 5000;
    const Vec3 bs{0.5, 0.5, 2.5};
    const auto map =
        channel::coverage_map(s, bs, radio, b, calib::CalibrationConfig::disabled(), opts);
    CHECK(map.nx == 3); // ceil(5/2)
    CHECK(map.ny == 2); // ceil(4/2)
    REQUIRE(map.cells.size() == 6);
    CHECK(map.cells[0].center.x == doctest::Approx(1.0));
    CHECK(map.cells[0].center.y == doctest::Approx(1.0));
    CHECK(map.cells[0].center.z == doctest::Approx(opts.ut_height_m));
    // row-major, y-major rows
    CHECK(map.cells[3].center.y == doctest::Approx(3.0));
    for (const auto& c : map.cells) {
        if (!s.inside_hall(c.center)) continue;
        CHECK_FALSE(c.below_floor);
        CHECK(c.power_dbm < 0.0);
    }
    channel::CoverageOptions bad = opts;
    bad.resolution_m = 0.0;
    CHECK_THROWS_AS(channel::coverage_map(s, bs, radio, b, calib::CalibrationConfig::disabled(),
                                          bad),
                    std::invalid_argument);
}
