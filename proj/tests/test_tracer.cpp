// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "ifray/calibrate.hpp"
#include "ifray/em.hpp"
#include "ifray/tracer.hpp"

using namespace ifray;
using tracer::InteractionBudget;
using tracer::PropagationPath;

namespace {

geometry::Scene room(double L, double W, double H) {
    geometry::Scene s;
    s.hall = {L, W, H};
    Material wall;
    wall.name = "wall";
    wall.permittivity = {{3.7e9, 5.24, 0.62}, {28e9, 5.24, 0.40}};
    wall.thickness_m = 0.3;
    wall.scattering_s = 0.3;
    s.materials["wall"] = wall;
    s.finalize();
    return s;
}

std::set<std::string> signatures(const std::vector<PropagationPath>& paths) {
    std::set<std::string> out;
    for (const auto& p : paths) out.insert(p.signature);
    return out;
}

} // namespace

TEST_CASE("launch directions are unit and evenly spread") {
    const auto dirs = tracer::launch_directions(5000);
    REQUIRE(dirs.size() == 5000);
    Vec3 mean{0, 0, 0};
    for (const auto& d : dirs) {
        CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
        mean = mean + d;
    }
    CHECK(mean.norm() / 5000.0 < 1e-3);
    // octant coverage: each of the 8 octants gets roughly 1/8 of rays
    std::map<int, int> oct;
    for (const auto& d : dirs) oct[(d.x > 0) * 4 + (d.y > 0) * 2 + (d.z > 0)]++;
    for (const auto& [o, c] : oct) CHECK(std::abs(c - 625) < 80);
    const auto again = tracer::launch_directions(5000); // deterministic
    for (std::size_t i = 0; i < dirs.size(); ++i)
        CHECK((again[i] - dirs[i]).norm() == 0.0);
}

TEST_CASE("single floor reflection matches the mirror image length") {
    geometry::Scene s = room(10, 8, 3);
    const Vec3 tx{2, 4, 1.85}, rx{7, 4, 1.44};
    InteractionBudget b;
    b.max_reflections = 1;
    b.max_diffractions = 0;
    b.max_transmissions = 0;
    const auto paths = tracer::trace_specular(s, tx, rx, b, 50000);

    // expected: LoS + 5 single reflections (floor, ceiling, 4 walls minus
    // any blocked; empty room keeps all)
    const auto sigs = signatures(paths);
    CHECK(sigs.count("L") == 1);
    CHECK(paths.size() == 7);

    const double mirror_len = std::sqrt(25.0 + (1.85 + 1.44) * (1.85 + 1.44));
    CHECK(mirror_len == doctest::Approx(5.985).epsilon(1e-3));
    bool found = false;
    for (const auto& p : paths) {
        if (p.interactions.size() == 1 &&
            p.interactions[0].kind == tracer::InteractionKind::Reflection &&
            std::abs(p.interactions[0].point.z) < 1e-6) {
            CHECK(p.unfolded_length == doctest::Approx(mirror_len).epsilon(1e-6));
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("image-method oracle equivalence in an empty room") {
    geometry::Scene s = room(10, 8, 3);
    em::RadioConfig radio;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> ux(0.8, 9.2), uy(0.8, 7.2), uz(0.4, 2.6);
    InteractionBudget b;
    b.max_reflections = 2;
    b.max_diffractions = 0;
    b.max_transmissions = 0;

    for (int trial = 0; trial < 3; ++trial) {
        const Vec3 tx{ux(rng), uy(rng), uz(rng)};
        const Vec3 rx{ux(rng), uy(rng), uz(rng)};
        const auto sbr = tracer::trace_specular(s, tx, rx, b, 100000);
        const auto oracle = tracer::image_method_paths(s, tx, rx, 2);
        REQUIRE(signatures(sbr) == signatures(oracle));

        std::map<std::string, const PropagationPath*> by_sig;
        for (const auto& p : oracle) by_sig[p.signature] = &p;
        for (const auto& p : sbr) {
            const auto* o = by_sig.at(p.signature);
            CHECK(std::abs(p.unfolded_length - o->unfolded_length) / em::kSpeedOfLight * 1e9 <
                  0.1);
        }
        const auto mp_sbr =
            tracer::assemble_mpcs(sbr, s, radio, calib::CalibrationConfig::disabled());
        const auto mp_oracle =
            tracer::assemble_mpcs(oracle, s, radio, calib::CalibrationConfig::disabled());
        REQUIRE(mp_sbr.size() == mp_oracle.size());
        for (std::size_t i = 0; i < mp_sbr.size(); ++i) {
            CHECK(mp_sbr[i].signature == mp_oracle[i].signature);
            CHECK(std::abs(mp_sbr[i].power_dbm - mp_oracle[i].power_dbm) < 0.5);
        }
    }

    // the oracle itself rejects cluttered scenes
    geometry::Scene cluttered = s;
    geometry::OrientedBox box;
    box.center = {5, 4, 1};
    box.half_extents = {1, 1, 1};
    box.material = "wall";
    cluttered.objects.push_back(box);
    cluttered.finalize();
    CHECK_THROWS_AS(tracer::image_method_paths(cluttered, {1, 1, 1}, {9, 7, 2}, 2),
                    std::invalid_argument);
}

TEST_CASE("budget monotonicity and compliance") {
    geometry::Scene s = room(10, 8, 3);
    geometry::OrientedBox box;
    box.center = {5, 4, 1};
    box.half_extents = {1.5, 1, 1};
    box.material = "wall";
    s.objects.push_back(box);
    s.finalize();
    const Vec3 tx{1.5, 4, 1.6}, rx{8.5, 4, 1.2}; // blocked by the box

    auto run = [&](int r, int d, int t) {
        InteractionBudget b;
        b.max_reflections = r;
        b.max_diffractions = d;
        b.max_transmissions = t;
        return tracer::trace_specular(s, tx, rx, b, 60000);
    };
    const auto s0 = signatures(run(0, 0, 0));
    const auto s1 = signatures(run(1, 0, 0));
    const auto s2 = signatures(run(2, 1, 0));
    const auto s3 = signatures(run(2, 1, 1));
    CHECK(std::includes(s1.begin(), s1.end(), s0.begin(), s0.end()));
    CHECK(std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()));
    CHECK(std::includes(s3.begin(), s3.end(), s2.begin(), s2.end()));

    // NLoS link: no LoS path, but diffraction and transmission get through
    CHECK(s0.count("L") == 0);
    bool has_d = false, has_t = false;
    for (const auto& sig : s3) {
        has_d = has_d || sig.find('D') != std::string::npos;
        has_t = has_t || sig.find('T') != std::string::npos;
    }
    CHECK(has_d);
    CHECK(has_t);

    // budget compliance inside every returned path
    for (const auto& p : run(2, 1, 1)) {
        int nr = 0, nd = 0, nt = 0;
        for (const auto& i : p.interactions) {
            nr += i.kind == tracer::InteractionKind::Reflection;
            nd += i.kind == tracer::InteractionKind::Diffraction;
            nt += i.kind == tracer::InteractionKind::Transmission;
        }
        CHECK(nr <= 2);
        CHECK(nd <= 1);
        CHECK(nt <= 1);
    }
}

TEST_CASE("diffraction point lies on the edge and satisfies the Keller cone") {
    geometry::Scene s = room(10, 8, 3);
    geometry::OrientedBox box;
    box.center = {5, 4, 1};
    box.half_extents = {0.2, 3.0, 1.0};
    box.material = "wall";
    s.objects.push_back(box);
    s.finalize();
    // rx sits high enough that the ray diffracted at the near top edge clears
    // the 0.4 m slab; with both ends low, every single-diffraction route would
    // re-enter the screen and no path exists.
    const Vec3 tx{2, 4, 1.0}, rx{8, 4, 2.6};

    InteractionBudget b;
    b.max_reflections = 0;
    b.max_diffractions = 1;
    b.max_transmissions = 0;
    const auto paths = tracer::trace_specular(s, tx, rx, b, 80000);
    REQUIRE(!paths.empty());
    bool checked = false;
    for (const auto& p : paths) {
        if (p.interactions.size() != 1 ||
            p.interactions[0].kind != tracer::InteractionKind::Diffraction)
            continue;
        const Vec3 q = p.interactions[0].point;
        // over the top of the screen, on the tx-side edge, centred by symmetry
        CHECK(q.z == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(q.x == doctest::Approx(4.8).epsilon(1e-6));
        CHECK(q.y == doctest::Approx(4.0).epsilon(1e-4));
        // Fermat: unfolded length equals the minimum over the edge
        const double got = (q - tx).norm() + (rx - q).norm();
        CHECK(p.unfolded_length == doctest::Approx(got).epsilon(1e-9));
        checked = true;
    }
    CHECK(checked);
}

TEST_CASE("transmission path crosses the box in a straight line") {
    geometry::Scene s = room(10, 8, 3);
    geometry::OrientedBox box;
    box.center = {5, 4, 1.25};
    box.half_extents = {0.3, 3.5, 1.25};
    box.material = "wall";
    s.objects.push_back(box);
    s.finalize();
    const Vec3 tx{2, 4, 1.2}, rx{8, 4, 1.2};
    CHECK(geometry::classify_visibility(s, tx, rx) == geometry::Visibility::NLoS);

    InteractionBudget b;
    b.max_reflections = 0;
    b.max_diffractions = 0;
    b.max_transmissions = 1;
    const auto paths = tracer::trace_specular(s, tx, rx, b, 40000);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].interactions.size() == 1);
    CHECK(paths[0].interactions[0].kind == tracer::InteractionKind::Transmission);
    CHECK(paths[0].unfolded_length == doctest::Approx((rx - tx).norm()).epsilon(1e-9));
    CHECK(paths[0].signature.find('T') != std::string::npos);
}

TEST_CASE("delays are reciprocal under tx/rx swap") {
    geometry::Scene s = room(10, 8, 3);
    InteractionBudget b;
    b.max_reflections = 2;
    const Vec3 a{2, 3, 1.5}, c{8, 6, 1.1};
    auto fw = tracer::trace_specular(s, a, c, b, 80000);
    auto bw = tracer::trace_specular(s, c, a, b, 80000);
    REQUIRE(fw.size() == bw.size());
    std::vector<double> df, dbk;
    for (const auto& p : fw) df.push_back(p.unfolded_length);
    for (const auto& p : bw) dbk.push_back(p.unfolded_length);
    std::sort(df.begin(), df.end());
    std::sort(dbk.begin(), dbk.end());
    for (std::size_t i = 0; i < df.size(); ++i)
        CHECK(df[i] == doctest::Approx(dbk[i]).epsilon(1e-9));
}

TEST_CASE("diffuse enumeration: tiling, visibility, classification") {
    geometry::Scene s = room(10, 8, 3);
    const Vec3 tx{2, 4, 1.5}, rx{8, 4, 1.5};
    const auto paths = tracer::enumerate_diffuse(s, tx, rx, 1.0, {"walls"});
    REQUIRE(!paths.empty());
    // 4 walls: 2 x of 10x3 (30 tiles) + 2 x of 8x3 (24 tiles) = 108 tiles,
    // all visible in an empty room
    CHECK(paths.size() == 108);
    for (const auto& p : paths) {
        REQUIRE(p.interactions.size() == 1);
        CHECK(p.interactions[0].kind == tracer::InteractionKind::Diffuse);
        CHECK(p.signature.rfind("S", 0) == 0);
        const Vec3 q = p.interactions[0].point;
        CHECK(p.unfolded_length ==
              doctest::Approx((q - tx).norm() + (rx - q).norm()).epsilon(1e-9));
    }

    // label filter: no machines in this scene -> empty
    CHECK(tracer::enumerate_diffuse(s, tx, rx, 1.0, {"machine"}).empty());

    // assembled diffuse components are DMPC and carry the tile gain
    em::RadioConfig radio;
    const auto mpcs = tracer::assemble_mpcs(paths, s, radio, calib::CalibrationConfig::disabled());
    REQUIRE(mpcs.size() == paths.size());
    for (const auto& m : mpcs) CHECK(m.cls == tracer::MpcClass::DMPC);
}

TEST_CASE("assembled LoS component matches the link budget anchors") {
    geometry::Scene s = room(20, 8, 3);
    const Vec3 tx{2, 4, 1.5}, rx{8.1, 4, 1.5}; // exactly 6.1 m
    InteractionBudget b;
    b.max_reflections = 0;
    b.max_diffractions = 0;
    b.max_transmissions = 0;

    for (auto [f_hz, expect_dbm] : {std::pair{3.7e9, -59.5}, std::pair{28e9, -77.1}}) {
        em::RadioConfig radio;
        radio.frequency_hz = f_hz;
        const auto paths = tracer::trace_specular(s, tx, rx, b, 1000);
        const auto mpcs =
            tracer::assemble_mpcs(paths, s, radio, calib::CalibrationConfig::disabled());
        REQUIRE(mpcs.size() == 1);
        CHECK(mpcs[0].cls == tracer::MpcClass::LoS);
        CHECK(mpcs[0].power_dbm == doctest::Approx(expect_dbm).epsilon(0.003));
        CHECK(mpcs[0].delay_s * 1e9 == doctest::Approx(20.35).epsilon(0.002));
        // AoD points from tx towards rx (+x), AoA back towards tx
        CHECK(mpcs[0].aod.az_rad == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(mpcs[0].aoa.az_rad == doctest::Approx(3.14159265).epsilon(1e-6));
    }
}

TEST_CASE("trace output is canonically ordered and deterministic") {
    geometry::Scene s = room(10, 8, 3);
    InteractionBudget b;
    b.max_reflections = 2;
    const Vec3 tx{2, 3, 1.5}, rx{8, 6, 1.1};
    const auto p1 = tracer::trace_specular(s, tx, rx, b, 60000);
    const auto p2 = tracer::trace_specular(s, tx, rx, b, 60000);
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        CHECK(p1[i].signature == p2[i].signature);
        CHECK(p1[i].unfolded_length == p2[i].unfolded_length);
        if (i > 0) {
            const bool ordered =
                p1[i - 1].unfolded_length < p1[i].unfolded_length ||
                (p1[i - 1].unfolded_length == p1[i].unfolded_length &&
                 p1[i - 1].signature < p1[i].signature);
            CHECK(ordered);
        }
    }
}
