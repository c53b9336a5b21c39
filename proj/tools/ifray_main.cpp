// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ifray/calibrate_fit.hpp"
#include "ifray/channel.hpp"
#include "ifray/io.hpp"
#include "ifray/paper_scene.hpp"
#include "ifray/scene_io.hpp"

namespace fs = std::filesystem;
using namespace ifray;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitEmptyObjective = 3;
constexpr const char* kVersion = "ifray 1.0.0";

struct CliError {
    int code;
    std::string message;
};

tracer::InteractionBudget parse_budget(const std::string& s) {
    static const std::regex re(R"(^(\d+)r(\d+)d(\d+)t$)");
    std::smatch m;
    if (!std::regex_match(s, m, re))
        throw CliError{kExitUsage, "invalid budget '" + s + "': expected <R>r<D>d<T>t, e.g. 2r1d1t"};
    tracer::InteractionBudget b;
    b.max_reflections = std::stoi(m[1]);
    b.max_diffractions = std::stoi(m[2]);
    b.max_transmissions = std::stoi(m[3]);
    return b;
}

Vec3 parse_xyz(const std::vector<double>& v, const char* what) {
    if (v.size() != 3) throw CliError{kExitUsage, std::string(what) + ": expected 3 coordinates"};
    return {v[0], v[1], v[2]};
}

geometry::Scene load_scene_checked(const std::string& path) {
    if (!fs::exists(path)) throw CliError{kExitUsage, "scene file not found: " + path};
    return geometry::load_scene_file(path);
}

calib::CalibrationConfig resolve_calib(const std::string& spec) {
    if (spec.empty()) return calib::CalibrationConfig::disabled();
    if (spec != "paper" && !fs::exists(spec))
        throw CliError{kExitUsage, "calibration config not found: " + spec};
    return calib::load_config_file(spec);
}

// Shared radio/budget/scene flags for trace-like subcommands.
struct RunFlags {
    std::string scene_path;
    std::vector<double> bs;
    std::vector<double> ut;
    std::string preset_positions;
    double freq_hz = 3.7e9;
    double bw_hz = 80e6;
    double tx_power_dbm = 0.0;
    double noise_floor_dbm = -145.0;
    std::string budget_str = "2r1d1t";
    std::vector<std::string> diffuse_surfaces;
    bool no_diffuse = false;
    std::string calib_spec;
    std::string out_dir = ".";
    int n_rays = 50000;
    unsigned seed = 1;

    void add_radio(CLI::App* cmd) {
        cmd->add_option("--freq", freq_hz, "Carrier frequency [Hz]")->capture_default_str();
        cmd->add_option("--bw", bw_hz, "Bandwidth [Hz]")->capture_default_str();
        cmd->add_option("--tx-power", tx_power_dbm, "Tx power [dBm]")->capture_default_str();
        cmd->add_option("--noise-floor", noise_floor_dbm, "Noise floor [dBm]")
            ->capture_default_str();
    }

    em::RadioConfig radio() const {
        em::RadioConfig r;
        r.frequency_hz = freq_hz;
        r.bandwidth_hz = bw_hz;
        r.tx_power_dbm = tx_power_dbm;
        r.noise_floor_dbm = noise_floor_dbm;
        r.validate();
        return r;
    }

    tracer::InteractionBudget budget() const {
        tracer::InteractionBudget b = parse_budget(budget_str);
        b.diffuse_enabled = !diffuse_surfaces.empty() && !no_diffuse;
        if (!diffuse_surfaces.empty()) b.diffuse_surfaces = diffuse_surfaces;
        return b;
    }
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError{kExitRuntime, "cannot create output directory: " + dir};
}

nlohmann::ordered_json manifest_base(const RunFlags& f) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["scene"] = f.scene_path;
    j["frequency_hz"] = f.freq_hz;
    j["bandwidth_hz"] = f.bw_hz;
    j["tx_power_dbm"] = f.tx_power_dbm;
    j["noise_floor_dbm"] = f.noise_floor_dbm;
    j["budget"] = f.budget_str;
    j["diffuse_surfaces"] = f.diffuse_surfaces;
    j["no_diffuse"] = f.no_diffuse;
    j["calibration"] = f.calib_spec.empty() ? "disabled" : f.calib_spec;
    j["n_rays"] = f.n_rays;
    j["seed"] = f.seed;
    return j;
}

int cmd_scene_build(const std::string& preset, unsigned seed, const std::string& out) {
    if (preset != "paper-hall")
        throw CliError{kExitUsage, "unknown preset '" + preset + "' (available: paper-hall)"};
    geometry::Scene scene = geometry::build_paper_scene(seed);
    io::write_file(out, geometry::save_scene(scene));
    std::printf("wrote %s: %zu objects, clutter density %.2f%%\n", out.c_str(),
                scene.objects.size(), 100.0 * geometry::clutter_density(scene));
    return kExitOk;
}

int cmd_scene_validate(const std::string& path) {
    try {
        geometry::Scene scene = load_scene_checked(path);
        std::printf("%s: valid (%zu objects, clutter density %.2f%%)\n", path.c_str(),
                    scene.objects.size(), 100.0 * geometry::clutter_density(scene));
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "%s: invalid: %s\n", path.c_str(), e.what());
        return kExitUsage;
    }
}

int cmd_trace(const RunFlags& f) {
    geometry::Scene scene = load_scene_checked(f.scene_path);
    const calib::CalibrationConfig cal = resolve_calib(f.calib_spec);
    if (!cal.material_overrides.empty()) scene = calib::swap_materials(scene, cal);

    Vec3 bs;
    std::vector<Vec3> uts;
    if (f.preset_positions == "paper") {
        const auto pos = geometry::paper_positions();
        bs = pos.bs;
        uts = pos.uts;
    } else if (!f.preset_positions.empty()) {
        throw CliError{kExitUsage, "unknown position preset '" + f.preset_positions + "'"};
    } else {
        if (f.bs.empty() || f.ut.empty())
            throw CliError{kExitUsage, "provide --bs and --ut, or --preset-positions paper"};
        bs = parse_xyz(f.bs, "--bs");
        uts.push_back(parse_xyz(f.ut, "--ut"));
    }

    const em::RadioConfig radio = f.radio();
    const tracer::InteractionBudget budget = f.budget();
    ensure_out_dir(f.out_dir);

    channel::P2mpOptions opts;
    opts.n_rays = f.n_rays;
    std::vector<channel::UtResult> results;
    try {
        results = channel::run_p2mp(scene, bs, uts, radio, budget, cal, opts);
    } catch (const std::exception& e) {
        throw CliError{kExitRuntime, std::string("trace failed: ") + e.what()};
    }

    // Flush per-UT MPC files even when some UTs failed.
    int failures = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "mpc_ut%03zu.jsonl", i + 1);
        io::write_file((fs::path(f.out_dir) / name).string(), io::mpcs_jsonl(results[i].mpcs));
        if (!results[i].error.empty()) {
            std::fprintf(stderr, "ut %zu: %s\n", i + 1, results[i].error.c_str());
            ++failures;
        }
    }
    io::write_file((fs::path(f.out_dir) / "summary.csv").string(), io::lsp_summary_csv(results));

    nlohmann::ordered_json manifest = manifest_base(f);
    manifest["bs"] = {bs.x, bs.y, bs.z};
    manifest["preset_positions"] = f.preset_positions;
    manifest["ut_count"] = uts.size();
    io::write_file((fs::path(f.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

    std::printf("traced %zu position(s), %d failure(s); outputs in %s\n", uts.size(), failures,
                f.out_dir.c_str());
    return failures == static_cast<int>(results.size()) && !results.empty() ? kExitRuntime
                                                                            : kExitOk;
}

int cmd_extract_pdp(const std::string& mpc_path, double bw_hz, double noise_floor_dbm,
                    const std::string& out) {
    if (!fs::exists(mpc_path)) throw CliError{kExitUsage, "MPC file not found: " + mpc_path};
    em::RadioConfig radio;
    radio.bandwidth_hz = bw_hz;
    radio.noise_floor_dbm = noise_floor_dbm;
    const auto mpcs = io::load_mpcs_jsonl(mpc_path);
    io::write_file(out, io::pdp_csv(channel::compute_pdp(mpcs, radio)));
    std::printf("wrote %s\n", out.c_str());
    return kExitOk;
}

int cmd_extract_aoa(const std::string& mpc_path, double bin_deg, double noise_floor_dbm,
                    const std::string& out) {
    if (!fs::exists(mpc_path)) throw CliError{kExitUsage, "MPC file not found: " + mpc_path};
    const auto mpcs = io::load_mpcs_jsonl(mpc_path);
    io::write_file(out, io::aoa_csv(channel::aoa_spectrum(mpcs, bin_deg, noise_floor_dbm)));
    std::printf("wrote %s\n", out.c_str());
    return kExitOk;
}

int cmd_extract_ds_cdf(const std::vector<std::string>& mpc_paths, double noise_floor_dbm,
                       const std::string& out_dir) {
    std::vector<double> ds_los, ds_nlos;
    for (const auto& path : mpc_paths) {
        if (!fs::exists(path)) throw CliError{kExitUsage, "MPC file not found: " + path};
        const auto mpcs = io::load_mpcs_jsonl(path);
        bool has_los = false;
        for (const auto& m : mpcs) has_los = has_los || m.cls == tracer::MpcClass::LoS;
        double ds;
        try {
            ds = channel::rms_delay_spread(mpcs, noise_floor_dbm);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "%s: skipped: %s\n", path.c_str(), e.what());
            continue;
        }
        (has_los ? ds_los : ds_nlos).push_back(ds);
    }
    ensure_out_dir(out_dir);
    io::write_file((fs::path(out_dir) / "ds_cdf_los.csv").string(),
                   io::ds_cdf_csv(channel::empirical_cdf(std::move(ds_los))));
    io::write_file((fs::path(out_dir) / "ds_cdf_nlos.csv").string(),
                   io::ds_cdf_csv(channel::empirical_cdf(std::move(ds_nlos))));
    std::printf("wrote ds_cdf_los.csv and ds_cdf_nlos.csv in %s\n", out_dir.c_str());
    return kExitOk;
}

int cmd_coverage(const RunFlags& f, double res_m, double ut_height_m, double pgm_min_dbm,
                 double pgm_max_dbm) {
    if (res_m <= 0.0) throw CliError{kExitUsage, "--res must be positive"};
    geometry::Scene scene = load_scene_checked(f.scene_path);
    const calib::CalibrationConfig cal = resolve_calib(f.calib_spec);
    if (!cal.material_overrides.empty()) scene = calib::swap_materials(scene, cal);
    if (f.bs.empty()) throw CliError{kExitUsage, "--bs is required"};
    const Vec3 bs = parse_xyz(f.bs, "--bs");

    channel::CoverageOptions opts;
    opts.resolution_m = res_m;
    opts.ut_height_m = ut_height_m;
    opts.n_rays = f.n_rays;
    channel::CoverageMap map;
    try {
        map = channel::coverage_map(scene, bs, f.radio(), f.budget(), cal, opts);
    } catch (const std::exception& e) {
        throw CliError{kExitRuntime, std::string("coverage failed: ") + e.what()};
    }
    ensure_out_dir(f.out_dir);
    io::write_file((fs::path(f.out_dir) / "coverage.csv").string(), io::coverage_csv(map));
    io::write_file((fs::path(f.out_dir) / "coverage.pgm").string(),
                   io::coverage_pgm(map, pgm_min_dbm, pgm_max_dbm));
    std::printf("coverage grid %dx%d written to %s\n", map.nx, map.ny, f.out_dir.c_str());
    return kExitOk;
}

int cmd_calibrate(const RunFlags& f, const std::string& ref_path, int subsample,
                  const std::string& out) {
    if (!fs::exists(ref_path)) throw CliError{kExitUsage, "reference file not found: " + ref_path};
    const calib::MeasurementReference ref = calib::load_reference_file(ref_path);
    if (ref.empty()) throw CliError{kExitEmptyObjective, "reference has no populated components"};

    geometry::Scene scene = load_scene_checked(f.scene_path);
    const calib::CalibrationConfig base = resolve_calib(f.calib_spec);
    if (!base.material_overrides.empty()) scene = calib::swap_materials(scene, base);

    Vec3 bs;
    std::vector<Vec3> uts;
    if (f.preset_positions == "paper" || f.preset_positions.empty()) {
        const auto pos = geometry::paper_positions();
        bs = pos.bs;
        // Even subsample across both the LoS (1-38) and NLoS (39-75) blocks.
        if (subsample <= 0 || subsample >= static_cast<int>(pos.uts.size())) {
            uts = pos.uts;
        } else {
            const int half = subsample / 2;
            for (int i = 0; i < half; ++i) uts.push_back(pos.uts[(i * 38) / half]);
            for (int i = 0; i < subsample - half; ++i)
                uts.push_back(pos.uts[38 + (i * 37) / (subsample - half)]);
        }
    } else {
        throw CliError{kExitUsage, "unknown position preset '" + f.preset_positions + "'"};
    }
    if (!f.bs.empty()) bs = parse_xyz(f.bs, "--bs");

    calib::FitResult fit;
    try {
        fit = calib::fit_offsets(scene, bs, uts, f.radio(), f.budget(), ref, {}, f.n_rays);
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitEmptyObjective, e.what()};
    } catch (const std::exception& e) {
        throw CliError{kExitRuntime, std::string("calibration trace failed: ") + e.what()};
    }

    nlohmann::ordered_json j;
    j["config"] = nlohmann::json::parse(calib::save_config(fit.config));
    j["score"] = fit.score;
    j["evaluations"] = fit.evaluations;
    nlohmann::ordered_json iters = nlohmann::ordered_json::array();
    for (const auto& it : fit.iterations)
        iters.push_back({{"diffraction_db", it.diffraction_db},
                         {"diffuse_db", it.diffuse_db},
                         {"score", it.score}});
    j["iterations"] = iters;
    io::write_file(out, j.dump(2) + "\n");
    std::printf("best offsets: diffraction %.1f dB, diffuse %.1f dB (score %.4f, %d evals)\n",
                fit.config.diffraction_offset_db, fit.config.diffuse_offset_db, fit.score,
                fit.evaluations);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ifray: deterministic ray-launching radio propagation simulator"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "JSON/TOML config file; flags override file values");
    app.require_subcommand(1);

    // scene {build, validate}
    auto* scene = app.add_subcommand("scene", "Scene construction and validation");
    scene->require_subcommand(1);
    auto* sbuild = scene->add_subcommand("build", "Build a preset scene");
    std::string preset = "paper-hall", scene_out = "scene.json";
    unsigned build_seed = 1;
    sbuild->add_option("--preset", preset, "Scene preset")->capture_default_str();
    sbuild->add_option("--seed", build_seed, "Layout jitter seed")->capture_default_str();
    sbuild->add_option("-o,--out", scene_out, "Output scene JSON")->capture_default_str();
    auto* svalidate = scene->add_subcommand("validate", "Validate a scene file");
    std::string validate_path;
    svalidate->add_option("file", validate_path, "Scene JSON path")->required();

    // trace
    auto* trace = app.add_subcommand("trace", "Trace P2P or P2MP links");
    RunFlags tf;
    trace->add_option("--scene", tf.scene_path, "Scene JSON path")->required();
    trace->add_option("--bs", tf.bs, "BS position x y z [m]")->expected(3);
    trace->add_option("--ut", tf.ut, "UT position x y z [m]")->expected(3);
    trace->add_option("--preset-positions", tf.preset_positions, "Position preset (paper)");
    tf.add_radio(trace);
    trace->add_option("--budget", tf.budget_str, "Interaction budget <R>r<D>d<T>t")
        ->capture_default_str();
    trace->add_option("--diffuse", tf.diffuse_surfaces,
                      "Enable diffuse scattering from these surfaces")
        ->delimiter(',');
    trace->add_flag("--no-diffuse", tf.no_diffuse, "Disable diffuse scattering");
    trace->add_option("--calib", tf.calib_spec, "Calibration config path or 'paper'");
    trace->add_option("--out", tf.out_dir, "Output directory")->capture_default_str();
    trace->add_option("--n-rays", tf.n_rays, "Launched rays per link")->capture_default_str();
    trace->add_option("--seed", tf.seed, "Run seed (recorded in manifest)")->capture_default_str();

    // extract {pdp, aoa, ds-cdf}
    auto* extract = app.add_subcommand("extract", "Extract channel statistics from MPC files");
    extract->require_subcommand(1);
    auto* epdp = extract->add_subcommand("pdp", "Power delay profile CSV");
    std::string pdp_mpc, pdp_out = "pdp.csv";
    double pdp_bw = 80e6, pdp_floor = -145.0;
    epdp->add_option("--mpc", pdp_mpc, "MPC JSONL path")->required();
    epdp->add_option("--bw", pdp_bw, "Bandwidth [Hz]")->capture_default_str();
    epdp->add_option("--noise-floor", pdp_floor, "Noise floor [dBm]")->capture_default_str();
    epdp->add_option("-o,--out", pdp_out, "Output CSV")->capture_default_str();
    auto* eaoa = extract->add_subcommand("aoa", "Azimuth AoA spectrum CSV");
    std::string aoa_mpc, aoa_out = "aoa.csv";
    double aoa_bin = 5.0, aoa_floor = -145.0;
    eaoa->add_option("--mpc", aoa_mpc, "MPC JSONL path")->required();
    eaoa->add_option("--bin", aoa_bin, "Azimuth bin width [deg]")->capture_default_str();
    eaoa->add_option("--noise-floor", aoa_floor, "Noise floor [dBm]")->capture_default_str();
    eaoa->add_option("-o,--out", aoa_out, "Output CSV")->capture_default_str();
    auto* ecdf = extract->add_subcommand("ds-cdf", "RMS delay spread CDFs per LoS class");
    std::vector<std::string> cdf_mpcs;
    std::string cdf_out_dir = ".";
    double cdf_floor = -145.0;
    ecdf->add_option("--mpc", cdf_mpcs, "MPC JSONL paths")->required();
    ecdf->add_option("--noise-floor", cdf_floor, "Noise floor [dBm]")->capture_default_str();
    ecdf->add_option("--out", cdf_out_dir, "Output directory")->capture_default_str();

    // coverage
    auto* coverage = app.add_subcommand("coverage", "Received-power grid over the hall floor");
    RunFlags cf;
    cf.n_rays = 20000;
    double cov_res = 2.0, cov_height = 1.44, pgm_min = -120.0, pgm_max = -40.0;
    coverage->add_option("--scene", cf.scene_path, "Scene JSON path")->required();
    coverage->add_option("--bs", cf.bs, "BS position x y z [m]")->expected(3)->required();
    cf.add_radio(coverage);
    coverage->add_option("--budget", cf.budget_str, "Interaction budget <R>r<D>d<T>t")
        ->capture_default_str();
    coverage->add_option("--calib", cf.calib_spec, "Calibration config path or 'paper'");
    coverage->add_option("--res", cov_res, "Grid resolution [m]")->capture_default_str();
    coverage->add_option("--ut-height", cov_height, "Receiver height [m]")->capture_default_str();
    coverage->add_option("--n-rays", cf.n_rays, "Launched rays per cell")->capture_default_str();
    coverage->add_option("--pgm-min", pgm_min, "PGM lower bound [dBm]")->capture_default_str();
    coverage->add_option("--pgm-max", pgm_max, "PGM upper bound [dBm]")->capture_default_str();
    coverage->add_option("--out", cf.out_dir, "Output directory")->capture_default_str();

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Fit per-class dB offsets to a reference");
    RunFlags kf;
    std::string ref_path, calib_out = "calibration.json";
    int subsample = 10;
    calibrate->add_option("--scene", kf.scene_path, "Scene JSON path")->required();
    calibrate->add_option("--ref", ref_path, "Measurement reference JSON")->required();
    calibrate->add_option("--bs", kf.bs, "BS position x y z [m]")->expected(3);
    calibrate->add_option("--preset-positions", kf.preset_positions, "Position preset (paper)");
    calibrate->add_option("--subsample", subsample, "Number of UT positions used")
        ->capture_default_str();
    kf.add_radio(calibrate);
    calibrate->add_option("--budget", kf.budget_str, "Interaction budget <R>r<D>d<T>t")
        ->capture_default_str();
    calibrate->add_option("--diffuse", kf.diffuse_surfaces,
                          "Enable diffuse scattering from these surfaces")
        ->delimiter(',');
    calibrate->add_option("--calib", kf.calib_spec,
                          "Base config for material overrides (path or 'paper')");
    calibrate->add_option("--n-rays", kf.n_rays, "Launched rays per link")->capture_default_str();
    calibrate->add_option("-o,--out", calib_out, "Output config JSON")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sbuild->parsed()) return cmd_scene_build(preset, build_seed, scene_out);
        if (svalidate->parsed()) return cmd_scene_validate(validate_path);
        if (trace->parsed()) return cmd_trace(tf);
        if (epdp->parsed()) return cmd_extract_pdp(pdp_mpc, pdp_bw, pdp_floor, pdp_out);
        if (eaoa->parsed()) return cmd_extract_aoa(aoa_mpc, aoa_bin, aoa_floor, aoa_out);
        if (ecdf->parsed()) return cmd_extract_ds_cdf(cdf_mpcs, cdf_floor, cdf_out_dir);
        if (coverage->parsed()) return cmd_coverage(cf, cov_res, cov_height, pgm_min, pgm_max);
        if (calibrate->parsed()) return cmd_calibrate(kf, ref_path, subsample, calib_out);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
