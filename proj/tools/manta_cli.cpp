// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: Monte Carlo experiments, closed-form ceilings, beam pattern
// export, and the two-user closed-form placement with its certificate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manta/manta.hpp"

namespace {

using namespace manta;

// wavelength_m and carrier_ghz are interchangeable; giving both is an error.
double wavelength_from(manta::detail::ConfigMap& cm) {
    manta::detail::ConfigEntry carrier, lambda_entry;
    const bool has_carrier = cm.take("carrier_ghz", carrier);
    const bool has_lambda = cm.take("wavelength_m", lambda_entry);
    if (has_carrier && has_lambda)
        throw ConfigError("give only one of 'carrier_ghz' and 'wavelength_m'");
    double wavelength = speed_of_light / 30e9;
    if (has_carrier)
        wavelength = speed_of_light /
                     (manta::detail::ConfigMap::parse_double(carrier, "carrier_ghz") * 1e9);
    else if (has_lambda)
        wavelength = manta::detail::ConfigMap::parse_double(lambda_entry, "wavelength_m");
    if (!(wavelength > 0.0)) throw ConfigError("wavelength must be positive");
    return wavelength;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write '" + path + "'");
    return os;
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<int>& trials, const std::optional<std::string>& out_dir,
            bool quiet) {
    ExperimentConfig cfg = parse_experiment_config_file(config_path);
    if (seed) cfg.scenario.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (out_dir) cfg.out_dir = *out_dir;
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");

    const ExperimentRun run = run_experiment(cfg);
    const std::vector<std::string> files = write_experiment_outputs(cfg, run);
    if (!quiet) {
        write_ordering_report(std::cout, run.results);
        if (cfg.architecture == Architecture::analog)
            std::cout << "max modulus deviation: " << fmt_g17(run.max_modulus_dev) << '\n';
        std::cout << "wrote to " << cfg.out_dir << ":";
        for (const auto& f : files) std::cout << ' ' << f;
        std::cout << '\n';
    }
    return 0;
}

int cmd_bound(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::optional<int>& trials, const std::optional<std::string>& out_dir) {
    ExperimentConfig cfg = parse_experiment_config_file(config_path);
    if (seed) cfg.scenario.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (out_dir) cfg.out_dir = *out_dir;
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    const Scenario& sc = cfg.scenario;

    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = (std::filesystem::path(cfg.out_dir) / "bound.csv").string();
    auto os = open_out(path);
    os << "trial,value_linear,value_db\n";
    double acc = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
        Rng rng(derive_seed(sc.seed, stream_trial, static_cast<std::uint64_t>(t)));
        const auto users = sample_users(sc, rng);
        const double b =
            min_sinr_upper_bound(users, sc.subarrays, sc.nx * sc.ny, sc.power_mw, sc.noise_mw)
                .bound;
        os << t << ',' << fmt_g17(b) << ',' << fmt_g17(linear_to_db(b)) << '\n';
        acc += b;
    }
    const double mean = acc / cfg.trials;
    std::cout << "ceiling mean over " << cfg.trials << " trials: " << fmt_g17(mean)
              << " linear, " << fmt_g17(linear_to_db(mean)) << " dB\n";
    std::cout << "wrote " << path << '\n';
    return 0;
}

int cmd_beampattern(const std::string& geometry_path, const std::string& grid_path,
                    const std::string& out_path) {
    const ArrayGeometry geom = read_geometry_file(geometry_path);

    std::ifstream is(grid_path);
    if (!is) throw ConfigError("cannot open grid file '" + grid_path + "'");
    manta::detail::ConfigMap cm(is);
    const double wavelength = wavelength_from(cm);

    BeamGridSpec spec;
    spec.focus = Vec3(cm.take_double("focus_x", 0.0), cm.take_double("focus_y", -15.0),
                      cm.take_double("focus_z", 25.0));
    spec.x_min = cm.take_double("x_min", -50.0);
    spec.x_max = cm.take_double("x_max", 50.0);
    spec.nx = static_cast<int>(cm.take_int("nx", 201));
    spec.z_min = cm.take_double("z_min", 0.0);
    spec.z_max = cm.take_double("z_max", 50.0);
    spec.nz = static_cast<int>(cm.take_int("nz", 201));
    spec.y_plane = cm.take_double("y_plane", spec.focus.y());
    cm.finish();

    const CVec w = focus_weights(geom, spec.focus, wavelength);
    const BeamGrid grid = beam_pattern(geom, w, spec, wavelength);
    auto os = open_out(out_path);
    write_beam_csv(os, grid);
    std::cout << "wrote " << out_path << " (" << spec.nx << " x " << spec.nz
              << " grid, focus gain ceiling " << w.size() << ")\n";
    return 0;
}

int cmd_construct(const std::string& scene_path, const std::string& geometry_out,
                  const std::string& cert_out) {
    std::ifstream is(scene_path);
    if (!is) throw ConfigError("cannot open scene file '" + scene_path + "'");
    manta::detail::ConfigMap cm(is);

    const double wavelength = wavelength_from(cm);
    const std::string arch = cm.take_string("architecture", "digital");
    if (arch != "digital" && arch != "analog")
        throw ConfigError("architecture must be digital or analog, got '" + arch + "'");
    const int m_count = static_cast<int>(cm.take_int("subarrays", 8));
    RegionSpec region;
    region.side_A = manta::detail::exclusive_length(cm, "region_side_lambda", "region_side_m",
                                                    wavelength, 100.0 * wavelength);
    region.d_min = manta::detail::exclusive_length(cm, "d_min_lambda", "d_min_m", wavelength,
                                                   0.5 * wavelength);
    const double bs_height = cm.take_double("bs_height_m", 15.0);
    const double power_mw = dbm_to_mw(cm.take_double("power_dbm", 20.0));
    const double noise_mw = dbm_to_mw(cm.take_double("noise_dbm", -80.0));

    std::vector<UserChannel> users;
    for (int k = 1; k <= 2; ++k) {
        const std::string sx = "user" + std::to_string(k) + "_x";
        const std::string sz = "user" + std::to_string(k) + "_z";
        manta::detail::ConfigEntry ex, ez;
        if (!cm.take(sx, ex) || !cm.take(sz, ez))
            throw ConfigError("scene needs " + sx + " and " + sz);
        const Vec3 pos(manta::detail::ConfigMap::parse_double(ex, sx), -bs_height,
                       manta::detail::ConfigMap::parse_double(ez, sz));
        UserChannel u;
        u.anchors = {pos};
        u.prv.resize(1);
        u.prv(0) = cplx(wavelength / (4.0 * pi * pos.norm()), 0.0);
        users.push_back(std::move(u));
    }
    cm.finish();

    const bool digital = arch == "digital";
    const auto geom = digital ? construct_digital_apv(users, m_count, region, wavelength)
                              : construct_analog_apv(users, m_count, region, wavelength);
    if (!geom) {
        std::cout << "infeasible: the loci do not fit the region and spacing budget\n";
        return 1;
    }

    write_geometry_file(geometry_out, *geom);
    const ConditionReport rep = digital ? check_digital_condition(*geom, users, wavelength)
                                        : check_analog_condition(*geom, users, wavelength);
    {
        auto os = open_out(cert_out);
        write_condition_report(os, rep);
    }

    const double bound = min_sinr_upper_bound(users, m_count, 1, power_mw, noise_mw).bound;
    double achieved = 0.0;
    if (digital) {
        achieved = zf_min_sinr(*geom, users, power_mw, noise_mw, wavelength);
    } else {
        const CMat h = channel_matrix(*geom, users, wavelength);
        VecXd phases(m_count);
        for (int i = 0; i < m_count; ++i) phases(i) = std::arg(h(i, 0));
        achieved = min_snr(*geom, phases, users, power_mw, noise_mw, wavelength);
    }

    std::cout << "architecture: " << arch << '\n';
    std::cout << "certificate: " << (rep.pass ? "pass" : "FAIL") << " (tolerance "
              << fmt_g17(rep.tolerance) << ")\n";
    std::cout << "achieved: " << fmt_g17(linear_to_db(achieved)) << " dB\n";
    std::cout << "ceiling:  " << fmt_g17(linear_to_db(bound)) << " dB\n";
    std::cout << "gap:      " << fmt_g17(10.0 * std::log10(bound / achieved)) << " dB\n";
    std::cout << "wrote " << geometry_out << " and " << cert_out << '\n';
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"movable-antenna near-field beamforming toolkit"};
    app.require_subcommand(1);

    std::string config_path, geometry_path, grid_path, scene_path;
    std::string beam_out = "beam.csv";
    std::string geometry_out = "apv_geometry.txt";
    std::string cert_out = "apv_certificate.json";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out_dir;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "run a Monte Carlo experiment from a config");
    run->add_option("config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--trials", trials, "override the trial count");
    run->add_option("--out", out_dir, "override the output directory");
    run->add_flag("--quiet", quiet, "suppress the summary on stdout");

    CLI::App* bound = app.add_subcommand("bound", "closed-form per-trial ceilings");
    bound->add_option("config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    bound->add_option("--seed", seed, "override the config seed");
    bound->add_option("--trials", trials, "override the trial count");
    bound->add_option("--out", out_dir, "override the output directory");

    CLI::App* beam = app.add_subcommand("beampattern", "near-field gain map for a geometry");
    beam->add_option("geometry", geometry_path, "geometry table (m n x y rows)")
        ->required()
        ->check(CLI::ExistingFile);
    beam->add_option("grid", grid_path, "grid spec (key = value)")
        ->required()
        ->check(CLI::ExistingFile);
    beam->add_option("--out", beam_out, "output CSV path");

    CLI::App* construct =
        app.add_subcommand("construct-apv", "closed-form two-user placement + certificate");
    construct->add_option("scene", scene_path, "scene spec (key = value)")
        ->required()
        ->check(CLI::ExistingFile);
    construct->add_option("--geometry", geometry_out, "output geometry path");
    construct->add_option("--certificate", cert_out, "output certificate path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, seed, trials, out_dir, quiet);
        if (*bound) return cmd_bound(config_path, seed, trials, out_dir);
        if (*beam) return cmd_beampattern(geometry_path, grid_path, beam_out);
        if (*construct) return cmd_construct(scene_path, geometry_out, cert_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
