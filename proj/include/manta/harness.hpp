// SPDX-License-Identifier: Apache-2.0
//
// manta - movable-antenna near-field beamforming toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
// except in compliance with the License. You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the
// License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
// either express or implied. See the License for the specific language governing permissions
// and limitations under the License.
// ------------------------------------------------------------------------------------------------
//
// Experiment layer: user-drop scenarios, beam-pattern grids, the key=value config format and
// the seeded Monte Carlo runner comparing movable-antenna schemes against fixed benchmarks.
//
// Frame convention: the array lives in the x-y plane at z = 0 with the boresight along +z;
// users and scatterers sit on the ground plane y = -bs_height, so a ground point (x, z) maps
// to the 3D position (x, -bs_height, z).

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "manta/closedform.hpp"

namespace manta {

enum class Distribution { annulus, ring, hotspots };

inline const char* to_string(Distribution d) {
    switch (d) {
        case Distribution::annulus: return "annulus";
        case Distribution::ring: return "ring";
        case Distribution::hotspots: return "hotspots";
    }
    return "?";
}

struct Scenario {
    double wavelength = speed_of_light / 30e9;
    double power_mw = dbm_to_mw(20.0);
    double noise_mw = dbm_to_mw(-80.0);
    RegionSpec region{100.0 * speed_of_light / 30e9, 0.5 * speed_of_light / 30e9};
    double bs_height = 15.0;
    int subarrays = 64; // M
    int nx = 1, ny = 1; // subarray is an nx x ny half-wavelength grid, N = nx*ny
    int users = 32;     // K
    Distribution distribution = Distribution::annulus;
    double r_min = 5.0, r_max = 50.0;       // annulus / ring radii, meters
    Vec2 hotspot1{-25.0, 40.0};             // ground (x, z)
    Vec2 hotspot2{25.0, 40.0};
    double hotspot_radius = 2.5;
    int nlos_paths = 0;                     // extra paths per user
    double nlos_amp_ratio = 0.1;            // NLoS amplitude relative to the user's LoS
    std::uint64_t seed = 1;
};

inline void validate_scenario(const Scenario& sc) {
    if (!(sc.wavelength > 0.0) || !(sc.power_mw > 0.0) || !(sc.noise_mw > 0.0))
        throw ConfigError("scenario: wavelength, power and noise must be positive");
    validate_region(sc.region);
    if (!(sc.bs_height > 0.0)) throw BadDistributionParams("scenario: bs_height must be positive");
    if (sc.subarrays < 1 || sc.nx < 1 || sc.ny < 1 || sc.users < 1)
        throw ConfigError("scenario: subarrays, nx, ny, users must be >= 1");
    if (sc.distribution != Distribution::hotspots) {
        if (!(sc.r_min > 0.0) || !(sc.r_max >= sc.r_min))
            throw BadDistributionParams("scenario: need 0 < r_min <= r_max");
    } else if (!(sc.hotspot_radius > 0.0)) {
        throw BadDistributionParams("scenario: hotspot_radius must be positive");
    }
    if (sc.nlos_paths < 0 || !(sc.nlos_amp_ratio >= 0.0))
        throw BadDistributionParams("scenario: nlos_paths >= 0, nlos_amp_ratio >= 0 required");
}

// Half-wavelength nx x ny grid of element offsets, centered on the subarray center.
inline std::vector<Vec2> subarray_offsets(int nx, int ny, double wavelength) {
    std::vector<Vec2> offsets;
    offsets.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            offsets.emplace_back((ix - (nx - 1) / 2.0) * wavelength / 2.0,
                                 (iy - (ny - 1) / 2.0) * wavelength / 2.0);
    return offsets;
}

namespace detail {

inline Vec2 draw_ground_point(const Scenario& sc, Rng& rng, int user_index) {
    if (sc.distribution == Distribution::hotspots) {
        const Vec2 center =
            user_index < (sc.users + 1) / 2 ? sc.hotspot1 : sc.hotspot2; // odd K favors the first
        const double r = sc.hotspot_radius * std::sqrt(rng.uniform());
        const double phi = rng.angle();
        return center + Vec2(r * std::cos(phi), r * std::sin(phi));
    }
    // Uniform over the annulus area, restricted to the front semicircle z >= 0.
    const double r = std::sqrt(sc.r_min * sc.r_min +
                               rng.uniform() * (sc.r_max * sc.r_max - sc.r_min * sc.r_min));
    const double theta = pi * rng.uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace detail

// Draw K users on the ground plane. Per user, in fixed order: ground position, LoS phase,
// then per NLoS path a scatterer position from the same distribution and a phase. LoS
// amplitude is wavelength / (4 pi ||s||); NLoS amplitudes are nlos_amp_ratio times that.
inline std::vector<UserChannel> sample_users(const Scenario& sc, Rng& rng) {
    validate_scenario(sc);
    std::vector<UserChannel> users;
    users.reserve(sc.users);
    for (int k = 0; k < sc.users; ++k) {
        const Vec2 g = detail::draw_ground_point(sc, rng, k);
        const Vec3 pos(g.x(), -sc.bs_height, g.y());
        const double los_amp = sc.wavelength / (4.0 * pi * pos.norm());
        UserChannel u;
        u.anchors.push_back(pos);
        u.prv.resize(1 + sc.nlos_paths);
        u.prv(0) = std::polar(los_amp, rng.angle());
        for (int l = 0; l < sc.nlos_paths; ++l) {
            const Vec2 gs = detail::draw_ground_point(sc, rng, k);
            u.anchors.emplace_back(gs.x(), -sc.bs_height, gs.y());
            u.prv(1 + l) = std::polar(sc.nlos_amp_ratio * los_amp, rng.angle());
        }
        users.push_back(std::move(u));
    }
    return users;
}

// ------------------------------------------------------------------ beam patterns

struct BeamGridSpec {
    Vec3 focus{0.0, 0.0, 0.0};
    double x_min = 0.0, x_max = 0.0;
    int nx = 1;
    double z_min = 0.0, z_max = 0.0;
    int nz = 1;
    double y_plane = 0.0;
};

struct BeamGrid {
    BeamGridSpec spec;
    Eigen::MatrixXd gains; // (ix, iz), linear; NaN where a grid point touches an element
};

// Unit-norm weights matched to the near-field response at the focus: gain there equals MN.
inline CVec focus_weights(const ArrayGeometry& geom, const Vec3& focus, double wavelength) {
    const std::vector<Vec3> elems = element_positions(geom);
    const double k_wave = two_pi / wavelength;
    const double mod = 1.0 / std::sqrt(static_cast<double>(elems.size()));
    CVec w(static_cast<Eigen::Index>(elems.size()));
    for (std::size_t e = 0; e < elems.size(); ++e) {
        const double d = (elems[e] - focus).norm();
        if (d == 0.0) throw ZeroDistance("focus_weights: focus coincides with an element");
        w(static_cast<Eigen::Index>(e)) = std::polar(mod, k_wave * d);
    }
    return w;
}

inline BeamGrid beam_pattern(const ArrayGeometry& geom, const CVec& w, const BeamGridSpec& spec,
                             double wavelength) {
    const std::vector<Vec3> elems = element_positions(geom);
    if (w.size() != static_cast<Eigen::Index>(elems.size()))
        throw DimensionMismatch("beam_pattern: weight vector must have MN entries");
    if (spec.nx < 1 || spec.nz < 1 || spec.x_max < spec.x_min || spec.z_max < spec.z_min)
        throw ConfigError("beam_pattern: bad grid spec");
    const double k_wave = two_pi / wavelength;
    BeamGrid out;
    out.spec = spec;
    out.gains.resize(spec.nx, spec.nz);
    for (int i = 0; i < spec.nx; ++i) {
        const double x =
            spec.nx == 1 ? spec.x_min : spec.x_min + i * (spec.x_max - spec.x_min) / (spec.nx - 1);
        for (int j = 0; j < spec.nz; ++j) {
            const double z = spec.nz == 1
                                 ? spec.z_min
                                 : spec.z_min + j * (spec.z_max - spec.z_min) / (spec.nz - 1);
            const Vec3 s(x, spec.y_plane, z);
            cplx acc = 0.0;
            bool degenerate = false;
            for (std::size_t e = 0; e < elems.size(); ++e) {
                const double d = (elems[e] - s).norm();
                if (d == 0.0) {
                    degenerate = true;
                    break;
                }
                acc += std::polar(1.0, -k_wave * d) * w(static_cast<Eigen::Index>(e));
            }
            out.gains(i, j) =
                degenerate ? std::numeric_limits<double>::quiet_NaN() : std::norm(acc);
        }
    }
    return out;
}

// CSV: x, z, gain_db
inline void write_beam_csv(std::ostream& os, const BeamGrid& grid) {
    os << "x,z,gain_db\n";
    const auto& sp = grid.spec;
    for (int i = 0; i < sp.nx; ++i) {
        const double x =
            sp.nx == 1 ? sp.x_min : sp.x_min + i * (sp.x_max - sp.x_min) / (sp.nx - 1);
        for (int j = 0; j < sp.nz; ++j) {
            const double z =
                sp.nz == 1 ? sp.z_min : sp.z_min + j * (sp.z_max - sp.z_min) / (sp.nz - 1);
            os << fmt_g17(x) << ',' << fmt_g17(z) << ',' << fmt_g17(linear_to_db(grid.gains(i, j)))
               << '\n';
        }
    }
}

// ------------------------------------------------------------------ experiment plumbing

enum class Architecture { digital, analog };

inline const char* to_string(Architecture a) {
    return a == Architecture::digital ? "digital" : "analog";
}

enum class Scheme {
    ma_instant,
    ma_statistical,
    dense_upa,
    sparse_upa,
    h_sparse_upa,
    v_sparse_upa,
    h_sparse_ula,
    v_sparse_ula,
    upper_bound
};

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::ma_instant: return "ma_instant";
        case Scheme::ma_statistical: return "ma_statistical";
        case Scheme::dense_upa: return "dense_upa";
        case Scheme::sparse_upa: return "sparse_upa";
        case Scheme::h_sparse_upa: return "h_sparse_upa";
        case Scheme::v_sparse_upa: return "v_sparse_upa";
        case Scheme::h_sparse_ula: return "h_sparse_ula";
        case Scheme::v_sparse_ula: return "v_sparse_ula";
        case Scheme::upper_bound: return "upper_bound";
    }
    return "?";
}

inline bool scheme_from_string(const std::string& name, Scheme& out) {
    static const std::pair<const char*, Scheme> table[] = {
        {"ma_instant", Scheme::ma_instant},     {"ma_statistical", Scheme::ma_statistical},
        {"dense_upa", Scheme::dense_upa},       {"sparse_upa", Scheme::sparse_upa},
        {"h_sparse_upa", Scheme::h_sparse_upa}, {"v_sparse_upa", Scheme::v_sparse_upa},
        {"h_sparse_ula", Scheme::h_sparse_ula}, {"v_sparse_ula", Scheme::v_sparse_ula},
        {"upper_bound", Scheme::upper_bound}};
    for (const auto& [n, s] : table)
        if (name == n) {
            out = s;
            return true;
        }
    return false;
}

inline bool benchmark_kind_of(Scheme s, BenchmarkKind& out) {
    switch (s) {
        case Scheme::dense_upa: out = BenchmarkKind::dense_upa; return true;
        case Scheme::sparse_upa: out = BenchmarkKind::sparse_upa; return true;
        case Scheme::h_sparse_upa: out = BenchmarkKind::h_sparse_upa; return true;
        case Scheme::v_sparse_upa: out = BenchmarkKind::v_sparse_upa; return true;
        case Scheme::h_sparse_ula: out = BenchmarkKind::h_sparse_ula; return true;
        case Scheme::v_sparse_ula: out = BenchmarkKind::v_sparse_ula; return true;
        default: return false;
    }
}

// RNG stream tags so trial draws and statistical training draws never collide.
inline constexpr std::uint64_t stream_trial = 1;
inline constexpr std::uint64_t stream_stat = 2;

struct ExperimentConfig {
    Scenario scenario;
    OptimizerConfig opt;
    Architecture architecture = Architecture::digital;
    int trials = 500;           // Q
    int stat_realizations = 100; // Q1 / Q2 used to train ma_statistical
    std::vector<Scheme> schemes = {
        Scheme::ma_instant,   Scheme::ma_statistical, Scheme::dense_upa,
        Scheme::sparse_upa,   Scheme::h_sparse_upa,   Scheme::v_sparse_upa,
        Scheme::h_sparse_ula, Scheme::v_sparse_ula,   Scheme::upper_bound};
    std::string out_dir = "out";
    bool emit_traces = false;
    bool emit_geometry = false;
};

struct TrialOutcome {
    double linear = 0.0;
    bool ok = false; // false: the scheme failed on this draw (singular channel / zero gain)
};

struct SchemeSummary {
    Scheme scheme = Scheme::ma_instant;
    int trials = 0;
    int ok = 0;
    double mean_linear = 0.0;      // mean over ok trials, linear domain
    double mean_db = 0.0;          // 10 log10(mean_linear)
    double per_trial_db_mean = 0.0;
    double per_trial_db_sd = 0.0;  // sample sd over ok trials, 0 when ok < 2
};

struct ExperimentResults {
    Architecture architecture = Architecture::digital;
    std::vector<Scheme> schemes;
    std::vector<std::vector<TrialOutcome>> outcomes; // [scheme index][trial]
};

inline std::vector<SchemeSummary> compare_schemes(const ExperimentResults& results) {
    std::vector<SchemeSummary> out;
    out.reserve(results.schemes.size());
    for (std::size_t s = 0; s < results.schemes.size(); ++s) {
        SchemeSummary sum;
        sum.scheme = results.schemes[s];
        sum.trials = static_cast<int>(results.outcomes[s].size());
        double acc = 0.0, acc_db = 0.0;
        for (const auto& o : results.outcomes[s])
            if (o.ok) {
                ++sum.ok;
                acc += o.linear;
                acc_db += linear_to_db(o.linear);
            }
        sum.mean_linear = sum.ok > 0 ? acc / sum.ok : 0.0;
        sum.mean_db = linear_to_db(sum.mean_linear);
        sum.per_trial_db_mean = sum.ok > 0 ? acc_db / sum.ok : 0.0;
        double ss = 0.0;
        for (const auto& o : results.outcomes[s])
            if (o.ok) {
                const double d = linear_to_db(o.linear) - sum.per_trial_db_mean;
                ss += d * d;
            }
        sum.per_trial_db_sd = sum.ok > 1 ? std::sqrt(ss / (sum.ok - 1)) : 0.0;
        out.push_back(sum);
    }
    return out;
}

inline void write_ordering_report(std::ostream& os, const ExperimentResults& results) {
    const std::vector<SchemeSummary> sums = compare_schemes(results);
    os << "architecture: " << to_string(results.architecture) << '\n';
    os << "scheme mean_db mean_linear ok/trials per_trial_db_sd\n";
    for (const auto& s : sums)
        os << to_string(s.scheme) << ' ' << fmt_g17(s.mean_db) << ' ' << fmt_g17(s.mean_linear)
           << ' ' << s.ok << '/' << s.trials << ' ' << fmt_g17(s.per_trial_db_sd) << '\n';
    std::vector<std::size_t> order(sums.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sums[a].mean_linear > sums[b].mean_linear;
    });
    os << "ordering:";
    for (std::size_t i = 0; i < order.size(); ++i)
        os << (i == 0 ? " " : " >= ") << to_string(sums[order[i]].scheme);
    os << '\n';
}

// ------------------------------------------------------------------ config parsing

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct ConfigEntry {
    std::string value;
    int line = 0;
};

class ConfigMap {
  public:
    explicit ConfigMap(std::istream& is) {
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("line " + std::to_string(lineno) +
                                      ": malformed section header");
                continue; // sections are organizational only
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty key");
            if (entries_.count(key))
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                                  "' (first on line " + std::to_string(entries_[key].line) + ")");
            entries_[key] = {value, lineno};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    bool take(const std::string& key, ConfigEntry& out) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return false;
        out = it->second;
        entries_.erase(it);
        return true;
    }

    double take_double(const std::string& key, double fallback) {
        ConfigEntry e;
        if (!take(key, e)) return fallback;
        return parse_double(e, key);
    }

    long long take_int(const std::string& key, long long fallback) {
        ConfigEntry e;
        if (!take(key, e)) return fallback;
        return parse_int(e, key);
    }

    std::uint64_t take_uint64(const std::string& key, std::uint64_t fallback) {
        ConfigEntry e;
        if (!take(key, e)) return fallback;
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(e.value, &pos, 10);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                              "' needs an unsigned integer, got '" + e.value + "'");
        }
    }

    bool take_bool(const std::string& key, bool fallback) {
        ConfigEntry e;
        if (!take(key, e)) return fallback;
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                          "' needs true/false, got '" + e.value + "'");
    }

    std::string take_string(const std::string& key, const std::string& fallback) {
        ConfigEntry e;
        if (!take(key, e)) return fallback;
        return e.value;
    }

    void finish() const {
        if (entries_.empty()) return;
        const auto& [key, entry] = *entries_.begin();
        throw ConfigError("line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }

    static double parse_double(const ConfigEntry& e, const std::string& key) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                              "' needs a number, got '" + e.value + "'");
        }
    }

    static long long parse_int(const ConfigEntry& e, const std::string& key) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(e.value, &pos, 10);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                              "' needs an integer, got '" + e.value + "'");
        }
    }

  private:
    std::map<std::string, ConfigEntry> entries_;
};

inline double exclusive_length(ConfigMap& cm, const std::string& key_lambda,
                               const std::string& key_m, double wavelength, double fallback) {
    ConfigEntry in_lambda, in_m;
    const bool has_lambda = cm.take(key_lambda, in_lambda);
    const bool has_m = cm.take(key_m, in_m);
    if (has_lambda && has_m)
        throw ConfigError("line " + std::to_string(in_m.line) + ": give only one of '" +
                          key_lambda + "' and '" + key_m + "'");
    if (has_lambda) return ConfigMap::parse_double(in_lambda, key_lambda) * wavelength;
    if (has_m) return ConfigMap::parse_double(in_m, key_m);
    return fallback;
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& is) {
    detail::ConfigMap cm(is);
    ExperimentConfig cfg;
    Scenario& sc = cfg.scenario;

    detail::ConfigEntry carrier, lambda_entry;
    const bool has_carrier = cm.take("carrier_ghz", carrier);
    const bool has_lambda = cm.take("wavelength_m", lambda_entry);
    if (has_carrier && has_lambda)
        throw ConfigError("line " + std::to_string(lambda_entry.line) +
                          ": give only one of 'carrier_ghz' and 'wavelength_m'");
    if (has_carrier)
        sc.wavelength =
            speed_of_light / (detail::ConfigMap::parse_double(carrier, "carrier_ghz") * 1e9);
    else if (has_lambda)
        sc.wavelength = detail::ConfigMap::parse_double(lambda_entry, "wavelength_m");
    if (!(sc.wavelength > 0.0)) throw ConfigError("wavelength must be positive");

    sc.power_mw = dbm_to_mw(cm.take_double("power_dbm", 20.0));
    sc.noise_mw = dbm_to_mw(cm.take_double("noise_dbm", -80.0));
    sc.subarrays = static_cast<int>(cm.take_int("subarrays", 64));
    sc.nx = static_cast<int>(cm.take_int("nx", 1));
    sc.ny = static_cast<int>(cm.take_int("ny", 1));
    sc.users = static_cast<int>(cm.take_int("users", 32));
    sc.bs_height = cm.take_double("bs_height_m", 15.0);

    sc.region.side_A =
        detail::exclusive_length(cm, "region_side_lambda", "region_side_m", sc.wavelength,
                                 100.0 * sc.wavelength);
    sc.region.d_min =
        detail::exclusive_length(cm, "d_min_lambda", "d_min_m", sc.wavelength,
                                 0.5 * sc.wavelength * std::max(sc.nx, sc.ny));

    const std::string dist = cm.take_string("distribution", "annulus");
    if (dist == "annulus") {
        sc.distribution = Distribution::annulus;
        sc.r_min = cm.take_double("r_min_m", 5.0);
        sc.r_max = cm.take_double("r_max_m", 50.0);
    } else if (dist == "ring") {
        sc.distribution = Distribution::ring;
        sc.r_min = cm.take_double("r_min_m", 24.9);
        sc.r_max = cm.take_double("r_max_m", 25.1);
    } else if (dist == "hotspots") {
        sc.distribution = Distribution::hotspots;
        sc.hotspot1 = Vec2(cm.take_double("hotspot1_x", -25.0), cm.take_double("hotspot1_z", 40.0));
        sc.hotspot2 = Vec2(cm.take_double("hotspot2_x", 25.0), cm.take_double("hotspot2_z", 40.0));
        sc.hotspot_radius = cm.take_double("hotspot_radius_m", 2.5);
    } else {
        throw ConfigError("distribution must be annulus, ring or hotspots, got '" + dist + "'");
    }
    sc.nlos_paths = static_cast<int>(cm.take_int("nlos_paths", 0));
    sc.nlos_amp_ratio = cm.take_double("nlos_amp_ratio", 0.1);
    sc.seed = cm.take_uint64("seed", 1);

    const std::string arch = cm.take_string("architecture", "digital");
    if (arch == "digital") cfg.architecture = Architecture::digital;
    else if (arch == "analog") cfg.architecture = Architecture::analog;
    else throw ConfigError("architecture must be digital or analog, got '" + arch + "'");

    cfg.trials = static_cast<int>(cm.take_int("trials", 500));
    cfg.stat_realizations = static_cast<int>(cm.take_int("stat_realizations", 100));
    cfg.out_dir = cm.take_string("out_dir", "out");
    cfg.emit_traces = cm.take_bool("emit_traces", false);
    cfg.emit_geometry = cm.take_bool("emit_geometry", false);

    detail::ConfigEntry schemes_entry;
    if (cm.take("schemes", schemes_entry)) {
        cfg.schemes.clear();
        std::stringstream ss(schemes_entry.value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            Scheme s;
            if (!scheme_from_string(tok, s))
                throw ConfigError("line " + std::to_string(schemes_entry.line) +
                                  ": unknown scheme '" + tok + "'");
            for (const Scheme prev : cfg.schemes)
                if (prev == s)
                    throw ConfigError("line " + std::to_string(schemes_entry.line) +
                                      ": scheme '" + tok + "' listed twice");
            cfg.schemes.push_back(s);
        }
        if (cfg.schemes.empty())
            throw ConfigError("line " + std::to_string(schemes_entry.line) + ": empty scheme list");
    }

    cfg.opt.max_iters = static_cast<int>(cm.take_int("max_iters", 300));
    cfg.opt.tol = cm.take_double("tol", 1e-5);
    cfg.opt.init_step = cm.take_double("init_step_lambda", 0.0) * sc.wavelength;
    cfg.opt.shrink = cm.take_double("shrink", 0.5);
    cfg.opt.armijo = cm.take_double("armijo", 0.1);
    cfg.opt.max_backtracks = static_cast<int>(cm.take_int("max_backtracks", 30));
    cfg.opt.subregion_scale = cm.take_double("subregion_scale", 0.5);

    cm.finish();
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.stat_realizations < 1) throw ConfigError("stat_realizations must be >= 1");
    validate_scenario(sc);
    validate_optimizer_config(cfg.opt);
    return cfg;
}

inline ExperimentConfig parse_experiment_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse_experiment_config(is);
}

// ------------------------------------------------------------------ experiment runner

// Traces and geometries captured for optional emission.
struct ExperimentRun {
    ExperimentResults results;
    std::optional<ArrayGeometry> ma_instant_geometry; // final geometry of trial 0
    std::optional<ArrayGeometry> trained_geometry;    // statistical training output
    std::map<std::string, ArrayGeometry> benchmark_geometries;
    std::vector<DigitalIterRecord> digital_trial0_trace;
    std::vector<DigitalIterRecord> digital_training_trace;
    std::vector<AnalogIterRecord> analog_trial0_trace;
    std::vector<AnalogIterRecord> analog_training_trace;
    double max_modulus_dev = 0.0; // analog runs only
};

inline ExperimentRun run_experiment(const ExperimentConfig& cfg) {
    const Scenario& sc = cfg.scenario;
    validate_scenario(sc);
    validate_optimizer_config(cfg.opt);
    const LinkParams lp{sc.power_mw, sc.noise_mw, sc.wavelength};
    const int mn = sc.subarrays * sc.nx * sc.ny;
    const bool digital = cfg.architecture == Architecture::digital;
    if (digital && mn < sc.users)
        throw ConfigError("digital architecture needs subarrays*nx*ny >= users for zero forcing");

    bool want_stat = false;
    for (const Scheme s : cfg.schemes)
        if (s == Scheme::ma_statistical) want_stat = true;

    const std::vector<Vec2> offsets = subarray_offsets(sc.nx, sc.ny, sc.wavelength);
    ExperimentRun run;
    run.results.architecture = cfg.architecture;
    run.results.schemes = cfg.schemes;
    run.results.outcomes.assign(cfg.schemes.size(), {});
    for (auto& v : run.results.outcomes) v.reserve(cfg.trials);

    // Fixed geometries up front: bad shapes fail before any trial runs.
    std::map<std::string, ArrayGeometry> bench;
    for (const Scheme s : cfg.schemes) {
        BenchmarkKind kind;
        if (benchmark_kind_of(s, kind))
            bench.emplace(to_string(s), benchmark_geometry(kind, mn, sc.region, sc.wavelength));
    }
    run.benchmark_geometries = bench;

    const ArrayGeometry init_geom =
        digital ? init_uniform_grid(sc.subarrays, sc.region, offsets)
                : init_subregion_grid(sc.subarrays, sc.region, cfg.opt.subregion_scale, offsets);

    if (want_stat) {
        std::vector<std::vector<UserChannel>> reals;
        reals.reserve(cfg.stat_realizations);
        for (int q = 0; q < cfg.stat_realizations; ++q) {
            Rng rng(derive_seed(sc.seed, stream_stat, static_cast<std::uint64_t>(q)));
            reals.push_back(sample_users(sc, rng));
        }
        if (digital) {
            DigitalStatisticalResult trained =
                optimize_digital_statistical(init_geom, reals, lp, cfg.opt);
            run.trained_geometry = std::move(trained.geometry);
            run.digital_training_trace = std::move(trained.trace);
        } else {
            AnalogStatisticalResult trained =
                optimize_analog_statistical(init_geom, reals, lp, cfg.opt);
            run.trained_geometry = std::move(trained.geometry);
            run.analog_training_trace = std::move(trained.trace);
            run.max_modulus_dev = std::max(run.max_modulus_dev, trained.max_modulus_dev);
        }
    }

    for (int t = 0; t < cfg.trials; ++t) {
        Rng rng(derive_seed(sc.seed, stream_trial, static_cast<std::uint64_t>(t)));
        const std::vector<UserChannel> users = sample_users(sc, rng);
        for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
            const Scheme s = cfg.schemes[si];
            TrialOutcome out;
            try {
                if (s == Scheme::upper_bound) {
                    out.linear =
                        min_sinr_upper_bound(users, sc.subarrays, sc.nx * sc.ny, sc.power_mw,
                                             sc.noise_mw)
                            .bound;
                } else if (digital) {
                    if (s == Scheme::ma_instant) {
                        DigitalResult res = optimize_digital(init_geom, users, lp, cfg.opt);
                        out.linear = res.solution.min_sinr;
                        if (t == 0) {
                            run.digital_trial0_trace = std::move(res.trace);
                            run.ma_instant_geometry = std::move(res.solution.geometry);
                        }
                    } else if (s == Scheme::ma_statistical) {
                        out.linear = zf_min_sinr(*run.trained_geometry, users, sc.power_mw,
                                                 sc.noise_mw, sc.wavelength);
                    } else {
                        out.linear = zf_min_sinr(bench.at(to_string(s)), users, sc.power_mw,
                                                 sc.noise_mw, sc.wavelength);
                    }
                } else {
                    if (s == Scheme::ma_instant) {
                        AnalogResult res = optimize_analog(init_geom, users, lp, cfg.opt);
                        out.linear = res.solution.min_snr;
                        run.max_modulus_dev = std::max(run.max_modulus_dev, res.max_modulus_dev);
                        if (t == 0) {
                            run.analog_trial0_trace = std::move(res.trace);
                            run.ma_instant_geometry = std::move(res.solution.geometry);
                        }
                    } else {
                        const ArrayGeometry& geom = s == Scheme::ma_statistical
                                                        ? *run.trained_geometry
                                                        : bench.at(to_string(s));
                        AnalogResult res = optimize_phases_only(geom, users, lp, cfg.opt);
                        out.linear = res.solution.min_snr;
                        run.max_modulus_dev = std::max(run.max_modulus_dev, res.max_modulus_dev);
                    }
                }
                out.ok = true;
            } catch (const IllConditionedChannel&) {
                out = {};
            } catch (const ZeroGain&) {
                out = {};
            }
            run.results.outcomes[si].push_back(out);
        }
    }
    return run;
}

// trials CSV: trial, scheme, value_linear, value_db, ok
inline void write_trials_csv(std::ostream& os, const ExperimentResults& results) {
    os << "trial,scheme,value_linear,value_db,ok\n";
    const std::size_t trials = results.outcomes.empty() ? 0 : results.outcomes[0].size();
    for (std::size_t t = 0; t < trials; ++t)
        for (std::size_t s = 0; s < results.schemes.size(); ++s) {
            const TrialOutcome& o = results.outcomes[s][t];
            os << t << ',' << to_string(results.schemes[s]) << ',' << fmt_g17(o.linear) << ','
               << fmt_g17(linear_to_db(o.linear)) << ',' << (o.ok ? 1 : 0) << '\n';
        }
}

inline void write_summary_csv(std::ostream& os, const ExperimentResults& results) {
    os << "scheme,trials,ok_trials,mean_linear,mean_db,per_trial_db_mean,per_trial_db_sd\n";
    for (const SchemeSummary& s : compare_schemes(results))
        os << to_string(s.scheme) << ',' << s.trials << ',' << s.ok << ',' << fmt_g17(s.mean_linear)
           << ',' << fmt_g17(s.mean_db) << ',' << fmt_g17(s.per_trial_db_mean) << ','
           << fmt_g17(s.per_trial_db_sd) << '\n';
}

// Writes trials/summary/ordering files (plus optional traces and geometries) into
// cfg.out_dir. Returns the list of files written, relative to out_dir.
inline std::vector<std::string> write_experiment_outputs(const ExperimentConfig& cfg,
                                                         const ExperimentRun& run) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string arch = to_string(cfg.architecture);
    std::vector<std::string> written;
    auto open = [&](const std::string& name) {
        std::ofstream os(fs::path(cfg.out_dir) / name, std::ios::binary);
        if (!os) throw Error("cannot write output file '" + name + "' in '" + cfg.out_dir + "'");
        written.push_back(name);
        return os;
    };
    {
        auto os = open("trials_" + arch + ".csv");
        write_trials_csv(os, run.results);
    }
    {
        auto os = open("summary_" + arch + ".csv");
        write_summary_csv(os, run.results);
    }
    {
        auto os = open("ordering_" + arch + ".txt");
        write_ordering_report(os, run.results);
    }
    if (cfg.emit_geometry) {
        if (run.ma_instant_geometry) {
            auto os = open("geometry_ma_instant.txt");
            write_geometry(os, *run.ma_instant_geometry);
        }
        if (run.trained_geometry) {
            auto os = open("geometry_ma_statistical.txt");
            write_geometry(os, *run.trained_geometry);
        }
        for (const auto& [name, geom] : run.benchmark_geometries) {
            auto os = open("geometry_" + name + ".txt");
            write_geometry(os, geom);
        }
    }
    if (cfg.emit_traces) {
        if (!run.digital_trial0_trace.empty()) {
            auto os = open("trace_ma_instant_trial0.csv");
            write_digital_trace(os, run.digital_trial0_trace);
        }
        if (!run.digital_training_trace.empty()) {
            auto os = open("trace_ma_statistical_training.csv");
            write_digital_trace(os, run.digital_training_trace);
        }
        if (!run.analog_trial0_trace.empty()) {
            auto os = open("trace_ma_instant_trial0.csv");
            write_analog_trace(os, run.analog_trial0_trace);
        }
        if (!run.analog_training_trace.empty()) {
            auto os = open("trace_ma_statistical_training.csv");
            write_analog_trace(os, run.analog_training_trace);
        }
    }
    return written;
}

} // namespace manta
