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
// Array geometry constructors: uniform-grid initializers for the movable subarrays and the
// fixed benchmark layouts (dense/sparse UPAs and ULAs), plus constraint validation and a
// plain-text geometry table format.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "manta/channel.hpp"

namespace manta {

// Square moving region [-A/2, A/2]^2 with minimum inter-subarray center distance d_min.
struct RegionSpec {
    double side_A = 0.0;
    double d_min = 0.0;
};

inline void validate_region(const RegionSpec& region) {
    if (!(region.side_A > 0.0)) throw ConfigError("region: side must be positive");
    if (!(region.d_min >= 0.0)) throw ConfigError("region: d_min must be nonnegative");
}

namespace detail {

// ceil(sqrt(m)) without float round-off surprises
inline int grid_dim(int m) {
    int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
    while (g > 1 && (g - 1) * (g - 1) >= m) --g;
    while (g * g < m) ++g;
    return g;
}

inline ArrayGeometry grid_over_side(int m, double side, const RegionSpec& region,
                                    const std::vector<Vec2>& offsets) {
    if (m < 1) throw BadShape("grid: need at least one subarray");
    const int g = grid_dim(m);
    const double spacing = side / g;
    if (m > 1 && spacing < region.d_min)
        throw InfeasibleSpacing("grid: cell spacing " + fmt_g17(spacing) + " below d_min " +
                                fmt_g17(region.d_min));
    ArrayGeometry geom;
    geom.offsets = offsets.empty() ? std::vector<Vec2>{Vec2::Zero()} : offsets;
    geom.region_half = region.side_A / 2.0;
    geom.d_min = region.d_min;
    geom.centers.reserve(m);
    // row-major cell centers, first m of the g x g grid
    for (int r = 0; r < g && static_cast<int>(geom.centers.size()) < m; ++r)
        for (int c = 0; c < g && static_cast<int>(geom.centers.size()) < m; ++c)
            geom.centers.emplace_back(-side / 2.0 + (c + 0.5) * spacing,
                                      -side / 2.0 + (r + 0.5) * spacing);
    return geom;
}

} // namespace detail

// Uniform grid over the whole moving region: ceil(sqrt(M)) cells per side, first M cell
// centers in row-major order.
inline ArrayGeometry init_uniform_grid(int m, const RegionSpec& region,
                                       const std::vector<Vec2>& offsets = {Vec2::Zero()}) {
    validate_region(region);
    return detail::grid_over_side(m, region.side_A, region, offsets);
}

// Same grid but confined to a centered square of side scale*A; used to seed the analog
// optimizer where tightly clustered subarrays help the common phase front.
inline ArrayGeometry init_subregion_grid(int m, const RegionSpec& region, double scale = 0.5,
                                         const std::vector<Vec2>& offsets = {Vec2::Zero()}) {
    validate_region(region);
    if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("subregion scale must be in (0, 1]");
    return detail::grid_over_side(m, scale * region.side_A, region, offsets);
}

enum class BenchmarkKind {
    dense_upa,    // sqrt(MN) x sqrt(MN), spacing lambda/2 both axes
    sparse_upa,   // spacing A/sqrt(MN) both axes
    h_sparse_upa, // sparse along x, lambda/2 along y
    v_sparse_upa, // lambda/2 along x, sparse along y
    h_sparse_ula, // MN elements on the x axis, spacing A/MN
    v_sparse_ula  // MN elements on the y axis, spacing A/MN
};

inline const char* to_string(BenchmarkKind kind) {
    switch (kind) {
        case BenchmarkKind::dense_upa: return "dense_upa";
        case BenchmarkKind::sparse_upa: return "sparse_upa";
        case BenchmarkKind::h_sparse_upa: return "h_sparse_upa";
        case BenchmarkKind::v_sparse_upa: return "v_sparse_upa";
        case BenchmarkKind::h_sparse_ula: return "h_sparse_ula";
        case BenchmarkKind::v_sparse_ula: return "v_sparse_ula";
    }
    return "?";
}

// Fixed-position comparison arrays with the same total element count MN as the movable
// design, modeled as MN single-element subarrays. They never move, so d_min = 0.
inline ArrayGeometry benchmark_geometry(BenchmarkKind kind, int mn, const RegionSpec& region,
                                        double wavelength) {
    validate_region(region);
    if (wavelength <= 0.0) throw ConfigError("benchmark_geometry: wavelength must be positive");
    if (mn < 1) throw BadShape("benchmark_geometry: need at least one element");

    ArrayGeometry geom;
    geom.offsets = {Vec2::Zero()};
    geom.region_half = region.side_A / 2.0;
    geom.d_min = 0.0;

    const bool ula = (kind == BenchmarkKind::h_sparse_ula || kind == BenchmarkKind::v_sparse_ula);
    if (ula) {
        const double spacing = region.side_A / mn;
        for (int i = 0; i < mn; ++i) {
            const double c = (i - (mn - 1) / 2.0) * spacing;
            geom.centers.emplace_back(kind == BenchmarkKind::h_sparse_ula ? c : 0.0,
                                      kind == BenchmarkKind::h_sparse_ula ? 0.0 : c);
        }
        return geom;
    }

    const int g = detail::grid_dim(mn);
    if (g * g != mn)
        throw BadShape(std::string("benchmark_geometry: ") + to_string(kind) +
                       " needs a perfect-square element count, got " + std::to_string(mn));
    double sx = 0.0, sy = 0.0;
    switch (kind) {
        case BenchmarkKind::dense_upa: sx = sy = wavelength / 2.0; break;
        case BenchmarkKind::sparse_upa: sx = sy = region.side_A / g; break;
        case BenchmarkKind::h_sparse_upa: sx = region.side_A / g; sy = wavelength / 2.0; break;
        case BenchmarkKind::v_sparse_upa: sx = wavelength / 2.0; sy = region.side_A / g; break;
        default: break;
    }
    if ((g - 1) * sx > region.side_A || (g - 1) * sy > region.side_A)
        throw BadShape(std::string("benchmark_geometry: ") + to_string(kind) +
                       " does not fit inside the region");
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c)
            geom.centers.emplace_back((c - (g - 1) / 2.0) * sx, (r - (g - 1) / 2.0) * sy);
    return geom;
}

struct Violation {
    enum class Kind { region, spacing } kind;
    int i = -1;        // subarray index
    int j = -1;        // second subarray for spacing violations
    double magnitude = 0.0; // distance outside the region / shortfall below d_min
};

inline std::string to_string(const Violation& v) {
    std::ostringstream os;
    if (v.kind == Violation::Kind::region)
        os << "subarray " << v.i << " outside region by " << fmt_g17(v.magnitude) << " m";
    else
        os << "subarrays " << v.i << "," << v.j << " closer than d_min by " << fmt_g17(v.magnitude)
           << " m";
    return os.str();
}

// Check region membership of all centers and pairwise center spacing. Empty result = valid.
inline std::vector<Violation> validate(const ArrayGeometry& geom, const RegionSpec& region) {
    std::vector<Violation> out;
    const double half = region.side_A / 2.0;
    for (int m = 0; m < geom.num_subarrays(); ++m) {
        const double excess =
            std::max(std::abs(geom.centers[m].x()), std::abs(geom.centers[m].y())) - half;
        if (excess > 0.0) out.push_back({Violation::Kind::region, m, -1, excess});
    }
    for (int i = 0; i < geom.num_subarrays(); ++i)
        for (int j = i + 1; j < geom.num_subarrays(); ++j) {
            const double dist = (geom.centers[i] - geom.centers[j]).norm();
            if (dist < region.d_min)
                out.push_back({Violation::Kind::spacing, i, j, region.d_min - dist});
        }
    return out;
}

inline double min_center_spacing(const ArrayGeometry& geom) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < geom.num_subarrays(); ++i)
        for (int j = i + 1; j < geom.num_subarrays(); ++j)
            best = std::min(best, (geom.centers[i] - geom.centers[j]).norm());
    return best;
}

// --- geometry table I/O ------------------------------------------------------------------------
//
// One line per element: "m n x y" with 1-based subarray/element indices and coordinates in
// meters at 17 significant digits, so a written table reparses to the exact same geometry.
// Lines starting with '#' and blank lines are ignored on read.

inline void write_geometry(std::ostream& os, const ArrayGeometry& geom) {
    for (int m = 0; m < geom.num_subarrays(); ++m)
        for (int n = 0; n < geom.subarray_size(); ++n) {
            const Vec3 p = element_position(geom, m, n);
            os << (m + 1) << ' ' << (n + 1) << ' ' << fmt_g17(p.x()) << ' ' << fmt_g17(p.y())
               << '\n';
        }
}

inline void write_geometry_file(const std::string& path, const ArrayGeometry& geom) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open geometry file for writing: " + path);
    write_geometry(os, geom);
}

// Rebuilds centers as per-subarray centroids and offsets from the first subarray; every
// subarray must show the same offset pattern. Region/d_min metadata is not stored in the
// table, so the result carries region_half = d_min = 0 until the caller stamps them.
inline ArrayGeometry read_geometry(std::istream& is) {
    struct Row {
        int m, n;
        double x, y;
    };
    std::vector<Row> rows;
    std::string line;
    int lineno = 0;
    int max_m = 0, max_n = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string trimmed = line;
        const auto first = trimmed.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (trimmed[first] == '#') continue;
        std::istringstream ls(trimmed);
        Row r{};
        if (!(ls >> r.m >> r.n >> r.x >> r.y))
            throw BadShape("geometry table line " + std::to_string(lineno) +
                           ": expected 'm n x y'");
        std::string rest;
        if (ls >> rest)
            throw BadShape("geometry table line " + std::to_string(lineno) + ": trailing tokens");
        if (r.m < 1 || r.n < 1)
            throw BadShape("geometry table line " + std::to_string(lineno) +
                           ": indices are 1-based");
        max_m = std::max(max_m, r.m);
        max_n = std::max(max_n, r.n);
        rows.push_back(r);
    }
    if (rows.empty()) throw BadShape("geometry table: no rows");
    if (static_cast<int>(rows.size()) != max_m * max_n)
        throw BadShape("geometry table: expected " + std::to_string(max_m * max_n) +
                       " rows for M=" + std::to_string(max_m) + ", N=" + std::to_string(max_n));

    std::vector<std::vector<Vec2>> pos(max_m, std::vector<Vec2>(max_n, Vec2::Zero()));
    std::vector<std::vector<bool>> seen(max_m, std::vector<bool>(max_n, false));
    for (const Row& r : rows) {
        if (seen[r.m - 1][r.n - 1])
            throw BadShape("geometry table: duplicate element (" + std::to_string(r.m) + "," +
                           std::to_string(r.n) + ")");
        seen[r.m - 1][r.n - 1] = true;
        pos[r.m - 1][r.n - 1] = Vec2(r.x, r.y);
    }

    ArrayGeometry geom;
    geom.centers.resize(max_m);
    geom.offsets.resize(max_n);
    for (int m = 0; m < max_m; ++m) {
        Vec2 c = Vec2::Zero();
        for (int n = 0; n < max_n; ++n) c += pos[m][n];
        geom.centers[m] = c / max_n;
    }
    for (int n = 0; n < max_n; ++n) geom.offsets[n] = pos[0][n] - geom.centers[0];
    for (int m = 0; m < max_m; ++m)
        for (int n = 0; n < max_n; ++n) {
            const Vec2 err = pos[m][n] - (geom.centers[m] + geom.offsets[n]);
            if (err.norm() > 1e-9 * (1.0 + pos[m][n].norm()))
                throw BadShape("geometry table: subarray " + std::to_string(m + 1) +
                               " offsets differ from subarray 1");
        }
    return geom;
}

inline ArrayGeometry read_geometry_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open geometry file: " + path);
    return read_geometry(is);
}

} // namespace manta
