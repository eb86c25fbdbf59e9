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
// Bound-achieving geometry machinery for single-element subarrays (N = 1) and single-path
// users. The per-pair path difference ||t_m - s_k|| - ||t_m - s_khat|| splits into lambda
// times integer plus fractional part; the digital bound is met exactly when each pair's
// fractional parts make sum_m e^{j 2 pi phi_m} vanish, the analog bound when all users share
// one fractional part per subarray (channel vectors fully aligned). Constructors place
// subarray centers on the corresponding hyperbola loci by line scans plus bisection.

#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "manta/analog.hpp"

namespace manta {

struct PathDiffDecomposition {
    double delta = 0.0; // meters
    long long n = 0;
    double phi = 0.0; // in [0, 1)
};

// delta = lambda * (n + phi), n = floor(delta/lambda). Exact to ~2 ulp of delta/lambda.
inline PathDiffDecomposition decompose(double delta, double wavelength) {
    if (!(wavelength > 0.0)) throw ConfigError("decompose: wavelength must be positive");
    const double x = delta / wavelength;
    double nf = std::floor(x);
    double phi = x - nf;
    if (phi >= 1.0) { // x just below an integer can round the difference up to 1
        nf += 1.0;
        phi = 0.0;
    }
    PathDiffDecomposition out;
    out.delta = delta;
    out.n = static_cast<long long>(nf);
    out.phi = phi;
    return out;
}

struct ConditionPair {
    int k = 0;
    int khat = 0;
    double residual = 0.0;    // |sum_m e^{j 2 pi phi_m}|, in [0, M]
    double correlation = 0.0; // residual / M = |h_k^H h_khat| / (||h_k|| ||h_khat||)
};

struct ConditionReport {
    bool pass = false;
    double tolerance = 0.0;
    std::vector<ConditionPair> pairs;
};

namespace detail {

inline void require_single_path_n1(const ArrayGeometry& geom,
                                   const std::vector<UserChannel>& users, const char* who) {
    if (geom.subarray_size() != 1)
        throw Unsupported(std::string(who) + ": only N = 1 geometries are handled");
    for (std::size_t k = 0; k < users.size(); ++k)
        if (users[k].paths() != 1)
            throw Unsupported(std::string(who) + ": user " + std::to_string(k) +
                              " is not single-path");
}

inline ConditionPair pair_residual(const ArrayGeometry& geom, const UserChannel& a,
                                   const UserChannel& b, int k, int khat, double wavelength) {
    cplx acc = 0.0;
    for (int m = 0; m < geom.num_subarrays(); ++m) {
        const Vec3 pos = element_position(geom, m, 0);
        const double delta = (pos - a.anchors[0]).norm() - (pos - b.anchors[0]).norm();
        acc += std::polar(1.0, two_pi * decompose(delta, wavelength).phi);
    }
    ConditionPair out;
    out.k = k;
    out.khat = khat;
    out.residual = std::abs(acc);
    out.correlation = out.residual / geom.num_subarrays();
    return out;
}

} // namespace detail

// Zero-forcing reaches the closed-form SINR ceiling iff every user pair's channel vectors are
// orthogonal, i.e. each pair's fractional-part phasors cancel. tol <= 0 selects 1e-8 * M.
inline ConditionReport check_digital_condition(const ArrayGeometry& geom,
                                               const std::vector<UserChannel>& users,
                                               double wavelength, double tol = -1.0) {
    detail::require_single_path_n1(geom, users, "check_digital_condition");
    ConditionReport rep;
    rep.tolerance = tol > 0.0 ? tol : 1e-8 * geom.num_subarrays();
    rep.pass = true;
    for (std::size_t k = 0; k < users.size(); ++k)
        for (std::size_t khat = k + 1; khat < users.size(); ++khat) {
            rep.pairs.push_back(detail::pair_residual(geom, users[k], users[khat],
                                                      static_cast<int>(k),
                                                      static_cast<int>(khat), wavelength));
            if (rep.pairs.back().residual > rep.tolerance) rep.pass = false;
        }
    return rep;
}

// A single phase vector reaches the SNR ceiling for every user at once iff all channel vectors
// are fully aligned with user 0's (correlation 1). tol <= 0 selects 1e-10.
inline ConditionReport check_analog_condition(const ArrayGeometry& geom,
                                              const std::vector<UserChannel>& users,
                                              double wavelength, double tol = -1.0) {
    detail::require_single_path_n1(geom, users, "check_analog_condition");
    ConditionReport rep;
    rep.tolerance = tol > 0.0 ? tol : 1e-10;
    rep.pass = true;
    for (std::size_t k = 1; k < users.size(); ++k) {
        rep.pairs.push_back(detail::pair_residual(geom, users[k], users[0],
                                                  static_cast<int>(k), 0, wavelength));
        if (rep.pairs.back().correlation < 1.0 - rep.tolerance) rep.pass = false;
    }
    return rep;
}

inline void write_condition_report(std::ostream& os, const ConditionReport& rep) {
    os << "{\n  \"pass\": " << (rep.pass ? "true" : "false")
       << ",\n  \"tolerance\": " << fmt_g17(rep.tolerance) << ",\n  \"pairs\": [\n";
    for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
        const auto& p = rep.pairs[i];
        os << "    {\"k\": " << p.k << ", \"khat\": " << p.khat
           << ", \"residual\": " << fmt_g17(p.residual)
           << ", \"correlation\": " << fmt_g17(p.correlation) << '}'
           << (i + 1 < rep.pairs.size() ? "," : "") << '\n';
    }
    os << "  ]\n}\n";
}

namespace detail {

// Scan the region on a handful of horizontal lines, marching x in quarter-wavelength steps.
// |grad of the path difference| <= 2, so f moves at most lambda/2 per step and every target
// level lambda*(n + frac) crossed between two samples is bracketed; bisection then pins the
// crossing to 1e-12 m. Returns the first point at least d_min away from (and not equal to)
// every already accepted center.
class HyperbolaScan {
  public:
    HyperbolaScan(const Vec3& s1, const Vec3& s2, const RegionSpec& region, double wavelength)
        : s1_(s1), s2_(s2), half_(region.side_A / 2.0), d_min_(region.d_min),
          lambda_(wavelength) {}

    double diff_at(const Vec2& t) const {
        const Vec3 p(t.x(), t.y(), 0.0);
        return (p - s1_).norm() - (p - s2_).norm();
    }

    // frac: target fractional part in [0, 1); any integer number of wavelengths qualifies.
    std::optional<Vec2> find(double frac, const std::vector<Vec2>& accepted) const {
        static constexpr double line_frac[] = {0.0,   0.125, -0.125, 0.25, -0.25,
                                               0.375, -0.375, 0.49,  -0.49};
        const double step = lambda_ / 4.0;
        for (double yf : line_frac) {
            const double y = yf * 2.0 * half_;
            double x_prev = -half_;
            double f_prev = diff_at({x_prev, y});
            if (auto hit = try_exact(x_prev, y, f_prev, frac, accepted)) return hit;
            while (x_prev < half_) {
                const double x_next = std::min(x_prev + step, half_);
                const double f_next = diff_at({x_next, y});
                if (auto hit = scan_interval(x_prev, x_next, y, f_prev, f_next, frac, accepted))
                    return hit;
                x_prev = x_next;
                f_prev = f_next;
            }
        }
        return std::nullopt;
    }

  private:
    bool clears(const Vec2& t, const std::vector<Vec2>& accepted) const {
        for (const auto& a : accepted) {
            const double dist = (t - a).norm();
            if (dist == 0.0 || dist < d_min_) return false;
        }
        return true;
    }

    std::optional<Vec2> try_exact(double x, double y, double f, double frac,
                                  const std::vector<Vec2>& accepted) const {
        const double r = f / lambda_ - frac;
        if (r == std::floor(r) && clears({x, y}, accepted)) return Vec2(x, y);
        return std::nullopt;
    }

    std::optional<Vec2> scan_interval(double xa, double xb, double y, double fa, double fb,
                                      double frac, const std::vector<Vec2>& accepted) const {
        const double lo = std::min(fa, fb), hi = std::max(fa, fb);
        const long long n_lo = static_cast<long long>(std::ceil(lo / lambda_ - frac));
        const long long n_hi = static_cast<long long>(std::floor(hi / lambda_ - frac));
        for (long long n = n_lo; n <= n_hi; ++n) {
            const double target = lambda_ * (static_cast<double>(n) + frac);
            const double x = bisect(xa, xb, y, fa - target, fb - target, target);
            if (clears({x, y}, accepted)) return Vec2(x, y);
        }
        return std::nullopt;
    }

    double bisect(double xa, double xb, double y, double ga, double gb, double target) const {
        if (ga == 0.0) return xa;
        if (gb == 0.0) return xb;
        double lo = xa, hi = xb, glo = ga;
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            const double gm = diff_at({mid, y}) - target;
            if (gm == 0.0) return mid;
            if ((gm < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

    Vec3 s1_, s2_;
    double half_;
    double d_min_;
    double lambda_;
};

inline void require_two_single_path(const std::vector<UserChannel>& users, const char* who) {
    if (users.size() != 2)
        throw Unsupported(std::string(who) + ": construction handles exactly two users");
    for (int k = 0; k < 2; ++k)
        if (users[k].paths() != 1)
            throw Unsupported(std::string(who) + ": user " + std::to_string(k) +
                              " is not single-path");
}

inline ArrayGeometry geometry_from_centers(std::vector<Vec2> centers, const RegionSpec& region) {
    ArrayGeometry geom;
    geom.centers = std::move(centers);
    geom.offsets = {Vec2::Zero()};
    geom.region_half = region.side_A / 2.0;
    geom.d_min = region.d_min;
    return geom;
}

} // namespace detail

// Place M single-element subarrays so the two users' channel vectors are orthogonal: subarray
// m sits where the path difference has fractional part m/M, making the pair phasors the M-th
// roots of unity. Empty optional means the loci do not intersect the region/spacing budget.
inline std::optional<ArrayGeometry> construct_digital_apv(const std::vector<UserChannel>& users,
                                                          int m_count, const RegionSpec& region,
                                                          double wavelength) {
    detail::require_two_single_path(users, "construct_digital_apv");
    validate_region(region);
    if (m_count < 1) throw BadShape("construct_digital_apv: M must be >= 1");
    const Vec3 s1 = users[0].anchors[0], s2 = users[1].anchors[0];
    if ((s1 - s2).norm() == 0.0) return std::nullopt; // path difference identically zero
    const detail::HyperbolaScan scan(s1, s2, region, wavelength);
    std::vector<Vec2> centers;
    centers.reserve(m_count);
    for (int m = 0; m < m_count; ++m) {
        auto hit = scan.find(static_cast<double>(m) / m_count, centers);
        if (!hit) return std::nullopt;
        centers.push_back(*hit);
    }
    return detail::geometry_from_centers(std::move(centers), region);
}

// Place M single-element subarrays with one common path-difference fractional part, aligning
// the two users' channel vectors (integer parts are free to differ per subarray).
inline std::optional<ArrayGeometry> construct_analog_apv(const std::vector<UserChannel>& users,
                                                         int m_count, const RegionSpec& region,
                                                         double wavelength) {
    detail::require_two_single_path(users, "construct_analog_apv");
    validate_region(region);
    if (m_count < 1) throw BadShape("construct_analog_apv: M must be >= 1");
    const Vec3 s1 = users[0].anchors[0], s2 = users[1].anchors[0];
    if ((s1 - s2).norm() == 0.0) {
        // Identical anchors: every point aligns the users; lay centers on the first scan line.
        // Positions round at the scale of side_A/2, so widen the pitch by that rounding to keep
        // every realized spacing >= d_min after fl().
        std::vector<Vec2> centers;
        const double spacing = std::max(region.d_min, wavelength / 2.0) +
                               4.0 * std::numeric_limits<double>::epsilon() * region.side_A;
        for (int m = 0; m < m_count; ++m) {
            const double x = -region.side_A / 2.0 + m * spacing;
            if (x > region.side_A / 2.0) return std::nullopt;
            centers.emplace_back(x, 0.0);
        }
        return detail::geometry_from_centers(std::move(centers), region);
    }
    const detail::HyperbolaScan scan(s1, s2, region, wavelength);
    std::vector<Vec2> centers;
    centers.reserve(m_count);
    // The first scan position fixes the shared fractional part.
    const Vec2 seed(-region.side_A / 2.0, 0.0);
    const double frac = decompose(scan.diff_at(seed), wavelength).phi;
    centers.push_back(seed);
    for (int m = 1; m < m_count; ++m) {
        auto hit = scan.find(frac, centers);
        if (!hit) return std::nullopt;
        centers.push_back(*hit);
    }
    return detail::geometry_from_centers(std::move(centers), region);
}

} // namespace manta
