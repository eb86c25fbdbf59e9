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
// Spherical-wave near-field channel model. Antennas live in the x-y plane (z = 0), users and
// scatterers anywhere with z > 0 in front of the array; all distances are exact Euclidean
// norms, no far-field/planar approximation.

#pragma once

#include <vector>

#include "manta/common.hpp"

namespace manta {

// One user's multipath description: anchor positions (index 0 = LoS user position when the
// LoS path exists, further entries = scatterers) plus the complex path response vector.
// A blocked-LoS user simply omits the index-0 anchor; no flag is carried.
struct UserChannel {
    std::vector<Vec3> anchors;
    CVec prv;

    int paths() const { return static_cast<int>(anchors.size()); }
};

inline void validate_user(const UserChannel& user) {
    if (user.anchors.empty() || static_cast<Eigen::Index>(user.anchors.size()) != user.prv.size())
        throw DimensionMismatch("user channel: anchors and prv must have equal length >= 1");
    for (const Vec3& a : user.anchors)
        if (!a.allFinite()) throw Error("user channel: non-finite anchor position");
    if (!user.prv.allFinite()) throw Error("user channel: non-finite path coefficient");
}

// M movable subarray centers (x,y in meters, z = 0) sharing one fixed set of N element
// offsets. region_half = A/2 and d_min record the constraints the geometry was built under;
// fixed benchmark layouts carry d_min = 0 since they never move.
struct ArrayGeometry {
    std::vector<Vec2> centers;
    std::vector<Vec2> offsets{Vec2::Zero()};
    double region_half = 0.0;
    double d_min = 0.0;

    int num_subarrays() const { return static_cast<int>(centers.size()); }
    int subarray_size() const { return static_cast<int>(offsets.size()); }
    int num_elements() const { return num_subarrays() * subarray_size(); }
};

inline Vec3 element_position(const ArrayGeometry& geom, int m, int n) {
    const Vec2 p = geom.centers[m] + geom.offsets[n];
    return {p.x(), p.y(), 0.0};
}

// Subarray-major flattening: element (m,n) lands at index m*N + n. Every stacked vector or
// matrix row in this library uses the same ordering.
inline std::vector<Vec3> element_positions(const ArrayGeometry& geom) {
    std::vector<Vec3> out;
    out.reserve(geom.num_elements());
    for (int m = 0; m < geom.num_subarrays(); ++m)
        for (int n = 0; n < geom.subarray_size(); ++n)
            out.push_back(element_position(geom, m, n));
    return out;
}

// Stacked antenna position vector [x_1, y_1, ..., x_M, y_M]; gradients use the same layout.
inline VecXd apv_of(const ArrayGeometry& geom) {
    VecXd apv(2 * geom.num_subarrays());
    for (int m = 0; m < geom.num_subarrays(); ++m) {
        apv[2 * m] = geom.centers[m].x();
        apv[2 * m + 1] = geom.centers[m].y();
    }
    return apv;
}

inline ArrayGeometry with_apv(ArrayGeometry geom, const VecXd& apv) {
    if (apv.size() != 2 * geom.num_subarrays())
        throw DimensionMismatch("with_apv: vector length must be 2*M");
    for (int m = 0; m < geom.num_subarrays(); ++m) geom.centers[m] = Vec2(apv[2 * m], apv[2 * m + 1]);
    return geom;
}

// Near-field response vector at a point: entry l = exp(j*2*pi/lambda*||pos - s_l||).
// The model is singular when the point meets an anchor, hence the ZeroDistance guard.
inline CVec nfrv(const Vec3& pos, const UserChannel& user, double wavelength) {
    if (wavelength <= 0.0) throw ConfigError("nfrv: wavelength must be positive");
    validate_user(user);
    const double k_wave = two_pi / wavelength;
    CVec out(user.paths());
    for (int l = 0; l < user.paths(); ++l) {
        const double d = (pos - user.anchors[l]).norm();
        if (d == 0.0) throw ZeroDistance("nfrv: position coincides with a path anchor");
        out[l] = std::polar(1.0, k_wave * d);
    }
    return out;
}

// Channel gain from one antenna position: nfrv(pos)^H * prv.
inline cplx channel_gain(const Vec3& pos, const UserChannel& user, double wavelength) {
    return nfrv(pos, user, wavelength).dot(user.prv);
}

// Channel vector over all MN elements; entry i equals channel_gain at element_positions[i].
inline CVec channel_vector(const ArrayGeometry& geom, const UserChannel& user, double wavelength) {
    if (wavelength <= 0.0) throw ConfigError("channel_vector: wavelength must be positive");
    validate_user(user);
    const double k_wave = two_pi / wavelength;
    CVec h(geom.num_elements());
    int i = 0;
    for (int m = 0; m < geom.num_subarrays(); ++m) {
        for (int n = 0; n < geom.subarray_size(); ++n, ++i) {
            const Vec3 pos = element_position(geom, m, n);
            cplx acc = 0.0;
            for (int l = 0; l < user.paths(); ++l) {
                const double d = (pos - user.anchors[l]).norm();
                if (d == 0.0) throw ZeroDistance("channel_vector: element coincides with a path anchor");
                acc += std::conj(std::polar(1.0, k_wave * d)) * user.prv[l];
            }
            h[i] = acc;
        }
    }
    return h;
}

// MN x K channel matrix, one column per user.
inline CMat channel_matrix(const ArrayGeometry& geom, const std::vector<UserChannel>& users,
                           double wavelength) {
    if (users.empty()) throw DimensionMismatch("channel_matrix: need at least one user");
    CMat h(geom.num_elements(), users.size());
    for (std::size_t k = 0; k < users.size(); ++k) h.col(k) = channel_vector(geom, users[k], wavelength);
    return h;
}

} // namespace manta
