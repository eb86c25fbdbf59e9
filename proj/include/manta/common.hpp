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

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace manta {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double speed_of_light = 299792458.0; // m/s

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VecXd = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Error taxonomy. All conditions are reported through typed exceptions rooted at Error
// so callers can match on the failure class rather than parse messages.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroDistance : Error { using Error::Error; };           // evaluation point coincides with a path anchor
struct DimensionMismatch : Error { using Error::Error; };      // inconsistent vector/matrix shapes
struct IllConditionedChannel : Error { using Error::Error; };  // H^H H near singular, ZF invalid
struct ZeroChannel : Error { using Error::Error; };            // a user PRV has zero 1-norm
struct ZeroGain : Error { using Error::Error; };               // |h^H w| = 0, allocation undefined
struct InfeasibleSpacing : Error { using Error::Error; };      // grid constructor cannot honor d_min
struct BadShape : Error { using Error::Error; };               // geometry kind/size mismatch
struct BadDistributionParams : Error { using Error::Error; };  // user distribution parameters out of range
struct ConfigError : Error { using Error::Error; };            // config file/values rejected
struct Unsupported : Error { using Error::Error; };            // operation outside the supported regime

// Power units: linear milliwatts internally, dBm only at I/O boundaries.
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double wavelength_from_carrier(double f_hz) { return speed_of_light / f_hz; }

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic sub-stream derivation: (seed, stream, index) -> engine seed. Streams keep
// Monte Carlo trials and training realizations independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x9E3779B97F4A7C15ull * (stream + 1);
    (void)splitmix64(s);
    s ^= 0xC2B2AE3D27D4EB4Full * (index + 1);
    return splitmix64(s);
}

// Seeded generator with portable draw functions. std::mt19937_64 output is fully specified
// by the standard; the uniform mapping below avoids the implementation-defined
// std::uniform_real_distribution so that results are bit-identical across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0,1), 53-bit resolution
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform angle in [0, 2*pi)
    double angle() { return two_pi * uniform(); }

    // standard normal via Box-Muller (no state caching, two draws per call)
    double gaussian() {
        double u1 = 1.0 - uniform(); // (0,1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    cplx cgaussian() {
        double re = gaussian();
        double im = gaussian();
        return {re, im};
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

// Shortest text keeping doubles round-trippable; used for every file the toolkit writes so
// that identical runs produce identical bytes.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace manta
