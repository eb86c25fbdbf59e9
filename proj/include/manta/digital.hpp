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
// Digital (one RF chain per user, SDMA) max-min beamforming under zero forcing. ZF makes all
// per-user SINRs equal, gamma = P / (sigma^2 * tr{(H^H H)^-1}), which is what the projected
// gradient ascent over subarray positions maximizes.

#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "manta/arrays.hpp"

namespace manta {

// Transmit power / noise floor in linear milliwatts plus the carrier wavelength. Region and
// spacing limits travel inside ArrayGeometry.
struct LinkParams {
    double power_mw = 0.0;
    double noise_mw = 0.0;
    double wavelength = 0.0;
};

inline void validate_link(const LinkParams& lp) {
    if (!(lp.power_mw > 0.0) || !(lp.noise_mw > 0.0) || !(lp.wavelength > 0.0))
        throw ConfigError("link params: power, noise and wavelength must be positive");
}

// Shared by the digital and analog optimizers. init_step <= 0 resolves to 10*wavelength.
struct OptimizerConfig {
    int max_iters = 300;        // outer iteration cap
    double tol = 1e-5;          // linear-scale objective increment below which a run stops
    double init_step = 0.0;     // meters (phase steps reuse the same number as radians scale)
    double shrink = 0.5;        // line-search shrink factor
    double armijo = 0.1;        // sufficient-increase factor
    int max_backtracks = 30;    // shrink steps before giving up on an iteration
    double subregion_scale = 0.5; // analog init grid confinement
};

inline void validate_optimizer_config(const OptimizerConfig& cfg) {
    if (cfg.max_iters < 1) throw ConfigError("optimizer: max_iters must be >= 1");
    if (!(cfg.tol >= 0.0)) throw ConfigError("optimizer: tol must be >= 0");
    if (!(cfg.shrink > 0.0 && cfg.shrink < 1.0)) throw ConfigError("optimizer: shrink must be in (0,1)");
    if (!(cfg.armijo > 0.0 && cfg.armijo < 1.0)) throw ConfigError("optimizer: armijo must be in (0,1)");
    if (cfg.max_backtracks < 0) throw ConfigError("optimizer: max_backtracks must be >= 0");
    if (!(cfg.subregion_scale > 0.0 && cfg.subregion_scale <= 1.0))
        throw ConfigError("optimizer: subregion_scale must be in (0,1]");
}

inline double resolve_init_step(const OptimizerConfig& cfg, double wavelength) {
    return cfg.init_step > 0.0 ? cfg.init_step : 10.0 * wavelength;
}

enum class StopReason { converged, max_iterations, stationary };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::converged: return "converged";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::stationary: return "stationary";
    }
    return "?";
}

struct DigitalIterRecord {
    int iter = 0;
    double objective = 0.0; // linear min-SINR after the step (row 0: initial value)
    double step = 0.0;      // accepted step size
    int backtracks = 0;     // shrink count before acceptance
};

struct DigitalSolution {
    ArrayGeometry geometry;
    CMat precoder;       // MN x K, ||W||_F^2 = P
    VecXd per_user_sinr; // linear
    double min_sinr = 0.0;
};

struct DigitalResult {
    DigitalSolution solution;
    std::vector<DigitalIterRecord> trace;
    StopReason reason = StopReason::max_iterations;
};

namespace detail {

// Eigendecomposition of Z = H^H H: gives the reciprocal-condition guard, tr{Z^-1} and Z^-1
// in one place. Z is Hermitian PSD, so eigenvalues double as the condition estimate.
struct ZfState {
    CMat inv_z;
    double trace_inv = 0.0;
    double rcond = 0.0;
};

inline ZfState zf_state(const CMat& h) {
    const Eigen::Index k = h.cols();
    if (h.rows() < k) throw DimensionMismatch("zf: need MN >= K");
    const CMat z = h.adjoint() * h;
    Eigen::SelfAdjointEigenSolver<CMat> es(z);
    if (es.info() != Eigen::Success) throw IllConditionedChannel("zf: eigendecomposition failed");
    const VecXd ev = es.eigenvalues(); // ascending
    const double lmax = ev(k - 1);
    ZfState st;
    st.rcond = (lmax > 0.0 && ev(0) > 0.0) ? ev(0) / lmax : 0.0;
    if (st.rcond < 1e-12)
        throw IllConditionedChannel("zf: H^H H reciprocal condition " + fmt_g17(st.rcond) +
                                    " below 1e-12");
    const VecXd inv_ev = ev.cwiseInverse();
    st.trace_inv = inv_ev.sum();
    st.inv_z = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().adjoint();
    return st;
}

inline double zf_gamma(const CMat& h, double power_mw, double noise_mw) {
    return power_mw / (noise_mw * zf_state(h).trace_inv);
}

} // namespace detail

// Per-user SINR of an arbitrary precoder: |h_k^H w_k|^2 / (sum_{j!=k} |h_k^H w_j|^2 + noise).
inline VecXd sinr_per_user(const ArrayGeometry& geom, const CMat& precoder,
                           const std::vector<UserChannel>& users, double noise_mw,
                           double wavelength) {
    const CMat h = channel_matrix(geom, users, wavelength);
    if (precoder.rows() != h.rows() || precoder.cols() != h.cols())
        throw DimensionMismatch("sinr_per_user: precoder must be MN x K");
    const CMat cross = h.adjoint() * precoder; // (k,j) = h_k^H w_j
    VecXd out(h.cols());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        const double sig = std::norm(cross(k, k));
        double interf = 0.0;
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (j != k) interf += std::norm(cross(k, j));
        out(k) = sig / (interf + noise_mw);
    }
    return out;
}

// ZF precoder W = sqrt(P) * H (H^H H)^-1 / ||.||_F. H^H W = c I with real c > 0.
inline CMat zf_precoder(const CMat& h, double power_mw) {
    if (!(power_mw > 0.0)) throw ConfigError("zf_precoder: power must be positive");
    const detail::ZfState st = detail::zf_state(h);
    CMat w0 = h * st.inv_z;
    return std::sqrt(power_mw) / w0.norm() * w0;
}

// Equal per-user SINR delivered by ZF at this geometry.
inline double zf_min_sinr(const ArrayGeometry& geom, const std::vector<UserChannel>& users,
                          double power_mw, double noise_mw, double wavelength) {
    return detail::zf_gamma(channel_matrix(geom, users, wavelength), power_mw, noise_mw);
}

struct SinrBound {
    double bound = 0.0; // linear
    VecXd power;        // bound-achieving per-user power split, sums to P
};

// Closed-form minimum-SINR upper bound over all geometries and precoders:
// (P/sigma^2) / sum_k 1/(MN ||b_k||_1^2), met exactly by single-path users on aligned
// geometries. The same number bounds the analog min-SNR.
inline SinrBound min_sinr_upper_bound(const std::vector<UserChannel>& users, int m, int n,
                                      double power_mw, double noise_mw) {
    if (users.empty()) throw DimensionMismatch("min_sinr_upper_bound: need at least one user");
    if (m < 1 || n < 1) throw BadShape("min_sinr_upper_bound: M and N must be >= 1");
    const double mn = static_cast<double>(m) * n;
    SinrBound out;
    out.power.resize(users.size());
    double s = 0.0;
    for (std::size_t k = 0; k < users.size(); ++k) {
        const double b1 = users[k].prv.lpNorm<1>();
        if (b1 == 0.0) throw ZeroChannel("min_sinr_upper_bound: user " + std::to_string(k) +
                                         " has zero path response");
        s += 1.0 / (mn * b1 * b1);
    }
    out.bound = power_mw / (noise_mw * s);
    // p_k = gamma * sigma^2 / (MN ||b_k||_1^2); the p_k sum to P by construction.
    for (std::size_t k = 0; k < users.size(); ++k) {
        const double b1 = users[k].prv.lpNorm<1>();
        out.power(k) = out.bound * noise_mw / (mn * b1 * b1);
    }
    return out;
}

// Analytic gradient of gamma(t) = P/(sigma^2 tr{Z^-1}) w.r.t. the stacked subarray centers
// [x_1, y_1, ..., x_M, y_M]. Uses d tr{Z^-1} = -tr{Z^-1 dZ Z^-1} with
// [dZ/dx_m]_{ij} = j k sum_n (dx_i conj(c_j) - c_i conj(dx_j)) where, at element (m,n),
// c_i = sum_l conj(b_{i,l}) e^{jkd} and dx_i weights each term by the unit-direction x.
inline VecXd grad_min_sinr_apv(const ArrayGeometry& geom, const std::vector<UserChannel>& users,
                               double power_mw, double noise_mw, double wavelength) {
    const int m_count = geom.num_subarrays();
    const int n_count = geom.subarray_size();
    const int k_count = static_cast<int>(users.size());
    const double k_wave = two_pi / wavelength;

    const CMat h = channel_matrix(geom, users, wavelength);
    const detail::ZfState st = detail::zf_state(h);
    const CMat y2 = st.inv_z * st.inv_z;
    const double coef = power_mw / (noise_mw * st.trace_inv * st.trace_inv);

    VecXd grad(2 * m_count);
    CMat dzx(k_count, k_count), dzy(k_count, k_count);
    std::vector<cplx> c(k_count), dx(k_count), dy(k_count);
    const cplx jk(0.0, k_wave);

    for (int m = 0; m < m_count; ++m) {
        dzx.setZero();
        dzy.setZero();
        for (int n = 0; n < n_count; ++n) {
            const Vec3 pos = element_position(geom, m, n);
            for (int i = 0; i < k_count; ++i) {
                c[i] = std::conj(h(m * n_count + n, i));
                cplx dxi = 0.0, dyi = 0.0;
                for (int l = 0; l < users[i].paths(); ++l) {
                    const Vec3 diff = pos - users[i].anchors[l];
                    const double d = diff.norm();
                    const cplx e = std::conj(users[i].prv[l]) * std::polar(1.0, k_wave * d);
                    dxi += e * (diff.x() / d);
                    dyi += e * (diff.y() / d);
                }
                dx[i] = dxi;
                dy[i] = dyi;
            }
            for (int i = 0; i < k_count; ++i)
                for (int j = 0; j < k_count; ++j) {
                    dzx(i, j) += jk * (dx[i] * std::conj(c[j]) - c[i] * std::conj(dx[j]));
                    dzy(i, j) += jk * (dy[i] * std::conj(c[j]) - c[i] * std::conj(dy[j]));
                }
        }
        // d gamma/dx_m = coef * tr{Z^-1 dZ Z^-1} = coef * tr{dZ * (Z^-1)^2}
        grad(2 * m) = coef * dzx.cwiseProduct(y2.transpose()).sum().real();
        grad(2 * m + 1) = coef * dzy.cwiseProduct(y2.transpose()).sum().real();
    }
    return grad;
}

// Clamp every coordinate into [-A/2, A/2]. Spacing is deliberately not enforced here; the
// line search rejects candidates that fall below d_min.
inline VecXd project_to_region(VecXd apv, const RegionSpec& region) {
    const double half = region.side_A / 2.0;
    for (Eigen::Index i = 0; i < apv.size(); ++i) apv(i) = std::clamp(apv(i), -half, half);
    return apv;
}

namespace detail {

inline double mean_zf_gamma(const ArrayGeometry& geom,
                            const std::vector<std::vector<UserChannel>>& realizations,
                            const LinkParams& lp) {
    double acc = 0.0;
    for (const auto& users : realizations)
        acc += zf_gamma(channel_matrix(geom, users, lp.wavelength), lp.power_mw, lp.noise_mw);
    return acc / static_cast<double>(realizations.size());
}

inline VecXd mean_zf_grad(const ArrayGeometry& geom,
                          const std::vector<std::vector<UserChannel>>& realizations,
                          const LinkParams& lp) {
    VecXd acc = VecXd::Zero(2 * geom.num_subarrays());
    for (const auto& users : realizations)
        acc += grad_min_sinr_apv(geom, users, lp.power_mw, lp.noise_mw, lp.wavelength);
    return acc / static_cast<double>(realizations.size());
}

struct PgaOutcome {
    ArrayGeometry geometry;
    std::vector<DigitalIterRecord> trace;
    StopReason reason = StopReason::max_iterations;
};

// Warm start for the backtracking line search. Consecutive (iterate, gradient) pairs give a
// Barzilai-Borwein curvature estimate along the ascent path, so tau starts each search near
// the scale the Armijo test will accept instead of re-shrinking from tau0 every iteration;
// without it the search burns a dozen backtracks per iteration and the accepted steps hug the
// sufficient-increase boundary, which stretches convergence past any practical iteration cap.
class StepScale {
  public:
    explicit StepScale(double tau0) : tau0_(tau0), tau_(tau0) {}

    double propose() const { return tau_; }

    // Call once per iteration with the current iterate and its gradient, before the search.
    void observe(const VecXd& x, const VecXd& g) {
        if (have_prev_) {
            const VecXd s = x - prev_x_;
            const VecXd y = g - prev_g_;
            const double sy = -s.dot(y); // positive where the objective is locally concave
            const double ss = s.squaredNorm();
            if (sy > 0.0 && ss > 0.0) tau_ = std::clamp(ss / sy, 1e-6 * tau0_, tau0_);
        }
        prev_x_ = x;
        prev_g_ = g;
        have_prev_ = true;
    }

  private:
    double tau0_;
    double tau_;
    VecXd prev_x_, prev_g_;
    bool have_prev_ = false;
};

// Projected gradient ascent with Armijo backtracking on the (possibly Monte Carlo averaged)
// equal-SINR objective. A candidate is accepted only if it stays in the region, keeps every
// pairwise center distance >= d_min, evaluates cleanly, and clears the sufficient-increase
// test gamma(cand) >= gamma(t) + armijo * tau * ||grad||^2 for the current tau.
inline PgaOutcome run_pga(const ArrayGeometry& init,
                          const std::vector<std::vector<UserChannel>>& realizations,
                          const LinkParams& lp, const OptimizerConfig& cfg) {
    validate_link(lp);
    validate_optimizer_config(cfg);
    const RegionSpec region{2.0 * init.region_half, init.d_min};
    if (!validate(init, region).empty())
        throw Error("optimize: initial geometry violates region/spacing constraints");

    PgaOutcome out;
    out.geometry = init;
    double objective = mean_zf_gamma(init, realizations, lp); // initial failure propagates
    out.trace.push_back({0, objective, 0.0, 0});

    const double step0 = resolve_init_step(cfg, lp.wavelength);
    StepScale scale(step0);
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const VecXd grad = mean_zf_grad(out.geometry, realizations, lp);
        const double gnorm2 = grad.squaredNorm();
        // Flat directions (a lone subarray, say, whose position only rotates a global phase)
        // leave pure rounding noise in the gradient; stepping along it would wander the layout
        // without a measurable gain, so treat it as an exact stationary point.
        const double noise_scale = two_pi / lp.wavelength * std::abs(objective);
        if (std::sqrt(gnorm2) <= 1e-15 * noise_scale) {
            out.trace.push_back({iter, objective, 0.0, 0});
            out.reason = StopReason::converged;
            return out;
        }
        const VecXd apv = apv_of(out.geometry);
        scale.observe(apv, grad);

        double tau = scale.propose();
        bool accepted = false;
        double cand_obj = 0.0;
        ArrayGeometry cand;
        int bt = 0;
        for (int j = 0; j <= cfg.max_backtracks; ++j, tau *= cfg.shrink) {
            cand = with_apv(out.geometry, project_to_region(apv + tau * grad, region));
            if (cand.num_subarrays() > 1 && min_center_spacing(cand) < region.d_min) continue;
            bool clean = true;
            try {
                cand_obj = mean_zf_gamma(cand, realizations, lp);
            } catch (const IllConditionedChannel&) {
                clean = false; // mid-search singular Z: treat as a failed step, keep shrinking
            } catch (const ZeroDistance&) {
                clean = false;
            }
            if (clean && cand_obj >= objective + cfg.armijo * tau * gnorm2) {
                accepted = true;
                bt = j;
                break;
            }
        }
        if (!accepted) {
            out.reason = StopReason::stationary;
            return out;
        }
        const double increment = cand_obj - objective;
        out.geometry = cand;
        objective = cand_obj;
        out.trace.push_back({iter, objective, tau, bt});
        if (increment < cfg.tol) {
            out.reason = StopReason::converged;
            return out;
        }
    }
    out.reason = StopReason::max_iterations;
    return out;
}

} // namespace detail

// Movable-subarray digital design for one channel realization: projected gradient ascent on
// the ZF equal-SINR objective, then the ZF precoder at the final positions.
inline DigitalResult optimize_digital(const ArrayGeometry& init,
                                      const std::vector<UserChannel>& users, const LinkParams& lp,
                                      const OptimizerConfig& cfg = {}) {
    detail::PgaOutcome pga = detail::run_pga(init, {users}, lp, cfg);
    DigitalResult out;
    out.trace = std::move(pga.trace);
    out.reason = pga.reason;
    out.solution.geometry = std::move(pga.geometry);
    const CMat h = channel_matrix(out.solution.geometry, users, lp.wavelength);
    out.solution.precoder = zf_precoder(h, lp.power_mw);
    out.solution.per_user_sinr =
        sinr_per_user(out.solution.geometry, out.solution.precoder, users, lp.noise_mw, lp.wavelength);
    out.solution.min_sinr = out.solution.per_user_sinr.minCoeff();
    return out;
}

struct DigitalStatisticalResult {
    ArrayGeometry geometry;
    std::vector<CMat> precoders;  // per realization, at the trained geometry
    std::vector<double> min_sinr; // per realization
    std::vector<DigitalIterRecord> trace;
    StopReason reason = StopReason::max_iterations;
};

// Two-timescale variant: one geometry trained on Q1 sampled realizations (gradient and
// objective averaged), instantaneous ZF per realization. Q1 = 1 reproduces optimize_digital
// exactly, including the trajectory.
inline DigitalStatisticalResult optimize_digital_statistical(
    const ArrayGeometry& init, const std::vector<std::vector<UserChannel>>& realizations,
    const LinkParams& lp, const OptimizerConfig& cfg = {}) {
    if (realizations.empty())
        throw DimensionMismatch("optimize_digital_statistical: need at least one realization");
    detail::PgaOutcome pga = detail::run_pga(init, realizations, lp, cfg);
    DigitalStatisticalResult out;
    out.geometry = std::move(pga.geometry);
    out.trace = std::move(pga.trace);
    out.reason = pga.reason;
    out.precoders.reserve(realizations.size());
    for (const auto& users : realizations) {
        const CMat h = channel_matrix(out.geometry, users, lp.wavelength);
        out.precoders.push_back(zf_precoder(h, lp.power_mw));
        out.min_sinr.push_back(detail::zf_gamma(h, lp.power_mw, lp.noise_mw));
    }
    return out;
}

inline DigitalStatisticalResult optimize_digital_statistical(
    const ArrayGeometry& init, const std::function<std::vector<UserChannel>(int)>& sampler,
    int q1, const LinkParams& lp, const OptimizerConfig& cfg = {}) {
    if (q1 < 1) throw ConfigError("optimize_digital_statistical: Q1 must be >= 1");
    std::vector<std::vector<UserChannel>> realizations;
    realizations.reserve(q1);
    for (int q = 0; q < q1; ++q) realizations.push_back(sampler(q));
    return optimize_digital_statistical(init, realizations, lp, cfg);
}

// Trace CSV: iter, objective_linear, objective_db, step_size, backtracks
inline void write_digital_trace(std::ostream& os, const std::vector<DigitalIterRecord>& trace) {
    os << "iter,objective_linear,objective_db,step_size,backtracks\n";
    for (const auto& r : trace)
        os << r.iter << ',' << fmt_g17(r.objective) << ',' << fmt_g17(linear_to_db(r.objective))
           << ',' << fmt_g17(r.step) << ',' << r.backtracks << '\n';
}

} // namespace manta
