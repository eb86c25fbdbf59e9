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
// Analog (single RF chain, OFDMA) beamforming with a constant-modulus phase vector. Users sit
// on orthogonal subcarriers, so there is no interference term: with per-user power p_k the SNR
// is |h_k^H w|^2 p_k / sigma^2, and the max-min optimum over p equalizes all SNRs at
// eta = (P/sigma^2) / sum_k |h_k^H w|^-2. Alternating ascent moves the subarray centers and the
// phases; power allocation is closed form at the end.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "manta/digital.hpp"

namespace manta {

// w_i = e^{j phi_i} / sqrt(MN)
inline CVec weights_from_phases(const VecXd& phases) {
    const double mod = 1.0 / std::sqrt(static_cast<double>(phases.size()));
    CVec w(phases.size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) w(i) = std::polar(mod, phases(i));
    return w;
}

inline double normalize_phase(double phi) {
    double y = std::fmod(phi, two_pi);
    if (y < 0.0) y += two_pi;
    if (y >= two_pi) y -= two_pi; // fmod(-tiny) + 2*pi can round up to 2*pi
    return y;
}

inline VecXd normalize_phases(VecXd phases) {
    for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = normalize_phase(phases(i));
    return phases;
}

namespace detail {

// |h_k^H w|^2 for every user.
inline VecXd effective_gains(const CMat& h, const CVec& w) {
    if (w.size() != h.rows()) throw DimensionMismatch("analog: phase vector must have MN entries");
    const CVec psi = h.adjoint() * w;
    return psi.cwiseAbs2();
}

inline void require_positive_gains(const VecXd& gains, const char* who) {
    for (Eigen::Index k = 0; k < gains.size(); ++k)
        if (gains(k) == 0.0)
            throw ZeroGain(std::string(who) + ": user " + std::to_string(k) +
                           " has zero effective gain");
}

} // namespace detail

// SNR per user for an explicit power split: |h_k^H w|^2 p_k / sigma^2.
inline VecXd snr_per_user(const ArrayGeometry& geom, const VecXd& phases, const VecXd& power,
                          const std::vector<UserChannel>& users, double noise_mw,
                          double wavelength) {
    if (power.size() != static_cast<Eigen::Index>(users.size()))
        throw DimensionMismatch("snr_per_user: power split must have K entries");
    for (Eigen::Index k = 0; k < power.size(); ++k)
        if (!(power(k) >= 0.0)) throw ConfigError("snr_per_user: powers must be >= 0");
    const CMat h = channel_matrix(geom, users, wavelength);
    const VecXd gains = detail::effective_gains(h, weights_from_phases(phases));
    return gains.cwiseProduct(power) / noise_mw;
}

// Max-min optimal split p_k = P / (|h_k^H w|^2 sum_j |h_j^H w|^-2): equalizes all SNRs and
// spends the full budget.
inline VecXd optimal_power_allocation(const ArrayGeometry& geom, const VecXd& phases,
                                      const std::vector<UserChannel>& users, double power_mw,
                                      double noise_mw, double wavelength) {
    (void)noise_mw; // the split does not depend on the noise floor
    const CMat h = channel_matrix(geom, users, wavelength);
    const VecXd gains = detail::effective_gains(h, weights_from_phases(phases));
    detail::require_positive_gains(gains, "optimal_power_allocation");
    const double s = gains.cwiseInverse().sum();
    return power_mw / s * gains.cwiseInverse();
}

// Equalized SNR under the optimal split: (P/sigma^2) / sum_k |h_k^H w|^-2.
inline double min_snr(const ArrayGeometry& geom, const VecXd& phases,
                      const std::vector<UserChannel>& users, double power_mw, double noise_mw,
                      double wavelength) {
    const CMat h = channel_matrix(geom, users, wavelength);
    const VecXd gains = detail::effective_gains(h, weights_from_phases(phases));
    detail::require_positive_gains(gains, "min_snr");
    return power_mw / (noise_mw * gains.cwiseInverse().sum());
}

// The analog min-SNR obeys the same closed-form ceiling as the digital min-SINR.
inline double min_snr_upper_bound(const std::vector<UserChannel>& users, int m, int n,
                                  double power_mw, double noise_mw) {
    return min_sinr_upper_bound(users, m, n, power_mw, noise_mw).bound;
}

namespace detail {

// Common outer chain for both analog gradients:
// d eta = (P/sigma^2) S^-2 sum_k g_k^-2 dg_k, with S = sum_k 1/g_k.
struct AnalogGradContext {
    CMat h;     // MN x K
    CVec w;     // MN
    CVec psi;   // K, psi_k = h_k^H w
    VecXd gains;
    VecXd outer; // (P/sigma^2) S^-2 g_k^-2
};

inline AnalogGradContext analog_grad_context(const ArrayGeometry& geom, const VecXd& phases,
                                             const std::vector<UserChannel>& users,
                                             double power_mw, double noise_mw,
                                             double wavelength, const char* who) {
    AnalogGradContext ctx;
    ctx.h = channel_matrix(geom, users, wavelength);
    ctx.w = weights_from_phases(phases);
    if (ctx.w.size() != ctx.h.rows())
        throw DimensionMismatch("analog gradient: phase vector must have MN entries");
    ctx.psi = ctx.h.adjoint() * ctx.w;
    ctx.gains = ctx.psi.cwiseAbs2();
    require_positive_gains(ctx.gains, who);
    const double s = ctx.gains.cwiseInverse().sum();
    ctx.outer = power_mw / (noise_mw * s * s) * ctx.gains.cwiseAbs2().cwiseInverse();
    return ctx;
}

} // namespace detail

// Analytic gradient of the equalized SNR w.r.t. the stacked subarray centers.
// dg_k/dx_m = 2 Re{ conj(psi_k) jk sum_n w_{mn} sum_l conj(b_{k,l}) u_x e^{jkd} }.
inline VecXd grad_min_snr_apv(const ArrayGeometry& geom, const VecXd& phases,
                              const std::vector<UserChannel>& users, double power_mw,
                              double noise_mw, double wavelength) {
    const detail::AnalogGradContext ctx =
        detail::analog_grad_context(geom, phases, users, power_mw, noise_mw, wavelength,
                                    "grad_min_snr_apv");
    const int m_count = geom.num_subarrays();
    const int n_count = geom.subarray_size();
    const int k_count = static_cast<int>(users.size());
    const double k_wave = two_pi / wavelength;
    const cplx jk(0.0, k_wave);

    VecXd grad = VecXd::Zero(2 * m_count);
    for (int m = 0; m < m_count; ++m) {
        for (int k = 0; k < k_count; ++k) {
            cplx accx = 0.0, accy = 0.0;
            for (int n = 0; n < n_count; ++n) {
                const Vec3 pos = element_position(geom, m, n);
                cplx dxs = 0.0, dys = 0.0;
                for (int l = 0; l < users[k].paths(); ++l) {
                    const Vec3 diff = pos - users[k].anchors[l];
                    const double d = diff.norm();
                    const cplx e = std::conj(users[k].prv[l]) * std::polar(1.0, k_wave * d);
                    dxs += e * (diff.x() / d);
                    dys += e * (diff.y() / d);
                }
                accx += ctx.w(m * n_count + n) * dxs;
                accy += ctx.w(m * n_count + n) * dys;
            }
            const double dgx = 2.0 * (std::conj(ctx.psi(k)) * jk * accx).real();
            const double dgy = 2.0 * (std::conj(ctx.psi(k)) * jk * accy).real();
            grad(2 * m) += ctx.outer(k) * dgx;
            grad(2 * m + 1) += ctx.outer(k) * dgy;
        }
    }
    return grad;
}

// Analytic gradient of the equalized SNR w.r.t. the phase vector.
// dg_k/dphi_q = 2 Re{ conj(psi_k) j conj([h_k]_q) w_q }.
inline VecXd grad_min_snr_phase(const ArrayGeometry& geom, const VecXd& phases,
                                const std::vector<UserChannel>& users, double power_mw,
                                double noise_mw, double wavelength) {
    const detail::AnalogGradContext ctx =
        detail::analog_grad_context(geom, phases, users, power_mw, noise_mw, wavelength,
                                    "grad_min_snr_phase");
    const cplx j1(0.0, 1.0);
    VecXd grad = VecXd::Zero(ctx.w.size());
    for (Eigen::Index q = 0; q < ctx.w.size(); ++q) {
        for (Eigen::Index k = 0; k < ctx.psi.size(); ++k) {
            const double dg = 2.0 * (std::conj(ctx.psi(k)) * j1 * std::conj(ctx.h(q, k)) * ctx.w(q)).real();
            grad(q) += ctx.outer(k) * dg;
        }
    }
    return grad;
}

// Phase initializer: entrywise angle of the sum of l2-normalized conjugated channel vectors.
// Entries whose sum is exactly zero get phase 0; their indices are reported through
// zero_entries when the caller wants to warn.
inline VecXd init_phases(const ArrayGeometry& geom, const std::vector<UserChannel>& users,
                         double wavelength, std::vector<int>* zero_entries = nullptr) {
    const CMat h = channel_matrix(geom, users, wavelength);
    CVec sum = CVec::Zero(h.rows());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        const double nrm = h.col(k).norm();
        if (nrm == 0.0) throw ZeroChannel("init_phases: user " + std::to_string(k) +
                                          " has zero channel vector");
        sum += h.col(k).conjugate() / nrm;
    }
    VecXd phases(sum.size());
    for (Eigen::Index i = 0; i < sum.size(); ++i) {
        if (sum(i) == cplx(0.0, 0.0)) {
            phases(i) = 0.0;
            if (zero_entries) zero_entries->push_back(static_cast<int>(i));
        } else {
            phases(i) = std::arg(sum(i));
        }
    }
    return phases;
}

struct AnalogIterRecord {
    int iter = 0;
    double objective = 0.0; // linear equalized SNR (statistical: mean over realizations)
    int apv_backtracks = 0;
    int phase_backtracks = 0; // statistical: worst realization
};

struct AnalogSolution {
    ArrayGeometry geometry;
    VecXd phases; // normalized to [0, 2*pi)
    VecXd power;
    VecXd per_user_snr;
    double min_snr = 0.0;
};

struct AnalogResult {
    AnalogSolution solution;
    std::vector<AnalogIterRecord> trace;
    StopReason reason = StopReason::max_iterations;
    double max_modulus_dev = 0.0; // max over updates of |sqrt(MN)|w_i| - 1|
};

struct AnalogStatisticalResult {
    ArrayGeometry geometry;
    std::vector<VecXd> phases; // per realization
    std::vector<VecXd> power;
    std::vector<double> min_snr;
    std::vector<AnalogIterRecord> trace;
    StopReason reason = StopReason::max_iterations;
    double max_modulus_dev = 0.0;
};

namespace detail {

inline double modulus_dev(const VecXd& phases) {
    const CVec w = weights_from_phases(phases);
    const double root = std::sqrt(static_cast<double>(phases.size()));
    double dev = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        dev = std::max(dev, std::abs(root * std::abs(w(i)) - 1.0));
    return dev;
}

struct AoOutcome {
    ArrayGeometry geometry;
    std::vector<VecXd> phases;
    std::vector<AnalogIterRecord> trace;
    StopReason reason = StopReason::max_iterations;
    double max_modulus_dev = 0.0;
};

// Alternating ascent. Each iteration takes one projected-gradient step on the subarray
// centers against the realization-averaged objective (skipped when move_apv is false), then
// one gradient step on each realization's phase vector, every step Armijo-backtracked. The
// averaged objective never decreases; an iteration in which no half makes progress stops the
// loop as stationary.
inline AoOutcome run_ao(const ArrayGeometry& init,
                        const std::vector<std::vector<UserChannel>>& realizations,
                        const LinkParams& lp, const OptimizerConfig& cfg, bool move_apv) {
    validate_link(lp);
    validate_optimizer_config(cfg);
    const RegionSpec region{2.0 * init.region_half, init.d_min};
    if (!validate(init, region).empty())
        throw Error("optimize: initial geometry violates region/spacing constraints");
    if (realizations.empty()) throw DimensionMismatch("analog optimize: need a realization");
    const int q_count = static_cast<int>(realizations.size());

    AoOutcome out;
    out.geometry = init;
    out.phases.reserve(q_count);
    std::vector<double> etas(q_count);
    for (int q = 0; q < q_count; ++q) {
        out.phases.push_back(init_phases(init, realizations[q], lp.wavelength));
        out.max_modulus_dev = std::max(out.max_modulus_dev, modulus_dev(out.phases.back()));
        etas[q] = min_snr(init, out.phases[q], realizations[q], lp.power_mw, lp.noise_mw,
                          lp.wavelength); // initial ZeroGain propagates
    }
    auto mean_eta = [&] {
        double acc = 0.0;
        for (double e : etas) acc += e;
        return acc / q_count;
    };
    double objective = mean_eta();
    out.trace.push_back({0, objective, 0, 0});

    const double step0 = resolve_init_step(cfg, lp.wavelength);
    detail::StepScale apv_scale(step0);
    std::vector<detail::StepScale> phase_scale(static_cast<std::size_t>(q_count),
                                               detail::StepScale(step0));
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        bool apv_accepted = false;
        int apv_bt = 0;

        if (move_apv) {
            VecXd grad = VecXd::Zero(2 * out.geometry.num_subarrays());
            for (int q = 0; q < q_count; ++q)
                grad += grad_min_snr_apv(out.geometry, out.phases[q], realizations[q],
                                         lp.power_mw, lp.noise_mw, lp.wavelength);
            grad /= static_cast<double>(q_count);
            const double gnorm2 = grad.squaredNorm();
            const VecXd apv = apv_of(out.geometry);
            apv_scale.observe(apv, grad);

            double tau = apv_scale.propose();
            for (int j = 0; j <= cfg.max_backtracks; ++j, tau *= cfg.shrink) {
                ArrayGeometry cand =
                    with_apv(out.geometry, project_to_region(apv + tau * grad, region));
                if (cand.num_subarrays() > 1 && min_center_spacing(cand) < region.d_min)
                    continue;
                std::vector<double> cand_etas(q_count);
                bool clean = true;
                double acc = 0.0;
                for (int q = 0; q < q_count && clean; ++q) {
                    try {
                        cand_etas[q] = min_snr(cand, out.phases[q], realizations[q], lp.power_mw,
                                               lp.noise_mw, lp.wavelength);
                        acc += cand_etas[q];
                    } catch (const ZeroGain&) {
                        clean = false;
                    } catch (const ZeroDistance&) {
                        clean = false;
                    }
                }
                if (clean && acc / q_count >= objective + cfg.armijo * tau * gnorm2) {
                    out.geometry = std::move(cand);
                    etas = std::move(cand_etas);
                    apv_accepted = true;
                    apv_bt = j;
                    break;
                }
            }
            if (!apv_accepted) apv_bt = cfg.max_backtracks;
        }

        bool phase_accepted = false;
        int phase_bt = 0;
        for (int q = 0; q < q_count; ++q) {
            const VecXd grad = grad_min_snr_phase(out.geometry, out.phases[q], realizations[q],
                                                  lp.power_mw, lp.noise_mw, lp.wavelength);
            const double gnorm2 = grad.squaredNorm();
            phase_scale[static_cast<std::size_t>(q)].observe(out.phases[q], grad);
            double tau = phase_scale[static_cast<std::size_t>(q)].propose();
            bool accepted_q = false;
            for (int j = 0; j <= cfg.max_backtracks; ++j, tau *= cfg.shrink) {
                const VecXd cand = out.phases[q] + tau * grad;
                double cand_eta;
                try {
                    cand_eta = min_snr(out.geometry, cand, realizations[q], lp.power_mw,
                                       lp.noise_mw, lp.wavelength);
                } catch (const ZeroGain&) {
                    continue;
                }
                if (cand_eta >= etas[q] + cfg.armijo * tau * gnorm2) {
                    out.phases[q] = cand;
                    etas[q] = cand_eta;
                    accepted_q = true;
                    phase_bt = std::max(phase_bt, j);
                    out.max_modulus_dev =
                        std::max(out.max_modulus_dev, modulus_dev(out.phases[q]));
                    break;
                }
            }
            if (accepted_q) phase_accepted = true;
            else phase_bt = std::max(phase_bt, cfg.max_backtracks);
        }

        const double next = mean_eta();
        const double increment = next - objective;
        objective = next;
        out.trace.push_back({iter, objective, apv_bt, phase_bt});
        if (!apv_accepted && !phase_accepted) {
            out.reason = StopReason::stationary;
            return out;
        }
        if (increment < cfg.tol) {
            out.reason = StopReason::converged;
            return out;
        }
    }
    out.reason = StopReason::max_iterations;
    return out;
}

inline AnalogSolution finish_analog(const ArrayGeometry& geom, const VecXd& phases,
                                    const std::vector<UserChannel>& users, const LinkParams& lp) {
    AnalogSolution sol;
    sol.geometry = geom;
    sol.phases = normalize_phases(phases);
    sol.power = optimal_power_allocation(geom, sol.phases, users, lp.power_mw, lp.noise_mw,
                                         lp.wavelength);
    sol.per_user_snr =
        snr_per_user(geom, sol.phases, sol.power, users, lp.noise_mw, lp.wavelength);
    sol.min_snr = sol.per_user_snr.minCoeff();
    return sol;
}

} // namespace detail

// Joint subarray-position and phase design for one realization (alternating ascent), closed
// with the optimal power split.
inline AnalogResult optimize_analog(const ArrayGeometry& init,
                                    const std::vector<UserChannel>& users, const LinkParams& lp,
                                    const OptimizerConfig& cfg = {}) {
    detail::AoOutcome ao = detail::run_ao(init, {users}, lp, cfg, true);
    AnalogResult out;
    out.trace = std::move(ao.trace);
    out.reason = ao.reason;
    out.max_modulus_dev = ao.max_modulus_dev;
    out.solution = detail::finish_analog(ao.geometry, ao.phases[0], users, lp);
    return out;
}

// Phase-only variant for a frozen geometry (benchmark arrays, or a statistically trained
// geometry serving an instantaneous draw).
inline AnalogResult optimize_phases_only(const ArrayGeometry& geom,
                                         const std::vector<UserChannel>& users,
                                         const LinkParams& lp, const OptimizerConfig& cfg = {}) {
    detail::AoOutcome ao = detail::run_ao(geom, {users}, lp, cfg, false);
    AnalogResult out;
    out.trace = std::move(ao.trace);
    out.reason = ao.reason;
    out.max_modulus_dev = ao.max_modulus_dev;
    out.solution = detail::finish_analog(ao.geometry, ao.phases[0], users, lp);
    return out;
}

// Two-timescale variant: geometry trained against the average over Q2 realizations, phases and
// power per realization. Q2 = 1 reproduces optimize_analog exactly.
inline AnalogStatisticalResult optimize_analog_statistical(
    const ArrayGeometry& init, const std::vector<std::vector<UserChannel>>& realizations,
    const LinkParams& lp, const OptimizerConfig& cfg = {}) {
    detail::AoOutcome ao = detail::run_ao(init, realizations, lp, cfg, true);
    AnalogStatisticalResult out;
    out.geometry = std::move(ao.geometry);
    out.trace = std::move(ao.trace);
    out.reason = ao.reason;
    out.max_modulus_dev = ao.max_modulus_dev;
    out.phases.reserve(realizations.size());
    for (std::size_t q = 0; q < realizations.size(); ++q) {
        AnalogSolution sol = detail::finish_analog(out.geometry, ao.phases[q], realizations[q], lp);
        out.phases.push_back(std::move(sol.phases));
        out.power.push_back(std::move(sol.power));
        out.min_snr.push_back(sol.min_snr);
    }
    return out;
}

inline AnalogStatisticalResult optimize_analog_statistical(
    const ArrayGeometry& init, const std::function<std::vector<UserChannel>(int)>& sampler,
    int q2, const LinkParams& lp, const OptimizerConfig& cfg = {}) {
    if (q2 < 1) throw ConfigError("optimize_analog_statistical: Q2 must be >= 1");
    std::vector<std::vector<UserChannel>> realizations;
    realizations.reserve(q2);
    for (int q = 0; q < q2; ++q) realizations.push_back(sampler(q));
    return optimize_analog_statistical(init, realizations, lp, cfg);
}

// Trace CSV: iter, objective_linear, objective_db, apv_backtracks, phase_backtracks
inline void write_analog_trace(std::ostream& os, const std::vector<AnalogIterRecord>& trace) {
    os << "iter,objective_linear,objective_db,apv_backtracks,phase_backtracks\n";
    for (const auto& r : trace)
        os << r.iter << ',' << fmt_g17(r.objective) << ',' << fmt_g17(linear_to_db(r.objective))
           << ',' << r.apv_backtracks << ',' << r.phase_backtracks << '\n';
}

} // namespace manta
