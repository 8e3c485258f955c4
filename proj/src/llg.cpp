#include "emodm/llg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "emodm/errors.hpp"

namespace emodm {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

void validate_llg(const LlgParams& p) {
    if (!(p.gamma > 0.0) || p.lambda < 0.0 || !(p.m_s > 0.0) || !(p.volume > 0.0) ||
        !(p.mu_b > 0.0) || !(p.q > 0.0)) {
        throw std::invalid_argument("invalid LLG parameters");
    }
    const double n = std::sqrt(dot(p.polarization, p.polarization));
    if (std::abs(n - 1.0) > 1e-9) {
        throw std::invalid_argument("polarization must be a unit vector");
    }
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Reflect an angle into [0, pi] and keep it off the coordinate poles.
double fold_polar(double theta) {
    theta = std::fabs(std::fmod(theta, 2.0 * kPi));
    if (theta > kPi) theta = 2.0 * kPi - theta;
    return std::clamp(theta, 1e-9, kPi - 1e-9);
}

MagnetState nudged_off_pole(MagnetState s) {
    if (std::abs(std::sin(s.theta)) < kPoleEpsilon) {
        s.theta += kPoleNudge;
    }
    return s;
}

AngularRates rates_with_pole_guard(const MagnetState& s, const LlgParams& p) {
    return llg_rhs(nudged_off_pole(s), p);
}

MagnetState advance(const MagnetState& s, double h, const AngularRates& r) {
    return {s.theta + h * r.theta_rate, s.phi + h * r.phi_rate};
}

} // namespace

Vec3 MagnetState::cartesian() const {
    const double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

double spin_count(const LlgParams& params) {
    validate_llg(params);
    return params.m_s * params.volume / params.mu_b;
}

Vec3 effective_field(const Vec3& m, const LlgParams& params) {
    if (std::abs(std::sqrt(dot(m, m)) - 1.0) > 1e-9) {
        throw std::invalid_argument("magnetization must be a unit vector");
    }
    return {0.0, -params.h_d * m[1], m[2]};
}

Vec3 spin_torque(const Vec3& m, const LlgParams& params) {
    validate_llg(params);
    const double scale = params.i_s / (params.q * spin_count(params));
    const Vec3 current = {scale * params.polarization[0], scale * params.polarization[1],
                          scale * params.polarization[2]};
    return cross(m, cross(current, m));
}

Vec3 llg_rhs_cartesian(const Vec3& m, const LlgParams& params) {
    validate_llg(params);
    // Fields are in anisotropy-field units, so they precess at gamma * 2 k_u / m_s.
    const double field_rate = params.gamma * 2.0 * params.k_u / params.m_s;
    const Vec3 h = effective_field(m, params);
    const Vec3 m_x_h = cross(m, h);
    const Vec3 m_x_m_x_h = cross(m, m_x_h);
    const Vec3 tau = spin_torque(m, params);
    const Vec3 m_x_tau = cross(m, tau);
    const double inv = 1.0 / (1.0 + params.lambda * params.lambda);
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        out[i] = inv * (-field_rate * m_x_h[i] - params.lambda * field_rate * m_x_m_x_h[i] +
                        tau[i] + params.lambda * m_x_tau[i]);
    }
    return out;
}

AngularRates llg_rhs(const MagnetState& state, const LlgParams& params) {
    const double st = std::sin(state.theta);
    if (std::abs(st) < kPoleEpsilon) {
        throw NumericalError("coordinate singularity: |sin theta| = " + std::to_string(st));
    }
    const double ct = std::cos(state.theta);
    const double sp = std::sin(state.phi);
    const double cp = std::cos(state.phi);
    const Vec3 m = {st * cp, st * sp, ct};
    const Vec3 rhs = llg_rhs_cartesian(m, params);
    const Vec3 theta_hat = {ct * cp, ct * sp, -st};
    const Vec3 phi_hat = {-sp, cp, 0.0};
    return {dot(rhs, theta_hat), dot(rhs, phi_hat) / st};
}

std::vector<MagnetState> integrate_llg(const MagnetState& initial, const LlgParams& params,
                                       double t0, double t1, std::size_t sample_count,
                                       std::size_t substeps_per_sample) {
    validate_llg(params);
    if (sample_count < 2 || substeps_per_sample == 0 || !(t1 > t0)) {
        throw std::invalid_argument("need sample_count >= 2, positive substeps and t1 > t0");
    }
    const std::size_t total = (sample_count - 1) * substeps_per_sample;
    const double h = (t1 - t0) / static_cast<double>(total);

    std::vector<MagnetState> samples;
    samples.reserve(sample_count);
    samples.push_back(initial);

    MagnetState u = initial;
    // Rolling derivative history; hist[3] is the newest grid point.
    AngularRates hist[4];
    hist[3] = rates_with_pole_guard(u, params);

    for (std::size_t step = 0; step < total; ++step) {
        const double t = t0 + h * static_cast<double>(step);
        MagnetState next;
        AngularRates f_next;
        if (step < 3) {
            // Classical RK4 bootstrap until the multistep history exists.
            const AngularRates k1 = hist[3];
            const AngularRates k2 = rates_with_pole_guard(advance(u, 0.5 * h, k1), params);
            const AngularRates k3 = rates_with_pole_guard(advance(u, 0.5 * h, k2), params);
            const AngularRates k4 = rates_with_pole_guard(advance(u, h, k3), params);
            next.theta = u.theta + h / 6.0 *
                             (k1.theta_rate + 2.0 * k2.theta_rate + 2.0 * k3.theta_rate +
                              k4.theta_rate);
            next.phi = u.phi + h / 6.0 *
                           (k1.phi_rate + 2.0 * k2.phi_rate + 2.0 * k3.phi_rate + k4.phi_rate);
            f_next = rates_with_pole_guard(next, params);
        } else {
            // Predict (Adams-Bashforth 4), evaluate, correct (Adams-Moulton 3),
            // evaluate again for the next step's history.
            MagnetState pred;
            pred.theta = u.theta + h / 24.0 *
                             (55.0 * hist[3].theta_rate - 59.0 * hist[2].theta_rate +
                              37.0 * hist[1].theta_rate - 9.0 * hist[0].theta_rate);
            pred.phi = u.phi + h / 24.0 *
                           (55.0 * hist[3].phi_rate - 59.0 * hist[2].phi_rate +
                            37.0 * hist[1].phi_rate - 9.0 * hist[0].phi_rate);
            const AngularRates f_pred = rates_with_pole_guard(pred, params);
            next.theta = u.theta + h / 24.0 *
                             (9.0 * f_pred.theta_rate + 19.0 * hist[3].theta_rate -
                              5.0 * hist[2].theta_rate + hist[1].theta_rate);
            next.phi = u.phi + h / 24.0 *
                           (9.0 * f_pred.phi_rate + 19.0 * hist[3].phi_rate -
                            5.0 * hist[2].phi_rate + hist[1].phi_rate);
            f_next = rates_with_pole_guard(next, params);
        }
        if (!std::isfinite(next.theta) || !std::isfinite(next.phi)) {
            throw NumericalError("integration diverged at t = " + std::to_string(t + h));
        }
        hist[0] = hist[1];
        hist[1] = hist[2];
        hist[2] = hist[3];
        hist[3] = f_next;
        u = next;
        if ((step + 1) % substeps_per_sample == 0) {
            samples.push_back(u);
        }
    }
    return samples;
}

SimTrace run_llg_benchmark(const FaultSchedule& schedule, const LlgParams& params,
                           double azimuth_mean, double azimuth_std,
                           double noise_fraction, std::uint64_t seed) {
    validate_schedule(schedule);
    validate_llg(params);
    if (azimuth_std < 0.0 || noise_fraction < 0.0) {
        throw std::invalid_argument("azimuth_std and noise_fraction must be non-negative");
    }

    const double period = schedule.period_duration;
    std::mt19937_64 fault_rng(splitmix64(seed));

    SimTrace trace;
    trace.outputs.values.reserve(schedule.total_periods);
    trace.outputs.timestamps.reserve(schedule.total_periods);
    trace.labels.reserve(schedule.total_periods);
    trace.input_description = "m_x of the spin-torque-driven macrospin";

    MagnetState state{kPi / 4.0, 0.0};
    for (std::size_t p = 1; p <= schedule.total_periods; ++p) {
        if (schedule.is_abnormal(p)) {
            // Fault: the polar angle is knocked to a fresh draw at every
            // abnormal period; the trajectory continues from the perturbed
            // state (also after the segment ends).
            double theta = azimuth_mean;
            if (azimuth_std > 0.0) {
                std::normal_distribution<double> dist(azimuth_mean, azimuth_std);
                theta = dist(fault_rng);
            }
            state.theta = fold_polar(theta);
        }
        const double t0 = static_cast<double>(p - 1) * period;
        const double t1 = static_cast<double>(p) * period;
        state = integrate_llg(state, params, t0, t1, 2, 16).back();
        trace.outputs.values.push_back(state.cartesian()[0]);
        trace.outputs.timestamps.push_back(t1);
        trace.labels.push_back(schedule.is_abnormal(p) ? 2 : 1);
    }

    if (noise_fraction > 0.0) {
        const auto [mn, mx] =
            std::minmax_element(trace.outputs.values.begin(), trace.outputs.values.end());
        const double noise_std = noise_fraction * (*mx - *mn);
        if (noise_std > 0.0) {
            std::mt19937_64 noise_rng(splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ull));
            std::normal_distribution<double> dist(0.0, noise_std);
            for (double& v : trace.outputs.values) {
                v += dist(noise_rng);
            }
        }
    }
    return trace;
}

FaultSchedule llg_reference_schedule(bool multi_fault) {
    FaultSchedule s;
    s.total_periods = 200;
    s.period_duration = 0.8e-9 / 200.0;
    if (multi_fault) {
        s.abnormal_segments = {{51, 60}, {91, 100}, {121, 130}};
    } else {
        s.abnormal_segments = {{101, 110}};
    }
    return s;
}

} // namespace emodm
