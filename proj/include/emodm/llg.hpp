#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "emodm/sim_trace.hpp"

namespace emodm {

using Vec3 = std::array<double, 3>;

/// Macrospin constants. Fields are expressed in units of the anisotropy
/// field 2 k_u / m_s, so the field terms enter the dynamics at the rate
/// gamma * 2 k_u / m_s (1/s); the spin-torque term carries its own 1/s
/// scale i_s / (q N_s).
struct LlgParams {
    double k_u = 3.14e4;       // erg/cm^3
    double gamma = 1.76e7;     // rad/(Oe s)
    double lambda = 0.007;     // Gilbert damping
    double h_d = 0.0;          // demagnetizing field, dimensionless
    double q = 1.6e-19;        // electron charge, C
    double m_s = 780.0;        // emu/cm^3
    double volume = 2.72e-17;  // cm^3
    double mu_b = 9.274e-21;   // Bohr magneton
    double i_s = 1.814e-4;     // spin current magnitude, A
    Vec3 polarization = {0.0, 0.0, 1.0}; // unit spin-current direction
};

/// Orientation in spherical angles; the Cartesian image
/// (sin t cos p, sin t sin p, cos t) has unit norm by construction.
struct MagnetState {
    double theta = 0.0;
    double phi = 0.0;

    Vec3 cartesian() const;
};

/// Total number of spins m_s * volume / mu_b.
double spin_count(const LlgParams& params);

/// (0, -h_d m_y, m_z) in anisotropy-field units.
Vec3 effective_field(const Vec3& m, const LlgParams& params);

/// m x (I_s x m) / (q N_s): the transverse part of the spin current, 1/s.
Vec3 spin_torque(const Vec3& m, const LlgParams& params);

/// dm/dt (1/s) of the damped precession plus spin-torque dynamics
/// (1+lambda^2) dm/dt = -G (m x H) - lambda G (m x m x H) + tau + lambda (m x tau).
Vec3 llg_rhs_cartesian(const Vec3& m, const LlgParams& params);

struct AngularRates {
    double theta_rate = 0.0; // rad/s
    double phi_rate = 0.0;   // rad/s
};

/// Projects the Cartesian right side onto the tangent basis. Throws
/// NumericalError("coordinate singularity") when |sin theta| < pole_epsilon;
/// the integrator resolves that by nudging theta instead.
AngularRates llg_rhs(const MagnetState& state, const LlgParams& params);

inline constexpr double kPoleEpsilon = 1e-10;
inline constexpr double kPoleNudge = 1e-9;

/// Fixed-step Adams-Bashforth-Moulton PECE (order 4, bootstrapped with
/// classical RK4) in the spherical angles. Returns sample_count states at
/// uniform times across [t0, t1] including both endpoints; each sample is
/// integrated with substeps_per_sample internal steps.
std::vector<MagnetState> integrate_llg(const MagnetState& initial, const LlgParams& params,
                                       double t0, double t1, std::size_t sample_count,
                                       std::size_t substeps_per_sample = 16);

/// Labeled benchmark: the trajectory starts at theta = pi/4, phi = 0; at
/// every abnormal period theta is re-drawn from
/// N(azimuth_mean, azimuth_std^2) (folded into (0, pi)) and the trajectory
/// continues from the perturbed state, also once the segment ends. The
/// per-period output is m_x at the period end, plus Gaussian observation
/// noise with std = noise_fraction * peak-to-peak of the clean output.
SimTrace run_llg_benchmark(const FaultSchedule& schedule, const LlgParams& params,
                           double azimuth_mean, double azimuth_std,
                           double noise_fraction, std::uint64_t seed);

/// The published experiment plans: 200 periods over 0.8 ns; the
/// single-fault segment is 101-110, the multi-fault segments are 51-60,
/// 91-100 and 121-130.
FaultSchedule llg_reference_schedule(bool multi_fault);

} // namespace emodm
