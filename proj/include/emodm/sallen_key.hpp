#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "emodm/sim_trace.hpp"

namespace emodm {

enum class InputKind { single, double_component };

/// 100 sin(800 pi t), plus 100 sin(1600 pi t) for the double-component input.
double input_voltage(double t, InputKind kind);

struct CircuitParams {
    double r1 = 1000.0;   // ohm
    double r2 = 1000.0;   // ohm
    double c1 = 0.4e-6;   // farad
    double c2 = 0.4e-6;   // farad
};

/// Parameter drift applied during abnormal periods. Second moments are
/// variances. rejection_tail is the total two-tail probability of
/// per-period Monte-Carlo outputs discarded before averaging.
struct DriftDistribution {
    double r1_mean = 1000.0;
    double r1_var = 1000.0;
    double c1_mean = 2.0;
    double c1_var = 1.0;
    double c2_mean = 2.0;
    double c2_var = 1.0;
    double rejection_tail = 0.04;
};

struct FilterState {
    double v_out = 0.0;
    double v_out_rate = 0.0;
};

struct FilterTrace {
    std::vector<double> times;
    std::vector<double> v_out;
    FilterState final_state;
};

/// Integrates R1 R2 C1 C2 V'' + (R1+R2) C2 V' + V = V_in as a first-order
/// system with a 2-stage Radau IIA step (order 3, stiff-capable). Samples
/// are returned at t0 + k*step up to t1. Throws NumericalError with the
/// offending time when the stage solve fails to converge.
FilterTrace integrate_filter(const CircuitParams& params,
                             const std::function<double(double)>& v_in,
                             double t0, double t1, FilterState initial, double step);

/// |H(j omega)| of the filter, for oracle checks.
double filter_gain_magnitude(const CircuitParams& params, double omega);

/// Steady-state (v, v') of the sinusoidally driven filter at time t.
FilterState steady_state_at(const CircuitParams& params, InputKind kind, double t);

/// Runs the full labeled benchmark. The correct-pattern output is a
/// continuous nominal run started on the periodic steady-state orbit; the
/// fault-pattern output is a separate run restarted from rest at each
/// abnormal segment, whose periods draw (R1, C1, C2) per Monte-Carlo draw
/// (truncated positive), integrate each draw from the fault run's carried
/// state, discard the two-tail rejection region of the period's outputs
/// and average the survivors. The emitted series splices the fault run
/// over the abnormal segments of the nominal one.
SimTrace run_benchmark(const FaultSchedule& schedule, const CircuitParams& nominal,
                       const DriftDistribution& drift, InputKind input_kind,
                       std::size_t mc_draws, std::uint64_t seed);

/// The published experiment plan: 630 periods over 0.02 s with abnormal
/// segments 151-160, 211-220 and 501-510.
FaultSchedule sallen_key_reference_schedule();

} // namespace emodm
