#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ews/core.hpp"

namespace ews {

enum class PhaseKind { baseline, csd_ramp, kickoff_step, attack_steady };

inline const char* to_string(PhaseKind k) {
    switch (k) {
        case PhaseKind::baseline: return "baseline";
        case PhaseKind::csd_ramp: return "csd-ramp";
        case PhaseKind::kickoff_step: return "kickoff-step";
        case PhaseKind::attack_steady: return "attack-steady";
    }
    return "?";
}

inline std::optional<PhaseKind> phase_kind_from_string(const std::string& s) {
    if (s == "baseline") return PhaseKind::baseline;
    if (s == "csd-ramp") return PhaseKind::csd_ramp;
    if (s == "kickoff-step") return PhaseKind::kickoff_step;
    if (s == "attack-steady") return PhaseKind::attack_steady;
    return std::nullopt;
}

/// One phase of a scenario. Packet sizes always land in [60, 1500].
///
/// csd-ramp drives a per-destination AR(1) load process whose coefficient
/// ramps phi_start -> phi_end, plus a shared two-state burst layer whose
/// persistence, elevation probability and amplitude ramp alongside. The burst
/// layer is what carries the variance and asymmetry growth; disable it with
/// burst_scale = 0 to get the plain linear-Gaussian ramp.
struct PhaseSpec {
    PhaseKind kind = PhaseKind::baseline;
    double duration_s = 60.0;
    double rate = 600.0;          // packets/s entering this phase
    double size_mean = 300.0;     // bytes
    double size_jitter = 10.0;    // per-packet gaussian sd, bytes

    // csd-ramp only
    double phi_start = 0.2;
    double phi_end = 0.95;
    double latent_gain = 40.0;    // bytes per unit of the latent process
    double burst_scale = 1.3;     // burst amplitude relative to the latent sd
    double burst_q_start = 0.5;   // elevated-state probability ramp
    double burst_q_end = 0.12;
    double burst_pers_start = -0.3;  // lag-1 correlation of the burst chain
    double burst_pers_end = 0.72;
    double burst_amp_exp = 1.15;  // amplitude grows as latent sd ^ exp

    // kickoff-step only
    double step_size = 1500.0;    // bytes after the step
    double step_at = 30.0;        // seconds into the phase
    double surge_factor = 50.0;   // rate multiplier after the step
};

struct ScenarioSpec {
    double duration_s = 0.0;
    std::uint64_t seed = 1;
    std::uint32_t dest_count = 1;
    std::vector<PhaseSpec> phases;

    void validate() const {
        if (dest_count < 1) throw BadSpecError("dest_count must be >= 1");
        if (phases.empty()) throw BadSpecError("scenario needs at least one phase");
        double sum = 0.0;
        for (const auto& p : phases) {
            if (!(p.duration_s > 0.0)) throw BadSpecError("phase duration must be positive");
            if (!(p.rate > 0.0)) throw BadSpecError("phase rate must be positive");
            if (p.size_mean < 60.0 || p.size_mean > 1500.0)
                throw BadSpecError("size_mean must lie in [60, 1500]");
            if (p.size_jitter < 0.0) throw BadSpecError("size_jitter must be >= 0");
            if (p.kind == PhaseKind::csd_ramp) {
                if (p.phi_start < 0.0 || p.phi_end < p.phi_start || p.phi_end >= 1.0)
                    throw BadSpecError("need 0 <= phi_start <= phi_end < 1");
            }
            if (p.kind == PhaseKind::kickoff_step) {
                if (p.step_size < 60.0 || p.step_size > 1500.0)
                    throw BadSpecError("step_size must lie in [60, 1500]");
                if (p.step_at < 0.0 || p.step_at > p.duration_s)
                    throw BadSpecError("step_at must lie within the phase");
                if (!(p.surge_factor > 0.0)) throw BadSpecError("surge_factor must be positive");
            }
            sum += p.duration_s;
        }
        if (std::abs(sum - duration_s) > 1e-6)
            throw BadSpecError("phase durations must sum to duration_s");
    }
};

namespace detail {

/// Clock in whole microseconds; arrivals are exponential and strictly increasing.
struct SynthClock {
    std::int64_t t_us = 0;

    double advance(std::mt19937_64& rng, double rate) {
        std::exponential_distribution<double> exp_dt(rate);
        auto dt_us = static_cast<std::int64_t>(std::llround(exp_dt(rng) * 1e6));
        t_us += std::max<std::int64_t>(dt_us, 1);
        return double(t_us) * 1e-6;
    }
};

inline std::uint16_t clamp_size(double v) {
    double r = std::round(v);
    if (r < 60.0) r = 60.0;
    if (r > 1500.0) r = 1500.0;
    return static_cast<std::uint16_t>(r);
}

inline constexpr double kLatentBin = 0.1;  // seconds; grid of the load process

template <typename Sink>
void gen_iid_segment(double phase_start, double seg_start, double seg_len, double rate,
                     double mean, double jitter, std::uint32_t dests, SynthClock& clock,
                     std::mt19937_64& rng, Sink&& sink) {
    std::normal_distribution<double> jit(0.0, jitter > 0 ? jitter : 1e-12);
    std::uniform_int_distribution<DestId> pick(0, dests - 1);
    double end = phase_start + seg_start + seg_len;
    clock.t_us = std::max<std::int64_t>(clock.t_us,
                                        std::llround((phase_start + seg_start) * 1e6));
    for (;;) {
        double t = clock.advance(rng, rate);
        if (t >= end) break;
        double size = mean + (jitter > 0 ? jit(rng) : 0.0);
        sink(PacketRecord{t, pick(rng), clamp_size(size)});
    }
}

}  // namespace detail

/// Baseline: Poisson arrivals, i.i.d. sizes around size_mean.
template <typename Sink>
void generate_baseline(const PhaseSpec& p, double phase_start, std::uint32_t dests,
                       detail::SynthClock& clock, std::mt19937_64& rng, Sink&& sink) {
    detail::gen_iid_segment(phase_start, 0.0, p.duration_s, p.rate, p.size_mean, p.size_jitter,
                            dests, clock, rng, sink);
}

/// Preparation-phase dynamics: per-destination AR(1) latent load with the
/// coefficient ramping phi_start -> phi_end, plus a shared burst chain whose
/// dwell times lengthen and whose amplitude grows with the latent sd. Bursts
/// start in a flickering (anti-persistent) regime and end in long elevated
/// dwells, which is what drives all four signatures at once.
template <typename Sink>
void generate_csd_ramp(const PhaseSpec& p, double phase_start, std::uint32_t dests,
                       detail::SynthClock& clock, std::mt19937_64& rng, Sink&& sink) {
    const auto nb = static_cast<std::size_t>(std::ceil(p.duration_s / detail::kLatentBin - 1e-9));
    const bool bursts = p.burst_scale > 0.0 && p.phi_end > p.phi_start;

    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jit(0.0, p.size_jitter > 0 ? p.size_jitter : 1e-12);
    std::uniform_int_distribution<DestId> pick(0, dests - 1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto phi_at = [&](std::size_t j) {
        double prog = nb > 1 ? double(j) / double(nb - 1) : 0.0;
        return p.phi_start + (p.phi_end - p.phi_start) * prog;
    };
    auto sigx_at = [&](double phi) { return 1.0 / std::sqrt(1.0 - phi * phi); };

    // latent state, evolved bin by bin as the clock crosses bin boundaries
    std::vector<double> x(dests);
    for (auto& v : x) v = unit(rng) * sigx_at(p.phi_start);
    int burst_state = uni(rng) < p.burst_q_start ? 1 : 0;
    std::size_t cur_bin = 0;

    auto burst_shock = [&](std::size_t j) {
        if (!bursts) return 0.0;
        double prog = nb > 1 ? double(j) / double(nb - 1) : 0.0;
        double q = p.burst_q_start + (p.burst_q_end - p.burst_q_start) * prog;
        double amp = p.burst_scale * p.latent_gain * std::pow(sigx_at(phi_at(j)), p.burst_amp_exp);
        return amp * (double(burst_state) - q) / std::sqrt(q * (1.0 - q));
    };

    auto evolve_to = [&](std::size_t j) {
        for (; cur_bin < j; ++cur_bin) {
            double phi = phi_at(cur_bin + 1);
            for (auto& v : x) v = phi * v + unit(rng);
            if (bursts) {
                double prog = nb > 1 ? double(cur_bin + 1) / double(nb - 1) : 0.0;
                double q = p.burst_q_start + (p.burst_q_end - p.burst_q_start) * prog;
                double pers = p.burst_pers_start + (p.burst_pers_end - p.burst_pers_start) * prog;
                double stay = pers + q * (1.0 - pers);   // P(1 -> 1)
                double enter = q * (1.0 - pers);         // P(0 -> 1)
                burst_state = uni(rng) < (burst_state ? stay : enter) ? 1 : 0;
            }
        }
    };

    double end = phase_start + p.duration_s;
    clock.t_us = std::max<std::int64_t>(clock.t_us, std::llround(phase_start * 1e6));
    for (;;) {
        double t = clock.advance(rng, p.rate);
        if (t >= end) break;
        auto j = std::min(static_cast<std::size_t>((t - phase_start) / detail::kLatentBin), nb - 1);
        evolve_to(j);
        DestId d = pick(rng);
        double size = p.size_mean + p.latent_gain * x[d] + burst_shock(j) +
                      (p.size_jitter > 0 ? jit(rng) : 0.0);
        sink(PacketRecord{t, d, detail::clamp_size(size)});
    }
}

/// Abrupt onset: baseline traffic until step_at, then sizes around step_size
/// at surge_factor times the rate.
template <typename Sink>
void generate_kickoff_step(const PhaseSpec& p, double phase_start, std::uint32_t dests,
                           detail::SynthClock& clock, std::mt19937_64& rng, Sink&& sink) {
    if (p.step_at > 0.0)
        detail::gen_iid_segment(phase_start, 0.0, p.step_at, p.rate, p.size_mean, p.size_jitter,
                                dests, clock, rng, sink);
    if (p.step_at < p.duration_s)
        detail::gen_iid_segment(phase_start, p.step_at, p.duration_s - p.step_at,
                                p.rate * p.surge_factor, p.step_size, p.size_jitter, dests, clock,
                                rng, sink);
}

/// Deterministic given the spec (including its seed).
inline std::vector<PacketRecord> generate_scenario(const ScenarioSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    detail::SynthClock clock;
    std::vector<PacketRecord> out;
    out.reserve(static_cast<std::size_t>(spec.duration_s * 100));

    auto sink = [&](const PacketRecord& r) { out.push_back(r); };
    double phase_start = 0.0;
    for (const auto& p : spec.phases) {
        switch (p.kind) {
            case PhaseKind::baseline:
                generate_baseline(p, phase_start, spec.dest_count, clock, rng, sink);
                break;
            case PhaseKind::csd_ramp:
                generate_csd_ramp(p, phase_start, spec.dest_count, clock, rng, sink);
                break;
            case PhaseKind::kickoff_step:
                generate_kickoff_step(p, phase_start, spec.dest_count, clock, rng, sink);
                break;
            case PhaseKind::attack_steady:
                generate_baseline(p, phase_start, spec.dest_count, clock, rng, sink);
                break;
        }
        phase_start += p.duration_s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stock scenarios used by tests and as shipped examples.

/// Preparation / kickoff / attack timeline: one quiet minute, two ramp minutes,
/// twenty quiet minutes, the onset minute (step mid-window), one attack minute.
/// The ramp minutes start at t=60 (window 1); the onset lands in window 23.
inline ScenarioSpec canonical_scenario(std::uint64_t seed = 20070804) {
    ScenarioSpec s;
    s.seed = seed;
    s.dest_count = 3;
    PhaseSpec quiet;                       // shared shape for the calm minutes
    quiet.kind = PhaseKind::baseline;
    quiet.rate = 600.0;
    quiet.size_mean = 300.0;
    quiet.size_jitter = 10.0;

    PhaseSpec lead = quiet;
    lead.duration_s = 60.0;
    s.phases.push_back(lead);

    PhaseSpec ramp = quiet;
    ramp.kind = PhaseKind::csd_ramp;
    ramp.duration_s = 60.0;
    s.phases.push_back(ramp);              // minute starting at 60 s
    s.phases.push_back(ramp);              // and the next one

    PhaseSpec calm = quiet;
    calm.duration_s = 1200.0;
    s.phases.push_back(calm);

    PhaseSpec kick = quiet;
    kick.kind = PhaseKind::kickoff_step;
    kick.duration_s = 60.0;
    kick.step_size = 1500.0;
    kick.step_at = 30.0;
    kick.surge_factor = 50.0;
    s.phases.push_back(kick);              // window 23, onset at 1410 s

    PhaseSpec attack = quiet;
    attack.kind = PhaseKind::attack_steady;
    attack.duration_s = 60.0;
    attack.rate = 3000.0;
    attack.size_mean = 1480.0;
    attack.size_jitter = 30.0;
    s.phases.push_back(attack);

    s.duration_s = 0.0;
    for (const auto& p : s.phases) s.duration_s += p.duration_s;
    return s;
}

/// Quiet traffic only, for false-alarm measurement.
inline ScenarioSpec baseline_scenario(double duration_s, std::uint64_t seed,
                                      std::uint32_t dest_count = 3, double rate = 300.0) {
    ScenarioSpec s;
    s.seed = seed;
    s.dest_count = dest_count;
    s.duration_s = duration_s;
    PhaseSpec p;
    p.kind = PhaseKind::baseline;
    p.duration_s = duration_s;
    p.rate = rate;
    p.size_mean = 300.0;
    p.size_jitter = 10.0;
    s.phases.push_back(p);
    return s;
}

/// A single abrupt 60 -> 1500 step with a x50 rate surge mid-window, framed by
/// calm minutes. The step window is window 1.
inline ScenarioSpec kickoff_scenario(std::uint64_t seed = 1) {
    ScenarioSpec s;
    s.seed = seed;
    s.dest_count = 1;
    PhaseSpec pre;
    pre.kind = PhaseKind::baseline;
    pre.duration_s = 60.0;
    pre.rate = 200.0;
    pre.size_mean = 60.0;
    pre.size_jitter = 5.0;
    s.phases.push_back(pre);

    PhaseSpec kick = pre;
    kick.kind = PhaseKind::kickoff_step;
    kick.step_size = 1500.0;
    kick.step_at = 30.0;
    kick.surge_factor = 50.0;
    s.phases.push_back(kick);

    PhaseSpec after;
    after.kind = PhaseKind::attack_steady;
    after.duration_s = 60.0;
    after.rate = 10000.0;
    after.size_mean = 1480.0;
    after.size_jitter = 30.0;
    s.phases.push_back(after);

    s.duration_s = 180.0;
    return s;
}

}  // namespace ews
