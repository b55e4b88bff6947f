#pragma once

#include <atomic>
#include <cstdio>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ews/core.hpp"
#include "ews/indicators.hpp"
#include "ews/timeseries.hpp"

namespace ews {

/// Kendall rank correlation (tau-a) of the values against their index order.
/// Tied pairs count zero in the numerator; the denominator is all C(n,2) pairs.
inline IndicatorValue kendall_tau(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 3) return IndicatorValue::null(NullReason::too_few_valid);
    long long s = 0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (values[j] > values[i]) ++s;
            else if (values[j] < values[i]) --s;
        }
    double pairs = double(n) * double(n - 1) / 2.0;
    return IndicatorValue::ok(double(s) / pairs);
}

// ---------------------------------------------------------------------------

/// Monotone-trend statistics of one indicator trajectory.
struct TrendStats {
    IndicatorValue tau_rr, tau_ac1, tau_cv, tau_skew;
    double valid_rr = 0.0, valid_ac1 = 0.0, valid_cv = 0.0, valid_skew = 0.0;
};

enum class Verdict { precursor, no_precursor, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::precursor: return "Precursor";
        case Verdict::no_precursor: return "NoPrecursor";
        case Verdict::inconclusive: return "Inconclusive";
    }
    return "?";
}

struct PrecursorVerdict {
    std::size_t window_index = 0;
    double start_t = 0.0;
    double end_t = 0.0;
    bool partial = false;
    Verdict label = Verdict::inconclusive;
    TrendStats trend;
    std::string explanation;
};

namespace detail {

struct TrajField {
    const char* name;
    IndicatorValue IndicatorSample::* member;
    IndicatorValue TrendStats::* tau;
    double TrendStats::* valid;
    int sign;  // +1 expected increase, -1 expected decrease
};

inline constexpr TrajField kTrajFields[] = {
    {"rr", &IndicatorSample::return_rate, &TrendStats::tau_rr, &TrendStats::valid_rr, -1},
    {"ac1", &IndicatorSample::ac1, &TrendStats::tau_ac1, &TrendStats::valid_ac1, +1},
    {"cv", &IndicatorSample::cv, &TrendStats::tau_cv, &TrendStats::valid_cv, +1},
    {"skew", &IndicatorSample::skewness, &TrendStats::tau_skew, &TrendStats::valid_skew, +1},
};

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f", v);
    return buf;
}

}  // namespace detail

/// Turns one trajectory into trend statistics and a verdict.
///
/// Precursor requires the full signature (return rate trending down, the
/// other three trending up, all at tau_min, all sufficiently sampled).
/// NoPrecursor requires an affirmative opposite trend on some indicator;
/// everything else is Inconclusive. A partial signature must not alarm.
inline PrecursorVerdict classify_precursor(std::span<const IndicatorSample> traj,
                                           double tau_min = 0.5, double min_valid = 0.6) {
    PrecursorVerdict v;
    if (traj.empty()) {
        v.label = Verdict::inconclusive;
        v.explanation = "empty trajectory";
        return v;
    }

    std::string detail_txt;
    bool all_present = true, all_valid = true, signature = true, opposite = false;
    std::vector<double> vals;
    for (const auto& f : detail::kTrajFields) {
        vals.clear();
        for (const auto& s : traj)
            if ((s.*f.member).has_value()) vals.push_back(*(s.*f.member));
        double frac = double(vals.size()) / double(traj.size());
        v.trend.*f.valid = frac;
        IndicatorValue tau = vals.size() >= 3 ? kendall_tau(vals)
                                              : IndicatorValue::null(NullReason::too_few_valid);
        v.trend.*f.tau = tau;

        if (!detail_txt.empty()) detail_txt += ", ";
        if (!tau.has_value()) {
            all_present = false;
            detail_txt += std::string(f.name) + "=null(" + to_string(tau.reason) + ")";
            continue;
        }
        detail_txt += std::string(f.name) + "=" + detail::fmt2(*tau);
        if (frac < min_valid) all_valid = false;
        double signed_tau = f.sign * *tau;     // positive when trending as the signature expects
        if (signed_tau < tau_min) signature = false;
        if (signed_tau <= -tau_min) opposite = true;
    }

    if (all_present && all_valid && signature) {
        v.label = Verdict::precursor;
        v.explanation = "signature holds (" + detail_txt + ")";
    } else if (all_present && opposite) {
        v.label = Verdict::no_precursor;
        v.explanation = "opposite trend present (" + detail_txt + ")";
    } else {
        v.label = Verdict::inconclusive;
        v.explanation = (all_present ? (all_valid ? "below threshold ("
                                                  : "too many null samples (")
                                     : "missing trend (") + detail_txt + ")";
    }
    return v;
}

// ---------------------------------------------------------------------------

struct AnalyzeConfig {
    double window_len = 60.0;
    double stride = 60.0;
    TrajectoryConfig traj;
    double tau_min = 0.5;
    double min_valid = 0.6;
    unsigned jobs = 0;  // 0 = hardware concurrency

    void validate() const {
        if (!(window_len > 0.0)) throw BadConfigError("window_len must be positive");
        if (!(stride > 0.0) || stride > window_len)
            throw BadConfigError("stride must be in (0, window_len]");
        if (!(traj.sub_len > 0.0) || traj.sub_len >= window_len)
            throw BadConfigError("sub_len must be in (0, window_len)");
        if (!(traj.sub_stride > 0.0)) throw BadConfigError("sub_stride must be positive");
        if (!(traj.bin_width > 0.0)) throw BadConfigError("bin_width must be positive");
        if (!(tau_min > 0.0) || tau_min > 1.0) throw BadConfigError("tau_min must be in (0, 1]");
        if (min_valid < 0.0 || min_valid > 1.0) throw BadConfigError("min_valid must be in [0, 1]");
    }
};

struct SkipEntry {
    std::size_t index = 0;
    double start_t = 0.0;
    std::string reason;
};

struct ReportMeta {
    std::string input;
    std::string format;
    std::uint64_t record_count = 0;
    double duration_s = 0.0;
    std::string generated_at;  // the only field allowed to differ between runs
};

struct AnalysisReport {
    ReportMeta meta;
    AnalyzeConfig config;
    std::vector<PrecursorVerdict> windows;
    std::vector<SkipEntry> skipped;
    std::vector<std::vector<IndicatorSample>> trajectories;  // parallel to windows

    bool any_precursor() const {
        for (const auto& w : windows)
            if (w.label == Verdict::precursor) return true;
        return false;
    }
};

/// Whole-trace analysis: segment, bin, roll indicators, classify. Per-window
/// failures become skip entries; they never abort the run. Window order in the
/// report is deterministic regardless of the number of worker threads.
inline AnalysisReport analyze_records(std::span<const PacketRecord> records,
                                      const AnalyzeConfig& cfg, ReportMeta meta = {}) {
    cfg.validate();
    AnalysisReport rep;
    rep.config = cfg;
    rep.meta = std::move(meta);
    rep.meta.record_count = records.size();
    rep.meta.duration_s = records.empty() ? 0.0 : records.back().t;

    auto windows = segment_windows(records, cfg.window_len, cfg.stride);

    struct Slot {
        bool skipped = false;
        SkipEntry skip;
        PrecursorVerdict verdict;
        std::vector<IndicatorSample> traj;
    };
    std::vector<Slot> slots(windows.size());

    auto work = [&](const Window& w, Slot& slot) {
        if (w.span() <= cfg.traj.sub_len) {
            slot.skipped = true;
            slot.skip = {w.index, w.start_t, "window shorter than sub-window"};
            return;
        }
        auto m = build_observable_matrix(w, cfg.traj.bin_width, cfg.traj.agg, cfg.traj.min_samples);
        if (!m) {
            slot.skipped = true;
            slot.skip = {w.index, w.start_t, "empty window: no destination met min_samples"};
            return;
        }
        slot.traj = detail::trajectory_from_matrix(&*m, w.start_t, w.span(), cfg.traj);
        if (slot.traj.empty()) {
            slot.skipped = true;
            slot.skip = {w.index, w.start_t, "window too short for any sub-window"};
            return;
        }
        slot.verdict = classify_precursor(slot.traj, cfg.tau_min, cfg.min_valid);
        slot.verdict.window_index = w.index;
        slot.verdict.start_t = w.start_t;
        slot.verdict.end_t = w.end_t;
        slot.verdict.partial = w.partial;
    };

    unsigned jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, windows.size() ? unsigned(windows.size()) : 1u);
    if (jobs <= 1 || windows.size() <= 1) {
        for (std::size_t i = 0; i < windows.size(); ++i) work(windows[i], slots[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < windows.size(); i = next.fetch_add(1))
                    work(windows[i], slots[i]);
            });
        for (auto& t : pool) t.join();
    }

    for (auto& s : slots) {
        if (s.skipped) {
            rep.skipped.push_back(std::move(s.skip));
        } else {
            rep.windows.push_back(std::move(s.verdict));
            rep.trajectories.push_back(std::move(s.traj));
        }
    }
    return rep;
}

}  // namespace ews
