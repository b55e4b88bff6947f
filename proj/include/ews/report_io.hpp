#pragma once

#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "ews/detector.hpp"
#include "ews/synth.hpp"

namespace ews {

// ---------------------------------------------------------------------------
// Scenario specs.

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    try {
        s.duration_s = j.at("duration_s").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.dest_count = j.value("dest_count", 1u);
        for (const auto& pj : j.at("phases")) {
            PhaseSpec p;
            auto kind = phase_kind_from_string(pj.at("kind").get<std::string>());
            if (!kind) throw BadSpecError("unknown phase kind");
            p.kind = *kind;
            p.duration_s = pj.at("duration_s").get<double>();
            p.rate = pj.at("rate").get<double>();
            p.size_mean = pj.value("size_mean", p.size_mean);
            p.size_jitter = pj.value("size_jitter", p.size_jitter);
            p.phi_start = pj.value("phi_start", p.phi_start);
            p.phi_end = pj.value("phi_end", p.phi_end);
            p.latent_gain = pj.value("latent_gain", p.latent_gain);
            p.burst_scale = pj.value("burst_scale", p.burst_scale);
            p.burst_q_start = pj.value("burst_q_start", p.burst_q_start);
            p.burst_q_end = pj.value("burst_q_end", p.burst_q_end);
            p.burst_pers_start = pj.value("burst_pers_start", p.burst_pers_start);
            p.burst_pers_end = pj.value("burst_pers_end", p.burst_pers_end);
            p.burst_amp_exp = pj.value("burst_amp_exp", p.burst_amp_exp);
            p.step_size = pj.value("step_size", p.step_size);
            p.step_at = pj.value("step_at", p.step_at);
            p.surge_factor = pj.value("surge_factor", p.surge_factor);
            s.phases.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw BadSpecError(std::string("bad scenario spec: ") + e.what());
    }
    s.validate();
    return s;
}

inline ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadSpecError(std::string("bad scenario JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
    nlohmann::json j;
    j["duration_s"] = s.duration_s;
    j["seed"] = s.seed;
    j["dest_count"] = s.dest_count;
    j["phases"] = nlohmann::json::array();
    for (const auto& p : s.phases) {
        nlohmann::json pj;
        pj["kind"] = to_string(p.kind);
        pj["duration_s"] = p.duration_s;
        pj["rate"] = p.rate;
        pj["size_mean"] = p.size_mean;
        pj["size_jitter"] = p.size_jitter;
        if (p.kind == PhaseKind::csd_ramp) {
            pj["phi_start"] = p.phi_start;
            pj["phi_end"] = p.phi_end;
            pj["latent_gain"] = p.latent_gain;
            pj["burst_scale"] = p.burst_scale;
            pj["burst_q_start"] = p.burst_q_start;
            pj["burst_q_end"] = p.burst_q_end;
            pj["burst_pers_start"] = p.burst_pers_start;
            pj["burst_pers_end"] = p.burst_pers_end;
            pj["burst_amp_exp"] = p.burst_amp_exp;
        }
        if (p.kind == PhaseKind::kickoff_step) {
            pj["step_size"] = p.step_size;
            pj["step_at"] = p.step_at;
            pj["surge_factor"] = p.surge_factor;
        }
        j["phases"].push_back(pj);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Analysis reports.

namespace detail {

inline nlohmann::json value_or_null(const IndicatorValue& v) {
    if (v.has_value()) return *v;
    return nullptr;
}

}  // namespace detail

inline nlohmann::json config_to_json(const AnalyzeConfig& c) {
    nlohmann::json j;
    j["window_len"] = c.window_len;
    j["stride"] = c.stride;
    j["sub_len"] = c.traj.sub_len;
    j["sub_stride"] = c.traj.sub_stride;
    j["bin_width"] = c.traj.bin_width;
    j["agg"] = to_string(c.traj.agg);
    j["skew_variant"] = c.traj.skew_variant == SkewVariant::standard ? "standard" : "paper";
    j["min_samples"] = c.traj.min_samples;
    j["detrend"] = c.traj.detrend;
    j["tau_min"] = c.tau_min;
    j["min_valid"] = c.min_valid;
    j["jobs"] = c.jobs;
    return j;
}

inline nlohmann::json report_to_json(const AnalysisReport& r) {
    nlohmann::json j;
    j["meta"] = {
        {"input", r.meta.input},
        {"format", r.meta.format},
        {"records", r.meta.record_count},
        {"duration_s", r.meta.duration_s},
        {"generated_at", r.meta.generated_at},
        {"tool", "ews"},
        {"version", kVersion},
    };
    j["config"] = config_to_json(r.config);
    j["windows"] = nlohmann::json::array();
    for (const auto& w : r.windows) {
        nlohmann::json wj;
        wj["index"] = w.window_index;
        wj["start_t"] = w.start_t;
        wj["end_t"] = w.end_t;
        wj["partial"] = w.partial;
        wj["label"] = to_string(w.label);
        wj["tau"] = {
            {"rr", detail::value_or_null(w.trend.tau_rr)},
            {"ac1", detail::value_or_null(w.trend.tau_ac1)},
            {"cv", detail::value_or_null(w.trend.tau_cv)},
            {"skew", detail::value_or_null(w.trend.tau_skew)},
        };
        wj["valid_fraction"] = {
            {"rr", w.trend.valid_rr},
            {"ac1", w.trend.valid_ac1},
            {"cv", w.trend.valid_cv},
            {"skew", w.trend.valid_skew},
        };
        wj["explanation"] = w.explanation;
        j["windows"].push_back(wj);
    }
    j["skipped"] = nlohmann::json::array();
    for (const auto& s : r.skipped)
        j["skipped"].push_back({{"index", s.index}, {"start_t", s.start_t}, {"reason", s.reason}});
    return j;
}

/// Reads back the fields cmd_report needs; tolerant of absent trajectories.
inline AnalysisReport report_from_json(const nlohmann::json& j) {
    AnalysisReport r;
    try {
        r.meta.input = j.at("meta").value("input", "");
        r.meta.generated_at = j.at("meta").value("generated_at", "");
        r.meta.record_count = j.at("meta").value("records", std::uint64_t{0});
        r.meta.duration_s = j.at("meta").value("duration_s", 0.0);
        for (const auto& wj : j.at("windows")) {
            PrecursorVerdict v;
            v.window_index = wj.at("index").get<std::size_t>();
            v.start_t = wj.at("start_t").get<double>();
            v.end_t = wj.value("end_t", 0.0);
            v.partial = wj.value("partial", false);
            std::string label = wj.at("label").get<std::string>();
            v.label = label == "Precursor" ? Verdict::precursor
                      : label == "NoPrecursor" ? Verdict::no_precursor
                                               : Verdict::inconclusive;
            auto get_tau = [&](const char* k) {
                const auto& t = wj.at("tau").at(k);
                return t.is_null() ? IndicatorValue::null(NullReason::too_few_valid)
                                   : IndicatorValue::ok(t.get<double>());
            };
            v.trend.tau_rr = get_tau("rr");
            v.trend.tau_ac1 = get_tau("ac1");
            v.trend.tau_cv = get_tau("cv");
            v.trend.tau_skew = get_tau("skew");
            v.explanation = wj.value("explanation", "");
            r.windows.push_back(std::move(v));
        }
        for (const auto& sj : j.at("skipped")) {
            SkipEntry s;
            s.index = sj.at("index").get<std::size_t>();
            s.start_t = sj.value("start_t", 0.0);
            s.reason = sj.value("reason", "");
            r.skipped.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad report JSON: ") + e.what());
    }
    return r;
}

/// Per-window trajectory dump: `t_mid,return_rate,ac1,cv,skewness,null_reasons`.
inline void trajectory_to_csv(std::span<const IndicatorSample> traj, std::ostream& out) {
    out << "t_mid,return_rate,ac1,cv,skewness,null_reasons\n";
    char buf[64];
    auto put = [&](const IndicatorValue& v) {
        if (v.has_value()) {
            std::snprintf(buf, sizeof(buf), "%.9g", *v);
            out << buf;
        }
        out << ',';
    };
    for (const auto& s : traj) {
        std::snprintf(buf, sizeof(buf), "%.6f,", s.t_mid);
        out << buf;
        put(s.return_rate);
        put(s.ac1);
        put(s.cv);
        put(s.skewness);
        std::string reasons;
        auto note = [&](const char* name, const IndicatorValue& v) {
            if (!v.has_value()) {
                if (!reasons.empty()) reasons += ';';
                reasons += std::string(name) + "=" + to_string(v.reason);
            }
        };
        note("return_rate", s.return_rate);
        note("ac1", s.ac1);
        note("cv", s.cv);
        note("skewness", s.skewness);
        out << reasons << '\n';
    }
}

}  // namespace ews
