// ews: leading-indicator analysis of packet traces for volumetric-flood
// early warning. Subcommands: analyze, generate, report.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ews/detector.hpp"
#include "ews/ingest.hpp"
#include "ews/pcap.hpp"
#include "ews/report_io.hpp"
#include "ews/svg.hpp"
#include "ews/synth.hpp"

namespace fs = std::filesystem;

namespace {

std::string utc_now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string guess_format(const std::string& input, const std::string& flag) {
    if (flag == "pcap" || flag == "csv") return flag;
    auto ext = fs::path(input).extension().string();
    if (ext == ".pcap" || ext == ".cap" || ext == ".dmp") return "pcap";
    return "csv";
}

int run_analyze(const std::string& input, const std::string& format_flag,
                const ews::AnalyzeConfig& cfg, const std::string& out_dir, bool plots,
                bool dump_matrices, const std::vector<ews::DestId>& dest_filter,
                bool both_directions) {
    std::string format = guess_format(input, format_flag);

    std::vector<ews::PacketRecord> records;
    if (format == "pcap") {
        ews::DestMapper mapper;
        std::optional<std::set<ews::DestId>> filter;
        if (!dest_filter.empty()) filter.emplace(dest_filter.begin(), dest_filter.end());
        auto res = ews::read_pcap(input, mapper, filter, both_directions);
        std::fprintf(stderr, "%s: %llu frames (%llu yielded, %llu malformed, %llu non-IP, %llu filtered)\n",
                     input.c_str(), (unsigned long long)res.summary.total,
                     (unsigned long long)res.summary.yielded,
                     (unsigned long long)res.summary.malformed,
                     (unsigned long long)res.summary.non_ip,
                     (unsigned long long)res.summary.filtered);
        records = std::move(res.records);
    } else {
        records = ews::read_csv(input);
    }

    ews::ReportMeta meta;
    meta.input = input;
    meta.format = format;
    meta.generated_at = utc_now_iso8601();
    auto report = ews::analyze_records(records, cfg, meta);

    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        out << ews::report_to_json(report).dump(2) << '\n';
    }
    char name[64];
    for (std::size_t i = 0; i < report.windows.size(); ++i) {
        const auto& w = report.windows[i];
        std::snprintf(name, sizeof(name), "window_%03zu.csv", w.window_index);
        std::ofstream out(fs::path(out_dir) / name);
        ews::trajectory_to_csv(report.trajectories[i], out);
        if (plots) {
            std::snprintf(name, sizeof(name), "window_%03zu.svg", w.window_index);
            std::ofstream svg(fs::path(out_dir) / name);
            std::snprintf(name, sizeof(name), "window %zu [%.0f s, %.0f s) - %s",
                          w.window_index, w.start_t, w.end_t, ews::to_string(w.label));
            ews::write_indicator_svg(report.trajectories[i], svg, name);
        }
    }
    if (dump_matrices) {
        auto windows = ews::segment_windows(records, cfg.window_len, cfg.stride);
        for (const auto& w : windows) {
            auto m = ews::build_observable_matrix(w, cfg.traj.bin_width, cfg.traj.agg,
                                                  cfg.traj.min_samples);
            if (!m) continue;
            std::snprintf(name, sizeof(name), "matrix_%03zu.csv", w.index);
            std::ofstream out(fs::path(out_dir) / name);
            ews::matrix_to_csv(*m, out);
        }
    }

    std::size_t n_prec = 0;
    for (const auto& w : report.windows)
        if (w.label == ews::Verdict::precursor) ++n_prec;
    std::printf("%zu windows analyzed, %zu skipped, %zu precursor(s); report: %s/report.json\n",
                report.windows.size(), report.skipped.size(), n_prec, out_dir.c_str());
    return report.any_precursor() ? 2 : 0;
}

int run_generate(const std::string& spec_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_override) {
    auto spec = ews::load_scenario(spec_path);
    if (seed_override) spec.seed = *seed_override;
    auto records = ews::generate_scenario(spec);
    ews::write_csv(out_path, records);
    double dur = records.empty() ? 0.0 : records.back().t;
    std::printf("%zu records, %.2f s -> %s\n", records.size(), dur, out_path.c_str());
    return 0;
}

int run_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ews::UnreadableFileError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ews::Error(std::string("bad report JSON: ") + e.what());
    }
    auto rep = ews::report_from_json(j);

    auto tau_str = [](const ews::IndicatorValue& v) {
        if (!v.has_value()) return std::string("     -");
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%+.3f", *v);
        return std::string(buf);
    };
    std::printf("%5s  %8s  %-13s %7s %7s %7s %7s\n", "index", "start_t", "label", "tau_rr",
                "tau_ac1", "tau_cv", "tau_sk");
    std::size_t n_prec = 0;
    for (const auto& w : rep.windows) {
        std::printf("%5zu  %8.1f  %-13s %s %s %s %s\n", w.window_index, w.start_t,
                    ews::to_string(w.label), tau_str(w.trend.tau_rr).c_str(),
                    tau_str(w.trend.tau_ac1).c_str(), tau_str(w.trend.tau_cv).c_str(),
                    tau_str(w.trend.tau_skew).c_str());
        if (w.label == ews::Verdict::precursor) ++n_prec;
    }
    for (const auto& s : rep.skipped)
        std::printf("%5zu  %8.1f  skipped: %s\n", s.index, s.start_t, s.reason.c_str());
    std::printf("%zu windows analyzed, %zu skipped, %zu precursor(s)\n", rep.windows.size(),
                rep.skipped.size(), n_prec);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leading-indicator early-warning analysis for packet traces"};
    app.require_subcommand(1);

    // analyze
    auto* an = app.add_subcommand("analyze", "analyze a trace and write report.json");
    std::string input, format = "auto", out_dir = "ews-out";
    ews::AnalyzeConfig cfg;
    std::string agg = "mean", skew = "standard";
    bool plots = false, dump_matrices = false, both_directions = false;
    std::vector<ews::DestId> dest_filter;
    an->add_option("--input", input, "trace file")->required();
    an->add_option("--format", format, "pcap|csv (default: by extension)")
        ->check(CLI::IsMember({"auto", "pcap", "csv"}));
    an->add_option("--window-len", cfg.window_len, "window length, s");
    an->add_option("--stride", cfg.stride, "window stride, s");
    an->add_option("--sub-len", cfg.traj.sub_len, "sub-window length, s");
    an->add_option("--sub-stride", cfg.traj.sub_stride, "sub-window stride, s");
    an->add_option("--bin-width", cfg.traj.bin_width, "matrix bin width, s");
    an->add_option("--agg", agg, "mean|sum|max|count")
        ->check(CLI::IsMember({"mean", "sum", "max", "count"}));
    an->add_option("--skew", skew, "standard|paper")->check(CLI::IsMember({"standard", "paper"}));
    an->add_option("--tau-min", cfg.tau_min, "trend threshold in (0,1]");
    an->add_option("--min-valid", cfg.min_valid, "minimum valid-sample fraction");
    an->add_option("--min-samples", cfg.traj.min_samples, "records needed to keep a destination row");
    an->add_flag("--detrend", cfg.traj.detrend, "linear detrend per sub-window");
    an->add_flag("--plots", plots, "emit per-window SVG indicator plots");
    an->add_flag("--dump-matrices", dump_matrices, "emit per-window observable matrices");
    an->add_option("--out-dir", out_dir, "output directory");
    an->add_option("--jobs", cfg.jobs, "worker threads (0 = auto)");
    an->add_option("--dest-filter", dest_filter, "only these destination ids (pcap)");
    an->add_flag("--both-directions", both_directions,
                 "with --dest-filter, admit traffic from the listed hosts too");

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic trace CSV");
    std::string spec_path, gen_out = "trace.csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    gen->add_option("--spec", spec_path, "scenario spec JSON")->required();
    gen->add_option("--out", gen_out, "output CSV path");
    gen->add_option("--seed", seed, "override the spec seed")->trigger_on_parse()
        ->each([&](const std::string&) { seed_set = true; });

    // report
    auto* rp = app.add_subcommand("report", "summarize a report.json");
    std::string report_path;
    rp->add_option("--input", report_path, "report.json path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (an->parsed()) {
            auto a = ews::aggregation_from_string(agg);
            cfg.traj.agg = a ? *a : ews::Aggregation::mean_size;
            cfg.traj.skew_variant =
                skew == "paper" ? ews::SkewVariant::paper_literal : ews::SkewVariant::standard;
            return run_analyze(input, format, cfg, out_dir, plots, dump_matrices, dest_filter,
                               both_directions);
        }
        if (gen->parsed())
            return run_generate(spec_path, gen_out,
                                seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
        if (rp->parsed()) return run_report(report_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
