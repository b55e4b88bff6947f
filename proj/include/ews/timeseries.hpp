#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ews/core.hpp"

namespace ews {

/// One fixed-length analysis window. `partial` marks a final window cut short
/// by the end of the trace; its end_t is the trace end, not start + length.
struct Window {
    std::size_t index = 0;
    double start_t = 0.0;
    double end_t = 0.0;
    bool partial = false;
    std::vector<PacketRecord> records;

    double span() const { return end_t - start_t; }
};

/// Splits a time-ordered record stream into windows of `window_len` seconds
/// placed every `stride` seconds, covering [0, trace_end). Trace end is the
/// last timestamp rounded up to a whole second, so a trace ending at 59.99 s
/// fills one complete minute.
inline std::vector<Window> segment_windows(std::span<const PacketRecord> stream,
                                           double window_len, double stride) {
    if (!(window_len > 0.0)) throw BadConfigError("window_len must be positive");
    if (!(stride > 0.0) || stride > window_len)
        throw BadConfigError("stride must be in (0, window_len]");

    std::vector<Window> out;
    if (stream.empty()) return out;

    double t_last = stream.back().t;
    double trace_end = std::floor(t_last) + 1.0;

    for (std::size_t i = 0; i * stride < trace_end; ++i) {
        Window w;
        w.index = i;
        w.start_t = double(i) * stride;
        double nominal_end = w.start_t + window_len;
        w.partial = nominal_end > trace_end;
        w.end_t = w.partial ? trace_end : nominal_end;

        auto lo = std::lower_bound(stream.begin(), stream.end(), w.start_t,
                                   [](const PacketRecord& r, double t) { return r.t < t; });
        auto hi = std::lower_bound(lo, stream.end(), w.end_t,
                                   [](const PacketRecord& r, double t) { return r.t < t; });
        w.records.assign(lo, hi);
        out.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------

enum class Aggregation { mean_size, sum_size, max_size, count };

inline const char* to_string(Aggregation a) {
    switch (a) {
        case Aggregation::mean_size: return "mean";
        case Aggregation::sum_size: return "sum";
        case Aggregation::max_size: return "max";
        case Aggregation::count: return "count";
    }
    return "?";
}

inline std::optional<Aggregation> aggregation_from_string(const std::string& s) {
    if (s == "mean") return Aggregation::mean_size;
    if (s == "sum") return Aggregation::sum_size;
    if (s == "max") return Aggregation::max_size;
    if (s == "count") return Aggregation::count;
    return std::nullopt;
}

/// Destinations x time bins grid of aggregated packet size. Rows are ordered
/// by DestId; bins with no traffic hold 0.
struct ObservableMatrix {
    std::vector<DestId> dests;      // row labels
    double bin_width = 0.1;
    std::size_t cols = 0;
    std::vector<double> values;     // row-major, rows() * cols

    std::size_t rows() const { return dests.size(); }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

/// Bins a window into an observable matrix. Destinations with fewer than
/// `min_samples` records are dropped (sparse rows destabilize the fit).
/// Returns nullopt when no destination qualifies.
inline std::optional<ObservableMatrix> build_observable_matrix(const Window& w, double bin_width,
                                                               Aggregation agg,
                                                               std::size_t min_samples = 10) {
    if (!(bin_width > 0.0)) throw BadConfigError("bin_width must be positive");

    std::map<DestId, std::size_t> counts;
    for (const auto& r : w.records) counts[r.dest]++;

    ObservableMatrix m;
    m.bin_width = bin_width;
    m.cols = static_cast<std::size_t>(std::ceil(w.span() / bin_width - 1e-9));
    if (m.cols == 0) return std::nullopt;

    std::map<DestId, std::size_t> row_of;
    for (const auto& [dest, n] : counts)
        if (n >= min_samples) {
            row_of.emplace(dest, m.dests.size());
            m.dests.push_back(dest);
        }
    if (m.dests.empty()) return std::nullopt;

    m.values.assign(m.dests.size() * m.cols, 0.0);
    std::vector<std::size_t> bin_counts;
    if (agg == Aggregation::mean_size) bin_counts.assign(m.values.size(), 0);

    for (const auto& r : w.records) {
        auto it = row_of.find(r.dest);
        if (it == row_of.end()) continue;
        auto c = static_cast<std::size_t>((r.t - w.start_t) / bin_width);
        if (c >= m.cols) c = m.cols - 1;
        auto idx = it->second * m.cols + c;
        switch (agg) {
            case Aggregation::mean_size:
                m.values[idx] += r.size;
                bin_counts[idx]++;
                break;
            case Aggregation::sum_size: m.values[idx] += r.size; break;
            case Aggregation::max_size: m.values[idx] = std::max(m.values[idx], double(r.size)); break;
            case Aggregation::count: m.values[idx] += 1.0; break;
        }
    }
    if (agg == Aggregation::mean_size)
        for (std::size_t i = 0; i < m.values.size(); ++i)
            if (bin_counts[i] > 0) m.values[i] /= double(bin_counts[i]);
    return m;
}

// ---------------------------------------------------------------------------

enum class SeriesMode { aggregate, per_destination };

/// One scalar observable series within a window.
struct WindowSeries {
    std::vector<double> z;
    std::string origin;
};

/// Aggregate mode: column-wise mean over rows. Per-destination: one series per row.
inline std::vector<WindowSeries> extract_series(const ObservableMatrix& m, SeriesMode mode) {
    std::vector<WindowSeries> out;
    if (mode == SeriesMode::aggregate) {
        WindowSeries s;
        s.origin = "aggregate";
        s.z.resize(m.cols, 0.0);
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols; ++c) s.z[c] += m.at(r, c);
        for (auto& v : s.z) v /= double(m.rows());
        out.push_back(std::move(s));
    } else {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            WindowSeries s;
            s.origin = "dest " + std::to_string(m.dests[r]);
            auto row = m.row(r);
            s.z.assign(row.begin(), row.end());
            out.push_back(std::move(s));
        }
    }
    return out;
}

/// Raw per-packet series (no binning), aggregate over all destinations.
inline WindowSeries raw_series(const Window& w) {
    WindowSeries s;
    s.origin = "raw";
    s.z.reserve(w.records.size());
    for (const auto& r : w.records) s.z.push_back(double(r.size));
    return s;
}

/// Debug dump: `dest_id,bin_0..bin_{k-1}`.
inline void matrix_to_csv(const ObservableMatrix& m, std::ostream& out) {
    out << "dest_id";
    for (std::size_t c = 0; c < m.cols; ++c) out << ",bin_" << c;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.dests[r];
        for (std::size_t c = 0; c < m.cols; ++c) {
            std::snprintf(buf, sizeof(buf), ",%.6g", m.at(r, c));
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace ews
