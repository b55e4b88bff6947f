#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ews/core.hpp"

namespace ews {

inline constexpr std::size_t kDefaultMaxDests = 65536;

/// Reads the destination-table cap from EWS_MAX_DESTS, if set.
inline std::size_t max_dests_from_env() {
    if (const char* v = std::getenv("EWS_MAX_DESTS")) {
        char* end = nullptr;
        unsigned long long n = std::strtoull(v, &end, 10);
        if (end && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
    }
    return kDefaultMaxDests;
}

/// Injective, stable raw-address -> DestId mapping. First address seen gets 0.
class DestMapper {
public:
    explicit DestMapper(std::size_t max_dests = max_dests_from_env())
        : max_dests_(max_dests) {}

    DestId map(std::span<const std::uint8_t> raw) {
        return map(std::string(reinterpret_cast<const char*>(raw.data()), raw.size()));
    }

    DestId map(const std::string& key) {
        auto it = table_.find(key);
        if (it != table_.end()) return it->second;
        if (table_.size() >= max_dests_)
            throw TooManyDestinationsError(
                "destination table exceeds EWS_MAX_DESTS (" + std::to_string(max_dests_) + ")");
        DestId id = static_cast<DestId>(table_.size());
        table_.emplace(key, id);
        return id;
    }

    /// Lookup without inserting.
    std::optional<DestId> find(const std::string& key) const {
        auto it = table_.find(key);
        if (it == table_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return table_.size(); }

private:
    std::map<std::string, DestId> table_;
    std::size_t max_dests_;
};

// ---------------------------------------------------------------------------
// Trace CSV: header `relative_time_seconds,dest_id,size_bytes`, time printed
// with 6 fractional digits. Round-trips exactly for microsecond-quantized
// records.

inline constexpr std::string_view kCsvHeader = "relative_time_seconds,dest_id,size_bytes";

namespace detail {

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

template <typename T>
bool parse_num(std::string_view s, T& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

}  // namespace detail

inline std::vector<PacketRecord> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw SchemaError("empty file: " + path, 0);
    if (detail::strip_cr(line) != kCsvHeader)
        throw SchemaError("bad header in " + path + ": expected '" + std::string(kCsvHeader) + "'", 0);

    std::vector<PacketRecord> out;
    std::size_t row = 0;
    double prev_t = -1.0;
    while (std::getline(in, line)) {
        ++row;
        std::string_view sv = detail::strip_cr(line);
        if (sv.empty()) continue;

        auto c1 = sv.find(',');
        auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
            sv.find(',', c2 + 1) != std::string_view::npos)
            throw SchemaError("row " + std::to_string(row) + ": expected 3 columns", row);

        PacketRecord rec;
        std::uint32_t size32 = 0;
        if (!detail::parse_num(sv.substr(0, c1), rec.t) || rec.t < 0.0)
            throw SchemaError("row " + std::to_string(row) + ": bad relative_time_seconds", row);
        if (!detail::parse_num(sv.substr(c1 + 1, c2 - c1 - 1), rec.dest))
            throw SchemaError("row " + std::to_string(row) + ": bad dest_id", row);
        if (!detail::parse_num(sv.substr(c2 + 1), size32) || size32 < 1 || size32 > 65535)
            throw SchemaError("row " + std::to_string(row) + ": bad size_bytes", row);
        rec.size = static_cast<std::uint16_t>(size32);

        if (rec.t < prev_t)
            throw NonMonotoneTimeError("row " + std::to_string(row) + ": time goes backwards", row);
        prev_t = rec.t;
        out.push_back(rec);
    }
    return out;
}

inline void write_csv(std::ostream& out, std::span<const PacketRecord> records) {
    out << kCsvHeader << '\n';
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.6f,%u,%u\n", r.t, r.dest, unsigned(r.size));
        out << buf;
    }
}

inline void write_csv(const std::string& path, std::span<const PacketRecord> records) {
    std::ofstream out(path);
    if (!out) throw UnreadableFileError("cannot write " + path);
    write_csv(out, records);
}

}  // namespace ews
