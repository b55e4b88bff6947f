#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ews/core.hpp"
#include "ews/ingest.hpp"

namespace ews {

/// Frame accounting for one capture file. yielded + malformed + non_ip +
/// filtered always equals total.
struct IngestSummary {
    std::uint64_t total = 0;
    std::uint64_t yielded = 0;
    std::uint64_t malformed = 0;
    std::uint64_t non_ip = 0;
    std::uint64_t filtered = 0;
};

struct PcapResult {
    std::vector<PacketRecord> records;
    IngestSummary summary;
};

namespace detail {

inline constexpr std::uint32_t kMagicUs = 0xa1b2c3d4;
inline constexpr std::uint32_t kMagicUsSwapped = 0xd4c3b2a1;
inline constexpr std::uint32_t kMagicNs = 0xa1b23c4d;
inline constexpr std::uint32_t kMagicNsSwapped = 0x4d3cb2a1;
inline constexpr std::uint32_t kLinktypeEthernet = 1;

inline std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}

inline std::uint32_t read_u32(const std::uint8_t* p, bool swap) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return swap ? bswap32(v) : v;
}

inline std::uint16_t read_be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

}  // namespace detail

/// Parses a classic tcpdump savefile (both byte orders, micro- and nanosecond
/// variants). Only Ethernet link layer with IPv4/IPv6 payloads is understood;
/// anything else is counted, not fatal. Timestamps are normalized to the first
/// frame and clamped to be non-decreasing.
///
/// When `filter` is given, only frames addressed to one of the listed ids are
/// yielded; with `both_directions` frames *from* a listed host are admitted
/// too, attributed to that host.
inline PcapResult read_pcap(const std::string& path, DestMapper& mapper,
                            const std::optional<std::set<DestId>>& filter = std::nullopt,
                            bool both_directions = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadableFileError("cannot open " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    if (data.size() < 24) throw UnreadableFileError(path + ": truncated global header");

    std::uint32_t magic;
    std::memcpy(&magic, data.data(), 4);
    bool swap = false, nanos = false;
    switch (magic) {
        case detail::kMagicUs: break;
        case detail::kMagicUsSwapped: swap = true; break;
        case detail::kMagicNs: nanos = true; break;
        case detail::kMagicNsSwapped: swap = true; nanos = true; break;
        default: throw UnreadableFileError(path + ": bad magic");
    }
    std::uint32_t linktype = detail::read_u32(data.data() + 20, swap);
    if (linktype != detail::kLinktypeEthernet)
        throw UnreadableFileError(path + ": unsupported link type " + std::to_string(linktype));

    PcapResult res;
    std::size_t off = 24;
    bool have_t0 = false;
    double t0 = 0.0, prev_t = 0.0;

    while (off < data.size()) {
        if (data.size() - off < 16) {  // dangling partial record header
            res.summary.total++;
            res.summary.malformed++;
            break;
        }
        const std::uint8_t* rh = data.data() + off;
        std::uint32_t ts_sec = detail::read_u32(rh, swap);
        std::uint32_t ts_frac = detail::read_u32(rh + 4, swap);
        std::uint32_t incl_len = detail::read_u32(rh + 8, swap);
        std::uint32_t orig_len = detail::read_u32(rh + 12, swap);
        off += 16;

        res.summary.total++;
        if (incl_len > 0x40000 || data.size() - off < incl_len) {  // corrupt or truncated
            res.summary.malformed++;
            break;
        }
        const std::uint8_t* frame = data.data() + off;
        off += incl_len;

        double t = double(ts_sec) + (nanos ? double(ts_frac) * 1e-9 : double(ts_frac) * 1e-6);
        if (!have_t0) { t0 = t; have_t0 = true; }
        double rel = quantize_us(t - t0);
        if (rel < prev_t) rel = prev_t;

        if (orig_len < 1 || orig_len > 65535 || incl_len < 14) {
            res.summary.malformed++;
            continue;
        }

        // Ethernet header, skipping up to two VLAN tags.
        std::size_t l2 = 12;
        std::uint16_t ethertype = detail::read_be16(frame + l2);
        int vlans = 0;
        while ((ethertype == 0x8100 || ethertype == 0x88a8) && vlans < 2) {
            if (incl_len < l2 + 6) break;
            l2 += 4;
            ethertype = detail::read_be16(frame + l2);
            ++vlans;
        }
        std::size_t l3 = l2 + 2;

        std::size_t dst_off, dst_len, src_off;
        if (ethertype == 0x0800) {            // IPv4
            dst_off = l3 + 16; dst_len = 4; src_off = l3 + 12;
            if (incl_len < l3 + 20 || (frame[l3] >> 4) != 4) {
                res.summary.malformed++;
                continue;
            }
        } else if (ethertype == 0x86dd) {     // IPv6
            dst_off = l3 + 24; dst_len = 16; src_off = l3 + 8;
            if (incl_len < l3 + 40 || (frame[l3] >> 4) != 6) {
                res.summary.malformed++;
                continue;
            }
        } else {
            res.summary.non_ip++;
            continue;
        }
        if (incl_len < dst_off + dst_len) {
            res.summary.malformed++;
            continue;
        }

        DestId id = mapper.map(std::span(frame + dst_off, dst_len));
        if (filter && !filter->count(id)) {
            bool admitted = false;
            if (both_directions) {
                std::string src_key(reinterpret_cast<const char*>(frame + src_off), dst_len);
                if (auto sid = mapper.find(src_key); sid && filter->count(*sid)) {
                    id = *sid;
                    admitted = true;
                }
            }
            if (!admitted) {
                res.summary.filtered++;
                continue;
            }
        }

        res.records.push_back({rel, id, static_cast<std::uint16_t>(orig_len)});
        res.summary.yielded++;
        prev_t = rel;
    }
    return res;
}

}  // namespace ews
