#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ews/pcap.hpp"

using namespace ews;
namespace fs = std::filesystem;

namespace {

// Minimal savefile builder: classic format, Ethernet link layer.
struct PcapBuilder {
    std::vector<std::uint8_t> bytes;
    bool swap = false;
    bool nanos = false;

    explicit PcapBuilder(bool swapped = false, bool nanosecond = false)
        : swap(swapped), nanos(nanosecond) {
        u32(nanosecond ? 0xa1b23c4d : 0xa1b2c3d4, /*raw=*/!swapped);
        u16(2); u16(4);            // version
        u32(0); u32(0);            // thiszone, sigfigs
        u32(65535);                // snaplen
        u32(1);                    // Ethernet
    }

    void u16(std::uint16_t v) {
        if (swap) v = std::uint16_t((v << 8) | (v >> 8));
        bytes.push_back(v & 0xff);
        bytes.push_back(v >> 8);
    }
    void u32(std::uint32_t v, bool raw = false) {
        if (swap && !raw)
            v = ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
        for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
    }
    void raw(std::initializer_list<std::uint8_t> b) { bytes.insert(bytes.end(), b); }

    std::vector<std::uint8_t> ipv4_frame(std::uint32_t dst, std::uint32_t src = 0x0a000063,
                                         std::uint16_t ethertype = 0x0800, bool vlan = false) {
        std::vector<std::uint8_t> f(12, 0x11);  // MACs
        auto be16 = [&](std::uint16_t v) {
            f.push_back(v >> 8);
            f.push_back(v & 0xff);
        };
        if (vlan) {
            be16(0x8100);
            be16(0x0001);
        }
        be16(ethertype);
        // 20-byte IPv4 header
        std::size_t ip = f.size();
        f.resize(f.size() + 20, 0);
        f[ip] = 0x45;
        for (int i = 0; i < 4; ++i) f[ip + 12 + i] = (src >> (24 - 8 * i)) & 0xff;
        for (int i = 0; i < 4; ++i) f[ip + 16 + i] = (dst >> (24 - 8 * i)) & 0xff;
        return f;
    }

    void add_frame(double t, const std::vector<std::uint8_t>& frame, std::uint32_t orig_len,
                   std::uint32_t incl_override = 0) {
        auto sec = static_cast<std::uint32_t>(t);
        auto frac = nanos ? static_cast<std::uint32_t>((t - sec) * 1e9 + 0.5)
                          : static_cast<std::uint32_t>((t - sec) * 1e6 + 0.5);
        u32(sec);
        u32(frac);
        u32(incl_override ? incl_override : std::uint32_t(frame.size()));
        u32(orig_len);
        bytes.insert(bytes.end(), frame.begin(), frame.end());
    }

    fs::path write(const std::string& name) const {
        auto p = fs::temp_directory_path() / ("ews_test_" + name);
        std::ofstream out(p, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        return p;
    }
};

}  // namespace

TEST_CASE("pcap times are normalized to the first frame") {
    PcapBuilder b;
    b.add_frame(100.0, b.ipv4_frame(0x0a000001), 60);
    b.add_frame(100.5, b.ipv4_frame(0x0a000001), 60);
    auto p = b.write("reltime.pcap");

    DestMapper m;
    auto res = read_pcap(p.string(), m);
    REQUIRE(res.records.size() == 2);
    CHECK(res.records[0].t == 0.0);
    CHECK(res.records[1].t == 0.5);
}

TEST_CASE("pcap sizes come from the original frame length") {
    PcapBuilder b;
    for (int i = 0; i < 5; ++i) b.add_frame(1.0 + i * 0.1, b.ipv4_frame(0x0a000001), 60);
    auto p = b.write("sizes.pcap");

    DestMapper m;
    auto res = read_pcap(p.string(), m);
    REQUIRE(res.records.size() == 5);
    for (const auto& r : res.records) CHECK(r.size == 60);
}

TEST_CASE("bad magic is unreadable") {
    PcapBuilder b;
    b.bytes[0] = 0xde;
    b.bytes[1] = 0xad;
    auto p = b.write("badmagic.pcap");
    DestMapper m;
    CHECK_THROWS_AS(read_pcap(p.string(), m), UnreadableFileError);
}

TEST_CASE("byte-swapped and nanosecond variants parse") {
    for (bool swapped : {false, true})
        for (bool nanos : {false, true}) {
            PcapBuilder b(swapped, nanos);
            b.add_frame(10.0, b.ipv4_frame(0x0a000001), 1500);
            b.add_frame(10.25, b.ipv4_frame(0x0a000002), 60);
            auto p = b.write("variant.pcap");
            DestMapper m;
            auto res = read_pcap(p.string(), m);
            REQUIRE(res.records.size() == 2);
            CHECK(res.records[0].size == 1500);
            CHECK(res.records[1].t == Catch::Approx(0.25).margin(1e-6));
        }
}

TEST_CASE("frame accounting is conserved") {
    PcapBuilder b;
    b.add_frame(1.0, b.ipv4_frame(0x0a000001), 60);                        // yielded
    b.add_frame(1.1, b.ipv4_frame(0x0a000001, 0x0a000063, 0x0806), 60);    // ARP -> non-IP
    b.add_frame(1.2, b.ipv4_frame(0x0a000002), 60);                        // filtered out
    b.add_frame(1.3, std::vector<std::uint8_t>(20, 0), 60);                // too short for IPv4
    auto p = b.write("counters.pcap");

    DestMapper m;
    m.map(std::string("\x0a\x00\x00\x01", 4));  // pre-seed victim as id 0
    auto res = read_pcap(p.string(), m, std::set<DestId>{0});
    CHECK(res.summary.total == 4);
    CHECK(res.summary.yielded == 1);
    CHECK(res.summary.non_ip == 1);
    CHECK(res.summary.filtered == 1);
    CHECK(res.summary.malformed == 1);
    CHECK(res.summary.yielded + res.summary.malformed + res.summary.non_ip +
              res.summary.filtered ==
          res.summary.total);
}

TEST_CASE("truncated record header counts as malformed") {
    PcapBuilder b;
    b.add_frame(1.0, b.ipv4_frame(0x0a000001), 60);
    b.u32(5);  // dangling partial record header
    auto p = b.write("trunc.pcap");
    DestMapper m;
    auto res = read_pcap(p.string(), m);
    CHECK(res.summary.yielded == 1);
    CHECK(res.summary.malformed == 1);
}

TEST_CASE("vlan tag and ipv6 are handled") {
    PcapBuilder b;
    b.add_frame(1.0, b.ipv4_frame(0x0a000001, 0x0a000063, 0x0800, /*vlan=*/true), 60);
    // IPv6 frame: 14-byte ethernet + 40-byte header
    std::vector<std::uint8_t> v6(12, 0x22);
    v6.push_back(0x86);
    v6.push_back(0xdd);
    std::size_t ip = v6.size();
    v6.resize(v6.size() + 40, 0);
    v6[ip] = 0x60;
    v6[ip + 24] = 0xfe;  // dest address, first byte
    b.add_frame(1.5, v6, 80);
    auto p = b.write("vlan6.pcap");

    DestMapper m;
    auto res = read_pcap(p.string(), m);
    REQUIRE(res.records.size() == 2);
    CHECK(res.records[0].size == 60);
    CHECK(res.records[1].size == 80);
    CHECK(m.size() == 2);
}

TEST_CASE("both-directions admits responses from monitored hosts") {
    PcapBuilder b;
    b.add_frame(1.0, b.ipv4_frame(/*dst=*/0x0a000001, /*src=*/0x0a000063), 60);  // to victim
    b.add_frame(1.1, b.ipv4_frame(/*dst=*/0x0a000063, /*src=*/0x0a000001), 60);  // from victim
    b.add_frame(1.2, b.ipv4_frame(/*dst=*/0x0a000064, /*src=*/0x0a000065), 60);  // unrelated
    auto p = b.write("bothdir.pcap");

    DestMapper m1;
    m1.map(std::string("\x0a\x00\x00\x01", 4));
    auto one_way = read_pcap(p.string(), m1, std::set<DestId>{0});
    CHECK(one_way.summary.yielded == 1);
    CHECK(one_way.summary.filtered == 2);

    DestMapper m2;
    m2.map(std::string("\x0a\x00\x00\x01", 4));
    auto both = read_pcap(p.string(), m2, std::set<DestId>{0}, /*both_directions=*/true);
    REQUIRE(both.summary.yielded == 2);
    CHECK(both.records[0].dest == 0);
    CHECK(both.records[1].dest == 0);  // response attributed to the monitored host
    CHECK(both.summary.filtered == 1);
}

TEST_CASE("truncated global header is unreadable") {
    auto p = fs::temp_directory_path() / "ews_test_short.pcap";
    std::ofstream out(p, std::ios::binary);
    out << "\xd4\xc3\xb2\xa1 short";
    out.close();
    DestMapper m;
    CHECK_THROWS_AS(read_pcap(p.string(), m), UnreadableFileError);
}
