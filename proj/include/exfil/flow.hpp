#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "exfil/core.hpp"

namespace exfil {

enum class Direction { egress, ingress };

inline const char* to_string(Direction d) { return d == Direction::egress ? "egress" : "ingress"; }

// One unidirectional flow observation, direction resolved against the
// monitored host.
struct FlowRecord {
    std::int64_t timestamp = 0;  // seconds since epoch, 1 s resolution
    std::string src_ip;
    std::string dst_ip;
    int dst_port = 0;
    std::string protocol;
    std::int64_t bytes = 0;
    Direction direction = Direction::egress;
};

struct CommunicationKey {
    std::string src_ip;
    std::string dst_ip;
    int dst_port = 0;

    bool operator==(const CommunicationKey&) const = default;
    auto operator<=>(const CommunicationKey&) const = default;

    std::string str() const {
        return src_ip + "|" + dst_ip + "|" + std::to_string(dst_port);
    }
};

// Bytes exchanged at one timestamp; same-timestamp flows are merged here.
struct Sample {
    std::int64_t t = 0;
    std::int64_t egress_bytes = 0;
    std::int64_t ingress_bytes = 0;

    bool operator==(const Sample&) const = default;
};

// The paired (b_I(t), b_E(t)) series for one (src_ip, dst_ip, dst_port)
// triplet over an analysis window. Samples are strictly time-increasing.
struct Communication {
    CommunicationKey key;
    std::vector<Sample> samples;
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;

    bool operator==(const Communication&) const = default;
};

struct TrafficSummary {
    std::size_t n_connections = 0;
    double duration_s = 0.0;
    double mean_egress_bytes = 0.0;
    double mean_ingress_bytes = 0.0;
    double avg_sampling_rate_hz = 0.0;
    std::optional<double> density;               // filled by eval
    std::optional<double> periodicity_fraction;  // filled by eval
};

enum class ParseMode { strict, lenient };

struct ParseResult {
    std::vector<FlowRecord> records;
    std::size_t skipped_rows = 0;    // rows not involving the host
    std::size_t malformed_rows = 0;  // lenient mode only
    bool empty_warning = false;      // no rows involved the host
};

namespace detail {

inline bool parse_int64(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

// Syntactic sanity only: non-empty, no whitespace or commas. Address
// equality elsewhere is exact string comparison.
inline bool plausible_address(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == ',') return false;
    }
    return true;
}

}  // namespace detail

// Parses the canonical 6-column CSV flow schema:
//   timestamp,src_ip,dst_ip,dst_port,protocol,bytes
// Leading '#' lines are comments (provenance headers). The header row is
// required. Rows not involving `host` are skipped and counted.
inline ParseResult parse_flow_file(const std::string& path, const std::string& host,
                                   ParseMode mode = ParseMode::strict) {
    if (!detail::plausible_address(host)) throw ConfigError("invalid host address: '" + host + "'");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open flow file: " + path);

    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    auto fail = [&](const std::string& what) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "timestamp,src_ip,dst_ip,dst_port,protocol,bytes")
                fail("missing or malformed header row");
            header_seen = true;
            continue;
        }
        const auto fields = detail::split_csv(line);
        std::int64_t ts = 0, bytes = 0, port = 0;
        const bool ok = fields.size() == 6 && detail::parse_int64(fields[0], ts) && ts >= 0 &&
                        detail::plausible_address(fields[1]) && detail::plausible_address(fields[2]) &&
                        detail::parse_int64(fields[3], port) && port >= 0 && port <= 65535 &&
                        detail::parse_int64(fields[5], bytes) && bytes >= 0;
        if (!ok) {
            if (mode == ParseMode::strict) fail("malformed row");
            ++result.malformed_rows;
            continue;
        }
        FlowRecord rec;
        rec.timestamp = ts;
        rec.src_ip = std::string(fields[1]);
        rec.dst_ip = std::string(fields[2]);
        rec.dst_port = static_cast<int>(port);
        rec.protocol = std::string(fields[4]);
        rec.bytes = bytes;
        if (rec.src_ip == host) {
            rec.direction = Direction::egress;
        } else if (rec.dst_ip == host) {
            rec.direction = Direction::ingress;
        } else {
            ++result.skipped_rows;
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    if (!header_seen && line_no > 0) throw ParseError(path + ": missing header row");
    if (result.records.empty()) result.empty_warning = true;
    return result;
}

// Groups records into per-triplet communications. The triplet is oriented
// with the monitored host as src for client systems; server_mode swaps the
// orientation for inbound-accepting hosts. The dst_port column holds the
// service port for both directions.
inline std::vector<Communication> assemble_communications(const std::vector<FlowRecord>& records,
                                                          const std::string& host,
                                                          std::int64_t window_start,
                                                          std::int64_t window_end,
                                                          bool server_mode = false) {
    if (window_end <= window_start) throw ConfigError("analysis window must have positive length");

    std::map<CommunicationKey, std::map<std::int64_t, Sample>> groups;
    for (const auto& rec : records) {
        if (rec.timestamp < window_start || rec.timestamp > window_end) continue;
        const std::string& remote = rec.direction == Direction::egress ? rec.dst_ip : rec.src_ip;
        CommunicationKey key = server_mode ? CommunicationKey{remote, host, rec.dst_port}
                                           : CommunicationKey{host, remote, rec.dst_port};
        Sample& s = groups[key][rec.timestamp];
        s.t = rec.timestamp;
        if (rec.direction == Direction::egress)
            s.egress_bytes += rec.bytes;
        else
            s.ingress_bytes += rec.bytes;
    }

    std::vector<Communication> comms;
    comms.reserve(groups.size());
    for (auto& [key, by_time] : groups) {
        Communication comm;
        comm.key = key;
        comm.window_start = window_start;
        comm.window_end = window_end;
        for (auto& [t, s] : by_time) {
            if (s.egress_bytes + s.ingress_bytes == 0) continue;  // zero-byte samples dropped
            comm.samples.push_back(s);
        }
        if (!comm.samples.empty()) comms.push_back(std::move(comm));
    }
    return comms;
}

inline TrafficSummary summarize(const Communication& comm) {
    if (comm.samples.empty()) throw ContractError("summarize: communication has no samples");
    TrafficSummary s;
    s.n_connections = comm.samples.size();
    s.duration_s = static_cast<double>(comm.samples.back().t - comm.samples.front().t);
    double eg = 0.0, in = 0.0;
    for (const auto& smp : comm.samples) {
        eg += static_cast<double>(smp.egress_bytes);
        in += static_cast<double>(smp.ingress_bytes);
    }
    s.mean_egress_bytes = eg / static_cast<double>(s.n_connections);
    s.mean_ingress_bytes = in / static_cast<double>(s.n_connections);
    s.avg_sampling_rate_hz =
        (s.n_connections > 1 && s.duration_s > 0.0)
            ? static_cast<double>(s.n_connections - 1) / s.duration_s
            : 0.0;
    return s;
}

}  // namespace exfil
