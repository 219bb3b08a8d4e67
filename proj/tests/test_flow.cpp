#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "exfil/flow.hpp"

using namespace exfil;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& contents) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("exfil_flow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
                ".csv");
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

const std::string kHeader = "timestamp,src_ip,dst_ip,dst_port,protocol,bytes\n";

}  // namespace

TEST_CASE("egress and ingress rows resolve against the monitored host") {
    TempFile f(kHeader +
               "1500000000,10.0.0.5,93.184.216.34,443,tcp,1200\n"
               "1500000000,93.184.216.34,10.0.0.5,443,tcp,800\n");
    const auto res = parse_flow_file(f.path.string(), "10.0.0.5");
    REQUIRE(res.records.size() == 2);
    CHECK(res.records[0].direction == Direction::egress);
    CHECK(res.records[0].bytes == 1200);
    CHECK(res.records[1].direction == Direction::ingress);
    CHECK(res.records[1].bytes == 800);
    CHECK_FALSE(res.empty_warning);
}

TEST_CASE("rows not involving the host are skipped and counted") {
    TempFile f(kHeader +
               "1,10.0.0.5,1.2.3.4,80,tcp,10\n"
               "2,9.9.9.9,8.8.8.8,53,udp,99\n");
    const auto res = parse_flow_file(f.path.string(), "10.0.0.5");
    CHECK(res.records.size() == 1);
    CHECK(res.skipped_rows == 1);
}

TEST_CASE("malformed row: strict names the line, lenient counts it") {
    TempFile f(kHeader +
               "1,10.0.0.5,1.2.3.4,80,tcp,10\n"
               "not,a,valid,row\n"
               "3,10.0.0.5,1.2.3.4,80,tcp,30\n");
    SECTION("strict") {
        try {
            parse_flow_file(f.path.string(), "10.0.0.5", ParseMode::strict);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(":3") != std::string::npos);  // line 3 (header is line 1)
        }
    }
    SECTION("lenient") {
        const auto res = parse_flow_file(f.path.string(), "10.0.0.5", ParseMode::lenient);
        CHECK(res.records.size() == 2);
        CHECK(res.malformed_rows == 1);
    }
}

TEST_CASE("comment lines and CRLF endings are tolerated") {
    TempFile f("# provenance comment\n" + kHeader + "1,10.0.0.5,1.2.3.4,80,tcp,10\r\n");
    const auto res = parse_flow_file(f.path.string(), "10.0.0.5");
    CHECK(res.records.size() == 1);
}

TEST_CASE("missing header row is a parse error") {
    TempFile f("1,10.0.0.5,1.2.3.4,80,tcp,10\n");
    CHECK_THROWS_AS(parse_flow_file(f.path.string(), "10.0.0.5"), ParseError);
}

TEST_CASE("file with no rows involving the host sets the warning flag") {
    TempFile f(kHeader + "1,9.9.9.9,8.8.8.8,53,udp,99\n");
    const auto res = parse_flow_file(f.path.string(), "10.0.0.5");
    CHECK(res.records.empty());
    CHECK(res.empty_warning);
}

TEST_CASE("unreadable file and invalid host are errors") {
    CHECK_THROWS_AS(parse_flow_file("/nonexistent/file.csv", "10.0.0.5"), ParseError);
    TempFile f(kHeader);
    CHECK_THROWS_AS(parse_flow_file(f.path.string(), "bad host"), ConfigError);
}

TEST_CASE("bounds validation: port, bytes, timestamp") {
    TempFile f(kHeader +
               "1,10.0.0.5,1.2.3.4,70000,tcp,10\n"
               "1,10.0.0.5,1.2.3.4,80,tcp,-5\n"
               "-1,10.0.0.5,1.2.3.4,80,tcp,10\n");
    const auto res = parse_flow_file(f.path.string(), "10.0.0.5", ParseMode::lenient);
    CHECK(res.records.empty());
    CHECK(res.malformed_rows == 3);
}

static FlowRecord rec(std::int64_t t, const std::string& src, const std::string& dst, int port,
                      std::int64_t bytes, Direction dir) {
    FlowRecord r;
    r.timestamp = t;
    r.src_ip = src;
    r.dst_ip = dst;
    r.dst_port = port;
    r.protocol = "tcp";
    r.bytes = bytes;
    r.direction = dir;
    return r;
}

TEST_CASE("bidirectional flows at the same timestamp merge into one sample") {
    std::vector<FlowRecord> records = {
        rec(1500000000, "10.0.0.5", "1.2.3.4", 443, 1200, Direction::egress),
        rec(1500000000, "1.2.3.4", "10.0.0.5", 443, 800, Direction::ingress),
    };
    const auto comms = assemble_communications(records, "10.0.0.5", 1499990000, 1500010000);
    REQUIRE(comms.size() == 1);
    REQUIRE(comms[0].samples.size() == 1);
    CHECK(comms[0].samples[0] == Sample{1500000000, 1200, 800});
    CHECK(comms[0].key == CommunicationKey{"10.0.0.5", "1.2.3.4", 443});
}

TEST_CASE("distinct dst_ports give distinct communications") {
    std::vector<FlowRecord> records = {
        rec(10, "10.0.0.5", "1.2.3.4", 443, 100, Direction::egress),
        rec(10, "10.0.0.5", "1.2.3.4", 80, 100, Direction::egress),
    };
    CHECK(assemble_communications(records, "10.0.0.5", 0, 100).size() == 2);
}

TEST_CASE("same-direction same-timestamp records sum") {
    std::vector<FlowRecord> records = {
        rec(10, "10.0.0.5", "1.2.3.4", 443, 100, Direction::egress),
        rec(10, "10.0.0.5", "1.2.3.4", 443, 250, Direction::egress),
    };
    const auto comms = assemble_communications(records, "10.0.0.5", 0, 100);
    REQUIRE(comms.size() == 1);
    CHECK(comms[0].samples[0].egress_bytes == 350);
}

TEST_CASE("zero-byte samples are dropped") {
    std::vector<FlowRecord> records = {
        rec(10, "10.0.0.5", "1.2.3.4", 443, 0, Direction::egress),
        rec(20, "10.0.0.5", "1.2.3.4", 443, 5, Direction::egress),
    };
    const auto comms = assemble_communications(records, "10.0.0.5", 0, 100);
    REQUIRE(comms.size() == 1);
    REQUIRE(comms[0].samples.size() == 1);
    CHECK(comms[0].samples[0].t == 20);
}

TEST_CASE("records outside the window are excluded") {
    std::vector<FlowRecord> records = {
        rec(5, "10.0.0.5", "1.2.3.4", 443, 1, Direction::egress),
        rec(50, "10.0.0.5", "1.2.3.4", 443, 2, Direction::egress),
        rec(150, "10.0.0.5", "1.2.3.4", 443, 3, Direction::egress),
    };
    const auto comms = assemble_communications(records, "10.0.0.5", 10, 100);
    REQUIRE(comms.size() == 1);
    REQUIRE(comms[0].samples.size() == 1);
    CHECK(comms[0].samples[0].t == 50);
}

TEST_CASE("server mode orients the triplet with the remote as src") {
    std::vector<FlowRecord> records = {
        rec(10, "1.2.3.4", "10.0.0.5", 25, 100, Direction::ingress),
    };
    const auto comms = assemble_communications(records, "10.0.0.5", 0, 100, true);
    REQUIRE(comms.size() == 1);
    CHECK(comms[0].key == CommunicationKey{"1.2.3.4", "10.0.0.5", 25});
}

TEST_CASE("assembly is permutation-invariant and conserves bytes") {
    std::mt19937_64 rng(42);
    std::vector<FlowRecord> records;
    std::int64_t total = 0;
    for (int i = 0; i < 300; ++i) {
        const std::int64_t t = static_cast<std::int64_t>(rng() % 1000);
        const int port = 80 + static_cast<int>(rng() % 3);
        const std::int64_t bytes = 1 + static_cast<std::int64_t>(rng() % 500);
        const bool eg = rng() % 2 == 0;
        const std::string remote = "1.2.3." + std::to_string(rng() % 4);
        records.push_back(eg ? rec(t, "10.0.0.5", remote, port, bytes, Direction::egress)
                             : rec(t, remote, "10.0.0.5", port, bytes, Direction::ingress));
        total += bytes;
    }
    const auto a = assemble_communications(records, "10.0.0.5", 0, 1000);

    std::vector<FlowRecord> shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto b = assemble_communications(shuffled, "10.0.0.5", 0, 1000);
    CHECK(a == b);

    std::int64_t assembled = 0;
    for (const auto& comm : a) {
        std::int64_t prev = -1;
        for (const auto& s : comm.samples) {
            CHECK(s.t > prev);  // strictly increasing
            prev = s.t;
            assembled += s.egress_bytes + s.ingress_bytes;
        }
    }
    CHECK(assembled == total);
}

TEST_CASE("empty record list gives empty result; bad window is a config error") {
    CHECK(assemble_communications({}, "10.0.0.5", 0, 100).empty());
    CHECK_THROWS_AS(assemble_communications({}, "10.0.0.5", 100, 100), ConfigError);
}

TEST_CASE("summarize: degenerate single sample") {
    Communication c;
    c.key = {"10.0.0.5", "1.2.3.4", 443};
    c.samples = {{100, 50, 20}};
    const auto s = summarize(c);
    CHECK(s.n_connections == 1);
    CHECK(s.duration_s == 0.0);
    CHECK(s.avg_sampling_rate_hz == 0.0);
    CHECK(s.mean_egress_bytes == 50.0);
}

TEST_CASE("summarize: three evenly spaced samples") {
    Communication c;
    c.samples = {{0, 100, 0}, {60, 100, 0}, {120, 100, 0}};
    const auto s = summarize(c);
    CHECK(s.n_connections == 3);
    CHECK(s.duration_s == 120.0);
    CHECK(s.mean_egress_bytes == 100.0);
    CHECK_THAT(s.avg_sampling_rate_hz, Catch::Matchers::WithinRel(2.0 / 120.0, 1e-12));
}

TEST_CASE("summarize: mean against a direct-summation oracle") {
    Communication c;
    double oracle = 0.0;
    for (std::int64_t i = 1; i <= 10; ++i) {
        c.samples.push_back({i * 10, i, 0});
        oracle += static_cast<double>(i);
    }
    oracle /= 10.0;
    CHECK_THAT(summarize(c).mean_egress_bytes, Catch::Matchers::WithinRel(oracle, 1e-12));
    CHECK(oracle == 5.5);
}

TEST_CASE("summarize rejects an empty communication") {
    CHECK_THROWS_AS(summarize(Communication{}), ContractError);
}
