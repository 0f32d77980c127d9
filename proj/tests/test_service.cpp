#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfcvd/degrade.hpp"
#include "rfcvd/engine.hpp"
#include "rfcvd/media_io.hpp"
#include "rfcvd/png_io.hpp"
#include "rfcvd/service.hpp"
#include "test_util.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>

using namespace rfcvd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct HttpResponse {
    int status = 0;
    std::map<std::string, std::string> headers;
    std::string body;
};

int connect_to(int port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(std::uint16_t(port));
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    return fd;
}

void send_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        REQUIRE(n > 0);
        off += std::size_t(n);
    }
}

std::string recv_until_close(int fd) {
    std::string buf;
    char chunk[4096];
    for (;;) {
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buf.append(chunk, std::size_t(n));
    }
    return buf;
}

HttpResponse parse_response(const std::string& raw) {
    HttpResponse r;
    const auto header_end = raw.find("\r\n\r\n");
    REQUIRE(header_end != std::string::npos);
    std::istringstream head(raw.substr(0, header_end));
    std::string version;
    head >> version >> r.status;
    std::string line;
    std::getline(head, line);
    while (std::getline(head, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
            std::string value = line.substr(colon + 1);
            while (!value.empty() && value.front() == ' ') value.erase(value.begin());
            r.headers[line.substr(0, colon)] = value;
        }
    }
    r.body = raw.substr(header_end + 4);
    return r;
}

HttpResponse http(int port, const std::string& method, const std::string& target,
                  const std::string& body = {}) {
    const int fd = connect_to(port);
    std::ostringstream req;
    req << method << ' ' << target << " HTTP/1.1\r\nHost: localhost\r\n";
    if (!body.empty()) req << "Content-Length: " << body.size() << "\r\n";
    req << "\r\n" << body;
    send_all(fd, req.str());
    const std::string raw = recv_until_close(fd);
    ::close(fd);
    return parse_response(raw);
}

// a small clip on disk shared by the tests in this binary
struct ServerFixture {
    fs::path clip_path;
    PreviewServer server;

    ServerFixture() {
        clip_path = fs::temp_directory_path() / ("rfcvd_svc_" + std::to_string(::getpid()) + ".y4m");
        const Clip noisy = add_awgn(testutil::static_clip(64, 64, 4), 25.0, 91);
        write_y4m(noisy, clip_path.string());
        server.start(0); // ephemeral port
    }
    ~ServerFixture() {
        server.stop();
        fs::remove(clip_path);
    }

    std::string create_session() {
        const HttpResponse r =
            http(server.port(), "POST", "/sessions", json{{"path", clip_path.string()}}.dump());
        REQUIRE(r.status == 201);
        return json::parse(r.body)["id"].get<std::string>();
    }
};

// reads one JSON header line + PNG payload from a live channel socket
bool read_live_message(int fd, std::string& pending, json& header, std::string& png) {
    for (;;) {
        const auto nl = pending.find('\n');
        if (nl != std::string::npos) {
            header = json::parse(pending.substr(0, nl));
            pending.erase(0, nl + 1);
            if (header.value("type", "") != "preview") {
                png.clear();
                return true;
            }
            const std::size_t need = header["bytes"].get<std::size_t>();
            while (pending.size() < need) {
                char chunk[4096];
                const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
                if (n <= 0) return false;
                pending.append(chunk, std::size_t(n));
            }
            png = pending.substr(0, need);
            pending.erase(0, need);
            return true;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) return false;
        pending.append(chunk, std::size_t(n));
    }
}

} // namespace

TEST_CASE("session lifecycle over http") {
    ServerFixture fx;

    SUBCASE("create returns an id and clip geometry") {
        const HttpResponse r = http(fx.server.port(), "POST", "/sessions",
                                    json{{"path", fx.clip_path.string()}}.dump());
        CHECK(r.status == 201);
        const json body = json::parse(r.body);
        CHECK(body["frames"] == 4);
        CHECK(body["width"] == 64);
        CHECK(body["height"] == 64);
        CHECK(!body["id"].get<std::string>().empty());
    }
    SUBCASE("missing file yields a machine-readable error") {
        const HttpResponse r = http(fx.server.port(), "POST", "/sessions",
                                    json{{"path", "/no/such/file.y4m"}}.dump());
        CHECK(r.status == 404);
        CHECK(json::parse(r.body).contains("error"));
    }
    SUBCASE("two sessions on the same file get distinct ids") {
        CHECK(fx.create_session() != fx.create_session());
    }
    SUBCASE("meta reports knob state") {
        const std::string id = fx.create_session();
        const HttpResponse r = http(fx.server.port(), "GET", "/sessions/" + id + "/meta");
        CHECK(r.status == 200);
        const json body = json::parse(r.body);
        CHECK(body["frames"] == 4);
        const auto knobs = body["knobs"].get<std::vector<double>>();
        REQUIRE(knobs.size() == 6);
        for (double k : knobs) CHECK(k == 1.0);
    }
    SUBCASE("unknown session is 404") {
        const HttpResponse r = http(fx.server.port(), "GET", "/sessions/nope/meta");
        CHECK(r.status == 404);
        CHECK(json::parse(r.body)["error"]["code"] == "unknown_session");
    }
}

TEST_CASE("frame previews") {
    ServerFixture fx;
    const std::string id = fx.create_session();
    const std::string base = "/sessions/" + id + "/frames/";

    SUBCASE("zero knobs equals the original mode pixel-exactly") {
        const HttpResponse den =
            http(fx.server.port(), "GET", base + "1?knobs=0,0,0,0,0,0&mode=denoised");
        const HttpResponse orig = http(fx.server.port(), "GET", base + "1?mode=original");
        REQUIRE(den.status == 200);
        REQUIRE(orig.status == 200);
        CHECK(den.body == orig.body);
    }
    SUBCASE("repeated request is a cache hit with lower reported latency") {
        const std::string target = base + "2?knobs=1,1,1,1,1,1&mode=denoised";
        const HttpResponse first = http(fx.server.port(), "GET", target);
        const HttpResponse second = http(fx.server.port(), "GET", target);
        REQUIRE(first.status == 200);
        REQUIRE(second.status == 200);
        CHECK(first.headers.at("X-Cache") == "miss");
        CHECK(second.headers.at("X-Cache") == "hit");
        CHECK(std::atol(second.headers.at("X-Render-Micros").c_str()) <
              std::atol(first.headers.at("X-Render-Micros").c_str()));
        CHECK(first.body == second.body);
    }
    SUBCASE("default knobs preview matches the engine output bit-near") {
        const HttpResponse r = http(fx.server.port(), "GET", base + "0?knobs=1,1,1,1,1,1");
        REQUIRE(r.status == 200);

        const Clip clip = read_y4m(fx.clip_path.string());
        const Clip out = denoise_clip(clip, EngineConfig{});
        const std::vector<std::uint8_t> expect = encode_png(frame_to_rgb(out.frames[0]));
        CHECK(r.body == std::string(reinterpret_cast<const char*>(expect.data()), expect.size()));
    }
    SUBCASE("split mode differs from both plain modes") {
        const HttpResponse split = http(fx.server.port(), "GET", base + "0?mode=split");
        const HttpResponse orig = http(fx.server.port(), "GET", base + "0?mode=original");
        const HttpResponse den = http(fx.server.port(), "GET", base + "0?mode=denoised");
        REQUIRE(split.status == 200);
        CHECK(split.body != orig.body);
        CHECK(split.body != den.body);
    }
    SUBCASE("bad inputs are rejected") {
        CHECK(http(fx.server.port(), "GET", base + "99").status == 400);
        CHECK(http(fx.server.port(), "GET", base + "0?knobs=9,0,0,0,0,0").status == 400);
        CHECK(http(fx.server.port(), "GET", base + "0?knobs=1,2").status == 400);
        CHECK(http(fx.server.port(), "GET", base + "0?mode=sideways").status == 400);
    }
}

TEST_CASE("live channel") {
    ServerFixture fx;
    const std::string id = fx.create_session();

    const int fd = connect_to(fx.server.port());
    send_all(fd, "GET /sessions/" + id + "/live HTTP/1.1\r\nHost: localhost\r\n\r\n");
    // 101 upgrade header
    std::string pending;
    char chunk[4096];
    while (pending.find("\r\n\r\n") == std::string::npos) {
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        REQUIRE(n > 0);
        pending.append(chunk, std::size_t(n));
    }
    CHECK(pending.find("101") != std::string::npos);
    pending.erase(0, pending.find("\r\n\r\n") + 4);

    SUBCASE("burst of updates coalesces to the final vector") {
        std::string burst;
        for (int i = 0; i < 20; ++i) {
            const double v = 0.1 * (i + 1);
            burst += json{{"type", "knobs"}, {"values", {v, v, v, v, v, v}}, {"frame", 1}}.dump() + "\n";
        }
        send_all(fd, burst);
        // renders arrive until one reflects the final vector; coalescing means
        // we see at most 20
        int renders = 0;
        json header;
        std::string png;
        bool final_seen = false;
        while (renders < 21 && read_live_message(fd, pending, header, png)) {
            REQUIRE(header["type"] == "preview");
            ++renders;
            const auto knobs = header["knobs"].get<std::vector<double>>();
            if (std::abs(knobs[0] - 2.0) < 1e-9) {
                final_seen = true;
                break;
            }
        }
        CHECK(final_seen);
        CHECK(renders >= 1);
        CHECK(renders <= 20);
        CHECK(!png.empty());
        // state visible via /meta after the render
        const HttpResponse meta = http(fx.server.port(), "GET", "/sessions/" + id + "/meta");
        const auto knobs = json::parse(meta.body)["knobs"].get<std::vector<double>>();
        CHECK(knobs[0] == doctest::Approx(2.0));
    }
    SUBCASE("out-of-range knob is rejected and state unchanged") {
        send_all(fd, json{{"type", "knobs"}, {"values", {9.0, 0, 0, 0, 0, 0}}}.dump() + "\n");
        json header;
        std::string png;
        REQUIRE(read_live_message(fd, pending, header, png));
        CHECK(header["type"] == "error");
        const HttpResponse meta = http(fx.server.port(), "GET", "/sessions/" + id + "/meta");
        const auto knobs = json::parse(meta.body)["knobs"].get<std::vector<double>>();
        for (double k : knobs) CHECK(k == 1.0);
    }
    SUBCASE("malformed json gets an error reply") {
        send_all(fd, "this is not json\n");
        json header;
        std::string png;
        REQUIRE(read_live_message(fd, pending, header, png));
        CHECK(header["type"] == "error");
    }
    ::close(fd);
}

TEST_CASE("concurrent sessions do not cross-talk") {
    ServerFixture fx;
    // second clip with very different content
    const fs::path other = fs::temp_directory_path() /
                           ("rfcvd_svc_b_" + std::to_string(::getpid()) + ".y4m");
    write_y4m(add_awgn(testutil::moving_clip(64, 64, 4), 64.0, 92), other.string());

    const std::string id_a = fx.create_session();
    const HttpResponse rb =
        http(fx.server.port(), "POST", "/sessions", json{{"path", other.string()}}.dump());
    REQUIRE(rb.status == 201);
    const std::string id_b = json::parse(rb.body)["id"].get<std::string>();

    const HttpResponse pa =
        http(fx.server.port(), "GET", "/sessions/" + id_a + "/frames/0?mode=original");
    const HttpResponse pb =
        http(fx.server.port(), "GET", "/sessions/" + id_b + "/frames/0?mode=original");
    REQUIRE(pa.status == 200);
    REQUIRE(pb.status == 200);
    CHECK(pa.body != pb.body);
    fs::remove(other);
}

TEST_CASE("cache stays within its byte budget") {
    Session s("t", add_awgn(testutil::static_clip(64, 64, 4), 25.0, 93), EngineConfig{},
              8 * 1024);
    // render more previews than fit
    for (int f = 0; f < 4; ++f)
        for (float k : {0.5f, 1.0f, 2.0f}) {
            Knobs knobs;
            knobs.sigmar_luma = k;
            (void)s.preview(f, knobs, "denoised");
        }
    // the oldest entries must have been evicted: first request misses again
    Knobs knobs;
    knobs.sigmar_luma = 0.5f;
    const auto again = s.preview(0, knobs, "denoised");
    CHECK(!again.cache_hit);
}
