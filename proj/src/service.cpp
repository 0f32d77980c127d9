#include "rfcvd/service.hpp"

#include "rfcvd/media_io.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <sstream>

namespace rfcvd {

using nlohmann::json;

// ---------------------------------------------------------------- Session

Session::Session(std::string id, Clip clip, EngineConfig cfg, std::size_t cache_limit_bytes)
    : id_(std::move(id)), clip_(std::move(clip)), cfg_(std::move(cfg)), cache_limit_(cache_limit_bytes) {
    profile_ = make_profile(clip_, cfg_);
}

Knobs Session::current_knobs() const {
    std::lock_guard lock(state_mutex_);
    return knobs_;
}

int Session::current_frame() const {
    std::lock_guard lock(state_mutex_);
    return frame_;
}

void Session::set_state(const Knobs& knobs, int frame) {
    std::lock_guard lock(state_mutex_);
    knobs_ = knobs;
    frame_ = frame;
}

std::string Session::cache_key(int frame, const Knobs& knobs, const std::string& mode) const {
    std::ostringstream ss;
    ss << frame << '|' << mode;
    for (float k : knobs.as_array()) ss << '|' << k;
    return ss.str();
}

Session::Preview Session::preview(int frame, const Knobs& knobs, const std::string& mode) {
    if (frame < 0 || std::size_t(frame) >= clip_.size())
        fail(ErrorKind::Usage, "frame out of range");
    if (mode != "denoised" && mode != "original" && mode != "split")
        fail(ErrorKind::Usage, "unknown preview mode: " + mode);

    const std::string key = cache_key(frame, knobs, mode);
    {
        std::lock_guard lock(cache_mutex_);
        const auto it = index_.find(key);
        if (it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return {it->second->second, true, 0.0};
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const Frame& original = clip_.frames[std::size_t(frame)];
    Frame shown;
    if (mode == "original") {
        shown = original;
    } else {
        EngineConfig cfg = cfg_;
        cfg.knobs = knobs;
        shown = denoise_frame(clip_, frame, profile_, cfg);
        if (mode == "split") {
            // left half original, right half denoised
            const int half = original.width() / 2;
            for (int y = 0; y < original.height(); ++y)
                for (int x = 0; x < half; ++x) {
                    shown.y.at(x, y) = original.y.at(x, y);
                    shown.cb.at(x, y) = original.cb.at(x, y);
                    shown.cr.at(x, y) = original.cr.at(x, y);
                }
        }
    }
    Preview out;
    out.png = encode_png(frame_to_rgb(shown));
    out.render_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::lock_guard lock(cache_mutex_);
    if (index_.find(key) == index_.end()) {
        lru_.emplace_front(key, out.png);
        index_[key] = lru_.begin();
        cache_bytes_ += out.png.size();
        while (cache_bytes_ > cache_limit_ && lru_.size() > 1) {
            cache_bytes_ -= lru_.back().second.size();
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
    }
    return out;
}

// ---------------------------------------------------------------- server

namespace {

struct HttpRequest {
    std::string method;
    std::string path;   // without query
    std::string query;
    std::string body;
};

bool read_request(int fd, HttpRequest& req) {
    std::string buf;
    char chunk[4096];
    std::size_t header_end = std::string::npos;
    while (header_end == std::string::npos) {
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) return false;
        buf.append(chunk, std::size_t(n));
        header_end = buf.find("\r\n\r\n");
        if (buf.size() > (1 << 20)) return false;
    }
    std::istringstream head(buf.substr(0, header_end));
    std::string target, version;
    head >> req.method >> target >> version;
    if (req.method.empty() || target.empty()) return false;
    const auto qpos = target.find('?');
    req.path = target.substr(0, qpos);
    if (qpos != std::string::npos) req.query = target.substr(qpos + 1);

    std::size_t content_length = 0;
    std::string line;
    std::getline(head, line); // remainder of the request line
    while (std::getline(head, line)) {
        if (line.rfind("Content-Length:", 0) == 0 || line.rfind("content-length:", 0) == 0)
            content_length = std::size_t(std::atol(line.c_str() + 15));
    }
    req.body = buf.substr(header_end + 4);
    while (req.body.size() < content_length) {
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) return false;
        req.body.append(chunk, std::size_t(n));
    }
    return true;
}

void send_all(int fd, const void* data, std::size_t n) {
    const char* p = static_cast<const char*>(data);
    while (n > 0) {
        const ssize_t sent = ::send(fd, p, n, MSG_NOSIGNAL);
        if (sent <= 0) return;
        p += sent;
        n -= std::size_t(sent);
    }
}

void send_response(int fd, int status, const std::string& content_type, const std::string& body,
                   const std::string& extra_headers = {}) {
    std::ostringstream ss;
    const char* reason = status == 200 ? "OK" : (status == 201 ? "Created" : (status == 404 ? "Not Found" : "Bad Request"));
    ss << "HTTP/1.1 " << status << ' ' << reason << "\r\n"
       << "Content-Type: " << content_type << "\r\n"
       << "Content-Length: " << body.size() << "\r\n"
       << extra_headers
       << "Connection: close\r\n\r\n";
    const std::string head = ss.str();
    send_all(fd, head.data(), head.size());
    send_all(fd, body.data(), body.size());
}

void send_json_error(int fd, int status, const std::string& code, const std::string& message) {
    send_response(fd, status, "application/json",
                  json{{"error", {{"code", code}, {"message", message}}}}.dump());
}

std::map<std::string, std::string> parse_query(const std::string& query) {
    std::map<std::string, std::string> out;
    std::istringstream ss(query);
    std::string pair;
    while (std::getline(ss, pair, '&')) {
        const auto eq = pair.find('=');
        if (eq != std::string::npos) out[pair.substr(0, eq)] = pair.substr(eq + 1);
    }
    return out;
}

bool parse_knob_values(const std::vector<double>& values, Knobs& out, std::string& err) {
    if (values.size() != 6) {
        err = "knobs must have exactly 6 values";
        return false;
    }
    std::array<float, 6> a;
    for (std::size_t i = 0; i < 6; ++i) {
        if (!(values[i] >= 0.0) || values[i] > 4.0) {
            err = "knob values must be in [0, 4]";
            return false;
        }
        a[i] = float(values[i]);
    }
    out = Knobs::from_array(a);
    return true;
}

bool parse_knob_csv(const std::string& csv, Knobs& out, std::string& err) {
    std::vector<double> values;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        values.push_back(std::atof(tok.c_str()));
    return parse_knob_values(values, out, err);
}

} // namespace

PreviewServer::PreviewServer(EngineConfig cfg, std::size_t cache_limit_bytes)
    : cfg_(std::move(cfg)), cache_limit_(cache_limit_bytes) {}

PreviewServer::~PreviewServer() { stop(); }

void PreviewServer::start(int port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) fail(ErrorKind::Environment, "socket() failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(std::uint16_t(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        fail(ErrorKind::Environment, "cannot bind preview server to port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = int(ntohs(addr.sin_port));
    running_ = true;
    accept_thread_ = std::thread([this] { serve_loop(); });
}

void PreviewServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (accept_thread_.joinable()) accept_thread_.join();
}

void PreviewServer::serve_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::thread([this, fd] {
            handle_connection(fd);
            ::close(fd);
        }).detach();
    }
}

std::shared_ptr<Session> PreviewServer::create_session(const std::string& clip_path) {
    Clip clip = read_y4m(clip_path);
    std::string id;
    {
        std::lock_guard lock(sessions_mutex_);
        id = "s" + std::to_string(next_session_++);
    }
    auto session = std::make_shared<Session>(id, std::move(clip), cfg_, cache_limit_);
    std::lock_guard lock(sessions_mutex_);
    sessions_[id] = session;
    return session;
}

std::shared_ptr<Session> PreviewServer::find_session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

namespace {

// /sessions/{id}/rest -> (id, rest)
bool split_session_path(const std::string& path, std::string& id, std::string& rest) {
    const std::string prefix = "/sessions/";
    if (path.rfind(prefix, 0) != 0) return false;
    const auto slash = path.find('/', prefix.size());
    if (slash == std::string::npos) {
        id = path.substr(prefix.size());
        rest.clear();
    } else {
        id = path.substr(prefix.size(), slash - prefix.size());
        rest = path.substr(slash);
    }
    return !id.empty();
}

void live_channel(int fd, Session& session, const EngineConfig&) {
    const std::string upgrade =
        "HTTP/1.1 101 Switching Protocols\r\nUpgrade: rfcvd-live\r\nConnection: Upgrade\r\n\r\n";
    send_all(fd, upgrade.data(), upgrade.size());

    std::string inbox;
    char chunk[4096];
    bool dirty = false;
    Knobs pending = session.current_knobs();
    int pending_frame = session.current_frame();

    for (;;) {
        // drain everything already queued so slider storms coalesce to the
        // latest knob vector before the next render
        pollfd pfd{fd, POLLIN, 0};
        const int timeout_ms = dirty ? 0 : -1;
        const int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr < 0) return;
        if (pr > 0) {
            if (pfd.revents & (POLLERR | POLLHUP)) {
                if (!(pfd.revents & POLLIN)) return;
            }
            const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
            if (n <= 0) return;
            inbox.append(chunk, std::size_t(n));
            std::size_t nl;
            while ((nl = inbox.find('\n')) != std::string::npos) {
                const std::string line = inbox.substr(0, nl);
                inbox.erase(0, nl + 1);
                if (line.empty()) continue;
                json msg;
                try {
                    msg = json::parse(line);
                } catch (const json::exception&) {
                    const std::string err = json{{"type", "error"}, {"message", "malformed JSON"}}.dump() + "\n";
                    send_all(fd, err.data(), err.size());
                    continue;
                }
                if (msg.value("type", "") == "knobs" && msg.contains("values")) {
                    Knobs parsed;
                    std::string err;
                    if (!parse_knob_values(msg["values"].get<std::vector<double>>(), parsed, err)) {
                        const std::string reply =
                            json{{"type", "error"}, {"message", err}}.dump() + "\n";
                        send_all(fd, reply.data(), reply.size());
                        continue;
                    }
                    pending = parsed;
                    if (msg.contains("frame")) pending_frame = msg["frame"].get<int>();
                    dirty = true;
                } else {
                    const std::string reply =
                        json{{"type", "error"}, {"message", "unknown message type"}}.dump() + "\n";
                    send_all(fd, reply.data(), reply.size());
                }
            }
            continue; // check for more queued input before rendering
        }
        if (!dirty) continue;
        dirty = false;
        try {
            const Knobs knobs = pending;
            const int frame = pending_frame;
            const auto preview = session.preview(frame, knobs, "denoised");
            session.set_state(knobs, frame);
            json header = {{"type", "preview"},
                           {"frame", frame},
                           {"bytes", preview.png.size()},
                           {"knobs", knobs.as_array()}};
            const std::string head = header.dump() + "\n";
            send_all(fd, head.data(), head.size());
            send_all(fd, preview.png.data(), preview.png.size());
        } catch (const Error& e) {
            const std::string reply = json{{"type", "error"}, {"message", e.what()}}.dump() + "\n";
            send_all(fd, reply.data(), reply.size());
        }
    }
}

} // namespace

void PreviewServer::handle_connection(int fd) {
    HttpRequest req;
    if (!read_request(fd, req)) return;
    try {
        if (req.method == "POST" && req.path == "/sessions") {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception&) {
                send_json_error(fd, 400, "bad_request", "body must be JSON with a \"path\" field");
                return;
            }
            if (!body.contains("path")) {
                send_json_error(fd, 400, "bad_request", "missing \"path\"");
                return;
            }
            auto session = create_session(body["path"].get<std::string>());
            send_response(fd, 201, "application/json",
                          json{{"id", session->id()},
                               {"frames", session->clip().size()},
                               {"width", session->clip().width()},
                               {"height", session->clip().height()}}
                              .dump());
            return;
        }

        std::string id, rest;
        if (!split_session_path(req.path, id, rest)) {
            send_json_error(fd, 404, "not_found", "unknown endpoint " + req.path);
            return;
        }
        auto session = find_session(id);
        if (!session) {
            send_json_error(fd, 404, "unknown_session", "no session " + id);
            return;
        }

        if (req.method == "GET" && rest == "/meta") {
            const Knobs knobs = session->current_knobs();
            send_response(fd, 200, "application/json",
                          json{{"id", session->id()},
                               {"frames", session->clip().size()},
                               {"width", session->clip().width()},
                               {"height", session->clip().height()},
                               {"frame_rate", session->clip().frame_rate},
                               {"knobs", knobs.as_array()},
                               {"frame", session->current_frame()}}
                              .dump());
            return;
        }
        if (req.method == "GET" && rest.rfind("/frames/", 0) == 0) {
            const int frame = std::atoi(rest.c_str() + 8);
            auto params = parse_query(req.query);
            Knobs knobs = session->current_knobs();
            if (params.count("knobs")) {
                std::string err;
                if (!parse_knob_csv(params["knobs"], knobs, err)) {
                    send_json_error(fd, 400, "bad_knobs", err);
                    return;
                }
            }
            const std::string mode = params.count("mode") ? params["mode"] : "denoised";
            const auto preview = session->preview(frame, knobs, mode);
            std::ostringstream extra;
            extra << "X-Cache: " << (preview.cache_hit ? "hit" : "miss") << "\r\n"
                  << "X-Render-Micros: " << long(preview.render_seconds * 1e6) << "\r\n";
            send_response(fd, 200, "image/png",
                          std::string(reinterpret_cast<const char*>(preview.png.data()), preview.png.size()),
                          extra.str());
            return;
        }
        if (req.method == "GET" && rest == "/live") {
            live_channel(fd, *session, cfg_);
            return;
        }
        send_json_error(fd, 404, "not_found", "unknown endpoint " + req.path);
    } catch (const Error& e) {
        const int status = e.kind() == ErrorKind::Usage ? 400 : (e.kind() == ErrorKind::Io ? 404 : 500);
        send_json_error(fd, status, "error", e.what());
    } catch (const std::exception& e) {
        send_json_error(fd, 500, "internal", e.what());
    }
}

} // namespace rfcvd
