#pragma once

#include "rfcvd/engine.hpp"
#include "rfcvd/plane.hpp"

#include <atomic>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rfcvd {

// One loaded clip with a frozen noise profile. Previews are cached per
// (frame, knobs, mode) in a byte-bounded LRU.
class Session {
public:
    Session(std::string id, Clip clip, EngineConfig cfg, std::size_t cache_limit_bytes);

    const std::string& id() const { return id_; }
    const Clip& clip() const { return clip_; }
    Knobs current_knobs() const;
    int current_frame() const;
    void set_state(const Knobs& knobs, int frame);

    struct Preview {
        std::vector<std::uint8_t> png;
        bool cache_hit = false;
        double render_seconds = 0.0;
    };
    // mode: "denoised", "original" or "split"
    Preview preview(int frame, const Knobs& knobs, const std::string& mode);

private:
    std::string cache_key(int frame, const Knobs& knobs, const std::string& mode) const;

    std::string id_;
    Clip clip_;
    NoiseProfile profile_;
    EngineConfig cfg_;
    mutable std::mutex state_mutex_;
    Knobs knobs_;
    int frame_ = 0;

    std::mutex cache_mutex_;
    std::size_t cache_limit_;
    std::size_t cache_bytes_ = 0;
    std::list<std::pair<std::string, std::vector<std::uint8_t>>> lru_;
    std::map<std::string, decltype(lru_)::iterator> index_;
};

class PreviewServer {
public:
    explicit PreviewServer(EngineConfig cfg = {}, std::size_t cache_limit_bytes = 64 << 20);
    ~PreviewServer();

    // binds 127.0.0.1:port (0 = ephemeral) and serves on a background thread
    void start(int port);
    void stop();
    int port() const { return port_; }

    std::shared_ptr<Session> create_session(const std::string& clip_path);
    std::shared_ptr<Session> find_session(const std::string& id);

private:
    void serve_loop();
    void handle_connection(int fd);

    EngineConfig cfg_;
    std::size_t cache_limit_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_session_ = 1;
};

} // namespace rfcvd
