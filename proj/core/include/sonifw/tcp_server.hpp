#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>

namespace sonifw::net {

// Parses "host:port"; throws ConfigError.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

struct ServerCallbacks {
    std::function<void(int client)> on_connect;
    std::function<void(int client, std::string line)> on_line;
    std::function<void(int client)> on_disconnect;
};

struct ServerLimits {
    // Droppable messages are discarded while a client has this much unsent.
    std::size_t drop_threshold_bytes = 256 * 1024;
    // Past this a client is disconnected as too slow.
    std::size_t disconnect_threshold_bytes = 8 * 1024 * 1024;
    std::size_t max_line_bytes = 64 * 1024;
};

// Line-oriented TCP server on its own thread (poll loop). send() and
// broadcast() only append to per-client buffers and never block.
class TcpServer {
public:
    // Binds and listens immediately (port 0 picks a free port); throws IoError.
    TcpServer(const std::string& host, std::uint16_t port, ServerCallbacks callbacks,
              ServerLimits limits = {});
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }

    void send(int client, std::string line, bool droppable);
    void broadcast(std::string line, bool droppable);
    // Number of droppable messages discarded so far.
    std::uint64_t dropped() const { return dropped_.load(); }
    std::size_t client_count() const;

    // Flushes what it can within the timeout, then closes everything.
    void stop(std::chrono::milliseconds flush_timeout = std::chrono::milliseconds(500));

private:
    struct Client {
        int fd = -1;
        std::string out;
        std::string in;
        bool closing = false;
    };

    void loop();
    void wake();
    void enqueue(Client& client, const std::string& line, bool droppable);

    ServerCallbacks callbacks_;
    ServerLimits limits_;
    int listen_fd_ = -1;
    int wake_pipe_[2] = {-1, -1};
    std::uint16_t port_ = 0;
    mutable std::mutex mutex_;
    std::map<int, Client> clients_;  // keyed by client id
    int next_client_ = 1;
    std::atomic<bool> stopping_{false};
    std::atomic<bool> flushing_{false};
    std::atomic<std::uint64_t> dropped_{0};
    std::thread thread_;
};

}  // namespace sonifw::net
