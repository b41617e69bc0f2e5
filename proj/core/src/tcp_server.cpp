#include "sonifw/tcp_server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <vector>

#include "sonifw/errors.hpp"

namespace sonifw::net {

namespace {

void set_nonblocking(int fd) {
    const int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::string errno_text(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0) {
        throw ConfigError("listen endpoint must look like host:port, got '" + endpoint + "'");
    }
    const std::string host = endpoint.substr(0, colon);
    const std::string port_text = endpoint.substr(colon + 1);
    unsigned port = 0;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || port > 65535) {
        throw ConfigError("bad port in listen endpoint '" + endpoint + "'");
    }
    in_addr addr{};
    if (inet_pton(AF_INET, host.c_str(), &addr) != 1) {
        throw ConfigError("listen host must be an IPv4 address, got '" + host + "'");
    }
    return {host, static_cast<std::uint16_t>(port)};
}

TcpServer::TcpServer(const std::string& host, std::uint16_t port, ServerCallbacks callbacks,
                     ServerLimits limits)
    : callbacks_(std::move(callbacks)), limits_(limits) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError(errno_text("socket"));
    const int one = 1;
    setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw ConfigError("listen host must be an IPv4 address, got '" + host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 8) != 0) {
        const auto msg = errno_text("bind/listen");
        ::close(listen_fd_);
        throw IoError(msg);
    }
    socklen_t len = sizeof addr;
    getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);

    if (::pipe(wake_pipe_) != 0) {
        ::close(listen_fd_);
        throw IoError(errno_text("pipe"));
    }
    set_nonblocking(wake_pipe_[0]);
    set_nonblocking(wake_pipe_[1]);
    thread_ = std::thread([this] { loop(); });
}

TcpServer::~TcpServer() {
    stop(std::chrono::milliseconds(0));
}

void TcpServer::wake() {
    const char b = 1;
    [[maybe_unused]] auto n = ::write(wake_pipe_[1], &b, 1);
}

void TcpServer::enqueue(Client& client, const std::string& line, bool droppable) {
    if (client.closing) return;
    if (droppable && client.out.size() >= limits_.drop_threshold_bytes) {
        ++dropped_;
        return;
    }
    if (client.out.size() + line.size() > limits_.disconnect_threshold_bytes) {
        client.closing = true;
        client.out.clear();
        return;
    }
    client.out += line;
}

void TcpServer::send(int client, std::string line, bool droppable) {
    {
        std::lock_guard lock(mutex_);
        auto it = clients_.find(client);
        if (it == clients_.end()) return;
        enqueue(it->second, line, droppable);
    }
    wake();
}

void TcpServer::broadcast(std::string line, bool droppable) {
    {
        std::lock_guard lock(mutex_);
        for (auto& [id, c] : clients_) enqueue(c, line, droppable);
    }
    wake();
}

std::size_t TcpServer::client_count() const {
    std::lock_guard lock(mutex_);
    return clients_.size();
}

void TcpServer::stop(std::chrono::milliseconds flush_timeout) {
    if (!thread_.joinable()) return;
    const auto deadline = std::chrono::steady_clock::now() + flush_timeout;
    flushing_ = true;
    wake();
    while (std::chrono::steady_clock::now() < deadline) {
        bool pending = false;
        {
            std::lock_guard lock(mutex_);
            for (const auto& [id, c] : clients_) pending = pending || !c.out.empty();
        }
        if (!pending) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    stopping_ = true;
    wake();
    thread_.join();
    for (auto& [id, c] : clients_) ::close(c.fd);
    clients_.clear();
    ::close(listen_fd_);
    ::close(wake_pipe_[0]);
    ::close(wake_pipe_[1]);
}

void TcpServer::loop() {
    std::vector<pollfd> fds;
    std::vector<int> ids;
    char buf[4096];
    while (!stopping_) {
        fds.clear();
        ids.clear();
        // stop() may flip this at any time; the fd layout below depends on it.
        const bool flushing = flushing_;
        fds.push_back({wake_pipe_[0], POLLIN, 0});
        if (!flushing) fds.push_back({listen_fd_, POLLIN, 0});
        {
            std::lock_guard lock(mutex_);
            for (const auto& [id, c] : clients_) {
                short events = POLLIN;
                if (!c.out.empty()) events |= POLLOUT;
                fds.push_back({c.fd, events, 0});
                ids.push_back(id);
            }
        }
        if (::poll(fds.data(), fds.size(), 100) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (fds[0].revents & POLLIN) {
            while (::read(wake_pipe_[0], buf, sizeof buf) > 0) {
            }
        }
        const std::size_t first_client = flushing ? 1 : 2;
        if (!flushing && (fds[1].revents & POLLIN)) {
            for (;;) {
                const int fd = ::accept(listen_fd_, nullptr, nullptr);
                if (fd < 0) break;
                set_nonblocking(fd);
                int id = 0;
                {
                    std::lock_guard lock(mutex_);
                    id = next_client_++;
                    clients_[id] = Client{fd, {}, {}, false};
                }
                if (callbacks_.on_connect) callbacks_.on_connect(id);
            }
        }

        std::vector<int> gone;
        for (std::size_t i = first_client; i < fds.size(); ++i) {
            const int id = ids[i - first_client];
            const auto revents = fds[i].revents;
            std::vector<std::string> lines;
            bool dead = false;
            if (revents & (POLLIN | POLLHUP | POLLERR)) {
                const auto n = ::recv(fds[i].fd, buf, sizeof buf, 0);
                if (n > 0) {
                    std::lock_guard lock(mutex_);
                    auto& c = clients_.at(id);
                    c.in.append(buf, static_cast<std::size_t>(n));
                    std::size_t pos;
                    while ((pos = c.in.find('\n')) != std::string::npos) {
                        lines.push_back(c.in.substr(0, pos));
                        c.in.erase(0, pos + 1);
                    }
                    if (c.in.size() > limits_.max_line_bytes) dead = true;
                } else if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) {
                    dead = true;
                }
            }
            if (!dead && (revents & POLLOUT)) {
                std::lock_guard lock(mutex_);
                auto& c = clients_.at(id);
                const auto n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
                if (n > 0) {
                    c.out.erase(0, static_cast<std::size_t>(n));
                } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
                    dead = true;
                }
            }
            {
                std::lock_guard lock(mutex_);
                if (clients_.at(id).closing) dead = true;
            }
            if (callbacks_.on_line) {
                for (auto& l : lines) {
                    if (!l.empty() && l.back() == '\r') l.pop_back();
                    if (!l.empty()) callbacks_.on_line(id, std::move(l));
                }
            }
            if (dead) gone.push_back(id);
        }
        for (int id : gone) {
            {
                std::lock_guard lock(mutex_);
                auto it = clients_.find(id);
                ::close(it->second.fd);
                clients_.erase(it);
            }
            if (callbacks_.on_disconnect) callbacks_.on_disconnect(id);
        }
    }
}

}  // namespace sonifw::net
