#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "sac/service/session.hpp"

namespace sac::service
{

// Frames are a 4-byte big-endian body length followed by a canonical JSON body.
inline constexpr std::uint32_t kMaxFrame = 16u << 20;

std::string encode_frame(const Json& message);
// Reads one frame from `fd`; nullopt on orderly EOF before a header.
// Throws DecodeError for a malformed body and IoError on a short read.
std::optional<Json> read_frame(int fd);
void write_frame(int fd, const Json& message);

// Handles one request message and returns its reply. `push` delivers UPDATE
// frames for subscriptions made on this connection.
Json handle_request(SessionService& service, const Json& request, const std::function<void(const Json&)>& push,
                    std::vector<std::pair<std::string, std::uint64_t>>& subscriptions);

// TCP server on 127.0.0.1, one thread per connection.
class Server
{
public:
    explicit Server(SessionService& service);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts accepting; port 0 picks a free port. Returns the bound port.
    std::uint16_t start(std::uint16_t port);
    void stop();
    std::uint16_t port() const noexcept { return port_; }

private:
    void accept_loop();
    void serve(int fd);

    SessionService& service_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex connections_mutex_;
    std::list<std::thread> workers_;
    std::list<int> open_fds_;
};

// Blocking client; UPDATE frames arriving between replies are queued.
class Client
{
public:
    Client(const std::string& host, std::uint16_t port);
    ~Client();

    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    Json request(const Json& message);
    std::optional<Json> next_update(std::chrono::milliseconds timeout);

private:
    void reader();

    int fd_ = -1;
    std::thread reader_thread_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Json> replies_;
    std::deque<Json> updates_;
    bool closed_ = false;
};

} // namespace sac::service
