#include "sac/service/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "sac/core/codec.hpp"
#include "sac/error.hpp"

namespace sac::service
{
namespace
{

void write_all(int fd, const char* data, std::size_t size)
{
    while (size > 0)
    {
        const auto n = ::send(fd, data, size, MSG_NOSIGNAL);
        if (n < 0)
        {
            if (errno == EINTR)
                continue;
            throw Error(ErrorKind::IoError, std::string("send: ") + std::strerror(errno));
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

// Returns bytes read; less than `size` only at EOF.
std::size_t read_all(int fd, char* data, std::size_t size)
{
    std::size_t got = 0;
    while (got < size)
    {
        const auto n = ::recv(fd, data + got, size - got, 0);
        if (n < 0)
        {
            if (errno == EINTR)
                continue;
            throw Error(ErrorKind::IoError, std::string("recv: ") + std::strerror(errno));
        }
        if (n == 0)
            break;
        got += static_cast<std::size_t>(n);
    }
    return got;
}

const std::string& field(const Json& request, const char* name)
{
    auto it = request.find(name);
    if (it == request.end() || !it->is_string())
        throw Error(ErrorKind::SchemaViolation, std::string("missing string field '") + name + "'");
    return it->get_ref<const std::string&>();
}

Json error_reply(const Error& e)
{
    Json j{{"type", "ERROR"}, {"kind", to_string(e.kind())}, {"message", e.what()}};
    if (const auto* fault = dynamic_cast<const PipelineFault*>(&e))
    {
        j["stage"] = to_string(fault->stage());
        j["cause"] = to_string(fault->cause());
    }
    return j;
}

} // namespace

std::string encode_frame(const Json& message)
{
    const auto body = core::canonical(message);
    if (body.size() > kMaxFrame)
        throw Error(ErrorKind::SchemaViolation, "frame exceeds the size limit");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out;
    out.reserve(4 + body.size());
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out += body;
    return out;
}

std::optional<Json> read_frame(int fd)
{
    unsigned char header[4];
    const auto got = read_all(fd, reinterpret_cast<char*>(header), 4);
    if (got == 0)
        return std::nullopt;
    if (got < 4)
        throw Error(ErrorKind::IoError, "connection closed inside a frame header");
    const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                            (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
    if (n > kMaxFrame)
        throw DecodeError(0, "frame length " + std::to_string(n) + " exceeds the limit");
    std::string body(n, '\0');
    if (read_all(fd, body.data(), n) < n)
        throw Error(ErrorKind::IoError, "connection closed inside a frame body");
    auto doc = core::parse_document(body);
    if (!doc.is_object())
        throw DecodeError(0, "frame body is not an object");
    return doc;
}

void write_frame(int fd, const Json& message)
{
    const auto bytes = encode_frame(message);
    write_all(fd, bytes.data(), bytes.size());
}

Json handle_request(SessionService& service, const Json& request, const std::function<void(const Json&)>& push,
                    std::vector<std::pair<std::string, std::uint64_t>>& subscriptions)
{
    try
    {
        const auto& type = field(request, "type");
        if (type == "OPEN")
        {
            std::optional<core::AppId> resume;
            if (request.contains("app_id"))
                resume = field(request, "app_id");
            const auto sid = service.open_session(resume);
            Json reply{{"type", "OPENED"}, {"session_id", sid}};
            if (resume)
                reply["state"] = service.get_state(sid);
            return reply;
        }
        if (type == "UTTER")
            return {{"type", "OUTCOME"},
                    {"outcome", to_json(service.submit_utterance(field(request, "session_id"), field(request, "text")))}};
        if (type == "DISPATCH")
        {
            auto event = request.at("event").get<core::Event>();
            return {{"type", "OUTCOME"}, {"outcome", to_json(service.dispatch_affordance(field(request, "session_id"), event))}};
        }
        if (type == "GET")
            return {{"type", "STATE"}, {"state", service.get_state(field(request, "session_id"))}};
        if (type == "SUBSCRIBE")
        {
            const auto& sid = field(request, "session_id");
            const auto id = service.subscribe(sid, [push, sid](const Update& u) {
                Json frame = to_json(u);
                frame["type"] = "UPDATE";
                frame["session_id"] = sid;
                push(frame);
            });
            subscriptions.emplace_back(sid, id);
            return {{"type", "SUBSCRIBED"}, {"session_id", sid}, {"subscription", id}};
        }
        if (type == "SHARE_EXPORT")
        {
            const auto& kind = field(request, "kind");
            if (kind != "state" && kind != "template")
                throw Error(ErrorKind::SchemaViolation, "kind must be state or template");
            const auto policy_name = request.value("policy", std::string("static_snapshot"));
            if (policy_name != "static_snapshot" && policy_name != "live_reference")
                throw Error(ErrorKind::SchemaViolation, "unknown data policy " + policy_name);
            const auto package = service.share_export(
                field(request, "session_id"), kind == "state" ? store::ShareKind::state : store::ShareKind::app_template,
                policy_name == "static_snapshot" ? store::DataPolicy::static_snapshot : store::DataPolicy::live_reference);
            return {{"type", "SHARE"}, {"package", package}};
        }
        if (type == "SHARE_IMPORT")
            return {{"type", "OUTCOME"},
                    {"outcome", to_json(service.share_import(field(request, "session_id"), field(request, "package")))}};
        if (type == "REFRESH")
            return {{"type", "OUTCOME"}, {"outcome", to_json(service.refresh(field(request, "session_id")))}};
        throw Error(ErrorKind::SchemaViolation, "unknown message type " + type);
    }
    catch (const Error& e)
    {
        return error_reply(e);
    }
    catch (const std::exception& e)
    {
        return error_reply(Error(ErrorKind::SchemaViolation, e.what()));
    }
}

Server::Server(SessionService& service) : service_(service)
{
}

Server::~Server()
{
    stop();
}

std::uint16_t Server::start(std::uint16_t port)
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw Error(ErrorKind::IoError, std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0)
    {
        const auto reason = std::string(std::strerror(errno));
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error(ErrorKind::IoError, "cannot listen on port " + std::to_string(port) + ": " + reason);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return port_;
}

void Server::stop()
{
    if (!running_.exchange(false))
        return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable())
        acceptor_.join();
    std::list<std::thread> workers;
    {
        std::lock_guard guard(connections_mutex_);
        for (int fd : open_fds_)
            ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        t.join();
}

void Server::accept_loop()
{
    while (running_)
    {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
        {
            if (errno == EINTR)
                continue;
            return;
        }
        std::lock_guard guard(connections_mutex_);
        if (!running_)
        {
            ::close(fd);
            return;
        }
        open_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void Server::serve(int fd)
{
    auto write_mutex = std::make_shared<std::mutex>();
    auto alive = std::make_shared<std::atomic<bool>>(true);
    auto push = [fd, write_mutex, alive](const Json& frame) {
        if (!*alive)
            throw Error(ErrorKind::IoError, "connection closed");
        std::lock_guard guard(*write_mutex);
        write_frame(fd, frame);
    };
    std::vector<std::pair<std::string, std::uint64_t>> subscriptions;
    try
    {
        while (auto request = read_frame(fd))
        {
            auto reply = handle_request(service_, *request, push, subscriptions);
            if (request->contains("id"))
                reply["id"] = request->at("id");
            std::lock_guard guard(*write_mutex);
            write_frame(fd, reply);
        }
    }
    catch (const DecodeError& e)
    {
        try
        {
            std::lock_guard guard(*write_mutex);
            write_frame(fd, error_reply(e));
        }
        catch (const Error&)
        {
        }
    }
    catch (const Error&)
    {
    }
    *alive = false;
    for (const auto& [sid, id] : subscriptions)
    {
        try
        {
            service_.unsubscribe(sid, id);
        }
        catch (const Error&)
        {
        }
    }
    std::lock_guard guard(connections_mutex_);
    open_fds_.remove(fd);
    ::close(fd);
}

Client::Client(const std::string& host, std::uint16_t port)
{
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0)
        throw Error(ErrorKind::IoError, std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
        ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
    {
        const auto reason = std::string(std::strerror(errno));
        ::close(fd_);
        throw Error(ErrorKind::IoError, "cannot connect to " + host + ":" + std::to_string(port) + ": " + reason);
    }
    reader_thread_ = std::thread([this] { reader(); });
}

Client::~Client()
{
    ::shutdown(fd_, SHUT_RDWR);
    if (reader_thread_.joinable())
        reader_thread_.join();
    ::close(fd_);
}

void Client::reader()
{
    try
    {
        while (auto frame = read_frame(fd_))
        {
            std::lock_guard guard(mutex_);
            if (frame->value("type", "") == "UPDATE")
                updates_.push_back(std::move(*frame));
            else
                replies_.push_back(std::move(*frame));
            cv_.notify_all();
        }
    }
    catch (const Error&)
    {
    }
    std::lock_guard guard(mutex_);
    closed_ = true;
    cv_.notify_all();
}

Json Client::request(const Json& message)
{
    write_frame(fd_, message);
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !replies_.empty() || closed_; });
    if (replies_.empty())
        throw Error(ErrorKind::IoError, "connection closed before a reply");
    auto reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
}

std::optional<Json> Client::next_update(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return !updates_.empty() || closed_; }) || updates_.empty())
        return std::nullopt;
    auto update = std::move(updates_.front());
    updates_.pop_front();
    return update;
}

} // namespace sac::service
