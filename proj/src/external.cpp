#include "smcheck/external.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "json.hpp"

extern char** environ;

namespace smcheck {

namespace protocol {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string dump(const ordered_json& j)
{
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ordered_json header(std::uint64_t id, std::string_view cmd)
{
    ordered_json j;
    j["id"] = id;
    j["cmd"] = cmd;
    return j;
}

nlohmann::json parse_object(std::string_view line)
{
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
        throw SimulatorError("protocol error: malformed JSON line");
    }
    if (!j.is_object()) {
        throw SimulatorError("protocol error: message is not a JSON object");
    }
    return j;
}

std::uint64_t get_u64(const nlohmann::json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned()) {
        throw SimulatorError(std::string("protocol error: missing or invalid \"") + key + "\"");
    }
    return it->get<std::uint64_t>();
}

}  // namespace

std::string encode_reset(std::uint64_t id, std::uint64_t seed, const ParamAssignment& params)
{
    ordered_json j = header(id, "reset");
    j["seed"] = seed;
    ordered_json p = ordered_json::object();
    for (const auto& [name, value] : params) {
        p[name] = value;
    }
    j["params"] = std::move(p);
    return dump(j);
}

std::string encode_next(std::uint64_t id)
{
    return dump(header(id, "next"));
}

std::string encode_eval(std::uint64_t id, std::string_view obs)
{
    ordered_json j = header(id, "eval");
    j["obs"] = obs;
    return dump(j);
}

std::string encode_shutdown(std::uint64_t id)
{
    return dump(header(id, "shutdown"));
}

std::string encode_ok(std::uint64_t id)
{
    ordered_json j;
    j["id"] = id;
    j["ok"] = true;
    return dump(j);
}

std::string encode_value(std::uint64_t id, double value)
{
    ordered_json j;
    j["id"] = id;
    j["ok"] = true;
    j["value"] = value;
    return dump(j);
}

std::string encode_error(std::uint64_t id, std::string_view message)
{
    ordered_json j;
    j["id"] = id;
    j["ok"] = false;
    j["error"] = message;
    return dump(j);
}

Response decode_response(std::string_view line)
{
    const nlohmann::json j = parse_object(line);
    Response r;
    r.id = get_u64(j, "id");
    auto ok = j.find("ok");
    if (ok == j.end() || !ok->is_boolean()) {
        throw SimulatorError("protocol error: missing or invalid \"ok\"");
    }
    r.ok = ok->get<bool>();
    if (r.ok) {
        if (auto v = j.find("value"); v != j.end()) {
            if (!v->is_number()) {
                throw SimulatorError("protocol error: non-numeric observation value");
            }
            r.value = v->get<double>();
        }
    } else {
        auto e = j.find("error");
        r.error = (e != j.end() && e->is_string()) ? e->get<std::string>() : std::string("unspecified error");
    }
    return r;
}

Request decode_request(std::string_view line)
{
    const nlohmann::json j = parse_object(line);
    Request r;
    r.id = get_u64(j, "id");
    auto cmd = j.find("cmd");
    if (cmd == j.end() || !cmd->is_string()) {
        throw SimulatorError("protocol error: missing or invalid \"cmd\"");
    }
    r.cmd = cmd->get<std::string>();
    if (r.cmd == "reset") {
        r.seed = get_u64(j, "seed");
        if (auto p = j.find("params"); p != j.end()) {
            if (!p->is_object()) {
                throw SimulatorError("protocol error: \"params\" must be an object");
            }
            for (const auto& [name, value] : p->items()) {
                if (!value.is_number()) {
                    throw SimulatorError("protocol error: parameter \"" + name + "\" is not a number");
                }
                r.params[name] = value.get<double>();
            }
        }
    } else if (r.cmd == "eval") {
        auto obs = j.find("obs");
        if (obs == j.end() || !obs->is_string()) {
            throw SimulatorError("protocol error: missing or invalid \"obs\"");
        }
        r.obs = obs->get<std::string>();
    } else if (r.cmd != "next" && r.cmd != "shutdown") {
        throw SimulatorError("protocol error: unknown command \"" + r.cmd + "\"");
    }
    return r;
}

}  // namespace protocol

namespace {

void ignore_sigpipe()
{
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class FdChannel : public LineChannel {
public:
    FdChannel(int read_fd, int write_fd, bool owns, bool is_socket)
        : read_fd_(read_fd), write_fd_(write_fd), owns_(owns), socket_(is_socket)
    {
    }
    ~FdChannel() override { FdChannel::close(); }

    void write_line(std::string_view line) override
    {
        if (write_fd_ < 0) {
            throw SimulatorError("channel closed");
        }
        std::string data(line);
        data.push_back('\n');
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n = socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                      : ::write(write_fd_, data.data() + off, data.size() - off);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw SimulatorError(std::string("transport error: write failed: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::string read_line(std::chrono::milliseconds timeout) override
    {
        if (read_fd_ < 0) {
            throw SimulatorError("channel closed");
        }
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') {
                    line.pop_back();
                }
                return line;
            }
            int wait_ms = -1;
            if (timeout.count() >= 0) {
                const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    deadline - std::chrono::steady_clock::now());
                if (left.count() <= 0) {
                    throw SimulatorError("transport error: timed out waiting for the simulator");
                }
                wait_ms = static_cast<int>(std::min<long long>(left.count(), 1 << 30));
            }
            pollfd pfd{read_fd_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, wait_ms);
            if (rc < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw SimulatorError(std::string("transport error: poll failed: ") + std::strerror(errno));
            }
            if (rc == 0) {
                continue;
            }
            char chunk[4096];
            const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) {
                    continue;
                }
                throw SimulatorError(std::string("transport error: read failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                throw SimulatorError("transport error: simulator closed the connection");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void close() override
    {
        if (!owns_) {
            read_fd_ = write_fd_ = -1;
            return;
        }
        if (write_fd_ >= 0 && write_fd_ != read_fd_) {
            ::close(write_fd_);
        }
        if (read_fd_ >= 0) {
            ::close(read_fd_);
        }
        read_fd_ = write_fd_ = -1;
    }

private:
    int read_fd_;
    int write_fd_;
    bool owns_;
    bool socket_;
    std::string buffer_;
};

class ProcessChannel final : public FdChannel {
public:
    ProcessChannel(int read_fd, int write_fd, pid_t pid) : FdChannel(read_fd, write_fd, true, false), pid_(pid) {}
    ~ProcessChannel() override { ProcessChannel::close(); }

    void close() override
    {
        FdChannel::close();
        if (pid_ <= 0) {
            return;
        }
        // Closing stdin normally ends the child; escalate if it lingers.
        for (int i = 0; i < 200; ++i) {
            int status = 0;
            const pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_ || (r < 0 && errno != EINTR)) {
                pid_ = -1;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }

private:
    pid_t pid_;
};

}  // namespace

std::unique_ptr<LineChannel> fd_channel(int read_fd, int write_fd, bool owns_fds)
{
    return std::make_unique<FdChannel>(read_fd, write_fd, owns_fds, false);
}

std::vector<std::string> split_command_line(std::string_view command)
{
    std::vector<std::string> out;
    std::string current;
    bool in_token = false;
    char quote = 0;
    for (char c : command) {
        if (quote != 0) {
            if (c == quote) {
                quote = 0;
            } else {
                current.push_back(c);
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
            in_token = true;
        } else if (c == ' ' || c == '\t') {
            if (in_token) {
                out.push_back(std::move(current));
                current.clear();
                in_token = false;
            }
        } else {
            current.push_back(c);
            in_token = true;
        }
    }
    if (quote != 0) {
        throw ConfigError("unterminated quote in command line");
    }
    if (in_token) {
        out.push_back(std::move(current));
    }
    return out;
}

std::unique_ptr<LineChannel> spawn_process(const std::vector<std::string>& argv)
{
    if (argv.empty()) {
        throw ConfigError("empty simulator command");
    }
    ignore_sigpipe();
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) {
        throw SimulatorError(std::string("cannot create pipe: ") + std::strerror(errno));
    }
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw SimulatorError(std::string("cannot create pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) {
        args.push_back(const_cast<char*>(a.c_str()));
    }
    args.push_back(nullptr);

    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        throw SimulatorError("cannot start simulator '" + argv[0] + "': " + std::strerror(rc));
    }
    return std::make_unique<ProcessChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, std::uint16_t port)
{
    ignore_sigpipe();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        throw SimulatorError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            break;
        }
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) {
        throw SimulatorError("cannot connect to " + host + ":" + service);
    }
    return std::make_unique<FdChannel>(fd, fd, true, true);
}

ExternalSimulator::ExternalSimulator(std::unique_ptr<LineChannel> channel, ExternalOptions options)
    : channel_(std::move(channel)), options_(std::move(options))
{
    ignore_sigpipe();
    if (!options_.transcript_path.empty()) {
        transcript_.open(options_.transcript_path, std::ios::out | std::ios::trunc);
        if (!transcript_) {
            throw ConfigError("cannot open transcript file " + options_.transcript_path);
        }
    }
}

ExternalSimulator::~ExternalSimulator()
{
    shutdown();
}

void ExternalSimulator::shutdown() noexcept
{
    if (!channel_) {
        return;
    }
    if (alive_) {
        try {
            const std::uint64_t id = next_id_++;
            const std::string req = protocol::encode_shutdown(id);
            channel_->write_line(req);
            if (transcript_) {
                transcript_ << req << '\n';
            }
            const std::string resp = channel_->read_line(std::chrono::milliseconds(2000));
            if (transcript_) {
                transcript_ << resp << '\n';
            }
        } catch (...) {
        }
    }
    alive_ = false;
    try {
        channel_->close();
    } catch (...) {
    }
    channel_.reset();
}

protocol::Response ExternalSimulator::call(const std::string& request, std::uint64_t id)
{
    if (!alive_ || !channel_) {
        throw SimulatorError("transport error: simulator is not alive");
    }
    try {
        channel_->write_line(request);
        if (transcript_) {
            transcript_ << request << '\n';
        }
        const auto timeout = std::chrono::milliseconds(static_cast<long long>(std::ceil(options_.timeout_seconds * 1000)));
        const std::string line = channel_->read_line(timeout);
        if (transcript_) {
            transcript_ << line << '\n';
            transcript_.flush();
        }
        protocol::Response r = protocol::decode_response(line);
        if (r.id != id) {
            throw SimulatorError("protocol error: response id " + std::to_string(r.id) + " does not match request id " +
                                 std::to_string(id));
        }
        return r;
    } catch (const SimulatorError&) {
        alive_ = false;
        throw;
    }
}

void ExternalSimulator::reset(std::uint64_t seed, const ParamAssignment& params)
{
    const std::uint64_t id = next_id_++;
    const auto r = call(protocol::encode_reset(id, seed, params), id);
    if (!r.ok) {
        throw SimulatorError("simulator rejected reset: " + r.error);
    }
    step_ = 0;
}

void ExternalSimulator::next()
{
    const std::uint64_t id = next_id_++;
    const auto r = call(protocol::encode_next(id), id);
    if (!r.ok) {
        throw SimulatorError("simulator rejected next: " + r.error);
    }
    ++step_;
}

double ExternalSimulator::eval(std::string_view obs)
{
    const std::uint64_t id = next_id_++;
    const auto r = call(protocol::encode_eval(id, obs), id);
    if (!r.ok) {
        throw SimulatorError("simulator rejected eval(\"" + std::string(obs) + "\"): " + r.error);
    }
    if (!r.value) {
        throw SimulatorError("protocol error: eval response without a value");
    }
    return *r.value;
}

std::uint64_t serve(Simulator& sim, LineChannel& channel)
{
    std::uint64_t handled = 0;
    for (;;) {
        std::string line;
        try {
            line = channel.read_line(std::chrono::milliseconds(-1));
        } catch (const SimulatorError&) {
            return handled;
        }
        if (line.empty()) {
            continue;
        }
        ++handled;
        protocol::Request req;
        try {
            req = protocol::decode_request(line);
        } catch (const SimulatorError& e) {
            std::uint64_t id = 0;
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_object() && j.contains("id") && j["id"].is_number_unsigned()) {
                id = j["id"].get<std::uint64_t>();
            }
            channel.write_line(protocol::encode_error(id, e.what()));
            continue;
        }
        std::string response;
        try {
            if (req.cmd == "reset") {
                sim.reset(req.seed, req.params);
                response = protocol::encode_ok(req.id);
            } else if (req.cmd == "next") {
                sim.next();
                response = protocol::encode_ok(req.id);
            } else if (req.cmd == "eval") {
                const double v = sim.eval(req.obs);
                response = std::isfinite(v) ? protocol::encode_value(req.id, v)
                                            : protocol::encode_error(req.id, "non-finite observation");
            } else {
                channel.write_line(protocol::encode_ok(req.id));
                return handled;
            }
        } catch (const std::exception& e) {
            response = protocol::encode_error(req.id, e.what());
        }
        channel.write_line(response);
    }
}

TcpListener::TcpListener(std::uint16_t port, bool loopback_only)
{
    ignore_sigpipe();
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) {
        throw SimulatorError(std::string("cannot create socket: ") + std::strerror(errno));
    }
    const int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 64) != 0) {
        const std::string why = std::strerror(errno);
        ::close(fd_);
        throw SimulatorError("cannot listen on port " + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void TcpListener::run(const SimulatorFactory& factory, std::uint64_t max_connections)
{
    std::vector<std::thread> sessions;
    for (std::uint64_t accepted = 0; max_connections == 0 || accepted < max_connections; ++accepted) {
        const int conn = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (conn < 0) {
            if (errno == EINTR) {
                continue;
            }
            break;
        }
        sessions.emplace_back([conn, &factory] {
            FdChannel channel(conn, conn, true, true);
            try {
                auto sim = factory();
                serve(*sim, channel);
            } catch (const std::exception& e) {
                try {
                    channel.write_line(protocol::encode_error(0, e.what()));
                } catch (...) {
                }
            }
        });
    }
    for (auto& t : sessions) {
        t.join();
    }
}

}  // namespace smcheck
