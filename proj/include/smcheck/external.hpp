#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smcheck/simulator.hpp"

namespace smcheck {

/// Newline-delimited JSON wire protocol between the engine and an external simulator.
///
/// Requests:  {"id":N,"cmd":"reset","seed":S,"params":{...}} | {"id":N,"cmd":"next"}
///            {"id":N,"cmd":"eval","obs":"..."} | {"id":N,"cmd":"shutdown"}
/// Responses: {"id":N,"ok":true} | {"id":N,"ok":true,"value":X} | {"id":N,"ok":false,"error":"..."}
namespace protocol {

std::string encode_reset(std::uint64_t id, std::uint64_t seed, const ParamAssignment& params);
std::string encode_next(std::uint64_t id);
std::string encode_eval(std::uint64_t id, std::string_view obs);
std::string encode_shutdown(std::uint64_t id);

std::string encode_ok(std::uint64_t id);
std::string encode_value(std::uint64_t id, double value);
std::string encode_error(std::uint64_t id, std::string_view message);

struct Response {
    std::uint64_t id = 0;
    bool ok = false;
    std::optional<double> value;
    std::string error;
};

/// Parses a response line. Throws SimulatorError on malformed input.
Response decode_response(std::string_view line);

struct Request {
    std::uint64_t id = 0;
    std::string cmd;
    std::uint64_t seed = 0;
    ParamAssignment params;
    std::string obs;
};

/// Parses a request line. Throws SimulatorError("protocol error: ...") on malformed input.
Request decode_request(std::string_view line);

}  // namespace protocol

/// Bidirectional line channel with a per-read timeout.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    virtual void write_line(std::string_view line) = 0;
    /// Returns the next line without its terminator; throws SimulatorError on EOF or timeout.
    virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
    virtual void close() = 0;
};

/// Channel over raw file descriptors (-1 timeout waits forever).
std::unique_ptr<LineChannel> fd_channel(int read_fd, int write_fd, bool owns_fds);

/// Channel over a child process's stdin/stdout.
std::unique_ptr<LineChannel> spawn_process(const std::vector<std::string>& argv);

/// Channel over a TCP connection.
std::unique_ptr<LineChannel> connect_tcp(const std::string& host, std::uint16_t port);

/// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command_line(std::string_view command);

/// Simulator reached through the wire protocol.
class ExternalSimulator final : public Simulator {
public:
    ExternalSimulator(std::unique_ptr<LineChannel> channel, ExternalOptions options = {});
    ~ExternalSimulator() override;

    ExternalSimulator(const ExternalSimulator&) = delete;
    ExternalSimulator& operator=(const ExternalSimulator&) = delete;

    void reset(std::uint64_t seed, const ParamAssignment& params) override;
    void next() override;
    double eval(std::string_view obs) override;
    std::uint64_t current_step() const override { return step_; }
    bool alive() const override { return alive_; }
    SimulatorKind kind() const override { return SimulatorKind::external; }

    /// Sends shutdown and closes the channel. Idempotent.
    void shutdown() noexcept;

private:
    protocol::Response call(const std::string& request, std::uint64_t id);

    std::unique_ptr<LineChannel> channel_;
    ExternalOptions options_;
    std::ofstream transcript_;
    std::uint64_t next_id_ = 1;
    std::uint64_t step_ = 0;
    bool alive_ = true;
};

/// Serves `sim` over the wire protocol until shutdown or end of input.
///
/// Each request is answered before the next is read. Simulator errors become
/// ok:false responses; malformed lines get "protocol error" and are skipped.
/// Returns the number of requests handled.
std::uint64_t serve(Simulator& sim, LineChannel& channel);

/// Listening TCP socket serving each accepted connection with a fresh simulator.
class TcpListener {
public:
    /// Binds to 127.0.0.1:`port`; port 0 picks a free port.
    explicit TcpListener(std::uint16_t port, bool loopback_only = true);
    ~TcpListener();

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const noexcept { return port_; }

    /// Serves connections concurrently until `max_connections` were accepted (0 = forever),
    /// then waits for the open ones to finish.
    void run(const SimulatorFactory& factory, std::uint64_t max_connections = 0);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace smcheck
