#include "smcheck/simulator.hpp"

#include <charconv>
#include <cmath>

#include "smcheck/external.hpp"
#include "smcheck/models.hpp"

namespace smcheck {

namespace {

double parse_number(std::string_view text, std::string_view what)
{
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw ConfigError("invalid number '" + std::string(text) + "' for " + std::string(what));
    }
    return value;
}

}  // namespace

ModelLocator ModelLocator::parse(std::string_view text)
{
    ModelLocator loc;
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ConfigError("model locator must start with builtin:, exec: or connect: (got '" + std::string(text) + "')");
    }
    const std::string_view scheme = text.substr(0, colon);
    const std::string_view rest = text.substr(colon + 1);

    if (scheme == "builtin") {
        loc.kind = Kind::builtin;
        const auto q = rest.find('?');
        loc.name = std::string(rest.substr(0, q));
        if (loc.name.empty()) {
            throw ConfigError("builtin model name is empty");
        }
        if (q != std::string_view::npos) {
            std::string_view query = rest.substr(q + 1);
            while (!query.empty()) {
                const auto amp = query.find('&');
                const std::string_view pair = query.substr(0, amp);
                const auto eq = pair.find('=');
                if (eq == std::string_view::npos || eq == 0) {
                    throw ConfigError("malformed model parameter '" + std::string(pair) + "'");
                }
                const std::string key(pair.substr(0, eq));
                if (loc.params.count(key) != 0) {
                    throw ConfigError("duplicate model parameter '" + key + "'");
                }
                loc.params[key] = parse_number(pair.substr(eq + 1), key);
                if (amp == std::string_view::npos) {
                    break;
                }
                query.remove_prefix(amp + 1);
            }
        }
        const ModelSpec& spec = builtin_spec(loc.name);
        for (const auto& [key, value] : loc.params) {
            if (spec.find_param(key) == nullptr) {
                throw ConfigError("model " + loc.name + " has no parameter '" + key + "'");
            }
        }
    } else if (scheme == "exec") {
        loc.kind = Kind::exec;
        loc.command = std::string(rest);
        if (split_command_line(loc.command).empty()) {
            throw ConfigError("exec: locator needs a command");
        }
    } else if (scheme == "connect") {
        loc.kind = Kind::connect;
        const auto pc = rest.rfind(':');
        if (pc == std::string_view::npos || pc == 0) {
            throw ConfigError("connect: locator must be host:port");
        }
        loc.host = std::string(rest.substr(0, pc));
        const double port = parse_number(rest.substr(pc + 1), "port");
        if (port < 1 || port > 65535 || port != std::floor(port)) {
            throw ConfigError("port out of range: " + std::string(rest.substr(pc + 1)));
        }
        loc.port = static_cast<std::uint16_t>(port);
    } else {
        throw ConfigError("unknown model scheme '" + std::string(scheme) + "'");
    }
    return loc;
}

SimulatorFactory make_factory(const ModelLocator& locator, const ExternalOptions& options)
{
    switch (locator.kind) {
    case ModelLocator::Kind::builtin: {
        // Fail fast on bad parameters rather than inside a worker.
        (void)make_builtin(locator.name, locator.params);
        return [name = locator.name, params = locator.params]() -> std::unique_ptr<Simulator> {
            return make_builtin(name, params);
        };
    }
    case ModelLocator::Kind::exec: {
        auto argv = split_command_line(locator.command);
        return [argv, options]() -> std::unique_ptr<Simulator> {
            return std::make_unique<ExternalSimulator>(spawn_process(argv), options);
        };
    }
    case ModelLocator::Kind::connect:
        return [host = locator.host, port = locator.port, options]() -> std::unique_ptr<Simulator> {
            return std::make_unique<ExternalSimulator>(connect_tcp(host, port), options);
        };
    }
    throw ConfigError("unsupported model locator");
}

}  // namespace smcheck
