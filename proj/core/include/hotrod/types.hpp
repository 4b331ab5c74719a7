#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hotrod {

// Error taxonomy mirrored by the CLI exit codes: input -> 2, config -> 3,
// numeric/internal -> 1.
enum class ErrorKind { input, config, numeric, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& msg) { throw Error(ErrorKind::input, msg); }
[[noreturn]] inline void fail_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }

// Seconds since epoch, UTC. Minute alignment always floors.
using Timestamp = std::int64_t;

constexpr Timestamp minute_floor(Timestamp t) {
    return (t >= 0 ? t / 60 : (t - 59) / 60) * 60;
}

constexpr double kDefaultSentinel = -10.0;

}  // namespace hotrod
