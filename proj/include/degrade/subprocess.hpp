#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace degrade::proc {

/// Child process with piped stdin/stdout, spawned via /bin/sh -c.
/// stderr passes through to the parent's stderr.
class Child {
public:
    Child() = default;
    ~Child();
    Child(Child&& other) noexcept;
    Child& operator=(Child&& other) noexcept;
    Child(const Child&) = delete;
    Child& operator=(const Child&) = delete;

    static Child spawn(const std::string& command,
                       const std::map<std::string, std::string>& extra_env = {});

    void write_all(std::span<const std::uint8_t> bytes);
    void write_line(const std::string& line);
    void close_stdin();

    /// Reads until EOF on the child's stdout.
    std::vector<std::uint8_t> read_all();

    /// Reads one newline-terminated line, waiting at most `timeout_seconds`
    /// (<= 0 means wait forever). nullopt means EOF before any byte of a line.
    std::optional<std::string> read_line(double timeout_seconds);

    /// Waits for exit; returns the exit status (or 128+signal).
    int wait();

    bool running() const { return pid_ > 0; }

private:
    int pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    std::string buffer_;  // bytes read past the last returned line
};

}  // namespace degrade::proc
