#include "degrade/subprocess.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "degrade/error.hpp"

namespace degrade::proc {

namespace {
void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}
}  // namespace

Child::~Child() {
    close_fd(stdin_fd_);
    close_fd(stdout_fd_);
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

Child::Child(Child&& other) noexcept {
    *this = std::move(other);
}

Child& Child::operator=(Child&& other) noexcept {
    if (this != &other) {
        this->~Child();
        pid_ = other.pid_;
        stdin_fd_ = other.stdin_fd_;
        stdout_fd_ = other.stdout_fd_;
        buffer_ = std::move(other.buffer_);
        other.pid_ = -1;
        other.stdin_fd_ = -1;
        other.stdout_fd_ = -1;
    }
    return *this;
}

Child Child::spawn(const std::string& command, const std::map<std::string, std::string>& extra_env) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) {
        raise(Errc::codec_spawn_failure, "pipe: " + std::string(std::strerror(errno)));
    }
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        raise(Errc::codec_spawn_failure, "pipe: " + std::string(std::strerror(errno)));
    }

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        raise(Errc::codec_spawn_failure, "fork: " + std::string(std::strerror(errno)));
    }

    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        for (const auto& [key, value] : extra_env) {
            ::setenv(key.c_str(), value.c_str(), 1);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    ::close(to_child[0]);
    ::close(from_child[1]);

    Child child;
    child.pid_ = pid;
    child.stdin_fd_ = to_child[1];
    child.stdout_fd_ = from_child[0];
    return child;
}

void Child::write_all(std::span<const std::uint8_t> bytes) {
    // The child may exit without draining its input; surface that as a
    // protocol problem instead of dying on SIGPIPE.
    struct sigaction ignore{};
    struct sigaction saved{};
    ignore.sa_handler = SIG_IGN;
    ::sigaction(SIGPIPE, &ignore, &saved);

    std::size_t written = 0;
    bool broken = false;
    while (written < bytes.size()) {
        ssize_t n = ::write(stdin_fd_, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            broken = true;
            break;
        }
        written += static_cast<std::size_t>(n);
    }
    ::sigaction(SIGPIPE, &saved, nullptr);
    if (broken) {
        raise(Errc::protocol_violation, "child closed its input stream early");
    }
}

void Child::write_line(const std::string& line) {
    std::string payload = line + "\n";
    write_all(std::span(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

void Child::close_stdin() {
    close_fd(stdin_fd_);
}

std::vector<std::uint8_t> Child::read_all() {
    std::vector<std::uint8_t> out(buffer_.begin(), buffer_.end());
    buffer_.clear();
    std::uint8_t chunk[65536];
    while (true) {
        ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            raise(Errc::io_error, "read from child: " + std::string(std::strerror(errno)));
        }
        if (n == 0) break;
        out.insert(out.end(), chunk, chunk + n);
    }
    return out;
}

std::optional<std::string> Child::read_line(double timeout_seconds) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(timeout_seconds));
    while (true) {
        auto pos = buffer_.find('\n');
        if (pos != std::string::npos) {
            std::string line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            return line;
        }

        int wait_ms = -1;
        if (timeout_seconds > 0) {
            auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - clock::now());
            if (remaining.count() <= 0) {
                raise(Errc::detector_timeout, "no response line within timeout");
            }
            wait_ms = static_cast<int>(remaining.count());
        }

        pollfd pfd{stdout_fd_, POLLIN, 0};
        int rc = ::poll(&pfd, 1, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            raise(Errc::io_error, "poll: " + std::string(std::strerror(errno)));
        }
        if (rc == 0) {
            raise(Errc::detector_timeout, "no response line within timeout");
        }

        char chunk[4096];
        ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            raise(Errc::io_error, "read from child: " + std::string(std::strerror(errno)));
        }
        if (n == 0) {
            if (buffer_.empty()) return std::nullopt;
            std::string line = std::move(buffer_);
            buffer_.clear();
            return line;
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

int Child::wait() {
    close_fd(stdin_fd_);
    close_fd(stdout_fd_);
    if (pid_ <= 0) return -1;
    int status = 0;
    pid_t rc;
    do {
        rc = ::waitpid(pid_, &status, 0);
    } while (rc < 0 && errno == EINTR);
    pid_ = -1;
    if (rc < 0) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace degrade::proc
