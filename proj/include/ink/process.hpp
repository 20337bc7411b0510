#pragma once

// Line-oriented child process over stdin/stdout pipes. stderr is inherited.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "ink/error.hpp"

extern char** environ;

namespace ink {

class ChildProcess {
public:
    explicit ChildProcess(std::vector<std::string> argv) : argv_(std::move(argv)) {
        if (argv_.empty()) throw ConfigError("empty command line for child process");
        start();
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() { stop(); }

    const std::vector<std::string>& argv() const { return argv_; }

    // Returns false if the pipe is closed.
    bool write_line(const std::string& line) {
        std::string buf = line;
        buf.push_back('\n');
        std::size_t off = 0;
        while (off < buf.size()) {
            ssize_t n = ::write(in_fd_, buf.data() + off, buf.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                if (errno == EAGAIN) {
                    pollfd p{in_fd_, POLLOUT, 0};
                    ::poll(&p, 1, 1000);
                    continue;
                }
                return false;
            }
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    bool writable() const {
        pollfd p{in_fd_, POLLOUT, 0};
        return ::poll(&p, 1, 0) > 0 && (p.revents & POLLOUT);
    }

    // Next complete line, or nullopt on timeout / EOF. `eof()` tells which.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
        auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (eof_) return std::nullopt;
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return std::nullopt;
            pollfd p{out_fd_, POLLIN, 0};
            int r = ::poll(&p, 1, static_cast<int>(left.count()));
            if (r < 0 && errno != EINTR) return std::nullopt;
            if (r <= 0) continue;
            char chunk[65536];
            ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
            if (n > 0) buf_.append(chunk, static_cast<std::size_t>(n));
            else if (n == 0 || (errno != EINTR && errno != EAGAIN)) eof_ = true;
        }
    }

    bool eof() const { return eof_; }

    void restart() {
        stop();
        start();
    }

private:
    std::vector<std::string> argv_;
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buf_;
    bool eof_ = false;

    void start() {
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) throw ConfigError("pipe() failed");
        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_adddup2(&fa, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&fa, from_child[1], STDOUT_FILENO);
        posix_spawn_file_actions_addclose(&fa, to_child[1]);
        posix_spawn_file_actions_addclose(&fa, from_child[0]);
        std::vector<char*> args;
        for (auto& a : argv_) args.push_back(a.data());
        args.push_back(nullptr);
        int rc = ::posix_spawnp(&pid_, args[0], &fa, nullptr, args.data(), environ);
        posix_spawn_file_actions_destroy(&fa);
        ::close(to_child[0]);
        ::close(from_child[1]);
        if (rc != 0) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            pid_ = -1;
            throw ConfigError("cannot start '" + argv_[0] + "': " + std::strerror(rc));
        }
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        ::fcntl(in_fd_, F_SETFD, FD_CLOEXEC);
        ::fcntl(out_fd_, F_SETFD, FD_CLOEXEC);
        ::signal(SIGPIPE, SIG_IGN);
        buf_.clear();
        eof_ = false;
    }

    void stop() {
        if (in_fd_ >= 0) ::close(in_fd_);
        if (out_fd_ >= 0) ::close(out_fd_);
        in_fd_ = out_fd_ = -1;
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) != 0) {
                    pid_ = -1;
                    return;
                }
                ::usleep(10000);
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }
};

}  // namespace ink
