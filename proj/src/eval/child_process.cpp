#include "noisejector/eval/child_process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"

namespace noisejector::eval {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

std::string tail(const std::string& text, std::size_t max_chars = 2000) {
    return text.size() <= max_chars ? text : "..." + text.substr(text.size() - max_chars);
}

}  // namespace

ChildProcess::ChildProcess(const std::string& command) : command_(command) {
    ignore_sigpipe_once();
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail(ErrorCode::Spawn, fmt::format("pipe: {}", std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        fail(ErrorCode::Spawn, fmt::format("pipe: {}", std::strerror(errno)));
    }
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        fail(ErrorCode::Spawn, fmt::format("pipe: {}", std::strerror(errno)));
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        fail(ErrorCode::Spawn, fmt::format("fork: {}", std::strerror(errno)));
    }
    if (pid == 0) {
        // async-signal-safe calls only until exec
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::signal(SIGPIPE, SIG_DFL);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    pid_ = pid;
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    stdin_fd_ = in_pipe[1];
    stdout_fd_ = out_pipe[0];
    stderr_fd_ = err_pipe[0];
    set_nonblocking(stdin_fd_);
    set_nonblocking(stdout_fd_);
    set_nonblocking(stderr_fd_);
    spdlog::debug("spawned evaluator pid {}: {}", pid_, command_);
}

ChildProcess::~ChildProcess() {
    close_fd(stdin_fd_);
    if (running()) {
        // give a child that saw EOF a moment to exit on its own
        if (!wait_exit(std::chrono::milliseconds(200))) kill();
    }
    close_fd(stdout_fd_);
    close_fd(stderr_fd_);
}

void ChildProcess::drain_stdout() {
    char buf[65536];
    while (stdout_fd_ >= 0) {
        const ssize_t n = ::read(stdout_fd_, buf, sizeof(buf));
        if (n > 0) {
            stdout_buffer_.append(buf, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) {
            stdout_eof_ = true;
            close_fd(stdout_fd_);
        } else if (errno == EINTR) {
            continue;
        } else if (errno != EAGAIN && errno != EWOULDBLOCK) {
            stdout_eof_ = true;
            close_fd(stdout_fd_);
        }
        return;
    }
}

void ChildProcess::drain_stderr() {
    char buf[8192];
    while (stderr_fd_ >= 0) {
        const ssize_t n = ::read(stderr_fd_, buf, sizeof(buf));
        if (n > 0) {
            stderr_text_.append(buf, static_cast<std::size_t>(n));
            stderr_partial_.append(buf, static_cast<std::size_t>(n));
            std::size_t pos;
            while ((pos = stderr_partial_.find('\n')) != std::string::npos) {
                spdlog::info("[evaluator {}] {}", pid_, stderr_partial_.substr(0, pos));
                stderr_partial_.erase(0, pos + 1);
            }
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) close_fd(stderr_fd_);
        return;
    }
}

bool ChildProcess::pump(int timeout_ms, bool want_write) {
    pollfd fds[3];
    nfds_t count = 0;
    int out_slot = -1, err_slot = -1, in_slot = -1;
    if (stdout_fd_ >= 0) {
        out_slot = static_cast<int>(count);
        fds[count++] = {stdout_fd_, POLLIN, 0};
    }
    if (stderr_fd_ >= 0) {
        err_slot = static_cast<int>(count);
        fds[count++] = {stderr_fd_, POLLIN, 0};
    }
    if (want_write && stdin_fd_ >= 0) {
        in_slot = static_cast<int>(count);
        fds[count++] = {stdin_fd_, POLLOUT, 0};
    }
    if (count == 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(std::min(timeout_ms, 10)));
        return false;
    }

    const int rc = ::poll(fds, count, timeout_ms);
    if (rc <= 0) return false;
    if (out_slot >= 0 && fds[out_slot].revents != 0) drain_stdout();
    if (err_slot >= 0 && fds[err_slot].revents != 0) drain_stderr();
    return in_slot >= 0 && fds[in_slot].revents != 0;
}

void ChildProcess::write_line(std::string_view line, std::chrono::milliseconds timeout) {
    if (stdin_fd_ < 0) throw_exited("write (stdin closed)");
    std::string data(line);
    data.push_back('\n');
    const auto deadline = Clock::now() + timeout;
    std::size_t offset = 0;
    while (offset < data.size()) {
        const ssize_t n = ::write(stdin_fd_, data.data() + offset, data.size() - offset);
        if (n > 0) {
            offset += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            const int left = remaining_ms(deadline);
            if (left == 0)
                fail(ErrorCode::Timeout, fmt::format("evaluator did not accept input within {} ms", timeout.count()));
            pump(left, true);
            continue;
        }
        close_fd(stdin_fd_);
        throw_exited("write");
    }
}

std::optional<std::string> ChildProcess::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
        const auto pos = stdout_buffer_.find('\n');
        if (pos != std::string::npos) {
            std::string line = stdout_buffer_.substr(0, pos);
            stdout_buffer_.erase(0, pos + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (stdout_eof_) {
            drain_stderr();
            throw_exited("read");
        }
        const int left = remaining_ms(deadline);
        if (left == 0) return std::nullopt;
        pump(left, false);
    }
}

void ChildProcess::close_stdin() { close_fd(stdin_fd_); }

bool ChildProcess::try_reap() {
    if (exit_status_) return true;
    if (pid_ <= 0) return true;
    int status = 0;
    const pid_t rc = ::waitpid(pid_, &status, WNOHANG);
    if (rc == pid_) {
        exit_status_ = decode_status(status);
        return true;
    }
    if (rc < 0 && errno == ECHILD) {
        exit_status_ = -1;
        return true;
    }
    return false;
}

bool ChildProcess::running() { return !try_reap(); }

std::optional<int> ChildProcess::wait_exit(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    while (!try_reap()) {
        const int left = remaining_ms(deadline);
        if (left == 0) return std::nullopt;
        pump(std::min(left, 10), false);
        if (stdout_fd_ < 0 && stderr_fd_ < 0) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    drain_stderr();
    return exit_status_;
}

void ChildProcess::kill() {
    if (!running()) return;
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    exit_status_ = decode_status(status);
}

void ChildProcess::throw_exited(std::string_view context) {
    const auto status = wait_exit(std::chrono::milliseconds(2000));
    const std::string code = status ? std::to_string(*status) : "unknown";
    fail(ErrorCode::ChildExit, fmt::format("evaluator process exited (status {}) during {}; stderr:\n{}", code,
                                           context, tail(stderr_text_)));
}

}  // namespace noisejector::eval
