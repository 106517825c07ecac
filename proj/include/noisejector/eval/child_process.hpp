#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

#include <sys/types.h>

namespace noisejector::eval {

// A child process run through /bin/sh -c with line-oriented stdin/stdout and
// captured stderr. Writes and reads keep draining both output pipes, so a
// chatty child cannot deadlock the parent. SIGPIPE is ignored process-wide
// once the first child is spawned; a closed pipe surfaces as ChildExit.
class ChildProcess {
public:
    // Throws Spawn if the pipes or the fork fail.
    explicit ChildProcess(const std::string& command);
    ~ChildProcess();

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    // Appends '\n'. Throws ChildExit if the child closed its stdin, Timeout
    // if the pipe stays full for `timeout`.
    void write_line(std::string_view line, std::chrono::milliseconds timeout);

    // Next stdout line without the terminator; nullopt on timeout. Throws
    // ChildExit once stdout reaches EOF with no complete line buffered.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);

    void close_stdin();

    // Exit status (128 + signal for signalled children) once reaped.
    std::optional<int> wait_exit(std::chrono::milliseconds timeout);
    void kill();

    bool running();
    std::optional<int> exit_status() const noexcept { return exit_status_; }
    pid_t pid() const noexcept { return pid_; }
    const std::string& command() const noexcept { return command_; }
    const std::string& captured_stderr() const noexcept { return stderr_text_; }

private:
    // Waits up to `timeout_ms` for readable output and drains it; also waits
    // for stdin writability when `want_write`. Returns true if stdin is writable.
    bool pump(int timeout_ms, bool want_write);
    void drain_stdout();
    void drain_stderr();
    bool try_reap();
    [[noreturn]] void throw_exited(std::string_view context);

    std::string command_;
    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    int stderr_fd_ = -1;
    bool stdout_eof_ = false;
    std::string stdout_buffer_;
    std::string stderr_text_;
    std::string stderr_partial_;
    std::optional<int> exit_status_;
};

}  // namespace noisejector::eval
