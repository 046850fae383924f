#pragma once

#include <stdexcept>
#include <string>

namespace longqa {

// Broad failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
    config,        // bad configuration, schema or input files
    transport,     // network / HTTP failures after retries
    fixture_miss,  // scripted backend has no recorded response
    pipeline,      // anything else raised while running a pipeline
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// Input bytes are not valid UTF-8 or not in the expected layout.
struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct PipelineError : Error {
    explicit PipelineError(const std::string& what) : Error(ErrorKind::pipeline, what) {}
};

int exit_code(ErrorKind kind) noexcept;

}  // namespace longqa
