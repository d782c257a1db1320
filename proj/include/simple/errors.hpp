#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace simple {

/// Broad failure classes. Each maps to one CLI exit code.
enum class ErrorKind {
    Config,     // invalid knobs, arguments or templates (exit 2)
    Data,       // malformed files, missing ids (exit 3)
    Numerical,  // non-finite values during training or scoring (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
            : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::Config:
                return 2;
            case ErrorKind::Data:
                return 3;
            case ErrorKind::Numerical:
                return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct SizeError : Error {
    explicit SizeError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct FormatError : Error {
    FormatError(const std::string& what, std::uint64_t offset)
            : Error(ErrorKind::Data,
                    what + " (at byte offset " + std::to_string(offset) + ")"),
              offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

struct IntegrityError : Error {
    explicit IntegrityError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct TemplateError : Error {
    TemplateError(const std::string& what, std::string placeholder)
            : Error(ErrorKind::Config, what), placeholder_(std::move(placeholder)) {}

    const std::string& placeholder() const noexcept { return placeholder_; }

private:
    std::string placeholder_;
};

/// Entail and contradict mass are both zero, so True/False is undefined.
struct DegenerateScoreError : Error {
    explicit DegenerateScoreError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Re-throws `e` with `context` prefixed, keeping its kind.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
    throw Error(e.kind(), context + ": " + e.what());
}

}  // namespace simple
