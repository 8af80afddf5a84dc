#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace ltlp {

enum class ErrorKind { validation, io, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error validation_error(const std::string& what) { return {ErrorKind::validation, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::numerical, what}; }

// Non-fatal diagnostics (e.g. a clamped rank). The default handler writes to stderr.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace ltlp
