#pragma once

#include <stdexcept>
#include <string>

namespace formweave {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Raised while reading a model document. `line()` is 0 when the position is
/// not known (e.g. a failure detected after the tree was built).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message, int line = 0, std::string path = {});

    int line() const noexcept { return line_; }
    const std::string& path() const noexcept { return path_; }

private:
    int line_;
    std::string path_;
};

} // namespace formweave
