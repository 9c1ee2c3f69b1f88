#pragma once

#include <stdexcept>
#include <string>

namespace mctsdrive {

// Query outside the domain of a geometric object (arc length past the end, etc).
class OutOfBoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Cartesian point projects onto several distinct stations of a reference line.
class AmbiguityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (infeasible action, expanding past depth).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Scenario configuration rejected. `path()` names the offending field, e.g. "road.lane_width".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mctsdrive
