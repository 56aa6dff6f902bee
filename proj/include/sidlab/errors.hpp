#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace sidlab {

/// Short general-format rendering of a number for error messages.
inline std::string fmt_num(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

/// Trace (pairing with the identity) vanishes, so the state cannot be normalized.
class DegenerateStateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state kernel violates Hermiticity or positivity beyond tolerance.
class InvalidStateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A grid cannot resolve the requested operation.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input does not satisfy a numerically verified precondition.
class PreconditionError : public std::runtime_error {
public:
    PreconditionError(const std::string& what, double measured)
        : std::runtime_error(what), measured_(measured) {}
    double measured() const noexcept { return measured_; }

private:
    double measured_;
};

class UnsupportedModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyLevelSetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Energy drift of a trajectory exceeded the integrator contract.
class IntegratorError : public std::runtime_error {
public:
    IntegratorError(const std::string& what, double drift)
        : std::runtime_error(what), drift_(drift) {}
    double drift() const noexcept { return drift_; }

private:
    double drift_;
};

class OutOfDomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error raised by a pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace sidlab
