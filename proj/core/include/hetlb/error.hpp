#pragma once

#include <stdexcept>
#include <string>

namespace hetlb {

/// Invalid configuration or an argument outside the documented domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// No integer-supported arrival law matches the requested moments.
class InfeasibleMoments : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Permutation enumeration requested beyond the supported server count.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// A queue left the representable (or configured) range; the run is unstable.
class QueueOverflow : public std::overflow_error {
public:
    QueueOverflow(const std::string& what, std::size_t server)
        : std::overflow_error(what), server_(server) {}
    std::size_t server() const noexcept { return server_; }

private:
    std::size_t server_;
};

/// A check was asked for under conditions where its hypothesis does not hold.
class PreconditionFailed : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace hetlb
