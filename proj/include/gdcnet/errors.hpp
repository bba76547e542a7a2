#pragma once

#include <stdexcept>
#include <string>

namespace gdcnet {

// Exit-code families used by the CLI:
//   1 usage/config, 2 data integrity, 3 numeric failure, 4 external service.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transport: connection-level failure, retriable.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Service: non-2xx response from the caption service.
struct ServiceError : std::runtime_error {
    int status;
    std::string body;
    ServiceError(int status_, std::string body_)
        : std::runtime_error("caption service returned status " + std::to_string(status_)),
          status(status_), body(std::move(body_)) {}
};

// Protocol: 2xx response that violates the caption contract.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gdcnet
