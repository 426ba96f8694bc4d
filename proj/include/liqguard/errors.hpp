#pragma once

#include <stdexcept>
#include <string>

namespace liqguard {

enum class ErrorKind {
    domain,       // argument outside its mathematical domain
    data,         // bad or missing input data (prices, configs, files)
    time_travel,  // clock moved backwards
    protocol,     // operation violates protocol rules
    fit,          // model fitting failure
    numeric,      // numerical breakdown (overflow, empty risk set)
    config,       // invalid configuration
    pipeline,     // missing upstream stage artifact
    io,           // file system failure
    input,        // malformed in-memory input (NaN features, short series)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

}  // namespace liqguard
