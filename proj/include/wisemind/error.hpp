#pragma once

#include <stdexcept>
#include <string>

namespace wisemind {

// Root of every error the library throws. `kind()` is a stable machine-readable
// tag used by the CLI's one-line error output and the HTTP layer.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class GraphError : public Error {
public:
    explicit GraphError(const std::string& message) : Error("graph_error", message) {}
    GraphError(std::string kind, const std::string& message) : Error(std::move(kind), message) {}
};

class ParseError : public Error {
public:
    using Error::Error;
};

class MissingTag : public ParseError {
public:
    explicit MissingTag(std::string tag)
        : ParseError("missing_tag", "missing required tag <" + tag + ">"), tag_(std::move(tag)) {}
    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

class MalformedAction : public ParseError {
public:
    explicit MalformedAction(std::string value)
        : ParseError("malformed_action", "not a diagnostic action: '" + value + "'"),
          value_(std::move(value)) {}
    const std::string& value() const noexcept { return value_; }

private:
    std::string value_;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class BackendTimeout : public BackendError {
public:
    explicit BackendTimeout(const std::string& message) : BackendError("backend_timeout", message) {}
};

class BackendRefusal : public BackendError {
public:
    explicit BackendRefusal(const std::string& message) : BackendError("backend_refusal", message) {}
};

class ExhaustedRetries : public Error {
public:
    ExhaustedRetries(std::string last_raw, const std::string& reason)
        : Error("exhausted_retries", "no parseable reply after retries: " + reason),
          last_raw_(std::move(last_raw)) {}
    const std::string& last_raw() const noexcept { return last_raw_; }

private:
    std::string last_raw_;
};

// A node was re-entered more often than the recheck budget allows.
class RecheckExhausted : public Error {
public:
    explicit RecheckExhausted(const std::string& node)
        : Error("recheck_exhausted", "recheck budget exhausted at node " + node), node_(node) {}
    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

}  // namespace wisemind
