#pragma once

#include <stdexcept>
#include <string>

namespace magus {

// Base for every engine error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- backend gateway ----

// Transport failure (connection refused, 5xx, malformed body). `transient`
// tells the retry wrapper whether another attempt makes sense.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool transient)
        : Error(what), transient_(transient) {}
    bool transient() const { return transient_; }

private:
    bool transient_;
};

// Token probabilities requested, backend cannot provide them, and no
// scoring fallback is configured.
class UnsupportedCapability : public Error {
public:
    using Error::Error;
};

// Scripted backend lookup miss; names the role and digest so a failing
// test pinpoints the missing fixture entry.
class MissingFixture : public Error {
public:
    MissingFixture(const std::string& role, const std::string& digest)
        : Error("missing fixture for role '" + role + "' digest '" + digest + "'"),
          role_(role), digest_(digest) {}
    const std::string& role() const { return role_; }
    const std::string& digest() const { return digest_; }

private:
    std::string role_;
    std::string digest_;
};

class FixtureError : public Error {  // parse error or duplicate key
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class InvalidRequest : public Error {
public:
    using Error::Error;
};

// ---- structured-output parsers ----

class ParseError : public Error {
public:
    using Error::Error;
};

class NoJsonFound : public ParseError {
public:
    NoJsonFound() : ParseError("no JSON object with the expected key found") {}
};

class EmptySelection : public ParseError {
public:
    EmptySelection() : ParseError("selected_experts array is empty or malformed") {}
};

class UnknownExpert : public ParseError {
public:
    explicit UnknownExpert(const std::string& name)
        : ParseError("selected expert '" + name + "' is not among the offered candidates"),
          name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class NoNumberFound : public ParseError {
public:
    NoNumberFound() : ParseError("no decimal literal found in scorer output") {}
};

class PlanParseError : public ParseError {
public:
    using ParseError::ParseError;
};

// ---- scoring ----

class EmptySequence : public Error {
public:
    EmptySequence() : Error("token probability list is empty") {}
};

class OutOfRange : public Error {
public:
    explicit OutOfRange(double element)
        : Error("token probability " + std::to_string(element) + " outside (0,1]"),
          element_(element) {}
    double element() const { return element_; }

private:
    double element_;
};

// ---- catalogs / search ----

class UnsupportedKind : public Error {
public:
    using Error::Error;
};

class DuplicateAction : public Error {
public:
    explicit DuplicateAction(const std::string& name)
        : Error("duplicate action name '" + name + "' in history") {}
};

// Whole-depth expansion failure inside the search loop.
class SearchError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace magus
