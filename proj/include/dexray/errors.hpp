#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dexray {

// Root of every error thrown by the library. Subclasses carry the context a
// caller needs to report the failure (line numbers, offending ids).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyMask : public Error {
public:
    EmptyMask() : Error("mask has no nonzero cell") {}
};

class OutOfBounds : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Malformed input row. line is 1-based and counts the header.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NoContributors : public Error {
public:
    NoContributors() : Error("every record has an empty mask; mean window undefined") {}
};

class SizeMismatch : public Error {
public:
    using Error::Error;
};

class MissingClass : public Error {
public:
    using Error::Error;
};

class UnknownImage : public Error {
public:
    UnknownImage(std::size_t line, const std::string& image_id)
        : Error("line " + std::to_string(line) + ": unknown image '" + image_id + "'"),
          image_id_(image_id), line_(line) {}

    const std::string& image_id() const { return image_id_; }
    std::size_t line() const { return line_; }

private:
    std::string image_id_;
    std::size_t line_;
};

class ScoreInvariantViolation : public Error {
public:
    ScoreInvariantViolation(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class MissingTruth : public Error {
public:
    explicit MissingTruth(const std::string& image_id)
        : Error("no ground truth for image '" + image_id + "'"), image_id_(image_id) {}

    const std::string& image_id() const { return image_id_; }

private:
    std::string image_id_;
};

class DegenerateDenominator : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss() : Error("epoch loss is not finite") {}
};

}  // namespace dexray
