#pragma once

#include <stdexcept>
#include <string>

namespace hough6d {

/// Base class for all pipeline errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NonPositiveDepth : public Error {
public:
    explicit NonPositiveDepth(const std::string& msg = "point has non-positive depth") : Error(msg) {}
};

class EmptyFrame : public Error {
public:
    explicit EmptyFrame(const std::string& msg = "frame has no pixels") : Error(msg) {}
};

class InvalidCenterDepth : public Error {
public:
    explicit InvalidCenterDepth(const std::string& msg = "patch center has no valid depth") : Error(msg) {}
};

class TooFewFeatures : public Error {
public:
    explicit TooFewFeatures(const std::string& msg = "too few feature candidates in patch") : Error(msg) {}
};

class LevelTooDeep : public Error {
public:
    explicit LevelTooDeep(const std::string& msg = "subdivision level out of range") : Error(msg) {}
};

class ObjectOutOfView : public Error {
public:
    explicit ObjectOutOfView(const std::string& msg = "object outside camera frustum") : Error(msg) {}
};

class NoValidPatches : public Error {
public:
    explicit NoValidPatches(const std::string& msg = "no valid patches could be sampled") : Error(msg) {}
};

class TooFewSamples : public Error {
public:
    explicit TooFewSamples(const std::string& msg = "not enough samples to train a tree") : Error(msg) {}
};

class EmptyModel : public Error {
public:
    explicit EmptyModel(const std::string& msg = "object model has no vertices") : Error(msg) {}
};

class NoGroundTruth : public Error {
public:
    explicit NoGroundTruth(const std::string& msg = "no ground truth available") : Error(msg) {}
};

class IoFailure : public Error {
public:
    explicit IoFailure(const std::string& msg = "I/O failure") : Error(msg) {}
};

class LayoutMismatch : public Error {
public:
    explicit LayoutMismatch(const std::string& msg = "dataset layout mismatch") : Error(msg) {}
};

class VersionMismatch : public Error {
public:
    explicit VersionMismatch(const std::string& msg = "unsupported file version") : Error(msg) {}
};

class CorruptModel : public Error {
public:
    explicit CorruptModel(const std::string& msg = "model file is corrupt") : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg = "bad configuration") : Error(msg) {}
};

}  // namespace hough6d
