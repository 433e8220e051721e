#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skelsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed dataset, config or report file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A precondition on a parameter or input shape was violated.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// An iterative or spectral routine failed numerically.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration is inconsistent (missing sub-config, bad enum, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Verbosity comes from SKELSC_LOG (error|warn|info|debug); default warn.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("SKELSC_LOG");
        if (env == nullptr) return Level::warn;
        const std::string_view v(env);
        if (v == "error") return Level::error;
        if (v == "info") return Level::info;
        if (v == "debug") return Level::debug;
        return Level::warn;
    }();
    return level;
}

inline void write(Level level, std::string_view msg) {
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    std::clog << "[skelsc " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::error, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void debug(std::string_view msg) { write(Level::debug, msg); }

}  // namespace log

namespace detail {

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// splitmix64 finalizer; derives independent per-item seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

}  // namespace skelsc
