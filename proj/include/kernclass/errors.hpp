#pragma once

#include <stdexcept>
#include <string>

namespace kernclass {

// Base class for all toolkit errors. The CLI maps subclasses to exit codes:
// input/format problems -> 2, training/runtime problems -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed **kern input. Carries a 1-based line/column position.
struct SyntaxError : Error {
    int line;
    int column;
    SyntaxError(const std::string& msg, int line_, int column_)
        : Error("line " + std::to_string(line_) + ", col " + std::to_string(column_) + ": " + msg),
          line(line_),
          column(column_) {}
};

// Valid **kern that falls outside the supported subset (e.g. spine
// manipulators we cannot resolve, or more spines than the configured cap).
struct UnsupportedFeature : Error {
    using Error::Error;
};

// A pitch below the C1 base of the note range.
struct RangeError : Error {
    using Error::Error;
};

// A note-value or pitch not present in the vocabulary at encode time.
struct UnknownValue : Error {
    using Error::Error;
};

// A parsed score with more spines than the vocabulary's P.
struct SpineOverflow : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct LabelOutOfRange : Error {
    using Error::Error;
};

// NaN or Inf where a finite value is required.
struct NonFiniteError : Error {
    using Error::Error;
};

// Training loss became non-finite.
struct DivergenceError : Error {
    using Error::Error;
};

struct TooFewScores : Error {
    using Error::Error;
};

struct UnknownComposer : Error {
    using Error::Error;
};

// Artifact file problems: bad magic, truncation, unreadable paths.
struct IoError : Error {
    using Error::Error;
};

}  // namespace kernclass
