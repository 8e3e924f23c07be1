#ifndef WAVEBC_ERRORS_HPP
#define WAVEBC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wavebc {

/// Point lies outside the closed domain.
struct OutOfDomainError : std::domain_error {
    explicit OutOfDomainError(const std::string& what) : std::domain_error(what) {}
};

/// Semi-geodesic coordinates requested on or beyond the cut locus.
struct CutLocusError : std::domain_error {
    explicit CutLocusError(const std::string& what) : std::domain_error(what) {}
};

/// Mismatched grid/field/operator dimensions.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Lag or threshold not aligned with the control grid.
struct AlignmentError : std::invalid_argument {
    explicit AlignmentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid argument value (out-of-range threshold, bad count, ...).
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Solver or run configuration violates a hard precondition (CFL, causality margin).
struct ConfigurationError : std::runtime_error {
    explicit ConfigurationError(const std::string& what) : std::runtime_error(what) {}
};

/// Config file rejected; carries the offending line when known.
struct ConfigParseError : std::runtime_error {
    ConfigParseError(const std::string& what, int line_no)
        : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    int line;
};

/// Connecting operator fails the positivity tolerance.  Invalid inverse data.
struct NotPsdError : std::runtime_error {
    explicit NotPsdError(const std::string& what) : std::runtime_error(what) {}
};

/// No interior node survives the reliability margins.
struct DegenerateConfigurationError : std::runtime_error {
    explicit DegenerateConfigurationError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset file rejected (magic, version, checksum, or manifest mismatch).
struct DatasetError : std::runtime_error {
    explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wavebc

#endif
