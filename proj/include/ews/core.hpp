#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ews {

inline constexpr const char* kVersion = "0.1.0";

/// Opaque per-run destination handle, assigned in first-seen order.
using DestId = std::uint32_t;

/// One captured packet, normalized to trace-relative time.
struct PacketRecord {
    double t = 0.0;           // seconds since first frame, microsecond resolution
    DestId dest = 0;
    std::uint16_t size = 0;   // original on-wire frame length, bytes

    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Snap a timestamp to the microsecond grid.
inline double quantize_us(double t) {
    return std::round(t * 1e6) / 1e6;
}

// ---------------------------------------------------------------------------
// Error types. Fatal conditions throw; per-sample indicator failures are
// carried as null-with-reason values instead (see Maybe below).

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnreadableFileError : Error { using Error::Error; };

struct SchemaError : Error {
    std::size_t row = 0;
    SchemaError(const std::string& msg, std::size_t r) : Error(msg), row(r) {}
};

struct NonMonotoneTimeError : Error {
    std::size_t row = 0;
    NonMonotoneTimeError(const std::string& msg, std::size_t r) : Error(msg), row(r) {}
};

struct BadConfigError : Error { using Error::Error; };
struct BadSpecError : Error { using Error::Error; };
struct TooManyDestinationsError : Error { using Error::Error; };

// ---------------------------------------------------------------------------

/// Why an indicator value is absent. Detectors must see the reason,
/// so absence is a first-class value rather than a NaN or a dropped sample.
enum class NullReason {
    none,
    too_short,
    sigma_zero,
    zero_mean,
    degenerate_matrix,
    ill_conditioned,
    empty_window,
    too_few_valid,
};

inline const char* to_string(NullReason r) {
    switch (r) {
        case NullReason::none: return "none";
        case NullReason::too_short: return "TooShort";
        case NullReason::sigma_zero: return "SigmaZero";
        case NullReason::zero_mean: return "ZeroMean";
        case NullReason::degenerate_matrix: return "DegenerateMatrix";
        case NullReason::ill_conditioned: return "IllConditioned";
        case NullReason::empty_window: return "EmptyWindow";
        case NullReason::too_few_valid: return "TooFewValid";
    }
    return "?";
}

/// A value or a reason why there is none.
template <typename T>
struct Maybe {
    std::optional<T> value;
    NullReason reason = NullReason::none;

    static Maybe ok(T v) { return {std::move(v), NullReason::none}; }
    static Maybe null(NullReason r) { return {std::nullopt, r}; }

    bool has_value() const { return value.has_value(); }
    const T& operator*() const { return *value; }
};

using IndicatorValue = Maybe<double>;

}  // namespace ews
