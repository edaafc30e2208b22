#pragma once

#include <stdexcept>
#include <string>

namespace qkd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A pool cannot supply the requested number of unconsumed bits. Callers
/// must block, retry later, or degrade; pad bits are never reused.
struct KeyExhaustedError : Error {
  using Error::Error;
};

/// Too few bits to produce a meaningful statistic (QBER sampling,
/// randomness tests).
struct InsufficientDataError : Error {
  using Error::Error;
};

/// n * value == 0 in a fluctuation bound; the statistic carries no
/// information at this block size.
struct DegenerateStatisticsError : Error {
  using Error::Error;
};

/// A decoy bound came out non-positive; no secure rate can be claimed.
struct BoundUnavailableError : Error {
  using Error::Error;
};

/// Error correction refused the block (QBER estimate out of range,
/// verification tag mismatch).
struct BlockAbortError : Error {
  using Error::Error;
};

struct FrameError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace qkd
