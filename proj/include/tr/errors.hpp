#pragma once

#include <stdexcept>
#include <string>

namespace tr {

/** Root of the library's exception hierarchy. */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Invalid arguments, shapes, or file contents: the caller asked for something
 *  malformed. CLI maps this family to exit code 2. */
class ValidationError : public Error {
public:
    using Error::Error;
};

/** A numerical precondition failed at runtime (rank loss, unresolved spectra,
 *  retries exhausted). CLI maps this family to exit code 3. */
class NumericalError : public Error {
public:
    using Error::Error;
};

/** I/O failure (missing file, bad magic, short read). CLI exit code 4. */
class IoError : public Error {
public:
    using Error::Error;
};

/** Tensor order/mode sizes do not satisfy a structural requirement. */
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/** Mode sizes are too small for the requested bond dimension. */
class DimensionTooSmallError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/** A read touched an index outside a masked view's observed set. */
class MaskViolationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/** Materializing a tensor would exceed the configured entry budget. */
class MemoryBoundError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/** A rank condition failed: a matrix that must have full rank (or an
 *  invertible block) lost rank, or the input data carries more rank than the
 *  requested bond dimension can represent. */
class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/** Probe eigenvalues could not be grouped into r clusters of size r. */
class ClusterToleranceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/** A diagonal block required to be invertible during gauge fixing is singular. */
class SingularBlockError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/** The seeded redraw budget was exhausted without an acceptable configuration. */
class RetriesExhaustedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/** No contiguous run of large-enough modes exists to start the contracted route. */
class NoValidStartError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/** No d-th-root candidate satisfied the shared-core verification equation. */
class NoRootMatchesError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace tr
