#pragma once

#include <stdexcept>
#include <string>

namespace abflux {

// Root of every library error. Validation problems derive from InputError,
// numerical breakdowns from NumericalError; the CLI maps them to exit 2 / 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

#define ABFLUX_ERROR(Name, Base)                                   \
    struct Name : Base {                                           \
        explicit Name(const std::string& what) : Base(what) {}     \
    };

ABFLUX_ERROR(DomainError, InputError)
ABFLUX_ERROR(UsageError, InputError)
ABFLUX_ERROR(ConfigError, InputError)
ABFLUX_ERROR(IntegerFluxError, InputError)
ABFLUX_ERROR(NearIntegerOrderError, InputError)
ABFLUX_ERROR(NotOnCutError, InputError)
ABFLUX_ERROR(AtPoleError, InputError)
ABFLUX_ERROR(OnCutError, InputError)
ABFLUX_ERROR(PoleOnLoopError, InputError)
ABFLUX_ERROR(DiagonalError, InputError)
ABFLUX_ERROR(GeometryError, InputError)
ABFLUX_ERROR(ResolutionError, InputError)
ABFLUX_ERROR(DegenerateDataError, InputError)
ABFLUX_ERROR(WindowError, InputError)
ABFLUX_ERROR(CFLError, InputError)
ABFLUX_ERROR(HorizonError, InputError)
ABFLUX_ERROR(GaugeMismatchError, InputError)

ABFLUX_ERROR(ConvergenceError, NumericalError)
ABFLUX_ERROR(NonConvergenceError, NumericalError)
ABFLUX_ERROR(PathConstructionError, NumericalError)
ABFLUX_ERROR(TruncationError, NumericalError)
ABFLUX_ERROR(QuadratureError, NumericalError)

#undef ABFLUX_ERROR

}  // namespace abflux
