#pragma once

#include <stdexcept>
#include <string>

namespace landis {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LANDIS_ERROR_TYPE(Name)                                              \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    };

LANDIS_ERROR_TYPE(DimensionError)
LANDIS_ERROR_TYPE(EmptyRegionError)
LANDIS_ERROR_TYPE(SupportError)
LANDIS_ERROR_TYPE(SolverError)
LANDIS_ERROR_TYPE(ConvergenceError)
LANDIS_ERROR_TYPE(RegimeError)
LANDIS_ERROR_TYPE(DivergenceError)
LANDIS_ERROR_TYPE(DivisionGuardError)
LANDIS_ERROR_TYPE(ResolutionError)
LANDIS_ERROR_TYPE(GeometryError)
LANDIS_ERROR_TYPE(FoldingError)
LANDIS_ERROR_TYPE(AccuracyError)
LANDIS_ERROR_TYPE(NonIntegrableError)
LANDIS_ERROR_TYPE(FitError)
LANDIS_ERROR_TYPE(GenerationReject)
LANDIS_ERROR_TYPE(ConfigError)
LANDIS_ERROR_TYPE(FormatError)

#undef LANDIS_ERROR_TYPE

}  // namespace landis
