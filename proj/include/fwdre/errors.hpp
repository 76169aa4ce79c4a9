#pragma once

#include <stdexcept>
#include <string>

namespace fwdre {

// Base for every error raised by the library. The kind() tag is stable and
// used by the CLI in its machine-readable error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define FWDRE_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    }

// Divergent exponential moment or other out-of-domain evaluation.
FWDRE_DEFINE_ERROR(DomainError);
// Argument outside its admissible interval (e.g. protection level not in [0,1]).
FWDRE_DEFINE_ERROR(RangeError);
// Correlation triple whose matrix is not positive semidefinite.
FWDRE_DEFINE_ERROR(NotPSD);
FWDRE_DEFINE_ERROR(ConcavityViolation);
// Root-finder bracket without a sign change.
FWDRE_DEFINE_ERROR(NoBracket);
// A formula divides by a correlation that is 0 (or 1 - rho^2 that is 0).
FWDRE_DEFINE_ERROR(DegenerateCorrelation);
// Riccati explosion in the backward ODE system.
FWDRE_DEFINE_ERROR(BlowUp);
FWDRE_DEFINE_ERROR(AssumptionViolation);
// Realized intensity above the per-step thinning bound.
FWDRE_DEFINE_ERROR(ThinningBoundExceeded);
FWDRE_DEFINE_ERROR(ConfigError);
FWDRE_DEFINE_ERROR(UnknownExperiment);

#undef FWDRE_DEFINE_ERROR

}  // namespace fwdre
