#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bobylev {

// Every failure the library reports derives from Error so callers can
// catch one type; the subclasses name the violated condition.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct IntegrabilityError : Error { using Error::Error; };
struct OutOfRangeError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct MomentDivergenceError : Error { using Error::Error; };
struct CutoffRadiusError : Error { using Error::Error; };
struct StiffnessError : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// A theorem hypothesis failed; the message names the hypothesis.
struct HypothesisError : Error {
    HypothesisError(std::string hypothesis, const std::string& detail)
        : Error(hypothesis + ": " + detail), name(std::move(hypothesis)) {}
    std::string name;
};

// Relaxation ran out of budget; carries the (τ, residual) history.
struct RelaxationError : Error {
    RelaxationError(const std::string& what, std::vector<std::pair<double, double>> h = {})
        : Error(what), history(std::move(h)) {}
    std::vector<std::pair<double, double>> history;
};

}  // namespace bobylev
