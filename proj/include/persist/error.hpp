#pragma once

#include <stdexcept>
#include <string>

namespace persist {

enum class ErrorKind {
    invalid_input,
    out_of_range,
    invalid_model,
    invalid_spec,
    invalid_event,
    invalid_tilt,
    size_limit,
    parameter_domain,
    no_convergence,
    mismatched_parameters,
    experiment_failed,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_input: return "invalid-input";
        case ErrorKind::out_of_range: return "out-of-range";
        case ErrorKind::invalid_model: return "invalid-model";
        case ErrorKind::invalid_spec: return "invalid-spec";
        case ErrorKind::invalid_event: return "invalid-event";
        case ErrorKind::invalid_tilt: return "invalid-tilt";
        case ErrorKind::size_limit: return "size-limit";
        case ErrorKind::parameter_domain: return "parameter-domain";
        case ErrorKind::no_convergence: return "no-convergence";
        case ErrorKind::mismatched_parameters: return "mismatched-parameters";
        case ErrorKind::experiment_failed: return "experiment-failed";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

}  // namespace persist
