#pragma once

#include <stdexcept>
#include <string>

namespace nwo {

// Error classes map 1:1 onto CLI exit codes (see README).
enum class ErrorClass : int {
    Input = 2,
    Validation = 3,
    Construction = 4,
    Verification = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string code, const std::string& message)
        : std::runtime_error(message), cls_(cls), code_(std::move(code)) {}

    ErrorClass error_class() const noexcept { return cls_; }
    // Stable machine-readable identifier, e.g. "ERR_RATIONAL_FORMAT".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorClass cls_;
    std::string code_;
};

inline Error input_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Input, std::move(code), msg);
}
inline Error validation_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Validation, std::move(code), msg);
}
inline Error construction_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Construction, std::move(code), msg);
}
inline Error verification_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Verification, std::move(code), msg);
}

} // namespace nwo
