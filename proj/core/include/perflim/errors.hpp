#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perflim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input that breaks a modelling assumption. `code` is a stable identifier
// (for example "imaginary_axis_zero") suitable for reports.
class ValidationError : public Error {
public:
    ValidationError(std::string code, const std::string& what)
        : Error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what,
                              std::vector<std::string> trace = {})
        : Error(what), trace_(std::move(trace)) {}
    const std::vector<std::string>& trace() const noexcept { return trace_; }

private:
    std::vector<std::string> trace_;
};

// Raised when refinement stops without two agreeing values.
class RefinementFailure : public NumericalFailure {
public:
    RefinementFailure(const std::string& what, double previous, double last)
        : NumericalFailure(what), previous_(previous), last_(last) {}
    double previous_value() const noexcept { return previous_; }
    double last_value() const noexcept { return last_; }

private:
    double previous_;
    double last_;
};

class PoleProximityError : public Error {
public:
    using Error::Error;
};

class IllConditionedError : public NumericalFailure {
public:
    explicit IllConditionedError(const std::string& what) : NumericalFailure(what) {}
};

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class CertificateRejected : public Error {
public:
    CertificateRejected(const std::string& what, double violation, double where)
        : Error(what), violation_(violation), where_(where) {}
    double violation() const noexcept { return violation_; }
    double location() const noexcept { return where_; }

private:
    double violation_;
    double where_;
};

}  // namespace perflim
