#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace dirac_forge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// malformed input, shape mismatch, unparsable data; CLI exit code 2
class StructuralError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    SamplingError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// point off the constraint surface, or an input outside the domain of the operation
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NotSecondClassError : public Error {
public:
    using Error::Error;
};

class LadderError : public Error {
public:
    LadderError(const std::string& what, std::map<std::string, double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const std::map<std::string, double>& residuals() const { return residuals_; }

private:
    std::map<std::string, double> residuals_;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// an antisymmetric invertible form of odd size is requested
class ParityError : public Error {
public:
    using Error::Error;
};

class ConstructionError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace dirac_forge
