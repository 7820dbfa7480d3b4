#pragma once

#include <stdexcept>
#include <string>

namespace tb4 {

/// Raised when a state leaves the domain of a chart or of the potential.
/// Integrators catch this family and stop with a DomainExit.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CollisionError : public DomainError {
public:
    using DomainError::DomainError;
};

class ChartSingular : public DomainError {
public:
    using DomainError::DomainError;
};

class DegeneratePlane : public DomainError {
public:
    using DomainError::DomainError;
};

class KineticDomainError : public DomainError {
public:
    using DomainError::DomainError;
};

/// mu1 == mu2: the reduced symplectic form degenerates.
class DegenerateMomenta : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failures of the equilibrium solvers.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoRealMomenta : public SolverError {
public:
    using SolverError::SolverError;
};

class NoConvergence : public SolverError {
public:
    using SolverError::SolverError;
};

class DegenerateHessian : public SolverError {
public:
    using SolverError::SolverError;
};

}  // namespace tb4
