#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace prodspec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Bad user input: unknown tags, out-of-range sizes, malformed config.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. Im w <= 0).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Index tuple violating an operation's precondition (e.g. inside a minor set).
class precondition_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Failure of a dense spectral routine; carries the matrix dimension.
class spectral_error : public std::runtime_error {
public:
    spectral_error(const std::string& what, long dim)
        : std::runtime_error(what + " (dimension " + std::to_string(dim) + ")"), dim_(dim) {}
    long dimension() const noexcept { return dim_; }

private:
    long dim_;
};

/// A Schur-style denominator or self-consistent root hit its guard.
class degenerate_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root selection along a path could not be made unambiguously.
class branch_error : public std::runtime_error {
public:
    branch_error(const std::string& what, std::size_t index)
        : std::runtime_error(what + " at path index " + std::to_string(index)), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Result that contradicts an exact algebraic fact (should never fire).
class internal_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require_upper_half_plane(cplx w, const char* who) {
    if (!(w.imag() > 0.0)) {
        throw domain_error(std::string(who) + ": requires Im w > 0, got Im w = " +
                           std::to_string(w.imag()));
    }
}

}  // namespace prodspec
