#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lgtraj
{
//---------------------------------------------------------------------------//
/*!
 * Base of every error thrown by the library.
 *
 * Each error carries the name of the module that raised it so that the
 * command-line front end can report a module-identified cause.
 */
class Error : public std::runtime_error
{
  public:
    Error(std::string module, const std::string& what)
        : std::runtime_error("[" + module + "] " + what)
        , module_(std::move(module))
    {
    }

    const std::string& module() const noexcept { return module_; }

  private:
    std::string module_;
};

//! Invalid user input: non-positive scales, mismatched cutoffs, bad config.
class ValidationError : public Error
{
  public:
    using Error::Error;
};

//! Failure of a numerical procedure on otherwise valid input.
class NumericalError : public Error
{
  public:
    using Error::Error;
};

//! Requested amplitude does not fit in the Fock cutoff.
class TruncationError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

//! Zero-norm or non-finite state.
class InvalidStateError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

//! Focal singularity of the disentangled propagator or CL coefficients.
class SingularityError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

//! Matrix elements overflowed even in log space.
class NumericRangeError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

//! Non-monotone survival: the propagator violated its own contract.
class ConsistencyError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

//! Jump annihilated the state at the truncation boundary.
class DegenerateJumpError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

//! Every trajectory of an ensemble failed.
class EnsembleFailure : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

} // namespace lgtraj
