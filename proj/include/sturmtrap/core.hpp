// Common scalar types, error types and branch conventions shared by all
// sturmtrap modules.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sturmtrap {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested adiabatic state does not exist at the given time.
class NoBoundState : public Error {
 public:
  using Error::Error;
};

/// Root continuation of a Sturmian eigenvalue lost its branch.
class ContinuationFailure : public Error {
 public:
  ContinuationFailure(const std::string& what, cplx last_good_omega)
      : Error(what), last_good_omega_(last_good_omega) {}
  cplx last_good_omega() const noexcept { return last_good_omega_; }

 private:
  cplx last_good_omega_;
};

/// The adaptive integrator could not make progress.
class StiffnessFailure : public Error {
 public:
  StiffnessFailure(const std::string& what, cplx omega) : Error(what), omega_(omega) {}
  cplx omega() const noexcept { return omega_; }

 private:
  cplx omega_;
};

/// Incoming/outgoing WKB waves are numerically collinear over the fit window.
class FitDegenerate : public Error {
 public:
  using Error::Error;
};

/// More coupled channels were requested than the channel set provides.
class ChannelBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a special function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Doubling the TDSE grid changed the result by more than the allowed amount.
class GridUnderResolved : public Error {
 public:
  GridUnderResolved(const std::string& what, double change) : Error(what), change_(change) {}
  double change() const noexcept { return change_; }

 private:
  double change_;
};

/// Linear threshold-pole model did not fit within the residual bound.
class FitWindowTooWide : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration; `path()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Argument of ω on the physical sheet: the cut runs along the positive real
/// axis and real ω > 0 is approached from above, so arg ω ∈ [0, 2π).
inline double sheet_arg(cplx omega) {
  double a = std::arg(omega);
  if (a < 0.0) a += 2.0 * pi;
  // -0.0 imaginary parts on the positive axis still belong to the upper lip.
  if (omega.imag() == 0.0 && omega.real() > 0.0) a = 0.0;
  return a;
}

/// √ω on the physical sheet (cut along ω > 0, upper lip).
inline cplx sheet_sqrt(cplx omega) {
  return std::polar(std::sqrt(std::abs(omega)), 0.5 * sheet_arg(omega));
}

/// Outgoing/decaying external momentum k(ω) = √(2μω) on the physical sheet.
inline cplx external_momentum(cplx omega, double mass = 1.0) {
  return std::sqrt(2.0 * mass) * sheet_sqrt(omega);
}

/// sin(z)/z, entire.
inline cplx sinc(cplx z) {
  if (std::abs(z) < 1e-4) {
    const cplx z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sin(z) / z;
}

}  // namespace sturmtrap
