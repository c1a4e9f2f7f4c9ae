// types.hpp — shared scalar types, branch tags and error codes

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace nhscatter {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

// Analytic-continuation branch of a thermodynamic-limit quantity on the band
// curve. Less excludes the unit-circle root e^{ik} from the inside-the-circle
// residue set, Greater includes it.
enum class Branch { Greater, Less };

inline const char* to_string(Branch b) { return b == Branch::Greater ? ">" : "<"; }

// Half-line convention for quantities that are discontinuous across x = 0 in
// unidirectional baths. Auto resolves to PlusHalf for p = 0 and MinusHalf for
// q = 0; bidirectional baths are insensitive to the choice.
enum class Side { Auto, PlusHalf, MinusHalf };

enum class ErrorCode {
  InvalidBath,
  DegenerateBath,
  SingularEnergy,
  OnBandCurve,
  OnFiniteSpectrum,
  NumericalOverflow,
  AmbiguousBranch,
  VanishingGroupVelocity,
  AtPole,
  NoConvergence,
  ConvergedToBoundState,
  NotDegenerate,
  FineTunedInput,
  HermitianLimit,
  RegionMismatch,
  DimensionMismatch,
  QRStall,
  ZeroState,
  ConfigError,
  InternalCheck,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidBath: return "InvalidBath";
    case ErrorCode::DegenerateBath: return "DegenerateBath";
    case ErrorCode::SingularEnergy: return "SingularEnergy";
    case ErrorCode::OnBandCurve: return "OnBandCurve";
    case ErrorCode::OnFiniteSpectrum: return "OnFiniteSpectrum";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::AmbiguousBranch: return "AmbiguousBranch";
    case ErrorCode::VanishingGroupVelocity: return "VanishingGroupVelocity";
    case ErrorCode::AtPole: return "AtPole";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ConvergedToBoundState: return "ConvergedToBoundState";
    case ErrorCode::NotDegenerate: return "NotDegenerate";
    case ErrorCode::FineTunedInput: return "FineTunedInput";
    case ErrorCode::HermitianLimit: return "HermitianLimit";
    case ErrorCode::RegionMismatch: return "RegionMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::QRStall: return "QRStall";
    case ErrorCode::ZeroState: return "ZeroState";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InternalCheck: return "InternalCheck";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Compensated (Kahan) accumulator for complex sums with a fixed term order.
struct KahanSum {
  Complex sum{0.0, 0.0};
  Complex comp{0.0, 0.0};

  void add(Complex v) {
    const Complex y = v - comp;
    const Complex t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// Reduce a real momentum to (-pi, pi].
inline double reduce_momentum(double k) {
  double r = std::remainder(k, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

// Reduce the real part of a complex momentum to (-pi, pi].
inline Complex reduce_momentum(Complex k) {
  return Complex(reduce_momentum(k.real()), k.imag());
}

}  // namespace nhscatter
