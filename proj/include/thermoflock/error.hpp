#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace thermoflock {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: shapes, asymmetric matrices, bad scenario fields.
class InputError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A temperature at or below the positivity floor was read.
class DegenerateStateError : public Error {
 public:
  DegenerateStateError(std::size_t particle, double temperature)
      : Error("degenerate temperature T_" + std::to_string(particle + 1) + " = " +
              std::to_string(temperature)),
        particle_(particle),
        temperature_(temperature) {}

  std::size_t particle() const noexcept { return particle_; }
  double temperature() const noexcept { return temperature_; }

 private:
  std::size_t particle_;
  double temperature_;
};

/// Failure inside a time step. `stage` is 1-based within the scheme's tableau;
/// 0 means the state at the end of the step.
class IntegrationError : public Error {
 public:
  IntegrationError(std::size_t particle, int stage, double temperature,
                   std::optional<double> time = std::nullopt)
      : Error(compose(particle, stage, temperature, time)),
        particle_(particle),
        stage_(stage),
        temperature_(temperature),
        time_(time) {}

  std::size_t particle() const noexcept { return particle_; }
  int stage() const noexcept { return stage_; }
  double temperature() const noexcept { return temperature_; }
  std::optional<double> time() const noexcept { return time_; }

  IntegrationError at_time(double t) const {
    return IntegrationError(particle_, stage_, temperature_, t);
  }

 private:
  static std::string compose(std::size_t particle, int stage, double temperature,
                             std::optional<double> time) {
    std::string msg = "temperature of particle " + std::to_string(particle + 1) +
                      " fell to " + std::to_string(temperature) + " in stage " +
                      std::to_string(stage);
    if (time) msg += " of the step starting at t = " + std::to_string(*time);
    return msg;
  }

  std::size_t particle_;
  int stage_;
  double temperature_;
  std::optional<double> time_;
};

}  // namespace thermoflock
