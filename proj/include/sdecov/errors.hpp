#pragma once

#include <stdexcept>
#include <string>

namespace sdecov {

/// Bad user input: malformed files, invalid configs, flag misuse. CLI exit 1.
struct UserError : std::runtime_error {
  explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside a pipeline (overflow, singular diffusion,
/// exhausted trial budget). CLI exit 2.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimulationOverflowError : NumericalError {
  SimulationOverflowError(int subject, int step)
      : NumericalError("simulation overflow: non-finite state for subject " +
                       std::to_string(subject) + " at step " + std::to_string(step)),
        subject(subject),
        step(step) {}
  int subject;
  int step;
};

struct SingularDiffusionError : NumericalError {
  SingularDiffusionError(int subject, int step)
      : NumericalError("singular diffusion: sigma(x)=0 for subject " +
                       std::to_string(subject) + " at step " + std::to_string(step)) {}
};

struct BudgetError : NumericalError {
  BudgetError(long trials, long accepted, double rate)
      : NumericalError("trial budget exhausted: " + std::to_string(accepted) +
                       " acceptances in " + std::to_string(trials) +
                       " trials (rate " + std::to_string(rate) + ")"),
        trials(trials),
        accepted(accepted),
        acceptance_rate(rate) {}
  long trials;
  long accepted;
  double acceptance_rate;
};

}  // namespace sdecov
