#pragma once

#include <stdexcept>
#include <string>

namespace capsim {

// Fixed-point iteration failed to reach its tolerance within the cap.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, int iterations,
                    double last_increment)
      : std::runtime_error(what),
        iterations(iterations),
        last_increment(last_increment) {}
  int iterations;
  double last_increment;
};

// A simulated population crossed the configured cap.
class population_overflow : public std::runtime_error {
 public:
  explicit population_overflow(const std::string& what)
      : std::runtime_error(what) {}
};

// Bad configuration input; carries the offending key and line when known.
class config_error : public std::runtime_error {
 public:
  config_error(const std::string& what, std::string key = {}, int line = 0)
      : std::runtime_error(what), key(std::move(key)), line(line) {}
  std::string key;
  int line;
};

}  // namespace capsim
