#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qsdc {

/// A parameter lies outside the domain where the requested object is defined.
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Not enough samples to form an estimate (e.g. a CHSH settings pair never occurred).
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The sifted key is shorter than the message it must carry.
class KeyShortfall : public std::runtime_error {
  public:
    KeyShortfall(std::size_t requested, std::size_t achievable)
        : std::runtime_error("message needs " + std::to_string(requested) +
                             " key bits but sifting produced only " +
                             std::to_string(achievable) + " (achievable message length: " +
                             std::to_string(achievable) + " bits)"),
          requested_(requested), achievable_(achievable) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t achievable() const noexcept { return achievable_; }

  private:
    std::size_t requested_;
    std::size_t achievable_;
};

}  // namespace qsdc
