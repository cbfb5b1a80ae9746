#pragma once

#include <stdexcept>
#include <string>

namespace coherence {

/// Malformed input: bad probabilities, wrong arity, unknown names, bad config.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Conditioning on a state that every latent assigns zero likelihood.
class DegenerateConditioning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The d-policy space (or latent space) is larger than the enumeration cap.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coherence
