#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tmsnet/core/types.hpp"

namespace tmsnet::core {

/// Ordered tensor-product structure. The first factor is the most significant
/// digit of the composite basis index (kron(A, B) ordering).
class HilbertSpec {
 public:
  struct Factor {
    std::string label;
    int dim = 1;
    bool operator==(const Factor&) const = default;
  };

  HilbertSpec() = default;
  explicit HilbertSpec(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const { return factors_; }
  Index dim() const { return dim_; }
  std::size_t size() const { return factors_.size(); }

  /// Position of a factor; throws ValidationError for unknown labels.
  std::size_t position(std::string_view label) const;
  bool contains(std::string_view label) const;
  int factor_dim(std::string_view label) const;

  /// Split a composite basis index into per-factor digits and back.
  std::vector<int> digits(Index composite) const;
  Index compose(const std::vector<int>& digits) const;

  /// Subspace made of the listed factors, kept in this space's order.
  HilbertSpec subspace(const std::vector<std::string>& keep) const;

  bool operator==(const HilbertSpec& other) const { return factors_ == other.factors_; }

 private:
  std::vector<Factor> factors_;
  Index dim_ = 1;
};

}  // namespace tmsnet::core
