#include "tmsnet/core/hilbert.hpp"

#include <algorithm>
#include <set>

namespace tmsnet::core {

HilbertSpec::HilbertSpec(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.dim < 1) {
      throw ValidationError("HilbertSpec: factor '" + f.label + "' has dimension < 1");
    }
    if (!seen.insert(f.label).second) {
      throw ValidationError("HilbertSpec: duplicate factor label '" + f.label + "'");
    }
    dim_ *= f.dim;
  }
}

std::size_t HilbertSpec::position(std::string_view label) const {
  auto it = std::find_if(factors_.begin(), factors_.end(),
                         [&](const Factor& f) { return f.label == label; });
  if (it == factors_.end()) {
    throw ValidationError("HilbertSpec: unknown factor label '" + std::string(label) + "'");
  }
  return static_cast<std::size_t>(it - factors_.begin());
}

bool HilbertSpec::contains(std::string_view label) const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [&](const Factor& f) { return f.label == label; });
}

int HilbertSpec::factor_dim(std::string_view label) const {
  return factors_[position(label)].dim;
}

std::vector<int> HilbertSpec::digits(Index composite) const {
  std::vector<int> out(factors_.size());
  for (std::size_t k = factors_.size(); k-- > 0;) {
    out[k] = static_cast<int>(composite % factors_[k].dim);
    composite /= factors_[k].dim;
  }
  return out;
}

Index HilbertSpec::compose(const std::vector<int>& d) const {
  Index idx = 0;
  for (std::size_t k = 0; k < factors_.size(); ++k) idx = idx * factors_[k].dim + d[k];
  return idx;
}

HilbertSpec HilbertSpec::subspace(const std::vector<std::string>& keep) const {
  for (const auto& label : keep) (void)position(label);
  std::vector<Factor> kept;
  for (const auto& f : factors_) {
    if (std::find(keep.begin(), keep.end(), f.label) != keep.end()) kept.push_back(f);
  }
  return HilbertSpec(std::move(kept));
}

}  // namespace tmsnet::core
