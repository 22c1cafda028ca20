#ifndef ADLC_NAMES_H_
#define ADLC_NAMES_H_

#include <cstdint>
#include <string>
#include <unordered_set>

#include "adlc/expr.h"

namespace adlc {

// Generates identifiers of the form `<base>_<n>` with a monotone counter,
// skipping any name reserved so far. Transformations reserve every name of
// their input before generating new ones.
class NameSupply {
 public:
  explicit NameSupply(std::uint64_t seed = 0) : counter_(seed) {}

  void reserve(const std::string& name);
  void reserve_all(const Expr& e);

  // A name not reserved and not handed out before. The tangent/adjoint
  // companion `<name>'` is reserved along with it.
  std::string fresh(const std::string& base);

  std::uint64_t counter() const { return counter_; }

 private:
  std::unordered_set<std::string> used_;
  std::uint64_t counter_;
};

// Strips a trailing `_<digits>` so repeated freshening does not grow names.
std::string base_name(const std::string& name);

// Alpha-renames every binder to a globally unique `<base>_<n>` name, never
// colliding with the free variables of `e`. Deterministic in (e, seed).
ExprPtr freshen(const ExprPtr& e, std::uint64_t seed = 0);

// True if all binders in `e` are pairwise distinct and distinct from the
// free variables.
bool satisfies_variable_convention(const Expr& e);

}  // namespace adlc

#endif  // ADLC_NAMES_H_
