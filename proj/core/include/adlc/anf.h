#ifndef ADLC_ANF_H_
#define ADLC_ANF_H_

#include <stdexcept>

#include "adlc/expr.h"

namespace adlc {

class NotArithmetic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Administrative normal form for the arithmetic fragment: every + and *
// takes variables or constants, and every intermediate result is bound by a
// let. Operands are normalized left to right, so evaluation performs the
// same float operations in the same order as the input.
// Throws NotArithmetic on any other form.
ExprPtr anf(const ExprPtr& e);

// True if `e` is a let chain whose right-hand sides are atoms or +/* of
// atoms, ending in an atom.
bool is_anf(const Expr& e);

}  // namespace adlc

#endif  // ADLC_ANF_H_
