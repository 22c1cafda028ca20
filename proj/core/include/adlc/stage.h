#ifndef ADLC_STAGE_H_
#define ADLC_STAGE_H_

#include <stdexcept>
#include <string>

#include "adlc/expr.h"
#include "adlc/ir.h"

namespace adlc {

class StagingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stages the reverse-mode gradient of the one-argument function `f` into
// IR. Continuations exist only at staging time: + and * emit the forward
// operation, run the rest of the staging, then emit the adjoint updates.
//   - `if` (and case on a comparison) on a dynamic guard lifts the rest of
//     the computation into a function called from both branches, or inlines
//     it when only one branch can reach it;
//   - `letrec f (lam x e) (app f init)` whose self-calls are all tail calls
//     becomes a recursive loop function that calls the continuation from
//     its exit branch;
//   - any other letrec becomes a recursive function taking an explicit
//     continuation argument.
// Accepts sugar (if, letrec, seq); ref/deref/assign/shift/reset are
// rejected. Lambdas that are not recursive are inlined.
ir::Program stage_reverse(const ExprPtr& f, const std::string& input = "in");

// Stages the gradient of x -> fold(tree) where leaves yield x and a node
// yields body(left)(right)(value). `body` is (lam l (lam r (lam v e))); the
// tree is a runtime argument of the entry function.
ir::Program stage_tree(const ExprPtr& body, const std::string& input = "in");

}  // namespace adlc

#endif  // ADLC_STAGE_H_
