#ifndef ADLC_FORWARD_H_
#define ADLC_FORWARD_H_

#include <stdexcept>
#include <string>

#include "adlc/expr.h"
#include "adlc/runtime.h"

namespace adlc {

class TransformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Symbolic derivative of an ANF let chain with respect to the free variable
// `wrt`. Each `let y = e1` becomes `let y = e1` followed by
// `let y' = d(e1)`; the chain ends in the tangent of its final atom.
// Rules: d c = 0, d wrt = 1, d y = y', sum and product rules.
// Throws TransformError if `e` is not in ANF or binds `wrt`.
ExprPtr symbolic_diff(const ExprPtr& e, const std::string& wrt);

// Forward-mode transformation. Reals become (primal, tangent) pairs:
// constants pair with 0, + and * compute both components, every other form
// maps to itself. `>` compares primals. Operand pairs are bound with a let
// only when not already atomic. Throws TransformError on shift/reset.
ExprPtr fwd_transform(const ExprPtr& e);

// (lam x (let y (app D[f] (pair x 1.0)) (snd y)))
ExprPtr forward_wrapper(const ExprPtr& f);

// Runs forward_wrapper(f) at x0. `f` must be a prepared one-argument lambda.
double grad_forward(const ExprPtr& f, double x0);

// Derivative of order 1 or 2 by (nested) tagged dual numbers.
double grad_forward_tagged(const std::function<TaggedNum(TaggedNum)>& f, double x0,
                           int order);

}  // namespace adlc

#endif  // ADLC_FORWARD_H_
