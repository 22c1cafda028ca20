#ifndef ADLC_DESUGAR_H_
#define ADLC_DESUGAR_H_

#include "adlc/expr.h"
#include "adlc/names.h"

namespace adlc {

// Rewrites if/letrec/seq into core forms:
//   if b t e          = case b y t z e
//   letrec f (lam x e1) e2
//                     = let f0 (lam f1 (lam x (let f (app f1 f1) e1)))
//                         (let f (app f0 f0) e2)
//   seq e1 e2         = let _ e1 e2
// The letrec encoding binds `f` twice, so freshen the result before
// handing it to anything that relies on unique binders.
ExprPtr desugar(const ExprPtr& e);
ExprPtr desugar(const ExprPtr& e, NameSupply& names);

// `cell += delta` as core forms: (assign cell (+ (deref cell) delta)).
ExprPtr accumulate(const ExprPtr& cell, const ExprPtr& delta);

// parse -> freshen -> desugar -> freshen, the form every evaluator and
// transformation expects.
ExprPtr prepare(const ExprPtr& e);

}  // namespace adlc

#endif  // ADLC_DESUGAR_H_
