#ifndef ADLC_REVERSE_H_
#define ADLC_REVERSE_H_

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "adlc/expr.h"

namespace adlc {

enum class ReverseVariant {
  kTargetShift,  // shift/reset in the generated program
  kMetaShift,    // shift/reset at translation time, CPS output
  kFullCps,      // translation itself in CPS, CPS output
};

const char* variant_name(ReverseVariant v);  // "target-shift", ...
std::optional<ReverseVariant> parse_variant(const std::string& s);

// Called with every term built by a tail-normalizing constructor.
using WavyHook = std::function<void(const Expr&)>;

// Tail-normalizing constructors:
//   (lam a (app k a)) -> k      when k is a variable other than a
//   (let y y1 e)      -> e[y := y1]
ExprPtr wavy_lam(const std::string& param, const ExprPtr& body);
ExprPtr wavy_let(const std::string& name, const ExprPtr& bound, const ExprPtr& body);
// Applies the two contractions at the root until neither matches.
ExprPtr normalize_tail(const ExprPtr& e);
bool is_tail_redex(const Expr& e);

// Reals become (value, adjoint cell) pairs; + and * run the rest of the
// computation through a captured continuation and accumulate adjoints on
// the way back. Inputs must be prepared and free of shift/reset
// (TransformError otherwise).
ExprPtr rev_transform_target_shift(const ExprPtr& e);
ExprPtr rev_transform_meta_shift(const ExprPtr& e, const WavyHook& hook = {});
ExprPtr rev_transform_full_cps(const ExprPtr& e, const WavyHook& hook = {});

// Differentiating wrapper of a one-argument real function: a lambda taking
// x and returning the input adjoint after seeding the output adjoint with 1.
ExprPtr reverse_wrapper(const ExprPtr& f, ReverseVariant v, const WavyHook& hook = {});
// Same, but returns (pair primal-result gradient).
ExprPtr reverse_value_wrapper(const ExprPtr& f, ReverseVariant v);

double grad_reverse(const ExprPtr& f, double x0, ReverseVariant v);
std::pair<double, double> value_and_grad_reverse(const ExprPtr& f, double x0,
                                                 ReverseVariant v);

// Second derivative: differentiates the (shift-free) meta-shift gradient
// program of `f` once more with the `outer` variant.
double grad_reverse_of_reverse(const ExprPtr& f, double x0,
                               ReverseVariant outer = ReverseVariant::kMetaShift);

}  // namespace adlc

#endif  // ADLC_REVERSE_H_
