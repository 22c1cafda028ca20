#ifndef ADLC_EXPR_H_
#define ADLC_EXPR_H_

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace adlc {

// Abstract syntax of the object language. The same tree type is used for
// source programs, desugared programs, and the output of every
// transformation.
enum class Kind {
  kConst,    // real literal
  kUnit,     // ()
  kVar,
  kAdd,
  kMul,
  kGreater,  // returns inl () for true, inr () for false
  kLam,
  kApp,
  kLet,
  kPair,
  kFst,
  kSnd,
  kInl,
  kInr,
  kCase,
  kRef,
  kDeref,
  kAssign,
  kShift,
  kReset,
  // Sugar, removed by desugar().
  kIf,
  kLetrec,
  kSeq,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Node layout per kind:
//   kConst   value
//   kVar     name
//   kLam     name = parameter, kids = {body}
//   kLet     name, kids = {bound, body}
//   kCase    kids = {scrutinee, left branch, right branch}, name/name2 binders
//   kShift   name = continuation variable, kids = {body}
//   kLetrec  name = function, kids = {lam, body}
//   others   kids in source order
struct Expr {
  Kind kind;
  double value = 0.0;
  std::string name;
  std::string name2;
  std::vector<ExprPtr> kids;

  const Expr& kid(std::size_t i) const { return *kids[i]; }
};

const char* kind_name(Kind k);
bool is_sugar(Kind k);

// Constructors.
ExprPtr real(double v);
ExprPtr unit();
ExprPtr var(std::string name);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr greater(ExprPtr a, ExprPtr b);
ExprPtr lam(std::string param, ExprPtr body);
ExprPtr app(ExprPtr f, ExprPtr a);
ExprPtr let(std::string name, ExprPtr bound, ExprPtr body);
ExprPtr pair(ExprPtr a, ExprPtr b);
ExprPtr fst(ExprPtr e);
ExprPtr snd(ExprPtr e);
ExprPtr inl(ExprPtr e);
ExprPtr inr(ExprPtr e);
ExprPtr case_of(ExprPtr scrutinee, std::string left_name, ExprPtr left,
                std::string right_name, ExprPtr right);
ExprPtr ref(ExprPtr e);
ExprPtr deref(ExprPtr e);
ExprPtr assign(ExprPtr cell, ExprPtr value);
ExprPtr shift(std::string k, ExprPtr body);
ExprPtr reset(ExprPtr e);
ExprPtr if_then_else(ExprPtr cond, ExprPtr then_branch, ExprPtr else_branch);
ExprPtr letrec(std::string name, ExprPtr lambda, ExprPtr body);
ExprPtr seq(ExprPtr first, ExprPtr second);

// Copy of `e` with its children replaced.
ExprPtr with_kids(const Expr& e, std::vector<ExprPtr> kids);

bool structurally_equal(const Expr& a, const Expr& b);
std::size_t node_count(const Expr& e);
// Number of nodes of kind `k` anywhere in `e`.
std::size_t count_kind(const Expr& e, Kind k);

// Every identifier occurring in `e`, bound or free.
std::vector<std::string> all_names(const Expr& e);
std::vector<std::string> free_vars(const Expr& e);

// Renames free occurrences of `from` to `to`. Assumes the variable
// convention, so no capture can occur.
ExprPtr rename(const ExprPtr& e, const std::string& from, const std::string& to);

// True if `e` uses only constants, variables, +, * and let.
bool is_arithmetic(const Expr& e);

}  // namespace adlc

#endif  // ADLC_EXPR_H_
