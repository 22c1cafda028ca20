#ifndef ADLC_EVAL_H_
#define ADLC_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "adlc/expr.h"

namespace adlc {

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

struct EnvNode;
using EnvPtr = std::shared_ptr<const EnvNode>;

struct Frame;
struct ContinuationSegment;

struct UnitValue {};

struct Closure {
  EnvPtr env;
  std::string param;
  ExprPtr body;
};

struct PairValue {
  ValuePtr first;
  ValuePtr second;
};

struct SumValue {
  bool right;  // false: inl, true: inr
  ValuePtr payload;
};

struct CellRef {
  std::size_t id;
};

// A delimited continuation captured by shift; applying it reinstates the
// captured frames under a fresh delimiter.
struct ContinuationValue {
  std::shared_ptr<const ContinuationSegment> segment;
};

struct Value {
  std::variant<double, UnitValue, Closure, PairValue, SumValue, CellRef,
               ContinuationValue>
      v;

  bool is_real() const { return std::holds_alternative<double>(v); }
  double as_real() const { return std::get<double>(v); }
};

Value make_real(double d);
Value make_unit();
Value make_pair(Value a, Value b);
Value make_sum(bool right, Value payload);
Value make_bool(bool b);  // inl () / inr ()

// Immutable environment; extension shares the tail.
class Env {
 public:
  Env() = default;
  explicit Env(EnvPtr head) : head_(std::move(head)) {}

  Env extend(std::string name, Value v) const;
  const Value* lookup(const std::string& name) const;
  const EnvPtr& head() const { return head_; }

 private:
  EnvPtr head_;
};

struct EnvNode {
  std::string name;
  Value value;
  EnvPtr next;
};

// Mutable cells. Ids are dense and never reused within one evaluation.
struct Store {
  std::vector<Value> cells;

  std::size_t next_id() const { return cells.size(); }
  std::size_t allocate(Value v);
  const Value& read(std::size_t id) const { return cells.at(id); }
  void write(std::size_t id, Value v) { cells.at(id) = std::move(v); }
};

enum class EvalErrorKind {
  kUnboundVariable,
  kNotAFunction,
  kNotAPair,
  kNotASum,
  kNotACell,
  kNotAReal,
  kSugar,
  kStepLimit,
};

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  EvalErrorKind kind() const { return kind_; }

 private:
  EvalErrorKind kind_;
};

struct EvalResult {
  Value value;
  Store store;
};

struct EvalOptions {
  // 0 means unlimited.
  std::uint64_t max_steps = 0;
};

// Call-by-value, left-to-right evaluation by an explicit continuation
// machine: continuations are linked frame lists, so shift/reset and deep
// recursion need nothing from the host stack. The top level acts as a
// reset. `e` must be desugared.
EvalResult eval(const ExprPtr& e, const Env& env = {}, Store store = {},
                const EvalOptions& options = {});

// Evaluates `e` and requires a real result.
double eval_real(const ExprPtr& e, const Env& env = {});

// Evaluates (app f x) for a one-argument function expression `f`.
double apply_real(const ExprPtr& f, double x);

// Human-readable rendering of a value, cells shown as `#<id>`.
std::string show(const Value& v);

}  // namespace adlc

#endif  // ADLC_EVAL_H_
