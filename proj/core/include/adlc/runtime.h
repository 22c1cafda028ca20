#ifndef ADLC_RUNTIME_H_
#define ADLC_RUNTIME_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "adlc/expr.h"

namespace adlc {

// ---------------------------------------------------------------------------
// Forward mode: plain dual numbers.

struct Dual {
  double x = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.x + b.x, a.d + b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.x * b.x, a.d * b.x + b.d * a.x}; }

double grad_dual(const std::function<Dual(Dual)>& f, double x0);

// ---------------------------------------------------------------------------
// Forward mode with dynamic tags, nestable. A number is either a constant or
// a (primal, tangent) pair of numbers carrying the tag of the gradient
// invocation it belongs to. Operations combine at the larger tag; operands
// with a smaller tag count as constants there.

class TaggedNum {
 public:
  TaggedNum(double c = 0.0);  // NOLINT: constants convert implicitly
  static TaggedNum dual(TaggedNum primal, TaggedNum tangent, std::uint64_t tag);

  std::uint64_t tag() const { return node_->tag; }
  bool is_constant() const { return node_->tag == 0; }
  // Primal / tangent with respect to `tag`.
  TaggedNum primal(std::uint64_t tag) const;
  TaggedNum tangent(std::uint64_t tag) const;
  // The underlying real, following primals down to a constant.
  double value() const;

  friend TaggedNum operator+(const TaggedNum& a, const TaggedNum& b);
  friend TaggedNum operator*(const TaggedNum& a, const TaggedNum& b);

 private:
  struct Node {
    std::uint64_t tag;
    double c;
    std::shared_ptr<const Node> x, d;
  };
  explicit TaggedNum(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// A fresh tag from a process-wide monotone counter.
std::uint64_t next_tag();

// d/dx f at x. With `tagged` false every invocation uses the same tag, which
// reproduces perturbation confusion under nesting.
TaggedNum grad_tagged(const std::function<TaggedNum(TaggedNum)>& f, const TaggedNum& x,
                      bool tagged = true);

struct PerturbationProbe {
  double naive_inner, naive_outer;
  double tagged_inner, tagged_outer;
};

// grad(x => { inner = grad(y => x + y)(1); x * inner })(1), under fixed and
// under fresh tags.
PerturbationProbe perturbation_confusion_probe();

// ---------------------------------------------------------------------------
// Reverse mode, continuation passing. Adjoints live in a per-run store
// indexed by the number's id; `T` is the scalar type (double, or Dual for
// forward-over-reverse).

struct AdjointUpdate {
  std::size_t id;
  double value;  // adjoint after the update (primal part for Dual)
};

template <class T>
struct RevNum {
  T x;
  std::size_t id;
};

template <class T>
class RevContext {
 public:
  using Num = RevNum<T>;
  using Cont = std::function<void(Num)>;

  explicit RevContext(std::vector<AdjointUpdate>* trace = nullptr) : trace_(trace) {}

  Num make(T x) {
    adj_.push_back(T{});
    return {x, adj_.size() - 1};
  }
  T& adjoint(const Num& n) { return adj_[n.id]; }

  void add(const Num& a, const Num& b, const Cont& k) {
    Num y = make(a.x + b.x);
    k(y);
    accumulate(a.id, adj_[y.id]);
    accumulate(b.id, adj_[y.id]);
  }
  void mul(const Num& a, const Num& b, const Cont& k) {
    Num y = make(a.x * b.x);
    k(y);
    accumulate(a.id, adj_[y.id] * b.x);
    accumulate(b.id, adj_[y.id] * a.x);
  }

 private:
  void accumulate(std::size_t id, T delta) {
    adj_[id] = adj_[id] + delta;
    if (trace_ != nullptr) trace_->push_back({id, scalar_part(adj_[id])});
  }
  static double scalar_part(double v) { return v; }
  static double scalar_part(const Dual& v) { return v.x; }

  std::vector<T> adj_;
  std::vector<AdjointUpdate>* trace_;
};

template <class T>
using RevFn = std::function<void(RevContext<T>&, RevNum<T>, const typename RevContext<T>::Cont&)>;

// Seeds the result adjoint with 1 once the forward pass reaches the end,
// then returns the input adjoint after unwinding.
template <class T>
T grad_cps_generic(const RevFn<T>& f, T x0, T one, std::vector<AdjointUpdate>* trace = nullptr) {
  RevContext<T> ctx(trace);
  RevNum<T> z = ctx.make(x0);
  f(ctx, z, [&](RevNum<T> r) { ctx.adjoint(r) = one; });
  return ctx.adjoint(z);
}

double grad_cps(const RevFn<double>& f, double x0, std::vector<AdjointUpdate>* trace = nullptr);

// Second derivative: the reverse runtime over dual numbers, seeded with a
// unit tangent on the input.
double grad_forward_over_reverse(const RevFn<Dual>& f, double x0);

// ---------------------------------------------------------------------------
// Reverse mode with an explicit tape of defunctionalized backward actions.

enum class TapeOp { kAdd, kMul };

struct TapeEntry {
  TapeOp op;
  std::size_t a, b, y;
  double ax, bx;  // primals captured for the multiplication rule
};

class Tape {
 public:
  struct Num {
    double x;
    std::size_t id;
  };

  Num make(double x);
  Num add(const Num& a, const Num& b);
  Num mul(const Num& a, const Num& b);
  double& adjoint(const Num& n) { return adj_[n.id]; }

  // Runs the recorded actions newest first.
  void replay(std::vector<AdjointUpdate>* trace = nullptr);
  const std::vector<TapeEntry>& entries() const { return entries_; }

 private:
  void accumulate(std::size_t id, double delta, std::vector<AdjointUpdate>* trace);

  std::vector<double> adj_;
  std::vector<TapeEntry> entries_;
};

double grad_tape(const std::function<Tape::Num(Tape&, Tape::Num)>& f, double x0,
                 std::vector<AdjointUpdate>* trace = nullptr);

// ---------------------------------------------------------------------------
// Purely functional reverse mode: continuations return the map of adjoint
// contributions instead of mutating anything; number ids are threaded
// through the continuations.

using AdjointMap = std::map<std::size_t, double>;

// Pointwise sum; missing keys count as 0.
AdjointMap merge(const AdjointMap& a, const AdjointMap& b);
double lookup(const AdjointMap& m, std::size_t id);

struct FNum {
  double x;
  std::size_t id;
};

// Continuations receive the result and the next unused id.
using FCont = std::function<AdjointMap(FNum, std::size_t)>;

AdjointMap fconst(double c, std::size_t next, const FCont& k);
AdjointMap fadd(const FNum& a, const FNum& b, std::size_t next, const FCont& k);
AdjointMap fmul(const FNum& a, const FNum& b, std::size_t next, const FCont& k);

double grad_functional(
    const std::function<AdjointMap(FNum, std::size_t, const FCont&)>& f, double x0);

// ---------------------------------------------------------------------------
// Running object-language programs on the runtimes. Accepts a one-argument
// lambda whose body uses only constants, variables, +, * and let.

struct ArithFn {
  std::string param;
  ExprPtr body;
};

// Throws std::invalid_argument if `f` is not such a lambda.
ArithFn arith_fn(const ExprPtr& f);

Dual run_dual(const ArithFn& f, Dual x);
TaggedNum run_tagged(const ArithFn& f, const TaggedNum& x);
Tape::Num run_tape(const ArithFn& f, Tape& tape, Tape::Num x);
void run_cps(const ArithFn& f, RevContext<double>& ctx, RevNum<double> x,
             const RevContext<double>::Cont& k);
void run_cps_dual(const ArithFn& f, RevContext<Dual>& ctx, RevNum<Dual> x,
                  const RevContext<Dual>::Cont& k);
AdjointMap run_functional(const ArithFn& f, FNum x, std::size_t next, const FCont& k);

double grad_dual(const ArithFn& f, double x0);
double grad_cps(const ArithFn& f, double x0, std::vector<AdjointUpdate>* trace = nullptr);
double grad_tape(const ArithFn& f, double x0, std::vector<AdjointUpdate>* trace = nullptr);
double grad_functional(const ArithFn& f, double x0);
double grad_forward_over_reverse(const ArithFn& f, double x0);
// Second derivative by nesting tagged forward mode.
double second_derivative_tagged(const ArithFn& f, double x0);

}  // namespace adlc

#endif  // ADLC_RUNTIME_H_
