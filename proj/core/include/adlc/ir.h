#ifndef ADLC_IR_H_
#define ADLC_IR_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "adlc/tree.h"

namespace adlc::ir {

using Sym = std::string;

// A symbol or a float literal; operands are always atomic.
struct Operand {
  bool is_sym = false;
  Sym sym;
  double lit = 0.0;

  static Operand symbol(Sym s) { return Operand{true, std::move(s), 0.0}; }
  static Operand literal(double v) { return Operand{false, {}, v}; }
  bool is_lit(double v) const { return !is_sym && lit == v; }
  friend bool operator==(const Operand& a, const Operand& b) {
    return a.is_sym == b.is_sym && (a.is_sym ? a.sym == b.sym : a.lit == b.lit);
  }
};

enum class Op {
  kAdd,
  kMul,
  kGreater,  // 1.0 or 0.0
  kCopy,
  kTreeIsNode,
  kTreeLeft,
  kTreeRight,
  kTreeValue,
};

enum class ParamKind { kValue, kCell, kCont, kTree };

struct Param {
  Sym name;
  ParamKind kind;
};

struct Stmt;
struct Block {
  std::vector<Stmt> stmts;
};

struct Bind {
  Sym dst;
  Op op;
  std::vector<Operand> args;
};
struct CellNew {
  Sym dst;
  Operand init;
};
struct CellRead {
  Sym dst;
  Sym cell;
};
struct CellAccum {  // cell += value
  Sym cell;
  Operand value;
};
struct CellSet {
  Sym cell;
  Operand value;
};
struct Call {
  Sym callee;
  std::vector<Operand> args;  // cells, continuations and trees by symbol
};
struct Cond {
  Operand guard;
  Block then_block;
  Block else_block;
};
// A function visible in the rest of the enclosing block and in its own
// body; it closes over the enclosing scope.
struct FunDef {
  Sym name;
  std::vector<Param> params;
  Block body;
};
struct Return {
  Operand value;
};

struct Stmt {
  std::variant<Bind, CellNew, CellRead, CellAccum, CellSet, Call, Cond, FunDef, Return> v;
};

struct Program {
  FunDef entry;  // params: optionally a tree, then the real input
};

// All function definitions, entry first, in textual order.
std::vector<const FunDef*> functions(const Program& p);

std::size_t count_statements(const Program& p);
// CellNew/CellRead/CellAccum/CellSet statements.
std::size_t count_cell_ops(const Program& p);

// Pseudo-IR listing, one statement per line.
std::string to_string(const Program& p);

class IrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalLimits {
  std::size_t max_depth = 100000;
};

// Default depth limit, overridable by ADLC_DEPTH_LIMIT.
EvalLimits default_limits();

// Runs the entry function. Iterative, so deep recursion only costs heap.
// Throws IrError on malformed IR or when the call depth exceeds the limit.
double evaluate(const Program& p, double x0, const Tree& tree = nullptr,
                const EvalLimits& limits = default_limits());

// Constant folding, copy propagation, promotion of block-local cells to
// values, and dead code elimination, to a fixpoint. Preserves evaluate()
// results exactly (IEEE ==).
Program optimize(const Program& p);

// C-like source for the program: nested lambdas, adjoints by reference,
// recursive functions through std::function. Deterministic.
std::string emit_c(const Program& p);

// True if, inside the body of `loop`, every call to `loop` is followed on
// its path only by adjoint updates (reads, binds, accumulations).
bool self_calls_in_tail_position(const FunDef& loop);

}  // namespace adlc::ir

#endif  // ADLC_IR_H_
