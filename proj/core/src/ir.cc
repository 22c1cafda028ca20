#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>

#include "adlc/ir.h"
#include "adlc/syntax.h"

namespace adlc::ir {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void collect_functions(const Block& b, std::vector<const FunDef*>& out) {
  for (const Stmt& s : b.stmts) {
    if (const auto* f = std::get_if<FunDef>(&s.v)) {
      out.push_back(f);
      collect_functions(f->body, out);
    } else if (const auto* c = std::get_if<Cond>(&s.v)) {
      collect_functions(c->then_block, out);
      collect_functions(c->else_block, out);
    }
  }
}

template <class Pred>
std::size_t count_if_stmt(const Block& b, Pred pred) {
  std::size_t n = 0;
  for (const Stmt& s : b.stmts) {
    if (pred(s)) ++n;
    if (const auto* f = std::get_if<FunDef>(&s.v)) n += count_if_stmt(f->body, pred);
    if (const auto* c = std::get_if<Cond>(&s.v)) {
      n += count_if_stmt(c->then_block, pred);
      n += count_if_stmt(c->else_block, pred);
    }
  }
  return n;
}

std::string opnd(const Operand& o) { return o.is_sym ? o.sym : format_real(o.lit); }

std::string bind_rhs(const Bind& b) {
  switch (b.op) {
    case Op::kAdd: return opnd(b.args[0]) + " + " + opnd(b.args[1]);
    case Op::kMul: return opnd(b.args[0]) + " * " + opnd(b.args[1]);
    case Op::kGreater: return opnd(b.args[0]) + " > " + opnd(b.args[1]);
    case Op::kCopy: return opnd(b.args[0]);
    case Op::kTreeIsNode: return opnd(b.args[0]) + ".notEmpty";
    case Op::kTreeLeft: return opnd(b.args[0]) + ".left";
    case Op::kTreeRight: return opnd(b.args[0]) + ".right";
    case Op::kTreeValue: return opnd(b.args[0]) + ".value";
  }
  return "?";
}

std::string param_list(const FunDef& f) {
  std::string s;
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (i) s += ", ";
    s += f.params[i].name;
    if (f.params[i].kind == ParamKind::kCell) s += "&";
  }
  return s;
}

std::string arg_list(const std::vector<Operand>& args) {
  std::string s;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ", ";
    s += opnd(args[i]);
  }
  return s;
}

void print_block(const Block& b, int indent, std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (const Stmt& s : b.stmts) {
    std::visit(
        Overloaded{
            [&](const Bind& x) { os << pad << x.dst << " = " << bind_rhs(x) << "\n"; },
            [&](const CellNew& x) { os << pad << x.dst << " = ref " << opnd(x.init) << "\n"; },
            [&](const CellRead& x) { os << pad << x.dst << " = !" << x.cell << "\n"; },
            [&](const CellAccum& x) { os << pad << x.cell << " += " << opnd(x.value) << "\n"; },
            [&](const CellSet& x) { os << pad << x.cell << " := " << opnd(x.value) << "\n"; },
            [&](const Call& x) { os << pad << x.callee << "(" << arg_list(x.args) << ")\n"; },
            [&](const Cond& x) {
              os << pad << "if (" << opnd(x.guard) << ") {\n";
              print_block(x.then_block, indent + 1, os);
              os << pad << "} else {\n";
              print_block(x.else_block, indent + 1, os);
              os << pad << "}\n";
            },
            [&](const FunDef& x) {
              os << pad << "def " << x.name << "(" << param_list(x) << ") {\n";
              print_block(x.body, indent + 1, os);
              os << pad << "}\n";
            },
            [&](const Return& x) { os << pad << "return " << opnd(x.value) << "\n"; },
        },
        s.v);
  }
}

bool mentions(const Block& b, const Sym& name);

bool mentions_operand(const std::vector<Operand>& args, const Sym& name) {
  for (const Operand& o : args)
    if (o.is_sym && o.sym == name) return true;
  return false;
}

bool mentions(const Block& b, const Sym& name) {
  for (const Stmt& s : b.stmts) {
    bool hit = std::visit(
        Overloaded{
            [&](const Bind& x) { return mentions_operand(x.args, name); },
            [&](const CellNew& x) { return x.init.is_sym && x.init.sym == name; },
            [&](const CellRead& x) { return x.cell == name; },
            [&](const CellAccum& x) {
              return x.cell == name || (x.value.is_sym && x.value.sym == name);
            },
            [&](const CellSet& x) {
              return x.cell == name || (x.value.is_sym && x.value.sym == name);
            },
            [&](const Call& x) { return x.callee == name || mentions_operand(x.args, name); },
            [&](const Cond& x) {
              return (x.guard.is_sym && x.guard.sym == name) || mentions(x.then_block, name) ||
                     mentions(x.else_block, name);
            },
            [&](const FunDef& x) { return mentions(x.body, name); },
            [&](const Return& x) { return x.value.is_sym && x.value.sym == name; },
        },
        s.v);
    if (hit) return true;
  }
  return false;
}

bool adjoint_only(const Stmt& s) {
  return std::holds_alternative<Bind>(s.v) || std::holds_alternative<CellRead>(s.v) ||
         std::holds_alternative<CellAccum>(s.v);
}

bool tail_check(const Block& b, const Sym& loop, bool rest_ok) {
  for (std::size_t i = 0; i < b.stmts.size(); ++i) {
    bool suffix_ok = rest_ok;
    for (std::size_t j = i + 1; j < b.stmts.size() && suffix_ok; ++j)
      suffix_ok = adjoint_only(b.stmts[j]);
    const Stmt& s = b.stmts[i];
    if (const auto* c = std::get_if<Call>(&s.v)) {
      if (mentions_operand(c->args, loop)) return false;
      if (c->callee == loop && !suffix_ok) return false;
    } else if (const auto* c = std::get_if<Cond>(&s.v)) {
      if (!tail_check(c->then_block, loop, suffix_ok)) return false;
      if (!tail_check(c->else_block, loop, suffix_ok)) return false;
    } else if (const auto* f = std::get_if<FunDef>(&s.v)) {
      if (mentions(f->body, loop)) return false;
    }
  }
  return true;
}

// Runtime values of the evaluator.
struct Activation;
struct Closure {
  const FunDef* fn;
  Activation* env;
};
using Cell = std::shared_ptr<double>;
using RtValue = std::variant<double, Cell, Closure, Tree>;

struct Activation {
  Activation* parent;
  std::unordered_map<Sym, RtValue> vars;

  const RtValue& lookup(const Sym& s) const {
    for (const Activation* a = this; a; a = a->parent) {
      auto it = a->vars.find(s);
      if (it != a->vars.end()) return it->second;
    }
    throw IrError("unbound IR symbol: " + s);
  }
};

const char* kind_label(const RtValue& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "cell";
    case 2: return "function";
    default: return "tree";
  }
}

template <class T>
const T& as(const RtValue& v, const char* what) {
  if (const T* p = std::get_if<T>(&v)) return *p;
  throw IrError(std::string("expected a ") + what + ", got a " + kind_label(v));
}

class Machine {
 public:
  Machine(const EvalLimits& limits) : limits_(limits) {}

  double run(const Program& p, double x0, const Tree& tree) {
    Activation* top = fresh_activation(nullptr);
    const FunDef& entry = p.entry;
    bool saw_value = false;
    for (const Param& prm : entry.params) {
      if (prm.kind == ParamKind::kTree) {
        top->vars[prm.name] = tree;
      } else if (prm.kind == ParamKind::kValue && !saw_value) {
        top->vars[prm.name] = x0;
        saw_value = true;
      } else {
        throw IrError("unsupported entry parameter: " + prm.name);
      }
    }
    stack_.push_back(Frame{top, {Cursor{&entry.body, 0}}});

    while (!stack_.empty()) {
      Frame& fr = stack_.back();
      if (fr.cursors.empty()) {
        stack_.pop_back();
        continue;
      }
      Cursor& cur = fr.cursors.back();
      if (cur.index == cur.block->stmts.size()) {
        fr.cursors.pop_back();
        continue;
      }
      const Stmt& s = cur.block->stmts[cur.index++];
      Activation* act = fr.act;
      if (const auto* r = std::get_if<Return>(&s.v)) {
        if (stack_.size() != 1) throw IrError("return outside the entry function");
        return number(act, r->value);
      }
      step(s, act);
    }
    throw IrError("entry function finished without returning");
  }

 private:
  struct Cursor {
    const Block* block;
    std::size_t index;
  };
  struct Frame {
    Activation* act;
    std::vector<Cursor> cursors;
  };

  Activation* fresh_activation(Activation* parent) {
    arena_.push_back(std::make_unique<Activation>(Activation{parent, {}}));
    return arena_.back().get();
  }

  static double number(const Activation* act, const Operand& o) {
    if (!o.is_sym) return o.lit;
    return as<double>(act->lookup(o.sym), "number");
  }

  static const Cell& cell(const Activation* act, const Sym& s) {
    return as<Cell>(act->lookup(s), "cell");
  }

  void step(const Stmt& s, Activation* act) {
    std::visit(
        Overloaded{
            [&](const Bind& b) { act->vars[b.dst] = bind_value(b, act); },
            [&](const CellNew& c) {
              act->vars[c.dst] = std::make_shared<double>(number(act, c.init));
            },
            [&](const CellRead& c) { act->vars[c.dst] = *cell(act, c.cell); },
            [&](const CellAccum& c) {
              const Cell& p = cell(act, c.cell);
              *p = *p + number(act, c.value);
            },
            [&](const CellSet& c) { *cell(act, c.cell) = number(act, c.value); },
            [&](const Call& c) { call(c, act); },
            [&](const Cond& c) {
              const Block* b = number(act, c.guard) != 0.0 ? &c.then_block : &c.else_block;
              stack_.back().cursors.push_back(Cursor{b, 0});
            },
            [&](const FunDef& f) { act->vars[f.name] = Closure{&f, act}; },
            [&](const Return&) {},
        },
        s.v);
  }

  static RtValue bind_value(const Bind& b, const Activation* act) {
    auto tree_arg = [&]() -> Tree {
      const Operand& o = b.args.at(0);
      if (!o.is_sym) throw IrError("tree operation on a literal");
      return as<Tree>(act->lookup(o.sym), "tree");
    };
    auto nonempty = [&]() -> Tree {
      Tree t = tree_arg();
      if (!t) throw IrError("field access on an empty tree");
      return t;
    };
    switch (b.op) {
      case Op::kAdd: return number(act, b.args.at(0)) + number(act, b.args.at(1));
      case Op::kMul: return number(act, b.args.at(0)) * number(act, b.args.at(1));
      case Op::kGreater:
        return number(act, b.args.at(0)) > number(act, b.args.at(1)) ? 1.0 : 0.0;
      case Op::kCopy: {
        const Operand& o = b.args.at(0);
        return o.is_sym ? act->lookup(o.sym) : RtValue(o.lit);
      }
      case Op::kTreeIsNode: return tree_arg() ? 1.0 : 0.0;
      case Op::kTreeLeft: return nonempty()->left;
      case Op::kTreeRight: return nonempty()->right;
      case Op::kTreeValue: return nonempty()->value;
    }
    throw IrError("unknown operation");
  }

  void call(const Call& c, Activation* act) {
    const Closure& clo = as<Closure>(act->lookup(c.callee), "function");
    const FunDef& f = *clo.fn;
    if (f.params.size() != c.args.size())
      throw IrError("arity mismatch calling " + f.name);
    Activation* callee = fresh_activation(clo.env);
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      const Operand& a = c.args[i];
      const Param& prm = f.params[i];
      if (prm.kind == ParamKind::kValue) {
        callee->vars[prm.name] = number(act, a);
        continue;
      }
      if (!a.is_sym) throw IrError("literal passed for parameter " + prm.name);
      const RtValue& v = act->lookup(a.sym);
      switch (prm.kind) {
        case ParamKind::kCell: as<Cell>(v, "cell"); break;
        case ParamKind::kCont: as<Closure>(v, "function"); break;
        case ParamKind::kTree: as<Tree>(v, "tree"); break;
        case ParamKind::kValue: break;
      }
      callee->vars[prm.name] = v;
    }
    if (stack_.size() >= limits_.max_depth)
      throw IrError("recursion depth limit exceeded (" + std::to_string(limits_.max_depth) + ")");
    stack_.push_back(Frame{callee, {Cursor{&f.body, 0}}});
  }

  EvalLimits limits_;
  std::vector<Frame> stack_;
  std::vector<std::unique_ptr<Activation>> arena_;
};

}  // namespace

std::vector<const FunDef*> functions(const Program& p) {
  std::vector<const FunDef*> out{&p.entry};
  collect_functions(p.entry.body, out);
  return out;
}

std::size_t count_statements(const Program& p) {
  return count_if_stmt(p.entry.body, [](const Stmt&) { return true; });
}

std::size_t count_cell_ops(const Program& p) {
  return count_if_stmt(p.entry.body, [](const Stmt& s) {
    return std::holds_alternative<CellNew>(s.v) || std::holds_alternative<CellRead>(s.v) ||
           std::holds_alternative<CellAccum>(s.v) || std::holds_alternative<CellSet>(s.v);
  });
}

std::string to_string(const Program& p) {
  std::ostringstream os;
  os << "def " << p.entry.name << "(" << param_list(p.entry) << ") {\n";
  print_block(p.entry.body, 1, os);
  os << "}\n";
  return os.str();
}

bool self_calls_in_tail_position(const FunDef& loop) {
  return tail_check(loop.body, loop.name, true);
}

EvalLimits default_limits() {
  EvalLimits lim;
  if (const char* env = std::getenv("ADLC_DEPTH_LIMIT")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) lim.max_depth = static_cast<std::size_t>(v);
  }
  return lim;
}

double evaluate(const Program& p, double x0, const Tree& tree, const EvalLimits& limits) {
  return Machine(limits).run(p, x0, tree);
}

}  // namespace adlc::ir
