#include "adlc/eval.h"

#include <algorithm>
#include <utility>

#include "adlc/syntax.h"

namespace adlc {

Value make_real(double d) { return Value{d}; }
Value make_unit() { return Value{UnitValue{}}; }
Value make_pair(Value a, Value b) {
  return Value{PairValue{std::make_shared<const Value>(std::move(a)),
                         std::make_shared<const Value>(std::move(b))}};
}
Value make_sum(bool right, Value payload) {
  return Value{SumValue{right, std::make_shared<const Value>(std::move(payload))}};
}
Value make_bool(bool b) { return make_sum(!b, make_unit()); }

Env Env::extend(std::string name, Value v) const {
  return Env(std::make_shared<const EnvNode>(
      EnvNode{std::move(name), std::move(v), head_}));
}

const Value* Env::lookup(const std::string& name) const {
  for (const EnvNode* n = head_.get(); n != nullptr; n = n->next.get()) {
    if (n->name == name) return &n->value;
  }
  return nullptr;
}

std::size_t Store::allocate(Value v) {
  cells.push_back(std::move(v));
  return cells.size() - 1;
}

enum class FrameOp {
  kSecondOperand,  // evaluate kid 1 of `node`, left value pending
  kCombine,        // `held` is the left value of `node`
  kUnary,
  kLetBody,
  kCaseBranch,
  kDelimiter,
};

struct Frame {
  FrameOp op;
  ExprPtr node;
  Env env;
  Value held;
};

struct ContinuationSegment {
  std::vector<Frame> frames;  // outermost first
};

namespace {

struct KNode;
using Kont = std::shared_ptr<const KNode>;

struct KNode {
  Frame frame;
  Kont next;

  // Unlinks uniquely owned tails iteratively so that long continuations do
  // not recurse on destruction.
  ~KNode() {
    Kont tail = std::move(const_cast<Kont&>(next));
    while (tail && tail.use_count() == 1) {
      Kont after = std::move(const_cast<Kont&>(tail->next));
      tail = std::move(after);
    }
  }
};

Kont push(Kont k, Frame f) {
  return std::make_shared<const KNode>(KNode{std::move(f), std::move(k)});
}

[[noreturn]] void fail(EvalErrorKind kind, const std::string& msg) {
  throw EvalError(kind, msg);
}

double real_operand(const Value& v, const Expr& node) {
  if (!v.is_real()) {
    fail(EvalErrorKind::kNotAReal, std::string("arithmetic on non-real in '") +
                                       kind_name(node.kind) + "': " + show(v));
  }
  return v.as_real();
}

std::size_t cell_operand(const Value& v, const Store& store, const Expr& node) {
  const auto* c = std::get_if<CellRef>(&v.v);
  if (c == nullptr || c->id >= store.cells.size()) {
    fail(EvalErrorKind::kNotACell, std::string("'") + kind_name(node.kind) +
                                       "' on a non-cell: " + show(v));
  }
  return c->id;
}

class Machine {
 public:
  Machine(Store store, const EvalOptions& options)
      : store_(std::move(store)), options_(options) {}

  EvalResult run(ExprPtr e, Env env) {
    ExprPtr expr = std::move(e);
    Value value;
    bool evaluating = true;
    Kont k;
    for (;;) {
      if (options_.max_steps != 0 && ++steps_ > options_.max_steps) {
        fail(EvalErrorKind::kStepLimit, "evaluation step limit exceeded");
      }
      if (evaluating) {
        const Expr& n = *expr;
        switch (n.kind) {
          case Kind::kConst:
            value = make_real(n.value);
            evaluating = false;
            break;
          case Kind::kUnit:
            value = make_unit();
            evaluating = false;
            break;
          case Kind::kVar: {
            const Value* v = env.lookup(n.name);
            if (v == nullptr) {
              fail(EvalErrorKind::kUnboundVariable, "unbound variable '" + n.name + "'");
            }
            value = *v;
            evaluating = false;
            break;
          }
          case Kind::kLam:
            value = Value{Closure{env.head(), n.name, n.kids[0]}};
            evaluating = false;
            break;
          case Kind::kAdd:
          case Kind::kMul:
          case Kind::kGreater:
          case Kind::kApp:
          case Kind::kPair:
          case Kind::kAssign:
            k = push(std::move(k), Frame{FrameOp::kSecondOperand, expr, env, {}});
            expr = n.kids[0];
            break;
          case Kind::kFst:
          case Kind::kSnd:
          case Kind::kInl:
          case Kind::kInr:
          case Kind::kRef:
          case Kind::kDeref:
            k = push(std::move(k), Frame{FrameOp::kUnary, expr, {}, {}});
            expr = n.kids[0];
            break;
          case Kind::kLet:
            k = push(std::move(k), Frame{FrameOp::kLetBody, expr, env, {}});
            expr = n.kids[0];
            break;
          case Kind::kCase:
            k = push(std::move(k), Frame{FrameOp::kCaseBranch, expr, env, {}});
            expr = n.kids[0];
            break;
          case Kind::kReset:
            k = push(std::move(k), Frame{FrameOp::kDelimiter, expr, {}, {}});
            expr = n.kids[0];
            break;
          case Kind::kShift: {
            auto seg = std::make_shared<ContinuationSegment>();
            Kont cur = k;
            while (cur && cur->frame.op != FrameOp::kDelimiter) {
              seg->frames.push_back(cur->frame);
              cur = cur->next;
            }
            std::reverse(seg->frames.begin(), seg->frames.end());
            // The delimiter (if any) stays in place around the shift body.
            env = env.extend(n.name, Value{ContinuationValue{std::move(seg)}});
            expr = n.kids[0];
            k = std::move(cur);
            break;
          }
          case Kind::kIf:
          case Kind::kLetrec:
          case Kind::kSeq:
            fail(EvalErrorKind::kSugar, std::string("sugar form '") +
                                            kind_name(n.kind) +
                                            "' must be desugared before evaluation");
        }
        continue;
      }

      if (!k) return EvalResult{std::move(value), std::move(store_)};
      Frame f = k->frame;
      k = k->next;
      const Expr& n = *f.node;
      switch (f.op) {
        case FrameOp::kSecondOperand:
          k = push(std::move(k), Frame{FrameOp::kCombine, f.node, {}, std::move(value)});
          expr = n.kids[1];
          env = std::move(f.env);
          evaluating = true;
          break;
        case FrameOp::kCombine:
          if (n.kind == Kind::kApp) {
            apply(f.held, std::move(value), expr, env, value, evaluating, k);
          } else {
            value = combine(n, f.held, std::move(value));
          }
          break;
        case FrameOp::kUnary:
          value = unary(n, std::move(value));
          break;
        case FrameOp::kLetBody:
          env = f.env.extend(n.name, std::move(value));
          expr = n.kids[1];
          evaluating = true;
          break;
        case FrameOp::kCaseBranch: {
          const auto* s = std::get_if<SumValue>(&value.v);
          if (s == nullptr) {
            fail(EvalErrorKind::kNotASum, "case on a non-sum: " + show(value));
          }
          env = f.env.extend(s->right ? n.name2 : n.name, *s->payload);
          expr = n.kids[s->right ? 2 : 1];
          evaluating = true;
          break;
        }
        case FrameOp::kDelimiter:
          break;
      }
    }
  }

 private:
  void apply(const Value& fn, Value arg, ExprPtr& expr, Env& env, Value& value,
             bool& evaluating, Kont& k) {
    if (const auto* c = std::get_if<Closure>(&fn.v)) {
      env = Env(c->env).extend(c->param, std::move(arg));
      expr = c->body;
      evaluating = true;
      return;
    }
    if (const auto* cv = std::get_if<ContinuationValue>(&fn.v)) {
      k = push(std::move(k), Frame{FrameOp::kDelimiter, nullptr, {}, {}});
      for (const Frame& fr : cv->segment->frames) k = push(std::move(k), fr);
      value = std::move(arg);
      return;
    }
    fail(EvalErrorKind::kNotAFunction, "applying a non-function: " + show(fn));
  }

  Value combine(const Expr& n, const Value& a, Value b) {
    switch (n.kind) {
      case Kind::kAdd:
        return make_real(real_operand(a, n) + real_operand(b, n));
      case Kind::kMul:
        return make_real(real_operand(a, n) * real_operand(b, n));
      case Kind::kGreater:
        return make_bool(real_operand(a, n) > real_operand(b, n));
      case Kind::kPair:
        return make_pair(a, std::move(b));
      case Kind::kAssign:
        store_.write(cell_operand(a, store_, n), std::move(b));
        return make_unit();
      default:
        fail(EvalErrorKind::kSugar, "bad binary node");
    }
  }

  Value unary(const Expr& n, Value v) {
    switch (n.kind) {
      case Kind::kFst:
      case Kind::kSnd: {
        const auto* p = std::get_if<PairValue>(&v.v);
        if (p == nullptr) {
          fail(EvalErrorKind::kNotAPair, std::string("'") + kind_name(n.kind) +
                                             "' of a non-pair: " + show(v));
        }
        return n.kind == Kind::kFst ? *p->first : *p->second;
      }
      case Kind::kInl:
        return make_sum(false, std::move(v));
      case Kind::kInr:
        return make_sum(true, std::move(v));
      case Kind::kRef:
        return Value{CellRef{store_.allocate(std::move(v))}};
      case Kind::kDeref:
        return store_.read(cell_operand(v, store_, n));
      default:
        fail(EvalErrorKind::kSugar, "bad unary node");
    }
  }

  Store store_;
  EvalOptions options_;
  std::uint64_t steps_ = 0;
};

}  // namespace

EvalResult eval(const ExprPtr& e, const Env& env, Store store,
                const EvalOptions& options) {
  return Machine(std::move(store), options).run(e, env);
}

double eval_real(const ExprPtr& e, const Env& env) {
  EvalResult r = eval(e, env);
  if (!r.value.is_real()) {
    throw EvalError(EvalErrorKind::kNotAReal,
                    "expected a real result, got " + show(r.value));
  }
  return r.value.as_real();
}

double apply_real(const ExprPtr& f, double x) { return eval_real(app(f, real(x))); }

std::string show(const Value& v) {
  struct Visitor {
    std::string operator()(double d) const { return format_real(d); }
    std::string operator()(const UnitValue&) const { return "()"; }
    std::string operator()(const Closure& c) const { return "<closure " + c.param + ">"; }
    std::string operator()(const PairValue& p) const {
      return "(pair " + show(*p.first) + " " + show(*p.second) + ")";
    }
    std::string operator()(const SumValue& s) const {
      return std::string(s.right ? "(inr " : "(inl ") + show(*s.payload) + ")";
    }
    std::string operator()(const CellRef& c) const { return "#" + std::to_string(c.id); }
    std::string operator()(const ContinuationValue&) const { return "<continuation>"; }
  };
  return std::visit(Visitor{}, v.v);
}

}  // namespace adlc
