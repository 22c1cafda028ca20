#include "adlc/stage.h"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>

#include "adlc/names.h"

namespace adlc {

namespace {

using ir::Block;
using ir::Operand;
using ir::Param;
using ir::ParamKind;
using ir::Stmt;
using ir::Sym;

struct SVal;
using SPtr = std::shared_ptr<const SVal>;
struct SEnvNode;
using SEnv = std::shared_ptr<const SEnvNode>;

// Staging-time values. Numbers carry their primal operand and, unless they
// are constants, the symbol of their adjoint cell.
struct SVal {
  enum class Kind { kNum, kBool, kUnit, kClosure, kPair, kSum, kLoop, kFun };
  Kind kind;
  Operand x;              // kNum primal, kBool guard
  std::optional<Sym> d;   // kNum adjoint cell
  std::string param;      // kClosure
  ExprPtr body;           // kClosure
  SEnv env;               // kClosure
  SPtr a, b;              // kPair halves, kSum payload in a
  bool right = false;     // kSum
  Sym fn;                 // kLoop, kFun
};

struct SEnvNode {
  std::string name;
  SPtr val;
  SEnv next;
};

SEnv extend(SEnv env, const std::string& name, SPtr v) {
  return std::make_shared<const SEnvNode>(SEnvNode{name, std::move(v), std::move(env)});
}

SPtr lookup(const SEnv& env, const std::string& name) {
  for (const SEnvNode* n = env.get(); n; n = n->next.get())
    if (n->name == name) return n->val;
  return nullptr;
}

SPtr make(SVal v) { return std::make_shared<const SVal>(std::move(v)); }

SPtr snum(Operand x, std::optional<Sym> d) {
  SVal v{SVal::Kind::kNum, std::move(x), std::move(d), {}, {}, {}, {}, {}, false, {}};
  return make(std::move(v));
}

SPtr simple(SVal::Kind k) { return make(SVal{k, {}, {}, {}, {}, {}, {}, {}, false, {}}); }

SPtr sfn(SVal::Kind k, Sym fn) {
  SVal v{k, {}, {}, {}, {}, {}, {}, {}, false, std::move(fn)};
  return make(std::move(v));
}

using K = std::function<void(SPtr)>;

bool occurs(const Expr& e, const std::string& name) {
  auto fv = free_vars(e);
  return std::find(fv.begin(), fv.end(), name) != fv.end();
}

bool is_self_call(const Expr& e, const std::string& name) {
  return e.kind == Kind::kApp && e.kid(0).kind == Kind::kVar && e.kid(0).name == name;
}

// Every use of `name` in `e` is a self-call in tail position.
bool tail_only(const Expr& e, const std::string& name) {
  if (is_self_call(e, name)) return !occurs(e.kid(1), name);
  switch (e.kind) {
    case Kind::kIf:
      return !occurs(e.kid(0), name) && tail_only(e.kid(1), name) && tail_only(e.kid(2), name);
    case Kind::kCase:
      return !occurs(e.kid(0), name) && tail_only(e.kid(1), name) && tail_only(e.kid(2), name);
    case Kind::kLet:
    case Kind::kSeq:
      return !occurs(e.kid(0), name) && tail_only(e.kid(1), name);
    case Kind::kLetrec:
      return !occurs(e.kid(0), name) && tail_only(e.kid(1), name);
    default:
      return !occurs(e, name);
  }
}

class Stager {
 public:
  void reserve(const std::string& s) { used_.insert(s); }

  Sym fresh(const std::string& base) {
    for (;;) {
      Sym s = base + std::to_string(counters_[base]++);
      if (used_.insert(s).second) return s;
    }
  }

  Sym exact_or_fresh(const std::string& base) {
    if (used_.insert(base).second) return base;
    return fresh(base);
  }

  void emit(Stmt s) { blocks_.back()->stmts.push_back(std::move(s)); }

  Block build(const std::function<void()>& fill) {
    Block b;
    blocks_.push_back(&b);
    try {
      fill();
    } catch (...) {
      blocks_.pop_back();
      throw;
    }
    blocks_.pop_back();
    return b;
  }

  static const SVal& num(const SPtr& v, const char* where) {
    if (!v || v->kind != SVal::Kind::kNum)
      throw StagingError(std::string("expected a number in ") + where);
    return *v;
  }

  Sym materialize(const SVal& n) {
    if (n.d) return *n.d;
    Sym d = fresh("d");
    emit(Stmt{ir::CellNew{d, Operand::literal(0.0)}});
    return d;
  }

  // Continuation that passes a number to the IR function `fn`.
  K call_cont(const Sym& fn) {
    return [this, fn](SPtr v) {
      const SVal& n = num(v, "a value passed to a continuation");
      Sym c = materialize(n);
      emit(Stmt{ir::Call{fn, {n.x, Operand::symbol(c)}}});
    };
  }

  // Lifts `k` into a two-parameter IR function and returns its name.
  Sym lift(const K& k) {
    Sym name = fresh("k");
    Sym x = exact_or_fresh("x");
    Sym d = exact_or_fresh("d");
    Block body = build([&] { k(snum(Operand::symbol(x), d)); });
    emit(Stmt{ir::FunDef{name, {Param{x, ParamKind::kValue}, Param{d, ParamKind::kCell}},
                         std::move(body)}});
    return name;
  }

  void stage(const ExprPtr& e, const SEnv& env, const K& k) {
    switch (e->kind) {
      case Kind::kConst:
        return k(snum(Operand::literal(e->value), std::nullopt));
      case Kind::kUnit:
        return k(simple(SVal::Kind::kUnit));
      case Kind::kVar: {
        SPtr v = lookup(env, e->name);
        if (!v) throw StagingError("unbound variable: " + e->name);
        if (v->kind == SVal::Kind::kFun)
          throw StagingError("recursive function used as a value: " + e->name);
        return k(v);
      }
      case Kind::kAdd:
      case Kind::kMul:
      case Kind::kGreater: {
        Kind op = e->kind;
        return stage(e->kids[0], env, [=, this](SPtr a) {
          stage(e->kids[1], env, [=, this](SPtr b) {
            const SVal& na = num(a, "an arithmetic operand");
            const SVal& nb = num(b, "an arithmetic operand");
            if (op == Kind::kGreater) {
              Sym g = fresh("g");
              emit(Stmt{ir::Bind{g, ir::Op::kGreater, {na.x, nb.x}}});
              SVal v{SVal::Kind::kBool, Operand::symbol(g), {}, {}, {}, {}, {}, {}, false, {}};
              return k(make(std::move(v)));
            }
            arith(op, na, nb, k);
          });
        });
      }
      case Kind::kLam: {
        SVal v{SVal::Kind::kClosure, {}, {}, e->name, e->kids[0], env, {}, {}, false, {}};
        return k(make(std::move(v)));
      }
      case Kind::kApp:
        if (e->kids[0]->kind == Kind::kVar) {
          SPtr f = lookup(env, e->kids[0]->name);
          if (f && (f->kind == SVal::Kind::kLoop || f->kind == SVal::Kind::kFun)) {
            return stage(e->kids[1], env, [=, this](SPtr a) { apply(f, a, k); });
          }
        }
        return stage(e->kids[0], env, [=, this](SPtr f) {
          stage(e->kids[1], env, [=, this](SPtr a) { apply(f, a, k); });
        });
      case Kind::kLet:
        return stage(e->kids[0], env, [=, this](SPtr v) { stage(e->kids[1], extend(env, e->name, v), k); });
      case Kind::kSeq:
        return stage(e->kids[0], env, [=, this](SPtr) { stage(e->kids[1], env, k); });
      case Kind::kPair:
        return stage(e->kids[0], env, [=, this](SPtr a) {
          stage(e->kids[1], env, [=, this](SPtr b) {
            k(make(SVal{SVal::Kind::kPair, {}, {}, {}, {}, {}, a, b, false, {}}));
          });
        });
      case Kind::kFst:
      case Kind::kSnd: {
        bool first = e->kind == Kind::kFst;
        return stage(e->kids[0], env, [=, this](SPtr p) {
          if (p->kind != SVal::Kind::kPair) throw StagingError("projection of a non-pair");
          k(first ? p->a : p->b);
        });
      }
      case Kind::kInl:
      case Kind::kInr: {
        bool right = e->kind == Kind::kInr;
        return stage(e->kids[0], env, [=, this](SPtr v) {
          k(make(SVal{SVal::Kind::kSum, {}, {}, {}, {}, {}, v, {}, right, {}}));
        });
      }
      case Kind::kCase:
        return stage(e->kids[0], env, [=, this](SPtr s) {
          if (s->kind == SVal::Kind::kSum) {
            if (s->right) return stage(e->kids[2], extend(env, e->name2, s->a), k);
            return stage(e->kids[1], extend(env, e->name, s->a), k);
          }
          if (s->kind != SVal::Kind::kBool) throw StagingError("case on a non-sum value");
          SPtr u = simple(SVal::Kind::kUnit);
          dynamic_if(s->x, e->kids[1], extend(env, e->name, u), e->kids[2],
                     extend(env, e->name2, u), k);
        });
      case Kind::kIf:
        return stage(e->kids[0], env, [=, this](SPtr c) {
          if (c->kind == SVal::Kind::kSum) return stage(e->kids[c->right ? 2 : 1], env, k);
          if (c->kind != SVal::Kind::kBool) throw StagingError("if on a non-boolean value");
          dynamic_if(c->x, e->kids[1], env, e->kids[2], env, k);
        });
      case Kind::kLetrec:
        return stage_letrec(e, env, k);
      case Kind::kRef:
      case Kind::kDeref:
      case Kind::kAssign:
      case Kind::kShift:
      case Kind::kReset:
        throw StagingError(std::string("cannot stage '") + kind_name(e->kind) + "'");
    }
    throw StagingError("unknown expression kind");
  }

 private:
  void arith(Kind op, const SVal& a, const SVal& b, const K& k) {
    Sym v = fresh("v");
    emit(Stmt{ir::Bind{v, op == Kind::kAdd ? ir::Op::kAdd : ir::Op::kMul, {a.x, b.x}}});
    Sym d = fresh("d");
    emit(Stmt{ir::CellNew{d, Operand::literal(0.0)}});
    k(snum(Operand::symbol(v), d));
    if (!a.d && !b.d) return;
    Sym t = fresh("t");
    emit(Stmt{ir::CellRead{t, d}});
    Operand ta = Operand::symbol(t);
    if (op == Kind::kAdd) {
      if (a.d) emit(Stmt{ir::CellAccum{*a.d, ta}});
      if (b.d) emit(Stmt{ir::CellAccum{*b.d, ta}});
      return;
    }
    if (a.d) {
      Sym u = fresh("t");
      emit(Stmt{ir::Bind{u, ir::Op::kMul, {ta, b.x}}});
      emit(Stmt{ir::CellAccum{*a.d, Operand::symbol(u)}});
    }
    if (b.d) {
      Sym u = fresh("t");
      emit(Stmt{ir::Bind{u, ir::Op::kMul, {ta, a.x}}});
      emit(Stmt{ir::CellAccum{*b.d, Operand::symbol(u)}});
    }
  }

  void apply(const SPtr& f, const SPtr& a, const K& k) {
    switch (f->kind) {
      case SVal::Kind::kClosure:
        return stage(f->body, extend(f->env, f->param, a), k);
      case SVal::Kind::kLoop: {
        // Tail call: the continuation is reached through the loop's exit.
        const SVal& n = num(a, "a loop argument");
        Sym c = materialize(n);
        emit(Stmt{ir::Call{f->fn, {n.x, Operand::symbol(c)}}});
        return;
      }
      case SVal::Kind::kFun: {
        const SVal& n = num(a, "a function argument");
        Sym c = materialize(n);
        Sym kn = lift(k);
        emit(Stmt{ir::Call{f->fn, {n.x, Operand::symbol(c), Operand::symbol(kn)}}});
        return;
      }
      default:
        throw StagingError("application of a non-function");
    }
  }

  // False only when every path through `e` ends in a loop self-call.
  bool may_return(const Expr& e, const SEnv& env) const {
    switch (e.kind) {
      case Kind::kApp:
        if (e.kid(0).kind == Kind::kVar) {
          SPtr f = lookup(env, e.kid(0).name);
          if (f && f->kind == SVal::Kind::kLoop) return false;
        }
        return true;
      case Kind::kIf:
      case Kind::kCase:
        return may_return(e.kid(1), env) || may_return(e.kid(2), env);
      case Kind::kLet:
      case Kind::kSeq:
      case Kind::kLetrec:
        return may_return(e.kid(1), env);
      default:
        return true;
    }
  }

  void dynamic_if(const Operand& guard, const ExprPtr& then_e, const SEnv& then_env,
                  const ExprPtr& else_e, const SEnv& else_env, const K& k) {
    bool rt = may_return(*then_e, then_env);
    bool re = may_return(*else_e, else_env);
    K kk = k;
    if (rt && re) kk = call_cont(lift(k));
    K never = [](SPtr) { throw StagingError("loop exit reached the continuation twice"); };
    Block tb = build([&] { stage(then_e, then_env, rt ? kk : never); });
    Block eb = build([&] { stage(else_e, else_env, re ? kk : never); });
    emit(Stmt{ir::Cond{guard, std::move(tb), std::move(eb)}});
  }

  void stage_letrec(const ExprPtr& e, const SEnv& env, const K& k) {
    const std::string& name = e->name;
    const ExprPtr& fn = e->kids[0];
    const ExprPtr& body = e->kids[1];
    if (fn->kind != Kind::kLam) throw StagingError("letrec must bind a lambda");

    if (is_self_call(*body, name) && !occurs(body->kid(1), name) &&
        tail_only(fn->kid(0), name)) {
      return stage(body->kids[1], env, [=, this](SPtr init) {
        const SVal& n = num(init, "a loop argument");
        Sym loop = exact_or_fresh("loop");
        Sym x = exact_or_fresh("x");
        Sym d = exact_or_fresh("d");
        SEnv inner = extend(extend(env, name, sfn(SVal::Kind::kLoop, loop)), fn->name,
                            snum(Operand::symbol(x), d));
        Block b = build([&] { stage(fn->kids[0], inner, k); });
        emit(Stmt{ir::FunDef{loop, {Param{x, ParamKind::kValue}, Param{d, ParamKind::kCell}},
                             std::move(b)}});
        Sym c = materialize(n);
        emit(Stmt{ir::Call{loop, {n.x, Operand::symbol(c)}}});
      });
    }

    Sym f = fresh("f");
    Sym x = exact_or_fresh("x");
    Sym d = exact_or_fresh("d");
    Sym kp = fresh("k");
    SPtr self = sfn(SVal::Kind::kFun, f);
    SEnv inner = extend(extend(env, name, self), fn->name, snum(Operand::symbol(x), d));
    Block b = build([&] { stage(fn->kids[0], inner, call_cont(kp)); });
    emit(Stmt{ir::FunDef{f,
                         {Param{x, ParamKind::kValue}, Param{d, ParamKind::kCell},
                          Param{kp, ParamKind::kCont}},
                         std::move(b)}});
    stage(body, extend(env, name, self), k);
  }

  std::set<std::string> used_;
  std::map<std::string, int> counters_;
  std::vector<Block*> blocks_;
};

}  // namespace

ir::Program stage_reverse(const ExprPtr& f0, const std::string& input) {
  ExprPtr f = freshen(f0);
  if (f->kind != Kind::kLam) throw StagingError("expected a one-argument lambda");
  Stager s;
  s.reserve(input);
  ir::Program p;
  p.entry.name = "snippet";
  p.entry.params = {Param{input, ParamKind::kValue}};
  p.entry.body = s.build([&] {
    Sym d0 = s.fresh("d");
    s.emit(Stmt{ir::CellNew{d0, Operand::literal(0.0)}});
    SEnv env = extend(nullptr, f->name, snum(Operand::symbol(input), d0));
    s.stage(f->kids[0], env, [&s](SPtr v) {
      const SVal& n = Stager::num(v, "the function result");
      if (n.d) s.emit(Stmt{ir::CellSet{*n.d, Operand::literal(1.0)}});
    });
    Sym r = s.fresh("r");
    s.emit(Stmt{ir::CellRead{r, d0}});
    s.emit(Stmt{ir::Return{Operand::symbol(r)}});
  });
  return p;
}

ir::Program stage_tree(const ExprPtr& body0, const std::string& input) {
  ExprPtr body = freshen(body0);
  if (body->kind != Kind::kLam || body->kid(0).kind != Kind::kLam ||
      body->kid(0).kid(0).kind != Kind::kLam)
    throw StagingError("tree body must have the form (lam l (lam r (lam v e)))");
  const std::string& lname = body->name;
  const std::string& rname = body->kid(0).name;
  const std::string& vname = body->kid(0).kid(0).name;
  const ExprPtr& e = body->kid(0).kid(0).kids[0];

  Stager s;
  Sym tree = s.exact_or_fresh("tree");
  s.reserve(input);
  ir::Program p;
  p.entry.name = "snippet";
  p.entry.params = {Param{tree, ParamKind::kTree}, Param{input, ParamKind::kValue}};
  p.entry.body = s.build([&] {
    Sym d0 = s.fresh("d");
    s.emit(Stmt{ir::CellNew{d0, Operand::literal(0.0)}});
    Sym k = s.lift([&s](SPtr v) {
      const SVal& n = Stager::num(v, "the fold result");
      if (n.d) s.emit(Stmt{ir::CellSet{*n.d, Operand::literal(1.0)}});
    });

    Sym rec = s.fresh("f");
    Sym t = s.exact_or_fresh("t");
    Sym k0 = s.fresh("k");
    ir::Block rec_body = s.build([&] {
      Sym g = s.fresh("g");
      s.emit(Stmt{ir::Bind{g, ir::Op::kTreeIsNode, {Operand::symbol(t)}}});
      ir::Block node_block = s.build([&] {
        Sym kl = s.exact_or_fresh("k_l");
        Sym xl = s.exact_or_fresh("x_l");
        Sym dl = s.exact_or_fresh("d_l");
        ir::Block kl_body = s.build([&] {
          Sym kr = s.exact_or_fresh("k_r");
          Sym xr = s.exact_or_fresh("x_r");
          Sym dr = s.exact_or_fresh("d_r");
          ir::Block kr_body = s.build([&] {
            Sym v0 = s.fresh("v");
            s.emit(Stmt{ir::Bind{v0, ir::Op::kTreeValue, {Operand::symbol(t)}}});
            SEnv env = extend(nullptr, lname, snum(Operand::symbol(xl), dl));
            env = extend(env, rname, snum(Operand::symbol(xr), dr));
            env = extend(env, vname, snum(Operand::symbol(v0), std::nullopt));
            s.stage(e, env, s.call_cont(k0));
          });
          s.emit(Stmt{ir::FunDef{kr, {Param{xr, ParamKind::kValue}, Param{dr, ParamKind::kCell}},
                                 std::move(kr_body)}});
          Sym tr = s.fresh("t");
          s.emit(Stmt{ir::Bind{tr, ir::Op::kTreeRight, {Operand::symbol(t)}}});
          s.emit(Stmt{ir::Call{rec, {Operand::symbol(tr), Operand::symbol(kr)}}});
        });
        s.emit(Stmt{ir::FunDef{kl, {Param{xl, ParamKind::kValue}, Param{dl, ParamKind::kCell}},
                               std::move(kl_body)}});
        Sym tl = s.fresh("t");
        s.emit(Stmt{ir::Bind{tl, ir::Op::kTreeLeft, {Operand::symbol(t)}}});
        s.emit(Stmt{ir::Call{rec, {Operand::symbol(tl), Operand::symbol(kl)}}});
      });
      ir::Block leaf_block = s.build([&] {
        s.emit(Stmt{ir::Call{k0, {Operand::symbol(input), Operand::symbol(d0)}}});
      });
      s.emit(Stmt{ir::Cond{Operand::symbol(g), std::move(node_block), std::move(leaf_block)}});
    });
    s.emit(Stmt{ir::FunDef{rec, {Param{t, ParamKind::kTree}, Param{k0, ParamKind::kCont}},
                           std::move(rec_body)}});
    s.emit(Stmt{ir::Call{rec, {Operand::symbol(tree), Operand::symbol(k)}}});
    Sym r = s.fresh("r");
    s.emit(Stmt{ir::CellRead{r, d0}});
    s.emit(Stmt{ir::Return{Operand::symbol(r)}});
  });
  return p;
}

}  // namespace adlc
