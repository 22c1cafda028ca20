#include "adlc/reverse.h"

#include <vector>

#include "adlc/desugar.h"
#include "adlc/eval.h"
#include "adlc/forward.h"
#include "adlc/names.h"

namespace adlc {

const char* variant_name(ReverseVariant v) {
  switch (v) {
    case ReverseVariant::kTargetShift:
      return "target-shift";
    case ReverseVariant::kMetaShift:
      return "meta-shift";
    case ReverseVariant::kFullCps:
      return "full-cps";
  }
  return "?";
}

std::optional<ReverseVariant> parse_variant(const std::string& s) {
  for (auto v : {ReverseVariant::kTargetShift, ReverseVariant::kMetaShift,
                 ReverseVariant::kFullCps}) {
    if (s == variant_name(v)) return v;
  }
  return std::nullopt;
}

bool is_tail_redex(const Expr& e) {
  if (e.kind == Kind::kLam) {
    const Expr& b = e.kid(0);
    return b.kind == Kind::kApp && b.kid(1).kind == Kind::kVar && b.kid(1).name == e.name &&
           b.kid(0).kind == Kind::kVar && b.kid(0).name != e.name;
  }
  return e.kind == Kind::kLet && e.kid(0).kind == Kind::kVar;
}

ExprPtr normalize_tail(const ExprPtr& e) {
  ExprPtr cur = e;
  while (is_tail_redex(*cur)) {
    cur = cur->kind == Kind::kLam ? cur->kid(0).kids[0]
                                  : rename(cur->kids[1], cur->name, cur->kid(0).name);
  }
  return cur;
}

ExprPtr wavy_lam(const std::string& param, const ExprPtr& body) {
  return normalize_tail(lam(param, body));
}

ExprPtr wavy_let(const std::string& name, const ExprPtr& bound, const ExprPtr& body) {
  return normalize_tail(let(name, bound, body));
}

namespace {

// Names of an operand bound as ŷ = (y, y'): the primal and the adjoint cell.
struct Hat {
  ExprPtr y;
  ExprPtr d;
};

class RevBase {
 public:
  RevBase(const Expr& root, WavyHook hook) : hook_(std::move(hook)) { names_.reserve_all(root); }

  NameSupply& names() { return names_; }

 protected:
  ExprPtr then(const ExprPtr& a, const ExprPtr& b) { return let(names_.fresh("_"), a, b); }

  // let ŷ = t in body(ŷ), skipping the pair binding when t is a variable.
  template <class Body>
  ExprPtr with_hat(const ExprPtr& t, Body body) {
    std::string p;
    if (t->kind == Kind::kVar) {
      p = t->name;
    } else {
      p = names_.fresh("t");
    }
    std::string y = names_.fresh("y");
    std::string yd = y + "'";
    ExprPtr inner = let(y, fst(var(p)), let(yd, snd(var(p)), body(Hat{var(y), var(yd)})));
    return t->kind == Kind::kVar ? inner : let(p, t, inner);
  }

  // let t = (y1 op y2, ref 0) in let y' = snd t in rest; y1' += ...; y2' += ...
  ExprPtr arith(Kind op, const Hat& a, const Hat& b, const std::string& t, const ExprPtr& rest) {
    std::string yd = names_.fresh("y") + "'";
    ExprPtr value = op == Kind::kAdd ? add(a.y, b.y) : mul(a.y, b.y);
    ExprPtr da = op == Kind::kAdd ? deref(var(yd)) : mul(deref(var(yd)), b.y);
    ExprPtr db = op == Kind::kAdd ? deref(var(yd)) : mul(deref(var(yd)), a.y);
    return let(t, pair(value, ref(real(0.0))),
               let(yd, snd(var(t)),
                   then(rest, then(accumulate(a.d, da), accumulate(b.d, db)))));
  }

  ExprPtr wlam(const std::string& p, const ExprPtr& body) {
    ExprPtr r = wavy_lam(p, body);
    if (hook_) hook_(*r);
    return r;
  }
  ExprPtr wlet(const std::string& n, const ExprPtr& bound, const ExprPtr& body) {
    ExprPtr r = wavy_let(n, bound, body);
    if (hook_) hook_(*r);
    return r;
  }

  static void reject(const Expr& e) {
    if (e.kind == Kind::kShift || e.kind == Kind::kReset) {
      throw TransformError("reverse transform: shift/reset in the source program");
    }
    if (is_sugar(e.kind)) throw TransformError("reverse transform: desugar the program first");
  }

  NameSupply names_;
  WavyHook hook_;
};

// --- shift/reset in the target ---------------------------------------------

class TargetShift : public RevBase {
 public:
  using RevBase::RevBase;

  ExprPtr run(const ExprPtr& e) {
    reject(*e);
    switch (e->kind) {
      case Kind::kConst:
        return pair(e, ref(real(0.0)));
      case Kind::kUnit:
      case Kind::kVar:
        return e;
      case Kind::kAdd:
      case Kind::kMul: {
        ExprPtr t1 = run(e->kids[0]);
        ExprPtr t2 = run(e->kids[1]);
        return with_hat(t1, [&](Hat a) {
          return with_hat(t2, [&](Hat b) {
            std::string k = names_.fresh("k");
            std::string t = names_.fresh("t");
            return shift(k, arith(e->kind, a, b, t, app(var(k), var(t))));
          });
        });
      }
      case Kind::kGreater:
        return greater(fst(run(e->kids[0])), fst(run(e->kids[1])));
      default: {
        std::vector<ExprPtr> kids;
        for (const auto& k : e->kids) kids.push_back(run(k));
        return with_kids(*e, std::move(kids));
      }
    }
  }
};

// --- shift/reset at translation time ---------------------------------------
//
// Every continuation captured at translation time is used exactly once, as
// the hole of the term built around it, so a captured continuation can be
// represented by the list of term frames between the shift and its reset.
// shift pushes a frame; reset plugs the value into its frames innermost
// first.

class MetaShift : public RevBase {
 public:
  using RevBase::RevBase;
  using Frame = std::function<ExprPtr(ExprPtr)>;

  template <class Fn>
  ExprPtr reset(Fn fn) {
    scopes_.emplace_back();
    ExprPtr v = fn();
    std::vector<Frame> frames = std::move(scopes_.back());
    scopes_.pop_back();
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) v = (*it)(v);
    return v;
  }

  ExprPtr run(const ExprPtr& e) {
    reject(*e);
    switch (e->kind) {
      case Kind::kConst:
        return pair(e, ref(real(0.0)));
      case Kind::kUnit:
      case Kind::kVar:
        return e;
      case Kind::kAdd:
      case Kind::kMul: {
        ExprPtr v1 = run(e->kids[0]);
        ExprPtr v2 = run(e->kids[1]);
        std::string t = names_.fresh("t");
        Kind op = e->kind;
        shift([this, v1, v2, t, op](ExprPtr rest) {
          return with_hat(v1, [&](Hat a) {
            return with_hat(v2, [&](Hat b) { return arith(op, a, b, t, rest); });
          });
        });
        return var(t);
      }
      case Kind::kGreater: {
        ExprPtr v1 = run(e->kids[0]);
        ExprPtr v2 = run(e->kids[1]);
        return greater(fst(v1), fst(v2));
      }
      case Kind::kLam: {
        std::string k = names_.fresh("k");
        ExprPtr body = reset([&] { return app(var(k), run(e->kids[0])); });
        return lam(e->name, lam(k, body));
      }
      case Kind::kApp: {
        ExprPtr v1 = run(e->kids[0]);
        ExprPtr v2 = run(e->kids[1]);
        std::string a = names_.fresh("a");
        shift([this, v1, v2, a](ExprPtr rest) { return app(app(v1, v2), wlam(a, rest)); });
        return var(a);
      }
      case Kind::kLet: {
        ExprPtr v1 = run(e->kids[0]);
        std::string y = e->name;
        shift([y, v1](ExprPtr rest) { return let(y, v1, rest); });
        return run(e->kids[1]);
      }
      case Kind::kCase: {
        ExprPtr v = run(e->kids[0]);
        std::string k1 = names_.fresh("k");
        std::string a = names_.fresh("a");
        ExprPtr b1 = reset([&] { return app(var(k1), run(e->kids[1])); });
        ExprPtr b2 = reset([&] { return app(var(k1), run(e->kids[2])); });
        ExprPtr scrut = case_of(v, e->name, b1, e->name2, b2);
        shift([this, k1, a, scrut](ExprPtr rest) { return wlet(k1, wlam(a, rest), scrut); });
        return var(a);
      }
      default: {
        std::vector<ExprPtr> kids;
        for (const auto& k : e->kids) kids.push_back(run(k));
        return with_kids(*e, std::move(kids));
      }
    }
  }

 private:
  void shift(Frame f) { scopes_.back().push_back(std::move(f)); }

  std::vector<std::vector<Frame>> scopes_;
};

// --- translation in continuation-passing style -----------------------------

class FullCps : public RevBase {
 public:
  using RevBase::RevBase;
  using Kappa = std::function<ExprPtr(ExprPtr)>;

  ExprPtr run(const ExprPtr& e, const Kappa& kappa) {
    reject(*e);
    switch (e->kind) {
      case Kind::kConst:
        return kappa(pair(e, ref(real(0.0))));
      case Kind::kUnit:
      case Kind::kVar:
        return kappa(e);
      case Kind::kAdd:
      case Kind::kMul:
        return run(e->kids[0], [&](ExprPtr p1) {
          return run(e->kids[1], [&](ExprPtr p2) {
            return with_hat(p1, [&](Hat a) {
              return with_hat(p2, [&](Hat b) {
                std::string t = names_.fresh("t");
                return arith(e->kind, a, b, t, kappa(var(t)));
              });
            });
          });
        });
      case Kind::kGreater:
        return binary(e, kappa, [](ExprPtr a, ExprPtr b) { return greater(fst(a), fst(b)); });
      case Kind::kPair:
        return binary(e, kappa, [](ExprPtr a, ExprPtr b) { return pair(a, b); });
      case Kind::kAssign:
        return binary(e, kappa, [](ExprPtr a, ExprPtr b) { return assign(a, b); });
      case Kind::kFst:
      case Kind::kSnd:
      case Kind::kInl:
      case Kind::kInr:
      case Kind::kRef:
      case Kind::kDeref:
        return run(e->kids[0], [&](ExprPtr y) { return kappa(with_kids(*e, {y})); });
      case Kind::kLam: {
        std::string k = names_.fresh("k");
        ExprPtr body = run(e->kids[0], [&](ExprPtr m) { return app(var(k), m); });
        return kappa(lam(e->name, lam(k, body)));
      }
      case Kind::kApp:
        return run(e->kids[0], [&](ExprPtr m) {
          return run(e->kids[1], [&](ExprPtr n) {
            std::string a = names_.fresh("a");
            return app(app(m, n), wlam(a, kappa(var(a))));
          });
        });
      case Kind::kLet:
        return run(e->kids[0],
                   [&](ExprPtr y1) { return let(e->name, y1, run(e->kids[1], kappa)); });
      case Kind::kCase: {
        std::string k = names_.fresh("k");
        std::string a = names_.fresh("a");
        ExprPtr kfun = wlam(a, kappa(var(a)));
        ExprPtr body = run(e->kids[0], [&](ExprPtr v) {
          return case_of(v, e->name, run(e->kids[1], [&](ExprPtr m) { return app(var(k), m); }),
                         e->name2, run(e->kids[2], [&](ExprPtr n) { return app(var(k), n); }));
        });
        return wlet(k, kfun, body);
      }
      default:
        throw TransformError(std::string("reverse transform: unexpected form '") +
                             kind_name(e->kind) + "'");
    }
  }

 private:
  template <class Build>
  ExprPtr binary(const ExprPtr& e, const Kappa& kappa, Build build) {
    return run(e->kids[0], [&](ExprPtr y1) {
      return run(e->kids[1], [&](ExprPtr y2) { return kappa(build(y1, y2)); });
    });
  }
};

// Parts shared by the wrappers: x, the input pair t = (x, ref 0), and the
// final continuation body for a result z.
struct WrapperNames {
  std::string x, t, z, out;
};

WrapperNames wrapper_names(NameSupply& names) {
  return {names.fresh("x"), names.fresh("t"), names.fresh("z"), names.fresh("out")};
}

// The call of D[f] on the input pair; `finish(z)` runs on the final result z
// and seeds its adjoint.
template <class Finish>
ExprPtr build_wrapper(const ExprPtr& f, ReverseVariant v, const WavyHook& hook,
                      const WrapperNames& n, Finish finish) {
  ExprPtr input = var(n.t);
  ExprPtr call;
  switch (v) {
    case ReverseVariant::kTargetShift: {
      TargetShift tr(*f, hook);
      for (const auto& s : {n.x, n.t, n.z, n.out}) tr.names().reserve(s);
      call = reset(let(n.z, app(tr.run(f), input), finish(var(n.z))));
      break;
    }
    case ReverseVariant::kMetaShift: {
      MetaShift tr(*f, hook);
      for (const auto& s : {n.x, n.t, n.z, n.out}) tr.names().reserve(s);
      ExprPtr df = tr.reset([&] { return tr.run(f); });
      call = app(app(df, input), lam(n.z, finish(var(n.z))));
      break;
    }
    case ReverseVariant::kFullCps: {
      FullCps tr(*f, hook);
      for (const auto& s : {n.x, n.t, n.z, n.out}) tr.names().reserve(s);
      call = tr.run(f, [&](ExprPtr m) { return app(app(m, input), lam(n.z, finish(var(n.z)))); });
      break;
    }
  }
  return call;
}

}  // namespace

ExprPtr rev_transform_target_shift(const ExprPtr& e) { return TargetShift(*e, {}).run(e); }

ExprPtr rev_transform_meta_shift(const ExprPtr& e, const WavyHook& hook) {
  MetaShift tr(*e, hook);
  return tr.reset([&] { return tr.run(e); });
}

ExprPtr rev_transform_full_cps(const ExprPtr& e, const WavyHook& hook) {
  FullCps tr(*e, hook);
  return tr.run(e, [](ExprPtr v) { return v; });
}

ExprPtr reverse_wrapper(const ExprPtr& f, ReverseVariant v, const WavyHook& hook) {
  NameSupply names;
  names.reserve_all(*f);
  WrapperNames n = wrapper_names(names);
  ExprPtr call =
      build_wrapper(f, v, hook, n, [](ExprPtr z) { return assign(snd(z), real(1.0)); });
  return lam(n.x, let(n.t, pair(var(n.x), ref(real(0.0))),
                      let(names.fresh("_"), call, deref(snd(var(n.t))))));
}

ExprPtr reverse_value_wrapper(const ExprPtr& f, ReverseVariant v) {
  NameSupply names;
  names.reserve_all(*f);
  WrapperNames n = wrapper_names(names);
  std::string u = names.fresh("_");
  ExprPtr call = build_wrapper(f, v, {}, n, [&](ExprPtr z) {
    return let(u, assign(var(n.out), fst(z)), assign(snd(z), real(1.0)));
  });
  return lam(n.x, let(n.t, pair(var(n.x), ref(real(0.0))),
                      let(n.out, ref(real(0.0)),
                          let(names.fresh("_"), call,
                              pair(deref(var(n.out)), deref(snd(var(n.t))))))));
}

double grad_reverse(const ExprPtr& f, double x0, ReverseVariant v) {
  return eval_real(app(reverse_wrapper(f, v), real(x0)));
}

std::pair<double, double> value_and_grad_reverse(const ExprPtr& f, double x0,
                                                 ReverseVariant v) {
  EvalResult r = eval(app(reverse_value_wrapper(f, v), real(x0)));
  const auto& p = std::get<PairValue>(r.value.v);
  return {p.first->as_real(), p.second->as_real()};
}

double grad_reverse_of_reverse(const ExprPtr& f, double x0, ReverseVariant outer) {
  ExprPtr g = freshen(reverse_wrapper(f, ReverseVariant::kMetaShift));
  return grad_reverse(g, x0, outer);
}

}  // namespace adlc
