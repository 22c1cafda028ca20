#include "adlc/forward.h"

#include <optional>
#include <unordered_set>
#include <utility>

#include "adlc/anf.h"
#include "adlc/eval.h"
#include "adlc/names.h"

namespace adlc {
namespace {

bool is_atom(const Expr& e) { return e.kind == Kind::kConst || e.kind == Kind::kVar; }

class SymbolicDiff {
 public:
  SymbolicDiff(const Expr& root, std::string wrt) : wrt_(std::move(wrt)) {
    for (auto& n : all_names(root)) names_.insert(n);
  }

  ExprPtr chain(const ExprPtr& e) {
    if (e->kind == Kind::kLet) {
      const ExprPtr& rhs = e->kids[0];
      if (e->name == wrt_) throw TransformError("symbolic_diff: '" + wrt_ + "' is let-bound");
      if (!is_atom(*rhs) &&
          !((rhs->kind == Kind::kAdd || rhs->kind == Kind::kMul) && is_atom(rhs->kid(0)) &&
            is_atom(rhs->kid(1)))) {
        throw TransformError("symbolic_diff: input is not in ANF");
      }
      return let(e->name, rhs, let(tangent(e->name), d(*rhs), chain(e->kids[1])));
    }
    if (!is_atom(*e)) throw TransformError("symbolic_diff: input is not in ANF");
    return d(*e);
  }

 private:
  std::string tangent(const std::string& y) {
    std::string t = y + "'";
    if (names_.count(t) != 0) {
      throw TransformError("symbolic_diff: tangent name '" + t + "' is already in use");
    }
    return t;
  }

  ExprPtr d(const Expr& e) {
    switch (e.kind) {
      case Kind::kConst:
        return real(0.0);
      case Kind::kVar:
        return e.name == wrt_ ? real(1.0) : var(e.name + "'");
      case Kind::kAdd:
        return add(d(e.kid(0)), d(e.kid(1)));
      case Kind::kMul:
        return add(mul(d(e.kid(0)), e.kids[1]), mul(e.kids[0], d(e.kid(1))));
      default:
        throw TransformError(std::string("symbolic_diff: non-arithmetic form '") +
                             kind_name(e.kind) + "'");
    }
  }

  std::string wrt_;
  std::unordered_set<std::string> names_;
};

// A real-valued operand of + / * / >: how to read its two components, plus
// the let binding (if any) that must precede the use.
struct Operand {
  std::optional<std::pair<std::string, ExprPtr>> binding;
  ExprPtr primal;
  ExprPtr tangent;
};

class Forward {
 public:
  explicit Forward(const Expr& root) { names_.reserve_all(root); }

  ExprPtr run(const ExprPtr& e) {
    switch (e->kind) {
      case Kind::kConst:
        return pair(e, real(0.0));
      case Kind::kUnit:
      case Kind::kVar:
        return e;
      case Kind::kAdd:
      case Kind::kMul:
      case Kind::kGreater: {
        Operand a = operand(e->kids[0]);
        Operand b = operand(e->kids[1]);
        ExprPtr body;
        if (e->kind == Kind::kAdd) {
          body = pair(add(a.primal, b.primal), add(a.tangent, b.tangent));
        } else if (e->kind == Kind::kMul) {
          body = pair(mul(a.primal, b.primal),
                      add(mul(a.primal, b.tangent), mul(a.tangent, b.primal)));
        } else {
          body = greater(a.primal, b.primal);
        }
        if (b.binding) body = let(b.binding->first, b.binding->second, body);
        if (a.binding) body = let(a.binding->first, a.binding->second, body);
        return body;
      }
      case Kind::kShift:
      case Kind::kReset:
        throw TransformError("forward transform: shift/reset in the source program");
      case Kind::kIf:
      case Kind::kLetrec:
      case Kind::kSeq:
        throw TransformError("forward transform: desugar the program first");
      default: {
        std::vector<ExprPtr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(run(k));
        return with_kids(*e, std::move(kids));
      }
    }
  }

  NameSupply& names() { return names_; }

 private:
  Operand operand(const ExprPtr& src) {
    if (src->kind == Kind::kConst) return Operand{std::nullopt, src, real(0.0)};
    ExprPtr t = run(src);
    if (t->kind == Kind::kVar) return Operand{std::nullopt, fst(t), snd(t)};
    std::string p = names_.fresh("p");
    return Operand{std::make_pair(p, t), fst(var(p)), snd(var(p))};
  }

  NameSupply names_;
};

}  // namespace

ExprPtr symbolic_diff(const ExprPtr& e, const std::string& wrt) {
  return SymbolicDiff(*e, wrt).chain(e);
}

ExprPtr fwd_transform(const ExprPtr& e) { return Forward(*e).run(e); }

ExprPtr forward_wrapper(const ExprPtr& f) {
  Forward fwd(*f);
  ExprPtr df = fwd.run(f);
  std::string x = fwd.names().fresh("x");
  std::string y = fwd.names().fresh("y");
  return lam(x, let(y, app(df, pair(var(x), real(1.0))), snd(var(y))));
}

double grad_forward(const ExprPtr& f, double x0) {
  return eval_real(app(forward_wrapper(f), real(x0)));
}

double grad_forward_tagged(const std::function<TaggedNum(TaggedNum)>& f, double x0,
                           int order) {
  if (order == 1) return grad_tagged(f, TaggedNum(x0)).value();
  if (order == 2) {
    auto df = [&](TaggedNum x) { return grad_tagged(f, x); };
    return grad_tagged(df, TaggedNum(x0)).value();
  }
  throw std::invalid_argument("grad_forward_tagged: order must be 1 or 2");
}

}  // namespace adlc
