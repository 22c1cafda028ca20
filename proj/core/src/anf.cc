#include "adlc/anf.h"

#include <string>
#include <utility>
#include <vector>

#include "adlc/names.h"

namespace adlc {
namespace {

bool is_atom(const Expr& e) {
  return e.kind == Kind::kConst || e.kind == Kind::kVar;
}

class Normalizer {
 public:
  explicit Normalizer(const Expr& root) { names_.reserve_all(root); }

  ExprPtr run(const ExprPtr& e) {
    ExprPtr result = atom(e);
    for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it) {
      result = let(it->first, it->second, result);
    }
    return result;
  }

 private:
  // Normalizes `e` to an atom, emitting bindings for its computation.
  ExprPtr atom(const ExprPtr& e) {
    switch (e->kind) {
      case Kind::kConst:
      case Kind::kVar:
        return e;
      case Kind::kAdd:
      case Kind::kMul: {
        std::string t = names_.fresh("y");
        bindings_.emplace_back(t, operation(e));
        return var(t);
      }
      case Kind::kLet:
        bindings_.emplace_back(e->name, rhs(e->kids[0]));
        return atom(e->kids[1]);
      default:
        throw NotArithmetic(std::string("anf: non-arithmetic form '") +
                            kind_name(e->kind) + "'");
    }
  }

  // Normalizes `e` to something that may stand on the right of a let.
  ExprPtr rhs(const ExprPtr& e) {
    if (e->kind == Kind::kAdd || e->kind == Kind::kMul) return operation(e);
    return atom(e);
  }

  ExprPtr operation(const ExprPtr& e) {
    ExprPtr a = atom(e->kids[0]);
    ExprPtr b = atom(e->kids[1]);
    return e->kind == Kind::kAdd ? add(a, b) : mul(a, b);
  }

  NameSupply names_;
  std::vector<std::pair<std::string, ExprPtr>> bindings_;
};

}  // namespace

ExprPtr anf(const ExprPtr& e) { return Normalizer(*e).run(e); }

bool is_anf(const Expr& e) {
  const Expr* cur = &e;
  while (cur->kind == Kind::kLet) {
    const Expr& b = cur->kid(0);
    bool ok = is_atom(b) || ((b.kind == Kind::kAdd || b.kind == Kind::kMul) &&
                             is_atom(b.kid(0)) && is_atom(b.kid(1)));
    if (!ok) return false;
    cur = &cur->kid(1);
  }
  return is_atom(*cur);
}

}  // namespace adlc
