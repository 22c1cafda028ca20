#include "adlc/desugar.h"

#include <vector>

namespace adlc {

ExprPtr desugar(const ExprPtr& e) {
  NameSupply names;
  names.reserve_all(*e);
  return desugar(e, names);
}

ExprPtr desugar(const ExprPtr& e, NameSupply& names) {
  switch (e->kind) {
    case Kind::kIf:
      return case_of(desugar(e->kids[0], names), names.fresh("y"),
                     desugar(e->kids[1], names), names.fresh("z"),
                     desugar(e->kids[2], names));
    case Kind::kSeq:
      return let(names.fresh("_"), desugar(e->kids[0], names),
                 desugar(e->kids[1], names));
    case Kind::kLetrec: {
      const std::string& f = e->name;
      const Expr& fn = e->kid(0);
      std::string f0 = names.fresh(f);
      std::string f1 = names.fresh(f);
      auto inner = let(f, app(var(f1), var(f1)), desugar(fn.kids[0], names));
      return let(f0, lam(f1, lam(fn.name, inner)),
                 let(f, app(var(f0), var(f0)), desugar(e->kids[1], names)));
    }
    default: {
      if (e->kids.empty()) return e;
      std::vector<ExprPtr> kids;
      kids.reserve(e->kids.size());
      bool changed = false;
      for (const auto& k : e->kids) {
        kids.push_back(desugar(k, names));
        changed |= kids.back() != k;
      }
      return changed ? with_kids(*e, std::move(kids)) : e;
    }
  }
}

ExprPtr accumulate(const ExprPtr& cell, const ExprPtr& delta) {
  return assign(cell, add(deref(cell), delta));
}

ExprPtr prepare(const ExprPtr& e) { return freshen(desugar(freshen(e))); }

}  // namespace adlc
