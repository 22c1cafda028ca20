#include "adlc/expr.h"

#include <algorithm>
#include <bit>
#include <set>
#include <utility>

namespace adlc {
namespace {

ExprPtr make(Kind k, std::vector<ExprPtr> kids, std::string name = {},
             std::string name2 = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->name = std::move(name);
  e->name2 = std::move(name2);
  e->kids = std::move(kids);
  return e;
}

// Binders introduced by `e` that scope over kid `i`.
void binders_for_kid(const Expr& e, std::size_t i,
                     std::vector<const std::string*>& out) {
  switch (e.kind) {
    case Kind::kLam:
    case Kind::kShift:
      out.push_back(&e.name);
      break;
    case Kind::kLet:
      if (i == 1) out.push_back(&e.name);
      break;
    case Kind::kLetrec:
      out.push_back(&e.name);
      break;
    case Kind::kCase:
      if (i == 1) out.push_back(&e.name);
      if (i == 2) out.push_back(&e.name2);
      break;
    default:
      break;
  }
}

void collect_free(const Expr& e, std::vector<std::string>& bound,
                  std::set<std::string>& seen, std::vector<std::string>& out) {
  if (e.kind == Kind::kVar) {
    if (std::find(bound.begin(), bound.end(), e.name) == bound.end() &&
        seen.insert(e.name).second) {
      out.push_back(e.name);
    }
    return;
  }
  for (std::size_t i = 0; i < e.kids.size(); ++i) {
    std::vector<const std::string*> b;
    binders_for_kid(e, i, b);
    for (const auto* n : b) bound.push_back(*n);
    collect_free(*e.kids[i], bound, seen, out);
    bound.resize(bound.size() - b.size());
  }
}

void collect_names(const Expr& e, std::set<std::string>& seen,
                   std::vector<std::string>& out) {
  auto note = [&](const std::string& n) {
    if (!n.empty() && seen.insert(n).second) out.push_back(n);
  };
  switch (e.kind) {
    case Kind::kVar:
    case Kind::kLam:
    case Kind::kLet:
    case Kind::kShift:
    case Kind::kLetrec:
      note(e.name);
      break;
    case Kind::kCase:
      note(e.name);
      note(e.name2);
      break;
    default:
      break;
  }
  for (const auto& k : e.kids) collect_names(*k, seen, out);
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kConst: return "const";
    case Kind::kUnit: return "unit";
    case Kind::kVar: return "var";
    case Kind::kAdd: return "+";
    case Kind::kMul: return "*";
    case Kind::kGreater: return ">";
    case Kind::kLam: return "lam";
    case Kind::kApp: return "app";
    case Kind::kLet: return "let";
    case Kind::kPair: return "pair";
    case Kind::kFst: return "fst";
    case Kind::kSnd: return "snd";
    case Kind::kInl: return "inl";
    case Kind::kInr: return "inr";
    case Kind::kCase: return "case";
    case Kind::kRef: return "ref";
    case Kind::kDeref: return "deref";
    case Kind::kAssign: return "assign";
    case Kind::kShift: return "shift";
    case Kind::kReset: return "reset";
    case Kind::kIf: return "if";
    case Kind::kLetrec: return "letrec";
    case Kind::kSeq: return "seq";
  }
  return "?";
}

bool is_sugar(Kind k) {
  return k == Kind::kIf || k == Kind::kLetrec || k == Kind::kSeq;
}

ExprPtr real(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kConst;
  e->value = v;
  return e;
}
ExprPtr unit() { return make(Kind::kUnit, {}); }
ExprPtr var(std::string name) { return make(Kind::kVar, {}, std::move(name)); }
ExprPtr add(ExprPtr a, ExprPtr b) {
  return make(Kind::kAdd, {std::move(a), std::move(b)});
}
ExprPtr mul(ExprPtr a, ExprPtr b) {
  return make(Kind::kMul, {std::move(a), std::move(b)});
}
ExprPtr greater(ExprPtr a, ExprPtr b) {
  return make(Kind::kGreater, {std::move(a), std::move(b)});
}
ExprPtr lam(std::string param, ExprPtr body) {
  return make(Kind::kLam, {std::move(body)}, std::move(param));
}
ExprPtr app(ExprPtr f, ExprPtr a) {
  return make(Kind::kApp, {std::move(f), std::move(a)});
}
ExprPtr let(std::string name, ExprPtr bound, ExprPtr body) {
  return make(Kind::kLet, {std::move(bound), std::move(body)}, std::move(name));
}
ExprPtr pair(ExprPtr a, ExprPtr b) {
  return make(Kind::kPair, {std::move(a), std::move(b)});
}
ExprPtr fst(ExprPtr e) { return make(Kind::kFst, {std::move(e)}); }
ExprPtr snd(ExprPtr e) { return make(Kind::kSnd, {std::move(e)}); }
ExprPtr inl(ExprPtr e) { return make(Kind::kInl, {std::move(e)}); }
ExprPtr inr(ExprPtr e) { return make(Kind::kInr, {std::move(e)}); }
ExprPtr case_of(ExprPtr scrutinee, std::string left_name, ExprPtr left,
                std::string right_name, ExprPtr right) {
  return make(Kind::kCase,
              {std::move(scrutinee), std::move(left), std::move(right)},
              std::move(left_name), std::move(right_name));
}
ExprPtr ref(ExprPtr e) { return make(Kind::kRef, {std::move(e)}); }
ExprPtr deref(ExprPtr e) { return make(Kind::kDeref, {std::move(e)}); }
ExprPtr assign(ExprPtr cell, ExprPtr value) {
  return make(Kind::kAssign, {std::move(cell), std::move(value)});
}
ExprPtr shift(std::string k, ExprPtr body) {
  return make(Kind::kShift, {std::move(body)}, std::move(k));
}
ExprPtr reset(ExprPtr e) { return make(Kind::kReset, {std::move(e)}); }
ExprPtr if_then_else(ExprPtr cond, ExprPtr then_branch, ExprPtr else_branch) {
  return make(Kind::kIf, {std::move(cond), std::move(then_branch),
                          std::move(else_branch)});
}
ExprPtr letrec(std::string name, ExprPtr lambda, ExprPtr body) {
  return make(Kind::kLetrec, {std::move(lambda), std::move(body)},
              std::move(name));
}
ExprPtr seq(ExprPtr first, ExprPtr second) {
  return make(Kind::kSeq, {std::move(first), std::move(second)});
}

ExprPtr with_kids(const Expr& e, std::vector<ExprPtr> kids) {
  auto out = std::make_shared<Expr>(e);
  out->kids = std::move(kids);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.name != b.name || a.name2 != b.name2 ||
      a.kids.size() != b.kids.size()) {
    return false;
  }
  if (a.kind == Kind::kConst &&
      std::bit_cast<unsigned long long>(a.value) !=
          std::bit_cast<unsigned long long>(b.value)) {
    return false;
  }
  for (std::size_t i = 0; i < a.kids.size(); ++i) {
    if (!structurally_equal(*a.kids[i], *b.kids[i])) return false;
  }
  return true;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& k : e.kids) n += node_count(*k);
  return n;
}

std::size_t count_kind(const Expr& e, Kind k) {
  std::size_t n = e.kind == k ? 1 : 0;
  for (const auto& c : e.kids) n += count_kind(*c, k);
  return n;
}

std::vector<std::string> all_names(const Expr& e) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  collect_names(e, seen, out);
  return out;
}

std::vector<std::string> free_vars(const Expr& e) {
  std::vector<std::string> bound;
  std::set<std::string> seen;
  std::vector<std::string> out;
  collect_free(e, bound, seen, out);
  return out;
}

ExprPtr rename(const ExprPtr& e, const std::string& from,
               const std::string& to) {
  if (e->kind == Kind::kVar) return e->name == from ? var(to) : e;
  if (e->kids.empty()) return e;
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  bool changed = false;
  for (std::size_t i = 0; i < e->kids.size(); ++i) {
    std::vector<const std::string*> b;
    binders_for_kid(*e, i, b);
    bool shadowed = std::any_of(b.begin(), b.end(),
                                [&](const std::string* n) { return *n == from; });
    kids.push_back(shadowed ? e->kids[i] : rename(e->kids[i], from, to));
    changed |= kids.back() != e->kids[i];
  }
  return changed ? with_kids(*e, std::move(kids)) : e;
}

bool is_arithmetic(const Expr& e) {
  switch (e.kind) {
    case Kind::kConst:
    case Kind::kVar:
    case Kind::kAdd:
    case Kind::kMul:
    case Kind::kLet:
      return std::all_of(e.kids.begin(), e.kids.end(),
                         [](const ExprPtr& k) { return is_arithmetic(*k); });
    default:
      return false;
  }
}

}  // namespace adlc
