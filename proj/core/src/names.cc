#include "adlc/names.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <vector>

namespace adlc {

void NameSupply::reserve(const std::string& name) { used_.insert(name); }

void NameSupply::reserve_all(const Expr& e) {
  for (const auto& n : all_names(e)) used_.insert(n);
}

std::string NameSupply::fresh(const std::string& base) {
  for (;;) {
    std::string n = base + "_" + std::to_string(counter_++);
    if (!used_.count(n) && !used_.count(n + "'")) {
      used_.insert(n);
      used_.insert(n + "'");
      return n;
    }
  }
}

std::string base_name(const std::string& name) {
  auto us = name.rfind('_');
  if (us == std::string::npos || us == 0 || us + 1 == name.size()) return name;
  bool digits = std::all_of(name.begin() + static_cast<long>(us) + 1, name.end(),
                            [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  return digits ? name.substr(0, us) : name;
}

namespace {

using Scope = std::vector<std::pair<std::string, std::string>>;

class Freshener {
 public:
  Freshener(const Expr& root, std::uint64_t seed) : names_(seed) {
    for (const auto& f : free_vars(root)) names_.reserve(f);
  }

  ExprPtr run(const ExprPtr& e) {
    switch (e->kind) {
      case Kind::kVar: {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
          if (it->first == e->name) return var(it->second);
        }
        return e;
      }
      case Kind::kLam:
      case Kind::kShift: {
        std::string n = bind(e->name);
        auto body = run(e->kids[0]);
        scope_.pop_back();
        return e->kind == Kind::kLam ? lam(n, body) : shift(n, body);
      }
      case Kind::kLet: {
        auto bound = run(e->kids[0]);
        std::string n = bind(e->name);
        auto body = run(e->kids[1]);
        scope_.pop_back();
        return let(n, bound, body);
      }
      case Kind::kLetrec: {
        std::string n = bind(e->name);
        auto fn = run(e->kids[0]);
        auto body = run(e->kids[1]);
        scope_.pop_back();
        return letrec(n, fn, body);
      }
      case Kind::kCase: {
        auto s = run(e->kids[0]);
        std::string n1 = bind(e->name);
        auto l = run(e->kids[1]);
        scope_.pop_back();
        std::string n2 = bind(e->name2);
        auto r = run(e->kids[2]);
        scope_.pop_back();
        return case_of(s, n1, l, n2, r);
      }
      default: {
        if (e->kids.empty()) return e;
        std::vector<ExprPtr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(run(k));
        return with_kids(*e, std::move(kids));
      }
    }
  }

 private:
  std::string bind(const std::string& original) {
    std::string n = names_.fresh(base_name(original));
    scope_.emplace_back(original, n);
    return n;
  }

  NameSupply names_;
  Scope scope_;
};

void collect_binders(const Expr& e, std::vector<std::string>& out) {
  switch (e.kind) {
    case Kind::kLam:
    case Kind::kShift:
    case Kind::kLet:
    case Kind::kLetrec:
      out.push_back(e.name);
      break;
    case Kind::kCase:
      out.push_back(e.name);
      out.push_back(e.name2);
      break;
    default:
      break;
  }
  for (const auto& k : e.kids) collect_binders(*k, out);
}

}  // namespace

ExprPtr freshen(const ExprPtr& e, std::uint64_t seed) {
  return Freshener(*e, seed).run(e);
}

bool satisfies_variable_convention(const Expr& e) {
  std::vector<std::string> binders;
  collect_binders(e, binders);
  std::map<std::string, int> seen;
  for (const auto& b : binders) {
    if (++seen[b] > 1) return false;
  }
  for (const auto& f : free_vars(e)) {
    if (seen.count(f)) return false;
  }
  return true;
}

}  // namespace adlc
