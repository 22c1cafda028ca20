#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "adlc/ir.h"

namespace adlc::ir {

namespace {

using Subst = std::unordered_map<Sym, Operand>;

// Calls `f` on every symbol used (not defined) by `s`, nested blocks included.
void for_each_use(const Stmt& s, const std::function<void(const Sym&)>& f);

void for_each_use(const Block& b, const std::function<void(const Sym&)>& f) {
  for (const Stmt& s : b.stmts) for_each_use(s, f);
}

void use_operand(const Operand& o, const std::function<void(const Sym&)>& f) {
  if (o.is_sym) f(o.sym);
}

void for_each_use(const Stmt& s, const std::function<void(const Sym&)>& f) {
  if (const auto* x = std::get_if<Bind>(&s.v)) {
    for (const Operand& o : x->args) use_operand(o, f);
  } else if (const auto* x = std::get_if<CellNew>(&s.v)) {
    use_operand(x->init, f);
  } else if (const auto* x = std::get_if<CellRead>(&s.v)) {
    f(x->cell);
  } else if (const auto* x = std::get_if<CellAccum>(&s.v)) {
    f(x->cell);
    use_operand(x->value, f);
  } else if (const auto* x = std::get_if<CellSet>(&s.v)) {
    f(x->cell);
    use_operand(x->value, f);
  } else if (const auto* x = std::get_if<Call>(&s.v)) {
    f(x->callee);
    for (const Operand& o : x->args) use_operand(o, f);
  } else if (const auto* x = std::get_if<Cond>(&s.v)) {
    use_operand(x->guard, f);
    for_each_use(x->then_block, f);
    for_each_use(x->else_block, f);
  } else if (const auto* x = std::get_if<FunDef>(&s.v)) {
    for_each_use(x->body, f);
  } else if (const auto* x = std::get_if<Return>(&s.v)) {
    use_operand(x->value, f);
  }
}

void collect_defs(const Block& b, std::unordered_set<Sym>& out) {
  for (const Stmt& s : b.stmts) {
    if (const auto* x = std::get_if<Bind>(&s.v)) out.insert(x->dst);
    if (const auto* x = std::get_if<CellNew>(&s.v)) out.insert(x->dst);
    if (const auto* x = std::get_if<CellRead>(&s.v)) out.insert(x->dst);
    if (const auto* x = std::get_if<Cond>(&s.v)) {
      collect_defs(x->then_block, out);
      collect_defs(x->else_block, out);
    }
    if (const auto* x = std::get_if<FunDef>(&s.v)) {
      out.insert(x->name);
      for (const Param& p : x->params) out.insert(p.name);
      collect_defs(x->body, out);
    }
  }
}

class Optimizer {
 public:
  explicit Optimizer(Program p) : p_(std::move(p)) {
    for (const Param& prm : p_.entry.params) names_.insert(prm.name);
    collect_defs(p_.entry.body, names_);
  }

  Program run() {
    for (int round = 0; round < 1000; ++round) {
      std::string before = to_string(p_);
      Subst subst;
      simplify(p_.entry.body, subst);
      promote_cells(p_.entry.body);
      while (eliminate_dead_code()) {
      }
      if (to_string(p_) == before) break;
    }
    return std::move(p_);
  }

 private:
  Sym fresh(const Sym& base) {
    for (int i = 1;; ++i) {
      Sym s = base + "_" + std::to_string(i);
      if (names_.insert(s).second) return s;
    }
  }

  static void apply(Operand& o, const Subst& subst) {
    if (!o.is_sym) return;
    auto it = subst.find(o.sym);
    if (it != subst.end()) o = it->second;
  }

  static void apply(Sym& s, const Subst& subst) {
    auto it = subst.find(s);
    if (it != subst.end() && it->second.is_sym) s = it->second.sym;
  }

  // Constant folding, algebraic identities, copy propagation and pruning of
  // conditionals with literal guards. Returns the rewritten block.
  void simplify(Block& b, Subst& subst) {
    std::vector<Stmt> out;
    out.reserve(b.stmts.size());
    for (std::size_t i = 0; i < b.stmts.size(); ++i) {
      Stmt s = std::move(b.stmts[i]);
      if (auto* x = std::get_if<Bind>(&s.v)) {
        for (Operand& o : x->args) apply(o, subst);
        if (auto folded = fold(*x)) {
          subst[x->dst] = *folded;
          continue;
        }
      } else if (auto* x = std::get_if<CellNew>(&s.v)) {
        apply(x->init, subst);
      } else if (auto* x = std::get_if<CellRead>(&s.v)) {
        apply(x->cell, subst);
      } else if (auto* x = std::get_if<CellAccum>(&s.v)) {
        apply(x->cell, subst);
        apply(x->value, subst);
      } else if (auto* x = std::get_if<CellSet>(&s.v)) {
        apply(x->cell, subst);
        apply(x->value, subst);
      } else if (auto* x = std::get_if<Call>(&s.v)) {
        apply(x->callee, subst);
        for (Operand& o : x->args) apply(o, subst);
      } else if (auto* x = std::get_if<Cond>(&s.v)) {
        apply(x->guard, subst);
        if (!x->guard.is_sym) {
          Block chosen = x->guard.lit != 0.0 ? std::move(x->then_block) : std::move(x->else_block);
          simplify(chosen, subst);
          for (Stmt& c : chosen.stmts) out.push_back(std::move(c));
          continue;
        }
        simplify(x->then_block, subst);
        simplify(x->else_block, subst);
      } else if (auto* x = std::get_if<FunDef>(&s.v)) {
        simplify(x->body, subst);
      } else if (auto* x = std::get_if<Return>(&s.v)) {
        apply(x->value, subst);
      }
      out.push_back(std::move(s));
    }
    b.stmts = std::move(out);
  }

  // Replacement operand when the binding is redundant; may also rewrite
  // the binding in place (x + x -> 2 * x).
  static std::optional<Operand> fold(Bind& x) {
    auto lit = [&](std::size_t i) { return !x.args[i].is_sym; };
    switch (x.op) {
      case Op::kCopy:
        return x.args[0];
      case Op::kAdd:
        if (lit(0) && lit(1)) return Operand::literal(x.args[0].lit + x.args[1].lit);
        // Zero of either sign: the result is equal (==) to the other operand.
        if (x.args[0].is_lit(0.0)) return x.args[1];
        if (x.args[1].is_lit(0.0)) return x.args[0];
        if (x.args[0].is_sym && x.args[0] == x.args[1]) {
          x.op = Op::kMul;
          x.args = {Operand::literal(2.0), x.args[1]};
        }
        return std::nullopt;
      case Op::kMul:
        if (lit(0) && lit(1)) return Operand::literal(x.args[0].lit * x.args[1].lit);
        if (x.args[0].is_lit(1.0)) return x.args[1];
        if (x.args[1].is_lit(1.0)) return x.args[0];
        return std::nullopt;
      case Op::kGreater:
        if (lit(0) && lit(1)) return Operand::literal(x.args[0].lit > x.args[1].lit ? 1.0 : 0.0);
        return std::nullopt;
      default:
        return std::nullopt;
    }
  }

  // Cells whose every use is a read/write statement directly in the
  // defining block become plain values.
  void promote_cells(Block& b) {
    for (Stmt& s : b.stmts) {
      if (auto* x = std::get_if<Cond>(&s.v)) {
        promote_cells(x->then_block);
        promote_cells(x->else_block);
      } else if (auto* x = std::get_if<FunDef>(&s.v)) {
        promote_cells(x->body);
      }
    }
    for (std::size_t i = 0; i < b.stmts.size(); ++i) {
      const auto* cn = std::get_if<CellNew>(&b.stmts[i].v);
      if (!cn || !confined(b, i, cn->dst)) continue;
      promote(b, i);
    }
  }

  static bool confined(const Block& b, std::size_t def, const Sym& cell) {
    for (std::size_t j = def + 1; j < b.stmts.size(); ++j) {
      const Stmt& s = b.stmts[j];
      if (const auto* x = std::get_if<CellRead>(&s.v)) {
        if (x->cell == cell) continue;
      } else if (const auto* x = std::get_if<CellAccum>(&s.v)) {
        if (x->cell == cell) {
          if (x->value.is_sym && x->value.sym == cell) return false;
          continue;
        }
      } else if (const auto* x = std::get_if<CellSet>(&s.v)) {
        if (x->cell == cell) {
          if (x->value.is_sym && x->value.sym == cell) return false;
          continue;
        }
      }
      bool used = false;
      for_each_use(s, [&](const Sym& u) { used = used || u == cell; });
      if (used) return false;
    }
    return true;
  }

  void promote(Block& b, std::size_t def) {
    const Sym cell = std::get<CellNew>(b.stmts[def].v).dst;
    Operand cur = std::get<CellNew>(b.stmts[def].v).init;
    std::vector<Stmt> out(std::make_move_iterator(b.stmts.begin()),
                          std::make_move_iterator(b.stmts.begin() + static_cast<long>(def)));
    for (std::size_t j = def + 1; j < b.stmts.size(); ++j) {
      Stmt& s = b.stmts[j];
      if (auto* x = std::get_if<CellRead>(&s.v); x && x->cell == cell) {
        out.push_back(Stmt{Bind{x->dst, Op::kCopy, {cur}}});
      } else if (auto* x = std::get_if<CellAccum>(&s.v); x && x->cell == cell) {
        Sym n = fresh(cell);
        out.push_back(Stmt{Bind{n, Op::kAdd, {cur, x->value}}});
        cur = Operand::symbol(n);
      } else if (auto* x = std::get_if<CellSet>(&s.v); x && x->cell == cell) {
        cur = x->value;
      } else {
        out.push_back(std::move(s));
      }
    }
    b.stmts = std::move(out);
  }

  bool eliminate_dead_code() {
    std::unordered_map<Sym, std::size_t> uses;
    std::unordered_map<Sym, std::size_t> reads;  // uses other than as a write target
    count(p_.entry.body, uses, reads);
    local_cells_cache_ = local_cells();
    // Writes through cell parameters are visible to the caller; only locally
    // allocated cells can lose their writes.
    for (const Sym& c : local_cells_cache_) reads.try_emplace(c, 0);
    for (auto& [sym, n] : reads)
      if (!local_cells_cache_.count(sym)) n = std::max<std::size_t>(n, 1);
    return sweep(p_.entry.body, uses, reads);
  }

  static void count(const Block& b, std::unordered_map<Sym, std::size_t>& uses,
                    std::unordered_map<Sym, std::size_t>& reads) {
    for (const Stmt& s : b.stmts) {
      for_each_use(s, [&](const Sym& u) { ++uses[u]; });
      // Write targets are not reads; everything else in this statement is.
      std::function<void(const Stmt&)> visit = [&](const Stmt& t) {
        if (const auto* x = std::get_if<CellAccum>(&t.v)) {
          use_operand(x->value, [&](const Sym& u) { ++reads[u]; });
        } else if (const auto* x = std::get_if<CellSet>(&t.v)) {
          use_operand(x->value, [&](const Sym& u) { ++reads[u]; });
        } else if (const auto* x = std::get_if<Cond>(&t.v)) {
          use_operand(x->guard, [&](const Sym& u) { ++reads[u]; });
          for (const Stmt& c : x->then_block.stmts) visit(c);
          for (const Stmt& c : x->else_block.stmts) visit(c);
        } else if (const auto* x = std::get_if<FunDef>(&t.v)) {
          for (const Stmt& c : x->body.stmts) visit(c);
        } else {
          for_each_use(t, [&](const Sym& u) { ++reads[u]; });
        }
      };
      visit(s);
    }
  }

  std::unordered_set<Sym> local_cells() const {
    std::unordered_set<Sym> out;
    std::function<void(const Block&)> walk = [&](const Block& b) {
      for (const Stmt& s : b.stmts) {
        if (const auto* x = std::get_if<CellNew>(&s.v)) out.insert(x->dst);
        if (const auto* x = std::get_if<Cond>(&s.v)) {
          walk(x->then_block);
          walk(x->else_block);
        }
        if (const auto* x = std::get_if<FunDef>(&s.v)) walk(x->body);
      }
    };
    walk(p_.entry.body);
    return out;
  }

  static std::size_t uses_within(const Block& b, const Sym& name) {
    std::size_t n = 0;
    for_each_use(b, [&](const Sym& u) { n += u == name; });
    return n;
  }

  static bool sweep(Block& b, const std::unordered_map<Sym, std::size_t>& uses,
                    const std::unordered_map<Sym, std::size_t>& reads) {
    auto get = [](const std::unordered_map<Sym, std::size_t>& m, const Sym& s) {
      auto it = m.find(s);
      return it == m.end() ? std::size_t{0} : it->second;
    };
    bool changed = false;
    std::vector<Stmt> out;
    for (Stmt& s : b.stmts) {
      bool drop = false;
      if (const auto* x = std::get_if<Bind>(&s.v)) {
        drop = get(uses, x->dst) == 0;
      } else if (const auto* x = std::get_if<CellRead>(&s.v)) {
        drop = get(uses, x->dst) == 0;
      } else if (const auto* x = std::get_if<CellNew>(&s.v)) {
        drop = get(reads, x->dst) == 0;
      } else if (const auto* x = std::get_if<CellAccum>(&s.v)) {
        drop = reads.count(x->cell) && reads.at(x->cell) == 0;
      } else if (const auto* x = std::get_if<CellSet>(&s.v)) {
        drop = reads.count(x->cell) && reads.at(x->cell) == 0;
      } else if (auto* x = std::get_if<Cond>(&s.v)) {
        changed |= sweep(x->then_block, uses, reads);
        changed |= sweep(x->else_block, uses, reads);
        drop = x->then_block.stmts.empty() && x->else_block.stmts.empty();
      } else if (auto* x = std::get_if<FunDef>(&s.v)) {
        drop = get(uses, x->name) == uses_within(x->body, x->name);
        if (!drop) changed |= sweep(x->body, uses, reads);
      }
      if (drop) {
        changed = true;
      } else {
        out.push_back(std::move(s));
      }
    }
    b.stmts = std::move(out);
    return changed;
  }

  Program p_;
  std::unordered_set<Sym> names_;
  std::unordered_set<Sym> local_cells_cache_;
};

}  // namespace

Program optimize(const Program& p) { return Optimizer(p).run(); }

}  // namespace adlc::ir
