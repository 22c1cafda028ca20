#include "adlc/runtime.h"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace adlc {

double grad_dual(const std::function<Dual(Dual)>& f, double x0) { return f(Dual{x0, 1.0}).d; }

// --- tagged duals ----------------------------------------------------------

TaggedNum::TaggedNum(double c)
    : node_(std::make_shared<const Node>(Node{0, c, nullptr, nullptr})) {}

TaggedNum TaggedNum::dual(TaggedNum primal, TaggedNum tangent, std::uint64_t tag) {
  return TaggedNum(std::make_shared<const Node>(
      Node{tag, 0.0, std::move(primal.node_), std::move(tangent.node_)}));
}

TaggedNum TaggedNum::primal(std::uint64_t tag) const {
  return node_->tag == tag && tag != 0 ? TaggedNum(node_->x) : *this;
}

TaggedNum TaggedNum::tangent(std::uint64_t tag) const {
  return node_->tag == tag && tag != 0 ? TaggedNum(node_->d) : TaggedNum(0.0);
}

double TaggedNum::value() const {
  const Node* n = node_.get();
  while (n->tag != 0) n = n->x.get();
  return n->c;
}

TaggedNum operator+(const TaggedNum& a, const TaggedNum& b) {
  std::uint64_t t = std::max(a.tag(), b.tag());
  if (t == 0) return TaggedNum(a.node_->c + b.node_->c);
  return TaggedNum::dual(a.primal(t) + b.primal(t), a.tangent(t) + b.tangent(t), t);
}

TaggedNum operator*(const TaggedNum& a, const TaggedNum& b) {
  std::uint64_t t = std::max(a.tag(), b.tag());
  if (t == 0) return TaggedNum(a.node_->c * b.node_->c);
  TaggedNum ax = a.primal(t), bx = b.primal(t);
  return TaggedNum::dual(ax * bx, a.tangent(t) * bx + b.tangent(t) * ax, t);
}

namespace {
std::atomic<std::uint64_t> tag_counter{1};
constexpr std::uint64_t kFixedTag = 1;
}  // namespace

std::uint64_t next_tag() { return ++tag_counter; }

TaggedNum grad_tagged(const std::function<TaggedNum(TaggedNum)>& f, const TaggedNum& x,
                      bool tagged) {
  std::uint64_t tag = tagged ? next_tag() : kFixedTag;
  TaggedNum y = f(TaggedNum::dual(x, TaggedNum(1.0), tag));
  return y.tangent(tag);
}

PerturbationProbe perturbation_confusion_probe() {
  PerturbationProbe p{};
  for (bool tagged : {false, true}) {
    double inner_value = 0.0;
    TaggedNum outer = grad_tagged(
        [&](TaggedNum x) {
          TaggedNum should_be_one =
              grad_tagged([&](TaggedNum y) { return x + y; }, TaggedNum(1.0), tagged);
          inner_value = should_be_one.value();
          return x * should_be_one;
        },
        TaggedNum(1.0), tagged);
    (tagged ? p.tagged_inner : p.naive_inner) = inner_value;
    (tagged ? p.tagged_outer : p.naive_outer) = outer.value();
  }
  return p;
}

// --- reverse, CPS ----------------------------------------------------------

double grad_cps(const RevFn<double>& f, double x0, std::vector<AdjointUpdate>* trace) {
  return grad_cps_generic<double>(f, x0, 1.0, trace);
}

double grad_forward_over_reverse(const RevFn<Dual>& f, double x0) {
  return grad_cps_generic<Dual>(f, Dual{x0, 1.0}, Dual{1.0, 0.0}).d;
}

// --- reverse, tape ---------------------------------------------------------

Tape::Num Tape::make(double x) {
  adj_.push_back(0.0);
  return {x, adj_.size() - 1};
}

Tape::Num Tape::add(const Num& a, const Num& b) {
  Num y = make(a.x + b.x);
  entries_.push_back({TapeOp::kAdd, a.id, b.id, y.id, a.x, b.x});
  return y;
}

Tape::Num Tape::mul(const Num& a, const Num& b) {
  Num y = make(a.x * b.x);
  entries_.push_back({TapeOp::kMul, a.id, b.id, y.id, a.x, b.x});
  return y;
}

void Tape::accumulate(std::size_t id, double delta, std::vector<AdjointUpdate>* trace) {
  adj_[id] = adj_[id] + delta;
  if (trace != nullptr) trace->push_back({id, adj_[id]});
}

void Tape::replay(std::vector<AdjointUpdate>* trace) {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    double dy = adj_[it->y];
    if (it->op == TapeOp::kAdd) {
      accumulate(it->a, dy, trace);
      accumulate(it->b, dy, trace);
    } else {
      accumulate(it->a, dy * it->bx, trace);
      accumulate(it->b, dy * it->ax, trace);
    }
  }
}

double grad_tape(const std::function<Tape::Num(Tape&, Tape::Num)>& f, double x0,
                 std::vector<AdjointUpdate>* trace) {
  Tape tape;
  Tape::Num z = tape.make(x0);
  Tape::Num r = f(tape, z);
  tape.adjoint(r) = 1.0;
  tape.replay(trace);
  return tape.adjoint(z);
}

// --- reverse, purely functional ---------------------------------------------

AdjointMap merge(const AdjointMap& a, const AdjointMap& b) {
  AdjointMap out = a;
  for (const auto& [id, v] : b) {
    auto [it, inserted] = out.emplace(id, v);
    if (!inserted) it->second = it->second + v;
  }
  return out;
}

double lookup(const AdjointMap& m, std::size_t id) {
  auto it = m.find(id);
  return it == m.end() ? 0.0 : it->second;
}

AdjointMap fconst(double c, std::size_t next, const FCont& k) { return k(FNum{c, next}, next + 1); }

AdjointMap fadd(const FNum& a, const FNum& b, std::size_t next, const FCont& k) {
  FNum y{a.x + b.x, next};
  AdjointMap m = k(y, next + 1);
  double dy = lookup(m, y.id);
  AdjointMap m1 = merge(m, {{a.id, dy}});
  return merge(m1, {{b.id, dy}});
}

AdjointMap fmul(const FNum& a, const FNum& b, std::size_t next, const FCont& k) {
  FNum y{a.x * b.x, next};
  AdjointMap m = k(y, next + 1);
  double dy = lookup(m, y.id);
  AdjointMap m1 = merge(m, {{a.id, dy * b.x}});
  return merge(m1, {{b.id, dy * a.x}});
}

double grad_functional(
    const std::function<AdjointMap(FNum, std::size_t, const FCont&)>& f, double x0) {
  FNum z{x0, 0};
  AdjointMap m = f(z, 1, [](FNum y, std::size_t) { return AdjointMap{{y.id, 1.0}}; });
  return lookup(m, z.id);
}

// --- interpreting arithmetic programs --------------------------------------

ArithFn arith_fn(const ExprPtr& f) {
  if (f->kind != Kind::kLam) {
    throw std::invalid_argument("expected a one-argument function (lam x e)");
  }
  if (!is_arithmetic(f->kid(0))) {
    throw std::invalid_argument(
        "the runtimes accept only constants, variables, +, * and let in the body");
  }
  return ArithFn{f->name, f->kids[0]};
}

namespace {

template <class T>
using Bindings = std::vector<std::pair<std::string, T>>;

template <class T>
const T& find(const Bindings<T>& env, const std::string& name) {
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    if (it->first == name) return it->second;
  }
  throw std::invalid_argument("unbound variable '" + name + "'");
}

// Direct-style interpreter; `ops` supplies lift/add/mul.
template <class T, class Ops>
T direct(const Expr& e, Bindings<T>& env, Ops& ops) {
  switch (e.kind) {
    case Kind::kConst:
      return ops.lift(e.value);
    case Kind::kVar:
      return find(env, e.name);
    case Kind::kAdd: {
      T a = direct(e.kid(0), env, ops);
      T b = direct(e.kid(1), env, ops);
      return ops.add(a, b);
    }
    case Kind::kMul: {
      T a = direct(e.kid(0), env, ops);
      T b = direct(e.kid(1), env, ops);
      return ops.mul(a, b);
    }
    case Kind::kLet: {
      T v = direct(e.kid(0), env, ops);
      env.emplace_back(e.name, std::move(v));
      T r = direct(e.kid(1), env, ops);
      env.pop_back();
      return r;
    }
    default:
      throw std::invalid_argument(std::string("unsupported form '") + kind_name(e.kind) + "'");
  }
}

template <class T>
void cps(const Expr& e, const Bindings<RevNum<T>>& env, RevContext<T>& ctx,
         const typename RevContext<T>::Cont& k) {
  using Num = RevNum<T>;
  switch (e.kind) {
    case Kind::kConst:
      k(ctx.make(T{e.value}));
      return;
    case Kind::kVar:
      k(find(env, e.name));
      return;
    case Kind::kAdd:
    case Kind::kMul: {
      bool is_add = e.kind == Kind::kAdd;
      cps<T>(e.kid(0), env, ctx, [&](Num a) {
        cps<T>(e.kid(1), env, ctx, [&](Num b) {
          if (is_add) {
            ctx.add(a, b, k);
          } else {
            ctx.mul(a, b, k);
          }
        });
      });
      return;
    }
    case Kind::kLet:
      cps<T>(e.kid(0), env, ctx, [&](Num v) {
        Bindings<Num> inner = env;
        inner.emplace_back(e.name, v);
        cps<T>(e.kid(1), inner, ctx, k);
      });
      return;
    default:
      throw std::invalid_argument(std::string("unsupported form '") + kind_name(e.kind) + "'");
  }
}

AdjointMap functional(const Expr& e, const Bindings<FNum>& env, std::size_t next,
                      const FCont& k) {
  switch (e.kind) {
    case Kind::kConst:
      return fconst(e.value, next, k);
    case Kind::kVar:
      return k(find(env, e.name), next);
    case Kind::kAdd:
    case Kind::kMul: {
      bool is_add = e.kind == Kind::kAdd;
      return functional(e.kid(0), env, next, [&](FNum a, std::size_t n1) {
        return functional(e.kid(1), env, n1, [&](FNum b, std::size_t n2) {
          return is_add ? fadd(a, b, n2, k) : fmul(a, b, n2, k);
        });
      });
    }
    case Kind::kLet:
      return functional(e.kid(0), env, next, [&](FNum v, std::size_t n1) {
        Bindings<FNum> inner = env;
        inner.emplace_back(e.name, v);
        return functional(e.kid(1), inner, n1, k);
      });
    default:
      throw std::invalid_argument(std::string("unsupported form '") + kind_name(e.kind) + "'");
  }
}

struct DualOps {
  Dual lift(double c) { return Dual{c, 0.0}; }
  Dual add(Dual a, Dual b) { return a + b; }
  Dual mul(Dual a, Dual b) { return a * b; }
};

struct TaggedOps {
  TaggedNum lift(double c) { return TaggedNum(c); }
  TaggedNum add(const TaggedNum& a, const TaggedNum& b) { return a + b; }
  TaggedNum mul(const TaggedNum& a, const TaggedNum& b) { return a * b; }
};

struct TapeOps {
  Tape& tape;
  Tape::Num lift(double c) { return tape.make(c); }
  Tape::Num add(Tape::Num a, Tape::Num b) { return tape.add(a, b); }
  Tape::Num mul(Tape::Num a, Tape::Num b) { return tape.mul(a, b); }
};

}  // namespace

Dual run_dual(const ArithFn& f, Dual x) {
  Bindings<Dual> env{{f.param, x}};
  DualOps ops;
  return direct(*f.body, env, ops);
}

TaggedNum run_tagged(const ArithFn& f, const TaggedNum& x) {
  Bindings<TaggedNum> env{{f.param, x}};
  TaggedOps ops;
  return direct(*f.body, env, ops);
}

Tape::Num run_tape(const ArithFn& f, Tape& tape, Tape::Num x) {
  Bindings<Tape::Num> env{{f.param, x}};
  TapeOps ops{tape};
  return direct(*f.body, env, ops);
}

void run_cps(const ArithFn& f, RevContext<double>& ctx, RevNum<double> x,
             const RevContext<double>::Cont& k) {
  cps<double>(*f.body, {{f.param, x}}, ctx, k);
}

void run_cps_dual(const ArithFn& f, RevContext<Dual>& ctx, RevNum<Dual> x,
                  const RevContext<Dual>::Cont& k) {
  cps<Dual>(*f.body, {{f.param, x}}, ctx, k);
}

AdjointMap run_functional(const ArithFn& f, FNum x, std::size_t next, const FCont& k) {
  return functional(*f.body, {{f.param, x}}, next, k);
}

double grad_dual(const ArithFn& f, double x0) { return run_dual(f, Dual{x0, 1.0}).d; }

double grad_cps(const ArithFn& f, double x0, std::vector<AdjointUpdate>* trace) {
  return grad_cps(
      [&](RevContext<double>& ctx, RevNum<double> x, const RevContext<double>::Cont& k) {
        run_cps(f, ctx, x, k);
      },
      x0, trace);
}

double grad_tape(const ArithFn& f, double x0, std::vector<AdjointUpdate>* trace) {
  return grad_tape([&](Tape& t, Tape::Num x) { return run_tape(f, t, x); }, x0, trace);
}

double grad_functional(const ArithFn& f, double x0) {
  return grad_functional(
      [&](FNum x, std::size_t next, const FCont& k) { return run_functional(f, x, next, k); },
      x0);
}

double grad_forward_over_reverse(const ArithFn& f, double x0) {
  return grad_forward_over_reverse(
      [&](RevContext<Dual>& ctx, RevNum<Dual> x, const RevContext<Dual>::Cont& k) {
        run_cps_dual(f, ctx, x, k);
      },
      x0);
}

double second_derivative_tagged(const ArithFn& f, double x0) {
  auto df = [&](TaggedNum x) {
    return grad_tagged([&](TaggedNum y) { return run_tagged(f, y); }, x);
  };
  return grad_tagged(df, TaggedNum(x0)).value();
}

}  // namespace adlc
