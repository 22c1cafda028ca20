// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adlc/anf.h"
#include "adlc/desugar.h"
#include "adlc/forward.h"
#include "adlc/gradcheck.h"
#include "adlc/ir.h"
#include "adlc/reverse.h"
#include "adlc/runtime.h"
#include "adlc/stage.h"
#include "adlc/syntax.h"
#include "adlc/tree.h"

namespace adlc {
namespace {

const char* kCubic = "(lam x (+ (* 2.0 x) (* (* x x) x)))";
const char* kSquare = "(lam x (* x x))";
const char* kIf = "(lam x (if (> x 0.0) (* (* -1.0 x) x) (* x x)))";
const char* kWhile = "(lam x (letrec loop (lam t (if (> t 1.0) (app loop (* t 0.5)) t)) (app loop x)))";
const char* kPower = "(lam x (letrec p (lam n (if (> n 0.5) (* x (app p (+ n -1.0))) 1.0)) (app p 3.0)))";
const char* kAfterIf = "(lam x (* (if (> x 0.0) x (* x x)) (+ x 1.0)))";
const char* kTreeBody = "(lam l (lam r (lam v (* (* l r) v))))";
const char* kQuadratic = "(lam x (+ (+ (* x x) (* -6.0 x)) 9.0))";

const double kProbes[] = {-2.0, -1.0, 0.0, 1.0, 2.0};

bool rel_close(double got, double want, double tol) {
  return std::fabs(got - want) <= tol * std::fmax(1.0, std::fabs(want));
}

// Collects the first few problems of a criterion.
struct Findings {
  std::size_t count = 0;
  std::ostringstream text;
  void add(const std::string& what) {
    if (count++ < 3) text << (count > 1 ? "; " : "") << what;
  }
  bool ok() const { return count == 0; }
};

std::string at(const std::string& what, double x) {
  std::ostringstream s;
  s << what << " at " << format_real(x);
  return s.str();
}

std::size_t control_nodes(const Expr& e) {
  return count_kind(e, Kind::kShift) + count_kind(e, Kind::kReset);
}

std::vector<ExprPtr> corpus() {
  CorpusSpec spec;
  std::vector<ExprPtr> out;
  for (std::size_t i = 0; i < spec.count; ++i) out.push_back(random_program(spec, i));
  return out;
}

// ---------------------------------------------------------------------------

std::string worked_example(Findings& f) {
  ExprPtr src = parse(kCubic);
  for (Mode m : first_order_modes()) {
    auto g = make_gradient(src, m);
    for (double x : kProbes)
      if (!rel_close(g(x), 2 + 3 * x * x, 1e-10)) f.add(at(mode_name(m), x));
  }
  return "10 modes x 5 probes";
}

std::string second_order(Findings& f) {
  ExprPtr src = parse(kCubic);
  ArithFn fn = arith_fn(prepare(src));
  auto rev2 = make_gradient(src, Mode::kReverse2);
  auto fwd2 = make_gradient(src, Mode::kForward2);
  for (double x : kProbes) {
    double want = 6 * x;
    if (!rel_close(second_derivative_tagged(fn, x), want, 1e-9)) f.add(at("tagged nesting", x));
    if (!rel_close(grad_forward_over_reverse(fn, x), want, 1e-9)) f.add(at("forward-over-reverse", x));
    if (!rel_close(fwd2(x), want, 1e-9)) f.add(at("forward2", x));
    if (!rel_close(rev2(x), want, 1e-9)) f.add(at("reverse2", x));
  }
  return "forward2 (two constructions) and reverse2";
}

std::string perturbation(Findings& f) {
  PerturbationProbe p = perturbation_confusion_probe();
  if (p.naive_inner != 2.0) f.add("naive inner = " + format_real(p.naive_inner));
  if (p.tagged_inner != 1.0) f.add("tagged inner = " + format_real(p.tagged_inner));
  return "naive " + format_real(p.naive_inner) + ", tagged " + format_real(p.tagged_inner);
}

std::string control_flow(Findings& f) {
  auto check = [&](const std::string& name, double got, double unstaged, double want) {
    if (!rel_close(got, want, 1e-12)) f.add(name + " = " + format_real(got));
    if (got != unstaged) f.add(name + " differs from unstaged reverse");
  };
  ir::Program pif = stage_reverse(parse(kIf));
  ExprPtr fif = prepare(parse(kIf));
  for (double x : {2.0, -2.0})
    check(at("IF", x), ir::evaluate(pif, x), grad_reverse(fif, x, ReverseVariant::kMetaShift), -4.0);
  ir::Program pw = stage_reverse(parse(kWhile));
  check("WHILE at 8", ir::evaluate(pw, 8.0),
        grad_reverse(prepare(parse(kWhile)), 8.0, ReverseVariant::kMetaShift), 0.125);
  Tree t = node(3.0, leaf(), leaf());
  ir::Program pt = stage_tree(parse(kTreeBody));
  check("TREE at 2", ir::evaluate(pt, 2.0, t),
        grad_reverse(prepare(tree_fold_program(parse(kTreeBody), t)), 2.0, ReverseVariant::kMetaShift),
        12.0);
  return "IF -4, WHILE 0.125, TREE 12";
}

std::string corpus_crosscheck(Findings& f) {
  auto reports = crosscheck(CorpusSpec{}, kDefaultProbes);
  double worst = 0.0;
  for (const GradReport& r : reports) {
    worst = std::fmax(worst, r.max_deviation);
    if (!r.pass) f.add(r.program_id + " " + at("", r.x) + ": " + r.failure);
  }
  std::size_t passed = reports.size() - f.count;
  return std::to_string(passed) + "/" + std::to_string(reports.size()) +
         " checks, max deviation " + format_real(worst);
}

std::size_t count_if_in(const ir::Block& b, const std::function<bool(const ir::Stmt&)>& pred) {
  std::size_t n = 0;
  for (const ir::Stmt& s : b.stmts) {
    if (pred(s)) ++n;
    if (const auto* c = std::get_if<ir::Cond>(&s.v))
      n += count_if_in(c->then_block, pred) + count_if_in(c->else_block, pred);
    if (const auto* d = std::get_if<ir::FunDef>(&s.v)) n += count_if_in(d->body, pred);
  }
  return n;
}

std::string structure(Findings& f) {
  std::vector<ExprPtr> programs = corpus();
  for (const char* s : {kCubic, kSquare, kIf, kWhile, kPower, kAfterIf})
    programs.push_back(parse(s));
  programs.push_back(tree_fold_program(parse(kTreeBody), node(2.0, node(0.5, leaf(), leaf()), leaf())));

  std::size_t wavy_terms = 0;
  WavyHook hook = [&](const Expr& e) {
    ++wavy_terms;
    if (is_tail_redex(e)) f.add("redex left by a normalizing constructor: " + pretty(e));
  };
  for (const ExprPtr& src : programs) {
    ExprPtr p = prepare(src);
    if (control_nodes(*rev_transform_meta_shift(p, hook)) != 0) f.add("shift/reset in meta-shift output");
    if (control_nodes(*rev_transform_full_cps(p, hook)) != 0) f.add("shift/reset in full-CPS output");
    if (control_nodes(*reverse_wrapper(p, ReverseVariant::kMetaShift, hook)) != 0)
      f.add("shift/reset in meta-shift wrapper");
    if (control_nodes(*reverse_wrapper(p, ReverseVariant::kFullCps, hook)) != 0)
      f.add("shift/reset in full-CPS wrapper");
  }

  // The continuation of a conditional is generated once, not per branch.
  ir::Program pif = stage_reverse(parse(kIf));
  std::size_t seeds = count_if_in(pif.entry.body, [](const ir::Stmt& s) {
    return std::holds_alternative<ir::CellSet>(s.v);
  });
  if (seeds != 1) f.add("IF seeds the output adjoint " + std::to_string(seeds) + " times");
  ir::Program pafter = stage_reverse(parse(kAfterIf));
  // Work after the conditional: exactly one forward multiplication of the
  // branch result with (x + 1), whichever branch runs.
  std::size_t adds = count_if_in(pafter.entry.body, [](const ir::Stmt& s) {
    const auto* b = std::get_if<ir::Bind>(&s.v);
    return b && b->op == ir::Op::kAdd && b->args.size() == 2 && b->args[1].is_lit(1.0);
  });
  if (adds != 1) f.add("continuation after IF emitted " + std::to_string(adds) + " times");

  std::size_t loops = 0;
  for (const ir::FunDef* fn : ir::functions(stage_reverse(parse(kWhile)))) {
    if (fn->name.rfind("loop", 0) == 0) {
      ++loops;
      if (!ir::self_calls_in_tail_position(*fn)) f.add(fn->name + " has a non-tail self-call");
    }
  }
  if (loops == 0) f.add("WHILE produced no loop function");
  return std::to_string(programs.size()) + " programs, " + std::to_string(wavy_terms) +
         " normalized terms";
}

std::string optimization(Findings& f) {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> probe(-3.0, 3.0);
  std::vector<ExprPtr> programs = corpus();
  for (const char* s : {kCubic, kSquare, kIf, kWhile, kPower, kAfterIf}) programs.push_back(parse(s));
  std::size_t compared = 0;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    ir::Program p = stage_reverse(programs[i]);
    ir::Program o = ir::optimize(p);
    for (int k = 0; k < 20; ++k) {
      double x = probe(rng);
      ++compared;
      if (ir::evaluate(o, x) != ir::evaluate(p, x)) f.add(at("program " + std::to_string(i), x));
    }
  }
  ir::Program tp = stage_tree(parse(kTreeBody));
  ir::Program to = ir::optimize(tp);
  for (int k = 0; k < 20; ++k) {
    Tree t = node(probe(rng), node(probe(rng), leaf(), leaf()), leaf());
    double x = probe(rng);
    ++compared;
    if (ir::evaluate(to, x, t) != ir::evaluate(tp, x, t)) f.add(at("tree fold", x));
  }
  ir::Program sq = ir::optimize(stage_reverse(parse(kSquare)));
  std::size_t cells = ir::count_cell_ops(sq);
  if (cells != 0) f.add("square keeps " + std::to_string(cells) + " cell ops");
  if (ir::emit_c(sq).find("2 * in") == std::string::npos) f.add("square code lacks '2 * in'");
  return std::to_string(compared) + " probe comparisons, square: " + std::to_string(cells) +
         " cell ops";
}

std::string growth(Findings& f) {
  double worst_fwd = 0.0, worst_sym = 0.0;
  for (const ExprPtr& src : corpus()) {
    ExprPtr e = prepare(src);
    std::size_t n = node_count(*e);
    std::size_t nf = node_count(*fwd_transform(e));
    if (nf > 6 * n + 10) f.add("forward transform: " + std::to_string(nf) + " > 6*" + std::to_string(n) + "+10");
    worst_fwd = std::fmax(worst_fwd, double(nf) / n);

    ExprPtr body = anf(e->kids[0]);
    std::size_t na = node_count(*body);
    std::size_t ns = node_count(*symbolic_diff(body, e->name));
    if (ns > 6 * na + 10) f.add("symbolic: " + std::to_string(ns) + " > 6*" + std::to_string(na) + "+10");
    worst_sym = std::fmax(worst_sym, double(ns) / na);
  }
  std::ostringstream s;
  s.precision(3);
  s << "max ratio forward " << worst_fwd << ", symbolic " << worst_sym;
  return s.str();
}

std::string descent(Findings& f) {
  auto traj = gradient_descent(parse(kQuadratic), 0.0, 0.1, 100);
  double x = traj.back().first;
  if (!(std::fabs(x - 3.0) < 1e-3)) f.add("final x = " + format_real(x));
  if (!loss_nonincreasing(traj)) f.add("loss increased");
  return "final x " + format_real(x);
}

struct Criterion {
  const char* title;
  double budget_s;
  std::function<std::string(Findings&)> run;
};

}  // namespace
}  // namespace adlc

int main() {
  using namespace adlc;
  const Criterion criteria[] = {
      {"worked example 2x+x^3, all first-order modes", 1.0, worked_example},
      {"second derivative 6x", 1.0, second_order},
      {"perturbation confusion probe", 1.0, perturbation},
      {"staged control flow IF/WHILE/TREE", 1.0, control_flow},
      {"corpus cross-check, seed 42", 30.0, corpus_crosscheck},
      {"structural properties of transforms and staged IR", 0.0, structure},
      {"optimizer soundness and progress", 0.0, optimization},
      {"constant-factor growth bound", 0.0, growth},
      {"gradient descent on (x-3)^2", 1.0, descent},
  };
  int failed = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Findings f;
    std::string detail;
    auto start = std::chrono::steady_clock::now();
    try {
      detail = c.run(f);
    } catch (const std::exception& e) {
      f.add(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) f.add("took " + std::to_string(secs) + " s");
    bool ok = f.ok();
    if (!ok) ++failed;
    std::printf("%s %d %s (%s; %.3f s)%s%s\n", ok ? "PASS" : "FAIL", index, c.title, detail.c_str(),
                secs, ok ? "" : " :: ", ok ? "" : f.text.str().c_str());
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
