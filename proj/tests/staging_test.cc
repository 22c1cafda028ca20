#include <gtest/gtest.h>

#include <random>

#include "adlc/reverse.h"
#include "adlc/runtime.h"
#include "adlc/stage.h"
#include "oracles.h"

namespace adlc {
namespace {

const char* kIf = "(lam x (if (> x 0.0) (* (* -1.0 x) x) (* x x)))";
const char* kWhile = "(lam x (letrec loop (lam t (if (> t 1.0) (app loop (* t 0.5)) t)) (app loop x)))";
const char* kPower = "(lam x (letrec p (lam n (if (> n 0.5) (* x (app p (+ n -1.0))) 1.0)) (app p 3.0)))";
const char* kTreeBody = "(lam l (lam r (lam v (* (* l r) v))))";

std::size_t count_matching(const ir::Block& b, const std::function<bool(const ir::Stmt&)>& pred) {
  std::size_t n = 0;
  for (const ir::Stmt& s : b.stmts) {
    if (pred(s)) ++n;
    if (const auto* c = std::get_if<ir::Cond>(&s.v))
      n += count_matching(c->then_block, pred) + count_matching(c->else_block, pred);
    if (const auto* f = std::get_if<ir::FunDef>(&s.v)) n += count_matching(f->body, pred);
  }
  return n;
}

const ir::FunDef* find_function(const ir::Program& p, const std::string& name) {
  for (const ir::FunDef* f : ir::functions(p))
    if (f->name == name) return f;
  return nullptr;
}

// Gradient of the fold with body l * r * v, computed with dual numbers.
Dual dual_fold(const Tree& t, Dual x) {
  if (!t) return x;
  Dual l = dual_fold(t->left, x);
  Dual r = dual_fold(t->right, x);
  return l * r * Dual{t->value, 0.0};
}

Tree random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> val(-1.5, 1.5);
  std::bernoulli_distribution stop(0.35);
  if (depth == 0 || stop(rng)) return leaf();
  double v = val(rng);
  Tree l = random_tree(rng, depth - 1);
  return node(v, l, random_tree(rng, depth - 1));
}

TEST(Staging, SquareGradient) {
  ir::Program p = stage_reverse(parse(oracle::kSquare));
  EXPECT_EQ(ir::evaluate(p, 3.0), 6.0);
  EXPECT_EQ(ir::evaluate(p, -1.5), -3.0);
}

TEST(Staging, SquareShape) {
  ir::Program p = stage_reverse(parse(oracle::kSquare));
  // One input cell, one output cell, two accumulations into the input cell.
  auto accums = count_matching(p.entry.body, [](const ir::Stmt& s) {
    return std::holds_alternative<ir::CellAccum>(s.v);
  });
  EXPECT_EQ(accums, 2u);
  EXPECT_EQ(ir::functions(p).size(), 1u);
}

TEST(Staging, SquareOptimizesToClosedForm) {
  ir::Program o = ir::optimize(stage_reverse(parse(oracle::kSquare)));
  std::string c = ir::emit_c(o);
  EXPECT_NE(c.find("2 * in"), std::string::npos) << c;
  EXPECT_EQ(ir::count_cell_ops(o), 0u);
  EXPECT_EQ(ir::evaluate(o, 3.0), 6.0);
}

TEST(Staging, CubicMatchesOracle) {
  ir::Program p = stage_reverse(parse(oracle::kCubic));
  for (double x : oracle::kProbes)
    EXPECT_TRUE(oracle::rel_close(ir::evaluate(p, x), oracle::cubic_d1(x), 1e-12)) << x;
}

TEST(Staging, ConditionalGradient) {
  ir::Program p = stage_reverse(parse(kIf));
  EXPECT_EQ(ir::evaluate(p, 2.0), -4.0);
  EXPECT_EQ(ir::evaluate(p, -2.0), -4.0);
}

TEST(Staging, ConditionalContinuationEmittedOnce) {
  ir::Program p = stage_reverse(parse(kIf));
  auto seeds = count_matching(p.entry.body, [](const ir::Stmt& s) {
    return std::holds_alternative<ir::CellSet>(s.v);
  });
  EXPECT_EQ(seeds, 1u);
  ASSERT_EQ(ir::functions(p).size(), 2u);
  const ir::FunDef* k = ir::functions(p)[1];
  ASSERT_EQ(k->body.stmts.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<ir::CellSet>(k->body.stmts[0].v));
}

TEST(Staging, ContinuationWithWorkAfterConditional) {
  // The multiplication after the conditional must appear once, inside k.
  const char* src = "(lam x (* (if (> x 0.0) x (* x x)) (+ x 1.0)))";
  ir::Program p = stage_reverse(parse(src));
  const ir::FunDef* k = ir::functions(p)[1];
  auto muls_in_k = count_matching(k->body, [](const ir::Stmt& s) {
    const auto* b = std::get_if<ir::Bind>(&s.v);
    return b && b->op == ir::Op::kMul && b->args[0].is_sym && b->args[0].sym == "x";
  });
  EXPECT_EQ(muls_in_k, 1u);
  for (double x : {-2.0, -0.5, 0.5, 2.0}) {
    double want = x > 0 ? 2 * x + 1 : 3 * x * x + 2 * x;
    EXPECT_TRUE(oracle::rel_close(ir::evaluate(p, x), want, 1e-12)) << x;
  }
}

TEST(Staging, LoopGradient) {
  ir::Program p = stage_reverse(parse(kWhile));
  EXPECT_EQ(ir::evaluate(p, 8.0), 0.125);
  EXPECT_EQ(ir::evaluate(p, 0.5), 1.0);
}

TEST(Staging, LoopSelfCallsAreTailCalls) {
  ir::Program p = stage_reverse(parse(kWhile));
  const ir::FunDef* loop = find_function(p, "loop");
  ASSERT_NE(loop, nullptr);
  EXPECT_TRUE(ir::self_calls_in_tail_position(*loop));
  ASSERT_EQ(loop->params.size(), 2u);
  EXPECT_EQ(loop->params[1].kind, ir::ParamKind::kCell);
  std::string c = ir::emit_c(p);
  EXPECT_NE(c.find("std::function<void(double, double&)> loop;"), std::string::npos) << c;
  EXPECT_NE(c.find("loop = [&](double x, double& d) {"), std::string::npos) << c;
}

TEST(Staging, TailCheckRejectsWorkAfterSelfCall) {
  ir::FunDef f{"loop", {}, {}};
  f.body.stmts.push_back(ir::Stmt{ir::Call{"loop", {}}});
  EXPECT_TRUE(ir::self_calls_in_tail_position(f));
  f.body.stmts.push_back(ir::Stmt{ir::Call{"other", {}}});
  EXPECT_FALSE(ir::self_calls_in_tail_position(f));
}

TEST(Staging, GeneralRecursionUsesContinuationParameter) {
  ir::Program p = stage_reverse(parse(kPower));
  for (double x : {-1.5, 0.5, 2.0}) EXPECT_EQ(ir::evaluate(p, x), 3 * x * x);
  bool has_cont_param = false;
  for (const ir::FunDef* f : ir::functions(p))
    for (const ir::Param& prm : f->params) has_cont_param |= prm.kind == ir::ParamKind::kCont;
  EXPECT_TRUE(has_cont_param);
}

TEST(Staging, TreeSingleNode) {
  ir::Program p = stage_tree(parse(kTreeBody));
  EXPECT_EQ(ir::evaluate(p, 2.0, node(3.0, leaf(), leaf())), 12.0);
  EXPECT_EQ(ir::evaluate(p, 2.0, leaf()), 1.0);
}

TEST(Staging, TreeMatchesDualOracle) {
  ir::Program p = stage_tree(parse(kTreeBody));
  Tree t = parse_tree("(node 2 (node 0.5 (leaf) (leaf)) (node -1 (leaf) (leaf)))");
  for (double x : oracle::kProbes) {
    Dual want = dual_fold(t, Dual{x, 1.0});
    EXPECT_TRUE(oracle::rel_close(ir::evaluate(p, x, t), want.d, 1e-12)) << x;
  }
  std::mt19937_64 rng(7);
  for (int i = 0; i < 25; ++i) {
    Tree r = random_tree(rng, 4);
    double x = 0.9;
    EXPECT_TRUE(oracle::rel_close(ir::evaluate(p, x, r), dual_fold(r, Dual{x, 1.0}).d, 1e-12))
        << print_tree(r);
  }
}

TEST(Staging, TreeShape) {
  ir::Program p = stage_tree(parse(kTreeBody));
  EXPECT_NE(find_function(p, "k_l"), nullptr);
  EXPECT_NE(find_function(p, "k_r"), nullptr);
  std::string c = ir::emit_c(p);
  EXPECT_NE(c.find("double snippet(const Tree* tree, double in)"), std::string::npos) << c;
}

TEST(Staging, BitwiseEqualToUnstagedReverse) {
  for (const char* src : {oracle::kSquare, oracle::kCubic, kIf, kWhile, kPower}) {
    ir::Program p = stage_reverse(parse(src));
    ExprPtr f = oracle::program(src);
    for (double x : {-2.0, -0.75, 0.3, 1.0, 2.5, 8.0}) {
      EXPECT_EQ(ir::evaluate(p, x), grad_reverse(f, x, ReverseVariant::kMetaShift))
          << src << " at " << x;
    }
  }
}

TEST(Staging, TreeBitwiseEqualToUnstagedReverse) {
  ir::Program p = stage_tree(parse(kTreeBody));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    Tree t = random_tree(rng, 3);
    ExprPtr f = prepare(tree_fold_program(parse(kTreeBody), t));
    for (double x : {-1.25, 0.5, 2.0})
      EXPECT_EQ(ir::evaluate(p, x, t), grad_reverse(f, x, ReverseVariant::kMetaShift))
          << print_tree(t) << " at " << x;
  }
}

TEST(Staging, OptimizationPreservesResults) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> probe(-4.0, 4.0);
  for (const char* src : {oracle::kSquare, oracle::kCubic, kIf, kWhile, kPower}) {
    ir::Program p = stage_reverse(parse(src));
    ir::Program o = ir::optimize(p);
    EXPECT_LE(ir::count_statements(o), ir::count_statements(p)) << src;
    for (int i = 0; i < 20; ++i) {
      double x = probe(rng);
      EXPECT_EQ(ir::evaluate(o, x), ir::evaluate(p, x)) << src << " at " << x;
    }
  }
  ir::Program tp = stage_tree(parse(kTreeBody));
  ir::Program to = ir::optimize(tp);
  for (int i = 0; i < 20; ++i) {
    Tree t = random_tree(rng, 3);
    double x = probe(rng);
    EXPECT_EQ(ir::evaluate(to, x, t), ir::evaluate(tp, x, t));
  }
}

TEST(Staging, OptimizationIsIdempotent) {
  for (const char* src : {oracle::kSquare, kIf, kWhile, kPower}) {
    ir::Program o = ir::optimize(stage_reverse(parse(src)));
    EXPECT_EQ(ir::to_string(ir::optimize(o)), ir::to_string(o)) << src;
  }
}

TEST(Staging, EmissionIsDeterministic) {
  for (const char* src : {oracle::kSquare, kIf, kWhile, kPower}) {
    EXPECT_EQ(ir::emit_c(stage_reverse(parse(src))), ir::emit_c(stage_reverse(parse(src))));
  }
}

TEST(Staging, DepthLimit) {
  ir::Program p = stage_reverse(parse(kWhile));
  EXPECT_THROW(ir::evaluate(p, 1024.0, nullptr, ir::EvalLimits{4}), ir::IrError);
  EXPECT_EQ(ir::evaluate(p, 1024.0, nullptr, ir::EvalLimits{64}), std::ldexp(1.0, -10));
}

TEST(Staging, DeepRecursionIsIterative) {
  // 20000 levels of recursion through closures; the evaluator keeps its own stack.
  const char* src =
      "(lam x (letrec p (lam n (if (> n 0.5) (+ x (app p (+ n -1.0))) 0.0)) (app p 20000.0)))";
  ir::Program p = stage_reverse(parse(src));
  EXPECT_EQ(ir::evaluate(p, 1.0), 20000.0);
}

TEST(Staging, RejectsUnsupportedForms) {
  EXPECT_THROW(stage_reverse(parse("(lam x (deref (ref x)))")), StagingError);
  EXPECT_THROW(stage_reverse(parse("(lam x (reset (+ x 1.0)))")), StagingError);
  EXPECT_THROW(stage_reverse(parse("(* 2.0 3.0)")), StagingError);
  EXPECT_THROW(stage_tree(parse("(lam l l)")), StagingError);
}

TEST(Staging, TreeParsing) {
  Tree t = parse_tree("(node 1.5 (leaf) (node -2 (leaf) (leaf)))");
  EXPECT_EQ(tree_size(t), 2u);
  EXPECT_EQ(print_tree(t), "(node 1.5 (leaf) (node -2 (leaf) (leaf)))");
  EXPECT_THROW(parse_tree("(node x (leaf) (leaf))"), ParseError);
  EXPECT_THROW(parse_tree("(leaf) extra"), ParseError);
  EXPECT_THROW(parse_tree("(tree)"), ParseError);
}

}  // namespace
}  // namespace adlc
