#include <gtest/gtest.h>

#include "adlc/eval.h"
#include "adlc/forward.h"
#include "adlc/reverse.h"
#include "adlc/runtime.h"
#include "oracles.h"

namespace adlc {
namespace {

using oracle::program;

const ReverseVariant kVariants[] = {ReverseVariant::kTargetShift, ReverseVariant::kMetaShift,
                                    ReverseVariant::kFullCps};

std::size_t control_nodes(const Expr& e) {
  return count_kind(e, Kind::kShift) + count_kind(e, Kind::kReset);
}

TEST(NormalizeTail, EtaOverVariable) {
  ExprPtr e = normalize_tail(lam("a", app(var("k"), var("a"))));
  EXPECT_EQ(e->kind, Kind::kVar);
  EXPECT_EQ(e->name, "k");
}

TEST(NormalizeTail, LetOfVariableRenames) {
  ExprPtr e = normalize_tail(let("y", var("y1"), add(var("y"), var("z"))));
  EXPECT_EQ(pretty(*e), "(+ y1 z)");
}

TEST(NormalizeTail, NonRedexUnchanged) {
  for (const char* src : {"(lam a (app k b))", "(lam a (app a a))", "(lam a (app (app k a) a))",
                          "(let y (+ a b) y)", "(app k a)"}) {
    ExprPtr e = parse(src);
    EXPECT_EQ(normalize_tail(e), e) << src;
  }
}

TEST(TargetShift, ConstantAndMul) {
  EXPECT_EQ(pretty(*rev_transform_target_shift(real(5.0))), "(pair 5.0 (ref 0.0))");
  ExprPtr t = rev_transform_target_shift(parse("(* a b)"));
  EXPECT_EQ(count_kind(*t, Kind::kShift), 1u);
  EXPECT_EQ(count_kind(*t, Kind::kAssign), 2u);
}

TEST(TargetShift, HomomorphicForms) {
  EXPECT_EQ(pretty(*rev_transform_target_shift(parse("(lam y (pair y (inl y)))"))),
            "(lam y (pair y (inl y)))");
}

TEST(MetaShift, LambdaTakesContinuation) {
  ExprPtr t = rev_transform_meta_shift(parse("(lam y y)"));
  ASSERT_EQ(t->kind, Kind::kLam);
  ASSERT_EQ(t->kid(0).kind, Kind::kLam);
  const Expr& body = t->kid(0).kid(0);
  EXPECT_EQ(body.kind, Kind::kApp);
  EXPECT_EQ(body.kid(0).name, t->kid(0).name);
}

TEST(MetaShift, TailCallPassesContinuationDirectly) {
  // (lam y (app f y)) -> (lam y (lam k (app (app f y) k)))
  ExprPtr t = rev_transform_meta_shift(parse("(lam y (app f y))"));
  const Expr& body = t->kid(0).kid(0);
  ASSERT_EQ(body.kind, Kind::kApp);
  EXPECT_EQ(body.kid(1).kind, Kind::kVar);
  EXPECT_EQ(body.kid(1).name, t->kid(0).name);
}

TEST(NoControlResidue, CubicAllWrappers) {
  ExprPtr f = program(oracle::kCubic);
  EXPECT_EQ(control_nodes(*reverse_wrapper(f, ReverseVariant::kMetaShift)), 0u);
  EXPECT_EQ(control_nodes(*reverse_wrapper(f, ReverseVariant::kFullCps)), 0u);
  EXPECT_GT(control_nodes(*reverse_wrapper(f, ReverseVariant::kTargetShift)), 0u);
}

TEST(FullCps, Examples) {
  EXPECT_EQ(pretty(*rev_transform_full_cps(unit())), "()");
  ExprPtr t = rev_transform_full_cps(parse("(app f a)"));
  EXPECT_EQ(t->kind, Kind::kApp);
}

TEST(GradReverse, AllVariantsExamples) {
  for (auto v : kVariants) {
    SCOPED_TRACE(variant_name(v));
    EXPECT_EQ(grad_reverse(program(oracle::kSquare), 3.0, v), 6.0);
    EXPECT_EQ(grad_reverse(program(oracle::kIdentity), 1.0, v), 1.0);
    EXPECT_EQ(grad_reverse(program(oracle::kCubic), 1.0, v), 5.0);
    EXPECT_EQ(grad_reverse(program(oracle::kCubic), 2.0, v), 14.0);
    EXPECT_EQ(grad_reverse(program(oracle::kConstant), 2.0, v), 0.0);
  }
}

TEST(GradReverse, VariantsBitwiseEqualAndMatchRuntime) {
  const char* srcs[] = {oracle::kCubic,
                        "(lam x (let a (* x 1.1) (let b (+ a x) (* (* b a) (+ b 0.3)))))",
                        "(lam x (let y (* x x) (let z (* y y) (* z (+ z x)))))"};
  for (const char* src : srcs) {
    ExprPtr f = program(src);
    auto af = arith_fn(f);
    for (double x : oracle::kProbes) {
      double g = grad_cps(af, x);
      for (auto v : kVariants) EXPECT_EQ(grad_reverse(f, x, v), g) << src << " " << variant_name(v);
    }
  }
}

TEST(GradReverse, ControlFlowRecursionAndState) {
  const char* src =
      "(lam x (let r (ref 0.0)"
      "  (seq (assign r (if (> x 0.0) (* (* x x) x) (* -1.0 x)))"
      "    (letrec f (lam n (if (> n 0.5) (app f (* n 0.5)) (* n (deref r)))) (app f x)))))";
  ExprPtr f = program(src);
  for (auto v : kVariants) {
    SCOPED_TRACE(variant_name(v));
    EXPECT_EQ(grad_reverse(f, 0.75, v), 2 * 0.75 * 0.75 * 0.75);
    EXPECT_EQ(grad_reverse(f, -2.0, v), 4.0);
    EXPECT_EQ(grad_reverse(f, 0.75, v), grad_forward(f, 0.75));
  }
}

TEST(GradReverse, HigherOrderFunctions) {
  // Closure capturing x, applied twice: f(x) = (x*x) * (x*3)
  const char* src =
      "(lam x (let g (lam u (* x u)) (let h (lam w (app g (app g w))) (app h 3.0))))";
  ExprPtr f = program(src);
  for (auto v : kVariants) {
    for (double x : oracle::kProbes) EXPECT_DOUBLE_EQ(grad_reverse(f, x, v), 6 * x);
  }
}

TEST(GradReverse, PrimalPreservation) {
  ExprPtr f = program(oracle::kCubic);
  for (auto v : kVariants) {
    for (double x : oracle::kProbes) {
      auto [value, grad] = value_and_grad_reverse(f, x, v);
      EXPECT_EQ(value, apply_real(f, x));
      EXPECT_EQ(grad, grad_reverse(f, x, v));
    }
  }
}

TEST(GradReverse, RejectsControlInSource) {
  EXPECT_THROW(rev_transform_meta_shift(parse("(reset 1.0)")), TransformError);
  EXPECT_THROW(rev_transform_full_cps(parse("(shift k 1.0)")), TransformError);
  EXPECT_THROW(rev_transform_target_shift(parse("(reset 1.0)")), TransformError);
}

TEST(WavyHook, NoRedexesSurvive) {
  std::size_t seen = 0;
  WavyHook hook = [&](const Expr& e) {
    ++seen;
    EXPECT_FALSE(is_tail_redex(e));
  };
  ExprPtr f = program(
      "(lam x (letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f (* x x))))");
  reverse_wrapper(f, ReverseVariant::kMetaShift, hook);
  reverse_wrapper(f, ReverseVariant::kFullCps, hook);
  EXPECT_GT(seen, 0u);
}

TEST(ReverseOfReverse, Examples) {
  for (auto outer : kVariants) {
    SCOPED_TRACE(variant_name(outer));
    EXPECT_EQ(grad_reverse_of_reverse(program(oracle::kCubic), 1.0, outer), 6.0);
    EXPECT_EQ(grad_reverse_of_reverse(program(oracle::kSquare), 5.0, outer), 2.0);
    for (double x : oracle::kProbes) {
      EXPECT_TRUE(oracle::rel_close(grad_reverse_of_reverse(program(oracle::kCubic), x, outer),
                                    oracle::cubic_d2(x), 1e-12));
    }
  }
}

}  // namespace
}  // namespace adlc
