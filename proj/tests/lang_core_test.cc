#include <gtest/gtest.h>

#include "adlc/anf.h"
#include "adlc/desugar.h"
#include "adlc/eval.h"
#include "adlc/names.h"
#include "adlc/syntax.h"

namespace adlc {
namespace {

double run(const std::string& src) { return eval_real(prepare(parse(src))); }

TEST(Parse, Multiplication) {
  auto e = parse("(* 2.0 x)");
  ASSERT_EQ(e->kind, Kind::kMul);
  EXPECT_EQ(e->kid(0).kind, Kind::kConst);
  EXPECT_EQ(e->kid(0).value, 2.0);
  EXPECT_EQ(e->kid(1).name, "x");
}

TEST(Parse, Let) {
  auto e = parse("(let y (* x x) y)");
  EXPECT_TRUE(structurally_equal(*e, *let("y", mul(var("x"), var("x")), var("y"))));
}

TEST(Parse, UnknownForm) {
  try {
    parse("(foo x)");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_NE(std::string(err.what()).find("unknown form"), std::string::npos);
    EXPECT_EQ(err.line(), 1);
  }
}

TEST(Parse, ErrorPosition) {
  try {
    parse("(+ 1.0\n   )");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.line(), 2);
  }
}

TEST(Parse, CommentsAndUnit) {
  auto e = parse("; leading\n(pair () -1.5e2) ; trailing");
  EXPECT_EQ(e->kid(0).kind, Kind::kUnit);
  EXPECT_EQ(e->kid(1).value, -150.0);
}

TEST(Pretty, Basic) { EXPECT_EQ(pretty(*mul(real(2.0), var("x"))), "(* 2.0 x)"); }

TEST(Pretty, Shift) {
  EXPECT_EQ(pretty(*shift("k", app(var("k"), real(1.0)))), "(shift k (app k 1.0))");
}

TEST(Pretty, RoundTripAllForms) {
  const char* src =
      "(let r (ref 0.0) (seq (assign r 2.5e-7) (case (> (deref r) 1.0) a (fst (pair a "
      "()))"
      " b (snd (pair (inl b) (inr (reset (shift k (app k 0.1)))))))))";
  auto e = parse(src);
  auto again = parse(pretty(*e));
  EXPECT_TRUE(structurally_equal(*e, *again));
  auto sugar = parse("(letrec f (lam n (if (> n 0.0) (app f (+ n -1.0)) n)) (app f 3.0))");
  EXPECT_TRUE(structurally_equal(*sugar, *parse(pretty(*sugar))));
}

TEST(Pretty, LongLinesBreak) {
  ExprPtr e = var("x");
  for (int i = 0; i < 30; ++i) e = add(e, real(i + 0.25));
  std::string s = pretty(*e);
  EXPECT_NE(s.find('\n'), std::string::npos);
  EXPECT_TRUE(structurally_equal(*e, *parse(s)));
}

TEST(Freshen, RenamesShadowedBinders) {
  auto e = freshen(parse("(lam x (lam x x))"));
  ASSERT_EQ(e->kind, Kind::kLam);
  const Expr& inner = e->kid(0);
  EXPECT_NE(e->name, inner.name);
  EXPECT_EQ(inner.kid(0).name, inner.name);
  EXPECT_TRUE(satisfies_variable_convention(*e));
}

TEST(Freshen, Deterministic) {
  auto p = parse("(let y (* x x) (lam z (+ y z)))");
  EXPECT_TRUE(structurally_equal(*freshen(p, 7), *freshen(p, 7)));
}

TEST(Freshen, KeepsFreeVariables) {
  auto e = freshen(parse("(lam x_0 (+ x_0 x))"));
  EXPECT_EQ(free_vars(*e), std::vector<std::string>{"x"});
  EXPECT_TRUE(satisfies_variable_convention(*e));
}

TEST(Desugar, IfBecomesCase) {
  auto e = desugar(parse("(if b t e)"));
  ASSERT_EQ(e->kind, Kind::kCase);
  EXPECT_EQ(e->kid(1).name, "t");
  EXPECT_EQ(e->kid(2).name, "e");
}

TEST(Desugar, LetrecSelfApplication) {
  auto e = desugar(parse("(letrec f (lam x x) (app f 1.0))"));
  // let f0 = lam f1. lam x. let f = f1 f1 in x in let f = f0 f0 in f 1.0
  ASSERT_EQ(e->kind, Kind::kLet);
  const Expr& def = e->kid(0);
  ASSERT_EQ(def.kind, Kind::kLam);
  const Expr& inner = def.kid(0);
  ASSERT_EQ(inner.kind, Kind::kLam);
  EXPECT_EQ(inner.name, "x");
  const Expr& self = inner.kid(0);
  ASSERT_EQ(self.kind, Kind::kLet);
  EXPECT_EQ(self.name, "f");
  EXPECT_EQ(self.kid(0).kind, Kind::kApp);
  EXPECT_EQ(self.kid(0).kid(0).name, def.name);
  EXPECT_EQ(self.kid(0).kid(1).name, def.name);
  const Expr& body = e->kid(1);
  EXPECT_EQ(body.kind, Kind::kLet);
  EXPECT_EQ(body.kid(0).kid(0).name, e->name);
}

TEST(Desugar, CoreUnchanged) {
  auto e = parse("(let y (* x x) (case (inl y) a a b b))");
  EXPECT_EQ(desugar(e), e);
}

TEST(Eval, Arithmetic) { EXPECT_EQ(run("(* 2.0 3.0)"), 6.0); }

TEST(Eval, ShiftTwice) {
  EXPECT_EQ(run("(reset (+ 1.0 (shift k (app k (app k 1.0)))))"), 3.0);
}

TEST(Eval, TopLevelIsReset) { EXPECT_EQ(run("(+ 1.0 (shift k (app k 1.0)))"), 2.0); }

TEST(Eval, ShiftDiscardsContinuation) {
  EXPECT_EQ(run("(+ 100.0 (reset (+ 1.0 (shift k 5.0))))"), 105.0);
}

TEST(Eval, References) {
  EXPECT_EQ(run("(let r (ref 0.0) (seq (assign r 2.0) (deref r)))"), 2.0);
}

TEST(Eval, Laws) {
  EXPECT_EQ(run("(reset 4.5)"), 4.5);
  EXPECT_EQ(run("(reset (shift k (app k 4.5)))"), 4.5);
}

TEST(Eval, IfAndGreater) {
  EXPECT_EQ(run("(if (> 2.0 1.0) 10.0 20.0)"), 10.0);
  EXPECT_EQ(run("(if (> 1.0 1.0) 10.0 20.0)"), 20.0);
}

TEST(Eval, LetrecLoop) {
  EXPECT_EQ(run("(letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f 8.0))"), 1.0);
}

TEST(Eval, DeepRecursionDoesNotUseHostStack) {
  EXPECT_EQ(run("(letrec f (lam n (if (> n 0.0) (+ 1.0 (app f (+ n -1.0))) 0.0)) (app f 200000.0))"),
            200000.0);
}

TEST(Eval, DistinctErrors) {
  auto kind_of = [](const std::string& src) {
    try {
      eval(prepare(parse(src)));
    } catch (const EvalError& err) {
      return err.kind();
    }
    ADD_FAILURE() << "no error for " << src;
    return EvalErrorKind::kSugar;
  };
  EXPECT_EQ(kind_of("x"), EvalErrorKind::kUnboundVariable);
  EXPECT_EQ(kind_of("(app 1.0 2.0)"), EvalErrorKind::kNotAFunction);
  EXPECT_EQ(kind_of("(fst 1.0)"), EvalErrorKind::kNotAPair);
  EXPECT_EQ(kind_of("(case 1.0 a a b b)"), EvalErrorKind::kNotASum);
  EXPECT_EQ(kind_of("(deref 1.0)"), EvalErrorKind::kNotACell);
  EXPECT_EQ(kind_of("(+ () 1.0)"), EvalErrorKind::kNotAReal);
}

TEST(Eval, StepLimit) {
  EvalOptions opts;
  opts.max_steps = 1000;
  auto loop = prepare(parse("(letrec f (lam n (app f n)) (app f 1.0))"));
  try {
    eval(loop, {}, {}, opts);
    FAIL();
  } catch (const EvalError& err) {
    EXPECT_EQ(err.kind(), EvalErrorKind::kStepLimit);
  }
}

TEST(Eval, StoreIdsIncrease) {
  auto r = eval(prepare(parse("(pair (ref 1.0) (ref 2.0))")));
  EXPECT_EQ(r.store.next_id(), 2u);
  EXPECT_EQ(show(r.value), "(pair #0 #1)");
}

TEST(Anf, CubicChain) {
  auto a = anf(parse("(+ (* 2.0 x) (* (* x x) x))"));
  EXPECT_TRUE(is_anf(*a));
  // y1 = 2*x; y2 = x*x; y3 = y2*x; y4 = y1+y3; y4
  int lets = 0;
  for (const Expr* c = a.get(); c->kind == Kind::kLet; c = &c->kid(1)) ++lets;
  EXPECT_EQ(lets, 4);
  EXPECT_EQ(a->kid(0).kind, Kind::kMul);
  EXPECT_EQ(a->kid(1).kid(0).kind, Kind::kMul);
}

TEST(Anf, Atom) {
  auto a = anf(var("x"));
  EXPECT_EQ(a->kind, Kind::kVar);
}

TEST(Anf, RejectsNonArithmetic) { EXPECT_THROW(anf(parse("(lam x x)")), NotArithmetic); }

TEST(Anf, PreservesMeaningExactly) {
  auto p = parse("(let a (* x 1.1) (+ (* a (+ a x)) (let b (* a a) (* b 0.3))))");
  auto a = anf(p);
  for (double x : {-2.0, 0.5, 1.7}) {
    Env env = Env().extend("x", make_real(x));
    EXPECT_EQ(eval_real(p, env), eval_real(a, env));
  }
}

}  // namespace
}  // namespace adlc
