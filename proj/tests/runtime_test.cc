#include <gtest/gtest.h>

#include "adlc/runtime.h"
#include "oracles.h"

namespace adlc {
namespace {

using oracle::program;

TEST(Dual, Square) {
  EXPECT_EQ(grad_dual([](Dual x) { return x * x; }, 3.0), 6.0);
}

TEST(Dual, CubicMatchesAnalytic) {
  auto f = [](Dual x) { return Dual{2.0, 0.0} * x + x * x * x; };
  for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0, 0.3}) {
    EXPECT_DOUBLE_EQ(grad_dual(f, x), oracle::cubic_d1(x));
  }
}

TEST(Dual, Constant) { EXPECT_EQ(grad_dual([](Dual) { return Dual{4.0, 0.0}; }, 9.0), 0.0); }

TEST(Cps, Examples) {
  auto sq = arith_fn(program(oracle::kSquare));
  auto cubic = arith_fn(program(oracle::kCubic));
  auto id = arith_fn(program(oracle::kIdentity));
  EXPECT_EQ(grad_cps(sq, 3.0), 6.0);
  EXPECT_EQ(grad_cps(cubic, 1.0), 5.0);
  EXPECT_EQ(grad_cps(id, 9.0), 1.0);
}

TEST(Cps, HandWrittenCombinators) {
  RevFn<double> f = [](RevContext<double>& c, RevNum<double> x, const RevContext<double>::Cont& k) {
    c.mul(x, x, k);
  };
  EXPECT_EQ(grad_cps(f, 3.0), 6.0);
}

TEST(Tape, ExamplesMatchCps) {
  for (const char* src : {oracle::kSquare, oracle::kCubic, oracle::kIdentity, oracle::kConstant}) {
    auto f = arith_fn(program(src));
    for (double x : oracle::kProbes) EXPECT_EQ(grad_tape(f, x), grad_cps(f, x)) << src;
  }
  EXPECT_EQ(grad_tape(arith_fn(program(oracle::kSquare)), 3.0), 6.0);
  EXPECT_EQ(grad_tape(arith_fn(program(oracle::kCubic)), 1.0), 5.0);
}

TEST(Tape, EmptyReplayIsNoOp) {
  Tape t;
  auto x = t.make(2.0);
  t.adjoint(x) = 0.5;
  t.replay();
  EXPECT_EQ(t.adjoint(x), 0.5);
  EXPECT_TRUE(t.entries().empty());
}

TEST(Tape, UpdateSequenceEqualsCps) {
  auto f = arith_fn(program(
      "(lam x (let a (* x 1.5) (let b (+ a x) (let c (* b a) (+ (* c c) (* 0.5 b))))))"));
  std::vector<AdjointUpdate> cps_trace, tape_trace;
  double g1 = grad_cps(f, 0.7, &cps_trace);
  double g2 = grad_tape(f, 0.7, &tape_trace);
  EXPECT_EQ(g1, g2);
  ASSERT_EQ(cps_trace.size(), tape_trace.size());
  for (std::size_t i = 0; i < cps_trace.size(); ++i) {
    EXPECT_EQ(cps_trace[i].id, tape_trace[i].id);
    EXPECT_EQ(cps_trace[i].value, tape_trace[i].value);
  }
}

TEST(Functional, Examples) {
  EXPECT_EQ(grad_functional(arith_fn(program(oracle::kSquare)), 3.0), 6.0);
  EXPECT_EQ(grad_functional(arith_fn(program(oracle::kIdentity)), 1.0), 1.0);
  auto cubic = arith_fn(program(oracle::kCubic));
  for (double x : oracle::kProbes) EXPECT_EQ(grad_functional(cubic, x), grad_cps(cubic, x));
}

TEST(Functional, MergeIsPointwiseSum) {
  AdjointMap m = merge({{1, 1.0}}, {{1, 2.0}, {2, 3.0}});
  EXPECT_EQ(m, (AdjointMap{{1, 3.0}, {2, 3.0}}));
}

TEST(Functional, MergeLaws) {
  // Dyadic values keep the sums exact, so equality is the law itself.
  std::vector<AdjointMap> maps = {{}, {{0, 0.5}}, {{0, 1.25}, {3, -2.0}}, {{3, 4.0}, {7, 0.125}}};
  for (const auto& a : maps) {
    EXPECT_EQ(merge(a, {}), a);
    EXPECT_EQ(merge({}, a), a);
    for (const auto& b : maps) {
      EXPECT_EQ(merge(a, b), merge(b, a));
      for (const auto& c : maps) EXPECT_EQ(merge(merge(a, b), c), merge(a, merge(b, c)));
    }
  }
  EXPECT_EQ(lookup({{1, 2.0}}, 5), 0.0);
}

TEST(ForwardOverReverse, SecondDerivative) {
  auto cubic = arith_fn(program(oracle::kCubic));
  EXPECT_EQ(grad_forward_over_reverse(cubic, 1.0), 6.0);
  for (double x : oracle::kProbes) {
    EXPECT_TRUE(oracle::rel_close(grad_forward_over_reverse(cubic, x), oracle::cubic_d2(x), 1e-12));
  }
  auto sq = arith_fn(program(oracle::kSquare));
  for (double x : {-3.0, 0.0, 5.0}) EXPECT_EQ(grad_forward_over_reverse(sq, x), 2.0);
}

TEST(Tagged, SecondDerivative) {
  auto cubic = arith_fn(program(oracle::kCubic));
  EXPECT_EQ(second_derivative_tagged(cubic, 1.0), 6.0);
  for (double x : oracle::kProbes) {
    EXPECT_TRUE(oracle::rel_close(second_derivative_tagged(cubic, x), oracle::cubic_d2(x), 1e-12));
  }
}

TEST(Tagged, DistinctTags) {
  auto a = next_tag();
  auto b = next_tag();
  EXPECT_LT(a, b);
}

TEST(Tagged, PerturbationConfusion) {
  PerturbationProbe p = perturbation_confusion_probe();
  EXPECT_EQ(p.naive_inner, 2.0);
  EXPECT_EQ(p.naive_outer, 2.0);
  EXPECT_EQ(p.tagged_inner, 1.0);
  EXPECT_EQ(p.tagged_outer, 1.0);
}

TEST(ArithFn, RejectsNonArithmetic) {
  EXPECT_THROW(arith_fn(program("(lam x (pair x x))")), std::invalid_argument);
  EXPECT_THROW(arith_fn(program("(* 2.0 3.0)")), std::invalid_argument);
}

}  // namespace
}  // namespace adlc
