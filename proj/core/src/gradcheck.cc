#include "adlc/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "adlc/anf.h"
#include "adlc/desugar.h"
#include "adlc/eval.h"
#include "adlc/forward.h"
#include "adlc/ir.h"
#include "adlc/reverse.h"
#include "adlc/runtime.h"
#include "adlc/stage.h"
#include "adlc/syntax.h"

namespace adlc {

double finite_diff(const std::function<double(double)>& f, double x0, double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

double default_step(double x0) { return 1e-6 * std::max(1.0, std::fabs(x0)); }

namespace {

struct ModeInfo {
  Mode mode;
  const char* name;
  ModeClass cls;
};

const ModeInfo kModes[] = {
    {Mode::kDual, "dual", ModeClass::kForwardFamily},
    {Mode::kForward, "forward", ModeClass::kForwardFamily},
    {Mode::kSymbolic, "symbolic", ModeClass::kForwardFamily},
    {Mode::kCps, "cps", ModeClass::kReverseFamily},
    {Mode::kTape, "tape", ModeClass::kReverseFamily},
    {Mode::kFunctional, "functional", ModeClass::kReverseFamily},
    {Mode::kReverseTargetShift, "reverse-target-shift", ModeClass::kReverseFamily},
    {Mode::kReverseMetaShift, "reverse-meta-shift", ModeClass::kReverseFamily},
    {Mode::kReverseFullCps, "reverse-cps-full", ModeClass::kReverseFamily},
    {Mode::kStaged, "staged", ModeClass::kReverseFamily},
    {Mode::kForward2, "forward2", ModeClass::kSecondOrder},
    {Mode::kReverse2, "reverse2", ModeClass::kSecondOrder},
};

const ModeInfo& info(Mode m) {
  for (const ModeInfo& i : kModes)
    if (i.mode == m) return i;
  throw std::logic_error("unknown mode");
}

ExprPtr prepared_lambda(const ExprPtr& source) {
  ExprPtr f = prepare(source);
  if (f->kind != Kind::kLam) throw std::invalid_argument("program is not a one-argument lambda");
  return f;
}

ArithFn arithmetic(const ExprPtr& f, Mode m) {
  try {
    return arith_fn(f);
  } catch (const std::invalid_argument&) {
    throw ModeNotApplicable(std::string(mode_name(m)) + " needs a straight-line arithmetic body");
  }
}

std::function<double(double)> reverse_mode(const ExprPtr& f, ReverseVariant v) {
  ExprPtr w = reverse_wrapper(f, v);
  return [w](double x) { return eval_real(app(w, real(x))); };
}

}  // namespace

const char* mode_name(Mode m) { return info(m).name; }

std::optional<Mode> parse_mode(const std::string& s) {
  for (const ModeInfo& i : kModes)
    if (s == i.name) return i.mode;
  return std::nullopt;
}

const std::vector<Mode>& first_order_modes() {
  static const std::vector<Mode> modes = [] {
    std::vector<Mode> out;
    for (const ModeInfo& i : kModes)
      if (i.cls != ModeClass::kSecondOrder) out.push_back(i.mode);
    return out;
  }();
  return modes;
}

ModeClass mode_class(Mode m) { return info(m).cls; }

std::function<double(double)> make_gradient(const ExprPtr& source, Mode m,
                                            const ir::EvalLimits& limits) {
  ExprPtr f = prepared_lambda(source);
  switch (m) {
    case Mode::kDual: {
      ArithFn a = arithmetic(f, m);
      return [a](double x) { return grad_dual(a, x); };
    }
    case Mode::kCps: {
      ArithFn a = arithmetic(f, m);
      return [a](double x) { return grad_cps(a, x); };
    }
    case Mode::kTape: {
      ArithFn a = arithmetic(f, m);
      return [a](double x) { return grad_tape(a, x); };
    }
    case Mode::kFunctional: {
      ArithFn a = arithmetic(f, m);
      return [a](double x) { return grad_functional(a, x); };
    }
    case Mode::kSymbolic: {
      ArithFn a = arithmetic(f, m);
      ExprPtr d = symbolic_diff(anf(a.body), a.param);
      std::string p = a.param;
      return [d, p](double x) { return eval_real(d, Env().extend(p, make_real(x))); };
    }
    case Mode::kForward: {
      ExprPtr w = forward_wrapper(f);
      return [w](double x) { return eval_real(app(w, real(x))); };
    }
    case Mode::kReverseTargetShift:
      return reverse_mode(f, ReverseVariant::kTargetShift);
    case Mode::kReverseMetaShift:
      return reverse_mode(f, ReverseVariant::kMetaShift);
    case Mode::kReverseFullCps:
      return reverse_mode(f, ReverseVariant::kFullCps);
    case Mode::kStaged: {
      std::shared_ptr<ir::Program> p;
      try {
        p = std::make_shared<ir::Program>(stage_reverse(source));
      } catch (const StagingError& e) {
        throw ModeNotApplicable(std::string("staged: ") + e.what());
      }
      return [p, limits](double x) { return ir::evaluate(*p, x, nullptr, limits); };
    }
    case Mode::kForward2: {
      try {
        ArithFn a = arith_fn(f);
        return [a](double x) { return second_derivative_tagged(a, x); };
      } catch (const std::invalid_argument&) {
        // Forward transform applied to its own output.
        ExprPtr w = forward_wrapper(prepare(forward_wrapper(f)));
        return [w](double x) { return eval_real(app(w, real(x))); };
      }
    }
    case Mode::kReverse2: {
      ExprPtr g = prepare(reverse_wrapper(f, ReverseVariant::kMetaShift));
      return reverse_mode(g, ReverseVariant::kMetaShift);
    }
  }
  throw std::logic_error("unknown mode");
}

double gradient(const ExprPtr& source, Mode m, double x0) { return make_gradient(source, m)(x0); }

double staged_tree_gradient(const ExprPtr& body, const Tree& tree, double x0,
                            const ir::EvalLimits& limits) {
  return ir::evaluate(stage_tree(body), x0, tree, limits);
}

std::function<double(double)> make_value(const ExprPtr& source) {
  ExprPtr f = prepared_lambda(source);
  return [f](double x) { return apply_real(f, x); };
}

ExprPtr random_program(const CorpusSpec& spec, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::size_t max_ops = std::max<std::size_t>(spec.max_ops, 1);
  std::size_t ops = std::uniform_int_distribution<std::size_t>(1, max_ops)(rng);
  std::uniform_real_distribution<double> magnitude(spec.constant_min, spec.constant_max);
  std::bernoulli_distribution coin(0.5);

  auto param = [&](std::size_t t, bool allow_prior) -> ExprPtr {
    double wc = spec.weight_constant, wi = spec.weight_input;
    double wp = allow_prior && t > 1 ? spec.weight_prior : 0.0;
    if (wc + wi + wp <= 0.0) wc = 1.0;
    std::discrete_distribution<int> pick({wc, wi, wp});
    switch (pick(rng)) {
      case 0: {
        double c = magnitude(rng);
        return real(coin(rng) ? -c : c);
      }
      case 1:
        return var("x");
      default: {
        std::size_t j = std::uniform_int_distribution<std::size_t>(1, t - 1)(rng);
        return var("y" + std::to_string(j));
      }
    }
  };

  std::vector<ExprPtr> rhs;
  for (std::size_t t = 1; t <= ops; ++t) {
    bool is_mul = coin(rng);
    ExprPtr a = param(t, true);
    ExprPtr b = param(t, a->kind != Kind::kVar || a->name == "x");
    rhs.push_back(is_mul ? mul(a, b) : add(a, b));
  }
  ExprPtr body = var("y" + std::to_string(ops));
  for (std::size_t t = ops; t >= 1; --t) body = let("y" + std::to_string(t), rhs[t - 1], body);
  return lam("x", body);
}

double relative_deviation(double a, double b) {
  return std::fabs(a - b) / std::max(1.0, std::fabs(b));
}

void assess(GradReport& r, const CheckOptions& opt) {
  r.pass = true;
  r.failure.clear();
  r.max_deviation = 0.0;
  auto fail = [&](const std::string& why) {
    if (r.pass) r.failure = why;
    r.pass = false;
  };
  for (const ModeResult& m : r.results)
    if (!m.value) fail(std::string(mode_name(m.mode)) + " failed: " + m.error);

  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const ModeResult& a = r.results[i];
    if (!a.value) continue;
    double dev_fd = relative_deviation(*a.value, r.finite_difference);
    if (!(dev_fd <= opt.tol_fd))
      fail(std::string(mode_name(a.mode)) + " disagrees with finite differences");
    for (std::size_t j = i + 1; j < r.results.size(); ++j) {
      const ModeResult& b = r.results[j];
      if (!b.value) continue;
      double dev = relative_deviation(*a.value, *b.value);
      if (std::isnan(dev)) dev = INFINITY;
      r.max_deviation = std::max(r.max_deviation, dev);
      std::string pair = std::string(mode_name(a.mode)) + "/" + mode_name(b.mode);
      if (mode_class(a.mode) == mode_class(b.mode)) {
        if (!(*a.value == *b.value)) fail(pair + " not bitwise equal");
      } else if (!(dev <= opt.tol_cross)) {
        fail(pair + " deviate beyond tolerance");
      }
    }
  }
}

GradReport check_program(const std::string& id, const ExprPtr& source, double x0,
                         const CheckOptions& opt) {
  return check_program(id, source, std::vector<double>{x0}, opt).front();
}

std::vector<GradReport> check_program(const std::string& id, const ExprPtr& source,
                                      const std::vector<double>& probes,
                                      const CheckOptions& opt) {
  struct Prepared {
    Mode mode;
    std::function<double(double)> fn;
    std::string error;
  };
  std::vector<Prepared> modes;
  for (Mode m : first_order_modes()) {
    try {
      modes.push_back({m, make_gradient(source, m), {}});
    } catch (const ModeNotApplicable&) {
    } catch (const std::exception& e) {
      modes.push_back({m, nullptr, e.what()});
    }
  }
  std::function<double(double)> value = make_value(source);

  std::vector<GradReport> out;
  for (double x : probes) {
    GradReport r;
    r.program_id = id;
    r.x = x;
    for (const Prepared& p : modes) {
      ModeResult res{p.mode, std::nullopt, p.error};
      if (p.fn) {
        try {
          res.value = p.fn(x);
        } catch (const std::exception& e) {
          res.error = e.what();
        }
      }
      r.results.push_back(std::move(res));
    }
    try {
      r.finite_difference = finite_diff(value, x, opt.h.value_or(default_step(x)));
    } catch (const std::exception& e) {
      r.finite_difference = NAN;
    }
    assess(r, opt);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<GradReport> crosscheck(const CorpusSpec& spec, const std::vector<double>& probes,
                                   const CheckOptions& opt) {
  std::vector<GradReport> out;
  for (std::size_t i = 0; i < spec.count; ++i) {
    auto reports = check_program("p" + std::to_string(i), random_program(spec, i), probes, opt);
    for (GradReport& r : reports) out.push_back(std::move(r));
  }
  return out;
}

std::string tsv_header() {
  std::string h = "program\tx";
  for (Mode m : first_order_modes()) h += std::string("\t") + mode_name(m);
  return h + "\tfinite_diff\tmax_dev\tresult";
}

std::string to_tsv(const GradReport& r) {
  std::ostringstream os;
  os << r.program_id << '\t' << format_real(r.x);
  for (Mode m : first_order_modes()) {
    os << '\t';
    auto it = std::find_if(r.results.begin(), r.results.end(),
                           [m](const ModeResult& x) { return x.mode == m; });
    if (it == r.results.end()) {
      os << '-';
    } else if (it->value) {
      os << format_real(*it->value);
    } else {
      os << "error";
    }
  }
  os << '\t' << format_real(r.finite_difference) << '\t' << format_real(r.max_deviation) << '\t'
     << (r.pass ? "PASS" : "FAIL");
  if (!r.pass) os << '\t' << r.failure;
  return os.str();
}

std::vector<std::pair<double, double>> gradient_descent(const ExprPtr& source, double x0,
                                                        double rate, std::size_t steps, Mode mode) {
  if (!(rate >= 0.0)) throw std::invalid_argument("rate must be non-negative");
  std::function<double(double)> grad = make_gradient(source, mode);
  std::function<double(double)> value = make_value(source);
  std::vector<std::pair<double, double>> traj;
  double x = x0;
  traj.emplace_back(x, value(x));
  for (std::size_t i = 0; i < steps; ++i) {
    x = x - rate * grad(x);
    if (!(std::fabs(x) <= 1e12)) {
      throw DivergenceError("gradient descent diverged at step " + std::to_string(i + 1) +
                            " (x = " + format_real(x) + ")");
    }
    traj.emplace_back(x, value(x));
  }
  return traj;
}

bool loss_nonincreasing(const std::vector<std::pair<double, double>>& trajectory, double slack) {
  for (std::size_t i = 1; i < trajectory.size(); ++i)
    if (!(trajectory[i].second <= trajectory[i - 1].second + slack)) return false;
  return true;
}

}  // namespace adlc
