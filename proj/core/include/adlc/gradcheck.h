#ifndef ADLC_GRADCHECK_H_
#define ADLC_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adlc/expr.h"
#include "adlc/ir.h"
#include "adlc/tree.h"

namespace adlc {

// Central difference (f(x0+h) - f(x0-h)) / 2h.
double finite_diff(const std::function<double(double)>& f, double x0, double h);
// 1e-6 * max(1, |x0|).
double default_step(double x0);

enum class Mode {
  kDual,
  kForward,   // forward transform
  kSymbolic,  // symbolic differentiation of the ANF body
  kCps,
  kTape,
  kFunctional,
  kReverseTargetShift,
  kReverseMetaShift,
  kReverseFullCps,
  kStaged,
  kForward2,  // second derivative, nested forward mode
  kReverse2,  // second derivative, reverse transform applied twice
};

const char* mode_name(Mode m);  // "dual", "forward", ..., "reverse-meta-shift"
std::optional<Mode> parse_mode(const std::string& s);
// First-order modes, in report order.
const std::vector<Mode>& first_order_modes();

// Modes whose results must agree bit for bit; the two families differ only
// in the order adjoint/tangent contributions are summed.
enum class ModeClass { kForwardFamily, kReverseFamily, kSecondOrder };
ModeClass mode_class(Mode m);

class ModeNotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Derivative of the one-argument function `source` (parsed, sugar allowed)
// at a point, with all per-program preparation done once. Runtime modes
// (dual, cps, tape, functional) and symbolic need an arithmetic body;
// staged needs a program without references or control operators. Throws
// ModeNotApplicable otherwise.
// `limits` applies to the staged mode's IR evaluation.
std::function<double(double)> make_gradient(const ExprPtr& source, Mode m,
                                            const ir::EvalLimits& limits = ir::default_limits());
double gradient(const ExprPtr& source, Mode m, double x0);

// Gradient of x -> fold(tree) by the staged tree interpreter.
double staged_tree_gradient(const ExprPtr& body, const Tree& tree, double x0,
                            const ir::EvalLimits& limits = ir::default_limits());

// Value of `source` at a point.
std::function<double(double)> make_value(const ExprPtr& source);

// Corpus of straight-line programs: a let chain y_t = p ⊕ q with ⊕ in
// {+, *}; each parameter is a constant, the input, or an earlier y_j. At
// most one parameter per operation is an earlier y_j, which bounds the
// polynomial degree by the number of operations.
struct CorpusSpec {
  std::uint64_t seed = 42;
  std::size_t count = 200;
  std::size_t max_ops = 12;
  double weight_constant = 0.25;
  double weight_input = 0.35;
  double weight_prior = 0.40;
  double constant_min = 0.5;  // constants are ±[min, max]
  double constant_max = 2.0;
};

// (lam x (let y1 ... (let yn ... yn))), deterministic in (spec, index).
ExprPtr random_program(const CorpusSpec& spec, std::size_t index);

inline const std::vector<double> kDefaultProbes = {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0};

struct CheckOptions {
  std::optional<double> h;     // default_step when unset
  double tol_fd = 1e-4;        // against finite differences, relative
  double tol_cross = 1e-10;    // between the two families, relative
};

struct ModeResult {
  Mode mode;
  std::optional<double> value;
  std::string error;  // set when the mode failed on an applicable program
};

struct GradReport {
  std::string program_id;
  double x = 0.0;
  std::vector<ModeResult> results;  // applicable modes only
  double finite_difference = 0.0;
  double max_deviation = 0.0;  // largest relative deviation among all pairs
  bool pass = false;
  std::string failure;  // first violated rule, empty when passing
};

// |a - b| / max(1, |b|)
double relative_deviation(double a, double b);

// Applies the agreement rules to already computed results: bitwise within
// a family, tol_cross across families, tol_fd against the finite
// difference, and no mode errors.
void assess(GradReport& r, const CheckOptions& opt);

GradReport check_program(const std::string& id, const ExprPtr& source, double x0,
                         const CheckOptions& opt = {});
std::vector<GradReport> check_program(const std::string& id, const ExprPtr& source,
                                      const std::vector<double>& probes,
                                      const CheckOptions& opt = {});
std::vector<GradReport> crosscheck(const CorpusSpec& spec, const std::vector<double>& probes,
                                   const CheckOptions& opt = {});

// Header and one tab-separated line per report.
std::string tsv_header();
std::string to_tsv(const GradReport& r);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// x_{i+1} = x_i - rate * f'(x_i). Returns (x_i, f(x_i)) for i = 0..steps.
// Throws DivergenceError once |x| exceeds 1e12.
std::vector<std::pair<double, double>> gradient_descent(const ExprPtr& source, double x0,
                                                        double rate, std::size_t steps,
                                                        Mode mode = Mode::kReverseMetaShift);

// True if each loss is at most the previous one plus `slack`; the slack
// absorbs cancellation error when the loss is evaluated near its minimum.
bool loss_nonincreasing(const std::vector<std::pair<double, double>>& trajectory,
                        double slack = 1e-12);

}  // namespace adlc

#endif  // ADLC_GRADCHECK_H_
