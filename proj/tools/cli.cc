#include "cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "adlc/anf.h"
#include "adlc/desugar.h"
#include "adlc/eval.h"
#include "adlc/forward.h"
#include "adlc/gradcheck.h"
#include "adlc/ir.h"
#include "adlc/reverse.h"
#include "adlc/runtime.h"
#include "adlc/stage.h"
#include "adlc/syntax.h"
#include "adlc/tree.h"
#include "json.hpp"

namespace adlc::cli {

namespace {

using nlohmann::json;

struct Config {
  std::string file;
  std::string mode;
  std::vector<double> at;
  std::optional<double> h;
  std::optional<double> tol;
  std::string opt = "all";
  std::optional<std::size_t> depth_limit;
  std::uint64_t seed = 42;
  std::string output;
  bool json = false;
  std::string tree_file;
  double rate = 0.1;
  std::size_t steps = 100;
};

// Errors the user caused (bad file, unusable program); reported and mapped
// to exit code 1.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExprPtr load_program(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw UserError(path + ":" + e.what());
  }
}

Tree load_tree(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse_tree(text);
  } catch (const ParseError& e) {
    throw UserError(path + ":" + e.what());
  }
}

ir::EvalLimits limits(const Config& c) {
  ir::EvalLimits lim = ir::default_limits();
  if (c.depth_limit) lim.max_depth = *c.depth_limit;
  return lim;
}

Mode mode_of(const std::string& name) {
  std::optional<Mode> m = parse_mode(name);
  if (!m) throw UserError("unknown mode: " + name);
  return *m;
}

std::vector<double> probes(const Config& c, std::vector<double> fallback) {
  return c.at.empty() ? fallback : c.at;
}

int cmd_parse(const Config& c, std::ostream& out) {
  out << pretty(*load_program(c.file)) << "\n";
  return kOk;
}

int cmd_eval(const Config& c, std::ostream& out) {
  ExprPtr e = prepare(load_program(c.file));
  if (!c.at.empty()) {
    if (e->kind != Kind::kLam) throw UserError("--at needs a one-argument lambda");
    for (double x : c.at) out << format_real(apply_real(e, x)) << "\n";
    return kOk;
  }
  out << show(eval(e).value) << "\n";
  return kOk;
}

int cmd_anf(const Config& c, std::ostream& out) {
  ExprPtr e = load_program(c.file);
  if (e->kind == Kind::kLam) {
    out << pretty(*lam(e->name, anf(e->kids[0]))) << "\n";
  } else {
    out << pretty(*anf(e)) << "\n";
  }
  return kOk;
}

int cmd_transform(const Config& c, std::ostream& out) {
  ExprPtr e = prepare(load_program(c.file));
  ExprPtr t;
  if (c.mode == "forward") {
    t = fwd_transform(e);
  } else if (c.mode == "reverse-target-shift") {
    t = rev_transform_target_shift(e);
  } else if (c.mode == "reverse-meta-shift") {
    t = rev_transform_meta_shift(e);
  } else {
    t = rev_transform_full_cps(e);
  }
  out << pretty(*t) << "\n";
  return kOk;
}

int cmd_grad(const Config& c, std::ostream& out) {
  ExprPtr source = load_program(c.file);
  Mode m = mode_of(c.mode);
  std::function<double(double)> g;
  if (!c.tree_file.empty()) {
    Tree tree = load_tree(c.tree_file);
    if (m == Mode::kStaged) {
      ir::Program p = stage_tree(source);
      ir::EvalLimits lim = limits(c);
      g = [p, tree, lim](double x) { return ir::evaluate(p, x, tree, lim); };
    } else {
      g = make_gradient(tree_fold_program(source, tree), m, limits(c));
    }
  } else {
    g = make_gradient(source, m, limits(c));
  }
  std::vector<double> xs = probes(c, {1.0});
  if (c.json) {
    json arr = json::array();
    for (double x : xs) arr.push_back({{"x", x}, {"mode", c.mode}, {"gradient", g(x)}});
    out << arr.dump(2) << "\n";
    return kOk;
  }
  for (double x : xs) out << format_real(g(x)) << "\n";
  return kOk;
}

json report_json(const GradReport& r) {
  json grads = json::object();
  json errors = json::object();
  for (const ModeResult& m : r.results) {
    if (m.value) {
      grads[mode_name(m.mode)] = *m.value;
    } else {
      grads[mode_name(m.mode)] = nullptr;
      errors[mode_name(m.mode)] = m.error;
    }
  }
  json j = {{"program", r.program_id},   {"x", r.x},
            {"gradients", grads},        {"finite_diff", r.finite_difference},
            {"max_deviation", r.max_deviation}, {"pass", r.pass}};
  if (!errors.empty()) j["errors"] = errors;
  if (!r.pass) j["failure"] = r.failure;
  return j;
}

int cmd_check(const Config& c, std::ostream& out) {
  CheckOptions opt;
  opt.h = c.h;
  if (c.tol) opt.tol_fd = *c.tol;
  std::vector<GradReport> reports;
  if (c.file.empty()) {
    CorpusSpec spec;
    spec.seed = c.seed;
    reports = crosscheck(spec, probes(c, kDefaultProbes), opt);
  } else {
    std::string id = std::filesystem::path(c.file).stem().string();
    reports = check_program(id, load_program(c.file), probes(c, kDefaultProbes), opt);
  }
  bool all = std::all_of(reports.begin(), reports.end(), [](const GradReport& r) { return r.pass; });
  if (c.json) {
    json arr = json::array();
    for (const GradReport& r : reports) arr.push_back(report_json(r));
    out << arr.dump(2) << "\n";
  } else {
    out << tsv_header() << "\n";
    for (const GradReport& r : reports) out << to_tsv(r) << "\n";
  }
  return all ? kOk : kCheckFailed;
}

int cmd_codegen(const Config& c, std::ostream& out) {
  ExprPtr source = load_program(c.file);
  ir::Program p;
  if (!c.tree_file.empty()) {
    load_tree(c.tree_file);  // validated only; the tree is a runtime input
    p = stage_tree(source);
  } else {
    p = stage_reverse(source);
  }
  if (c.opt == "all") p = ir::optimize(p);
  std::string code = ir::emit_c(p);
  if (c.output.empty()) {
    out << code;
    return kOk;
  }
  std::ofstream f(c.output, std::ios::binary);
  if (!f) throw UserError("cannot write " + c.output);
  f << code;
  return kOk;
}

int cmd_descend(const Config& c, std::ostream& out) {
  if (!(c.rate >= 0.0)) throw UserError("--rate must be non-negative");
  double x0 = c.at.empty() ? 0.0 : c.at.front();
  Mode m = c.mode.empty() ? Mode::kReverseMetaShift : mode_of(c.mode);
  auto traj = gradient_descent(load_program(c.file), x0, c.rate, c.steps, m);
  if (c.json) {
    json arr = json::array();
    for (std::size_t i = 0; i < traj.size(); ++i)
      arr.push_back({{"step", i}, {"x", traj[i].first}, {"loss", traj[i].second}});
    out << arr.dump(2) << "\n";
    return kOk;
  }
  out << "step\tx\tloss\n";
  for (std::size_t i = 0; i < traj.size(); ++i)
    out << i << '\t' << format_real(traj[i].first) << '\t' << format_real(traj[i].second) << "\n";
  return kOk;
}

struct DemoRow {
  std::string example;
  std::string method;
  double expected;
  double got;
  double tol;  // relative; 0 means exact
};

int cmd_demo(const Config& c, std::ostream& out) {
  const char* cubic = "(lam x (+ (* 2.0 x) (* (* x x) x)))";
  const char* cond = "(lam x (if (> x 0.0) (* (* -1.0 x) x) (* x x)))";
  const char* loop =
      "(lam x (letrec loop (lam t (if (> t 1.0) (app loop (* t 0.5)) t)) (app loop x)))";
  const char* body = "(lam l (lam r (lam v (* (* l r) v))))";
  const char* quad = "(lam x (+ (+ (* x x) (* -6.0 x)) 9.0))";

  std::vector<DemoRow> rows;
  ExprPtr f = parse(cubic);
  for (Mode m : first_order_modes())
    rows.push_back({"2x+x^3 at 1", mode_name(m), 5.0, gradient(f, m, 1.0), 1e-10});
  for (Mode m : {Mode::kForward2, Mode::kReverse2})
    rows.push_back({"2x+x^3, 2nd order at 2", mode_name(m), 12.0, gradient(f, m, 2.0), 1e-9});
  PerturbationProbe probe = perturbation_confusion_probe();
  rows.push_back({"perturbation confusion inner", "fixed tag", 2.0, probe.naive_inner, 0});
  rows.push_back({"perturbation confusion inner", "fresh tags", 1.0, probe.tagged_inner, 0});
  ir::EvalLimits lim = limits(c);
  rows.push_back({"IF at 2", "staged", -4.0, ir::evaluate(stage_reverse(parse(cond)), 2.0, nullptr, lim), 1e-12});
  rows.push_back({"IF at -2", "staged", -4.0, ir::evaluate(stage_reverse(parse(cond)), -2.0, nullptr, lim), 1e-12});
  rows.push_back({"WHILE at 8", "staged", 0.125, ir::evaluate(stage_reverse(parse(loop)), 8.0, nullptr, lim), 1e-12});
  rows.push_back({"TREE v=3 at 2", "staged", 12.0,
                  staged_tree_gradient(parse(body), node(3.0, leaf(), leaf()), 2.0, lim), 1e-12});
  std::string code = ir::emit_c(ir::optimize(stage_reverse(parse("(lam x (* x x))"))));
  rows.push_back({"x*x codegen has '2 * in'", "staged+opt", 1.0,
                  code.find("2 * in") != std::string::npos ? 1.0 : 0.0, 0});
  auto traj = gradient_descent(parse(quad), 0.0, 0.1, 100);
  rows.push_back({"descent (x-3)^2, 100 steps", "reverse-meta-shift", 3.0, traj.back().first, 1e-3});

  bool all = true;
  if (c.json) {
    json arr = json::array();
    for (const DemoRow& r : rows) {
      bool ok = std::fabs(r.got - r.expected) <= r.tol * std::max(1.0, std::fabs(r.expected));
      all = all && ok;
      arr.push_back({{"example", r.example}, {"method", r.method}, {"expected", r.expected},
                     {"got", r.got}, {"ok", ok}});
    }
    out << arr.dump(2) << "\n";
  } else {
    out << "example\tmethod\texpected\tgot\tok\n";
    for (const DemoRow& r : rows) {
      bool ok = std::fabs(r.got - r.expected) <= r.tol * std::max(1.0, std::fabs(r.expected));
      all = all && ok;
      out << r.example << '\t' << r.method << '\t' << format_real(r.expected) << '\t'
          << format_real(r.got) << '\t' << (ok ? "yes" : "NO") << "\n";
    }
  }
  return all ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Differentiable programming with delimited continuations", "adlc"};
  app.require_subcommand(1);

  auto add_file = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("file", c.file, "Program file (S-expression)");
    if (required) o->required();
  };
  auto add_at = [&](CLI::App* sub) {
    sub->add_option("--at", c.at, "Probe point(s), comma-separated")->delimiter(',')->allow_extra_args(false);
  };
  auto add_depth = [&](CLI::App* sub) {
    sub->add_option("--depth-limit", c.depth_limit, "Recursion limit for staged code")
        ->check(CLI::PositiveNumber);
  };
  auto add_json = [&](CLI::App* sub) { sub->add_flag("--json", c.json, "Machine-readable output"); };

  const std::vector<std::string> transform_modes = {"forward", "reverse-target-shift",
                                                    "reverse-meta-shift", "reverse-cps-full"};
  std::vector<std::string> grad_modes;
  for (Mode m : first_order_modes()) grad_modes.push_back(mode_name(m));
  grad_modes.push_back("forward2");
  grad_modes.push_back("reverse2");

  auto* p_parse = app.add_subcommand("parse", "Parse and pretty-print a program");
  add_file(p_parse);

  auto* p_eval = app.add_subcommand("eval", "Evaluate a program, or apply it at --at points");
  add_file(p_eval);
  add_at(p_eval);

  auto* p_anf = app.add_subcommand("anf", "A-normal form of an arithmetic program");
  add_file(p_anf);

  auto* p_transform = app.add_subcommand("transform", "Print a differentiating transformation");
  add_file(p_transform);
  p_transform->add_option("--mode", c.mode, "Transformation")
      ->required()
      ->check(CLI::IsMember(transform_modes));

  auto* p_grad = app.add_subcommand("grad", "Derivative at --at points");
  add_file(p_grad);
  p_grad->add_option("--mode", c.mode, "Differentiation method")
      ->required()
      ->check(CLI::IsMember(grad_modes));
  add_at(p_grad);
  add_depth(p_grad);
  add_json(p_grad);
  p_grad->add_option("--tree", c.tree_file, "Tree input; the program is then a fold body");

  auto* p_check = app.add_subcommand("check", "Cross-check all methods against each other");
  add_file(p_check, false);
  add_at(p_check);
  p_check->set_help_flag("--help", "Print this help message and exit");
  p_check->add_option("--h", c.h, "Finite-difference step (default 1e-6*max(1,|x|))")
      ->check(CLI::PositiveNumber);
  p_check->add_option("--tol", c.tol, "Relative tolerance against finite differences")
      ->check(CLI::PositiveNumber);
  p_check->add_option("--seed", c.seed, "Corpus seed when no file is given");
  add_json(p_check);

  auto* p_codegen = app.add_subcommand("codegen", "Emit staged gradient code");
  add_file(p_codegen);
  p_codegen->add_option("--opt", c.opt, "Optimization level")->check(CLI::IsMember({"none", "all"}));
  p_codegen->add_option("-o,--output", c.output, "Output file (default stdout)");
  p_codegen->add_option("--tree", c.tree_file, "Treat the program as a tree fold body");

  auto* p_descend = app.add_subcommand("descend", "Gradient descent from --at (default 0)");
  add_file(p_descend);
  add_at(p_descend);
  p_descend->add_option("--rate", c.rate, "Learning rate")->check(CLI::NonNegativeNumber);
  p_descend->add_option("--steps", c.steps, "Number of steps");
  p_descend->add_option("--mode", c.mode, "Gradient method")->check(CLI::IsMember(grad_modes));
  add_json(p_descend);

  auto* p_demo = app.add_subcommand("demo", "Run the worked examples and print a table");
  add_depth(p_demo);
  add_json(p_demo);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kProgramError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "parse") return cmd_parse(c, out);
    if (name == "eval") return cmd_eval(c, out);
    if (name == "anf") return cmd_anf(c, out);
    if (name == "transform") return cmd_transform(c, out);
    if (name == "grad") return cmd_grad(c, out);
    if (name == "check") return cmd_check(c, out);
    if (name == "codegen") return cmd_codegen(c, out);
    if (name == "descend") return cmd_descend(c, out);
    if (name == "demo") return cmd_demo(c, out);
  } catch (const std::exception& e) {
    err << "adlc: " << e.what() << "\n";
    return kProgramError;
  }
  return kProgramError;
}

}  // namespace adlc::cli
