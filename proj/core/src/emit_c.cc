#include <functional>
#include <sstream>

#include "adlc/ir.h"
#include "adlc/syntax.h"

namespace adlc::ir {

namespace {

std::string opnd(const Operand& o) { return o.is_sym ? o.sym : format_real(o.lit); }

bool calls_itself(const Block& b, const Sym& name) {
  for (const Stmt& s : b.stmts) {
    if (const auto* c = std::get_if<Call>(&s.v)) {
      if (c->callee == name) return true;
      for (const Operand& o : c->args)
        if (o.is_sym && o.sym == name) return true;
    } else if (const auto* c = std::get_if<Cond>(&s.v)) {
      if (calls_itself(c->then_block, name) || calls_itself(c->else_block, name)) return true;
    } else if (const auto* f = std::get_if<FunDef>(&s.v)) {
      if (calls_itself(f->body, name)) return true;
    }
  }
  return false;
}

const char* kCont = "std::function<void(double, double&)>";

std::string param_decl(const Param& p) {
  switch (p.kind) {
    case ParamKind::kValue: return "double " + p.name;
    case ParamKind::kCell: return "double& " + p.name;
    case ParamKind::kCont: return std::string(kCont) + " " + p.name;
    case ParamKind::kTree: return "const Tree* " + p.name;
  }
  return p.name;
}

std::string signature_type(const FunDef& f) {
  std::string s = "std::function<void(";
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (i) s += ", ";
    switch (f.params[i].kind) {
      case ParamKind::kValue: s += "double"; break;
      case ParamKind::kCell: s += "double&"; break;
      case ParamKind::kCont: s += kCont; break;
      case ParamKind::kTree: s += "const Tree*"; break;
    }
  }
  return s + ")>";
}

std::string params(const FunDef& f) {
  std::string s;
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (i) s += ", ";
    s += param_decl(f.params[i]);
  }
  return s;
}

class Emitter {
 public:
  std::string run(const Program& p) {
    out_ << "double " << p.entry.name << "(" << params(p.entry) << ") {\n";
    block(p.entry.body, 1);
    out_ << "}\n";
    return out_.str();
  }

 private:
  void line(int indent, const std::string& text) {
    out_ << std::string(static_cast<std::size_t>(indent) * 2, ' ') << text << "\n";
  }

  void block(const Block& b, int ind) {
    for (const Stmt& s : b.stmts) stmt(s, ind);
  }

  void stmt(const Stmt& s, int ind) {
    if (const auto* x = std::get_if<Bind>(&s.v)) {
      const std::string a = x->args.empty() ? "" : opnd(x->args[0]);
      switch (x->op) {
        case Op::kAdd: return line(ind, "double " + x->dst + " = " + a + " + " + opnd(x->args[1]) + ";");
        case Op::kMul: return line(ind, "double " + x->dst + " = " + a + " * " + opnd(x->args[1]) + ";");
        case Op::kGreater:
          return line(ind, "bool " + x->dst + " = " + a + " > " + opnd(x->args[1]) + ";");
        case Op::kCopy: return line(ind, "double " + x->dst + " = " + a + ";");
        case Op::kTreeIsNode: return line(ind, "bool " + x->dst + " = " + a + " != nullptr;");
        case Op::kTreeLeft: return line(ind, "const Tree* " + x->dst + " = " + a + "->left;");
        case Op::kTreeRight: return line(ind, "const Tree* " + x->dst + " = " + a + "->right;");
        case Op::kTreeValue: return line(ind, "double " + x->dst + " = " + a + "->value;");
      }
    } else if (const auto* x = std::get_if<CellNew>(&s.v)) {
      line(ind, "double " + x->dst + " = " + opnd(x->init) + ";");
    } else if (const auto* x = std::get_if<CellRead>(&s.v)) {
      line(ind, "double " + x->dst + " = " + x->cell + ";");
    } else if (const auto* x = std::get_if<CellAccum>(&s.v)) {
      line(ind, x->cell + " += " + opnd(x->value) + ";");
    } else if (const auto* x = std::get_if<CellSet>(&s.v)) {
      line(ind, x->cell + " = " + opnd(x->value) + ";");
    } else if (const auto* x = std::get_if<Call>(&s.v)) {
      std::string args;
      for (std::size_t i = 0; i < x->args.size(); ++i) args += (i ? ", " : "") + opnd(x->args[i]);
      line(ind, x->callee + "(" + args + ");");
    } else if (const auto* x = std::get_if<Cond>(&s.v)) {
      line(ind, "if (" + opnd(x->guard) + ") {");
      block(x->then_block, ind + 1);
      if (!x->else_block.stmts.empty()) {
        line(ind, "} else {");
        block(x->else_block, ind + 1);
      }
      line(ind, "}");
    } else if (const auto* x = std::get_if<FunDef>(&s.v)) {
      if (calls_itself(x->body, x->name)) {
        line(ind, signature_type(*x) + " " + x->name + ";");
        line(ind, x->name + " = [&](" + params(*x) + ") {");
      } else {
        line(ind, "auto " + x->name + " = [&](" + params(*x) + ") {");
      }
      block(x->body, ind + 1);
      line(ind, "};");
    } else if (const auto* x = std::get_if<Return>(&s.v)) {
      line(ind, "return " + opnd(x->value) + ";");
    }
  }

  std::ostringstream out_;
};

}  // namespace

std::string emit_c(const Program& p) { return Emitter().run(p); }

}  // namespace adlc::ir
