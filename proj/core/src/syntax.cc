#include "adlc/syntax.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>
#include <unordered_map>
#include <vector>

namespace adlc {

ParseError::ParseError(const std::string& msg, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + msg),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { kOpen, kClose, kAtom, kEnd };

struct Token {
  Tok type;
  std::string_view text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t{Tok::kEnd, {}, line_, col_};
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (c == '(' || c == ')') {
      t.type = c == '(' ? Tok::kOpen : Tok::kClose;
      t.text = src_.substr(pos_, 1);
      advance();
      return t;
    }
    std::size_t start = pos_;
    while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) &&
           src_[pos_] != '(' && src_[pos_] != ')' && src_[pos_] != ';') {
      advance();
    }
    t.type = Tok::kAtom;
    t.text = src_.substr(start, pos_ - start);
    return t;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_ident(std::string_view s) {
  if (s.empty()) return false;
  unsigned char c0 = static_cast<unsigned char>(s[0]);
  if (!std::isalpha(c0) && c0 != '_') return false;
  for (char ch : s.substr(1)) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (!std::isalnum(c) && c != '_' && c != '\'' && c != '-') return false;
  }
  return true;
}

bool looks_numeric(std::string_view s) {
  if (s.empty()) return false;
  char c = s[0];
  return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
         c == '.';
}

// Form name -> (number of leading identifier slots, arity). Identifier slots
// are checked positionally in parse_form.
enum class Form {
  kAdd, kMul, kGreater, kLam, kApp, kLet, kPair, kFst, kSnd, kInl, kInr,
  kCase, kRef, kDeref, kAssign, kShift, kReset, kIf, kLetrec, kSeq,
};

const std::unordered_map<std::string_view, Form>& forms() {
  static const std::unordered_map<std::string_view, Form> table = {
      {"+", Form::kAdd},       {"*", Form::kMul},       {">", Form::kGreater},
      {"lam", Form::kLam},     {"app", Form::kApp},     {"let", Form::kLet},
      {"pair", Form::kPair},   {"fst", Form::kFst},     {"snd", Form::kSnd},
      {"inl", Form::kInl},     {"inr", Form::kInr},     {"case", Form::kCase},
      {"ref", Form::kRef},     {"deref", Form::kDeref}, {"assign", Form::kAssign},
      {"shift", Form::kShift}, {"reset", Form::kReset}, {"if", Form::kIf},
      {"letrec", Form::kLetrec}, {"seq", Form::kSeq},
  };
  return table;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { look_ = lex_.next(); }

  ExprPtr parse_all() {
    ExprPtr e = parse_expr();
    if (look_.type != Tok::kEnd) fail("unexpected trailing input", look_);
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const Token& at) {
    throw ParseError(msg, at.line, at.column);
  }

  Token take() {
    Token t = look_;
    look_ = lex_.next();
    return t;
  }

  std::string ident() {
    Token t = take();
    if (t.type != Tok::kAtom || !is_ident(t.text)) {
      fail("expected identifier", t);
    }
    return std::string(t.text);
  }

  void close() {
    Token t = take();
    if (t.type != Tok::kClose) fail("expected ')'", t);
  }

  ExprPtr parse_expr() {
    Token t = take();
    switch (t.type) {
      case Tok::kEnd:
        fail("unexpected end of input", t);
      case Tok::kClose:
        fail("unexpected ')'", t);
      case Tok::kAtom:
        return parse_atom(t);
      case Tok::kOpen:
        break;
    }
    if (look_.type == Tok::kClose) {
      take();
      return unit();
    }
    Token head = take();
    if (head.type != Tok::kAtom) fail("expected form name", head);
    auto it = forms().find(head.text);
    if (it == forms().end()) {
      fail("unknown form '" + std::string(head.text) + "'", head);
    }
    ExprPtr e = parse_form(it->second, head);
    close();
    return e;
  }

  ExprPtr parse_atom(const Token& t) {
    if (looks_numeric(t.text)) {
      double v = 0.0;
      std::string_view s = t.text;
      if (!s.empty() && s[0] == '+') s.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail("malformed number '" + std::string(t.text) + "'", t);
      }
      return real(v);
    }
    if (!is_ident(t.text)) fail("malformed identifier '" + std::string(t.text) + "'", t);
    return var(std::string(t.text));
  }

  ExprPtr parse_form(Form f, const Token& head) {
    switch (f) {
      case Form::kAdd: { auto a = parse_expr(); return add(a, parse_expr()); }
      case Form::kMul: { auto a = parse_expr(); return mul(a, parse_expr()); }
      case Form::kGreater: { auto a = parse_expr(); return greater(a, parse_expr()); }
      case Form::kApp: { auto a = parse_expr(); return app(a, parse_expr()); }
      case Form::kPair: { auto a = parse_expr(); return pair(a, parse_expr()); }
      case Form::kAssign: { auto a = parse_expr(); return assign(a, parse_expr()); }
      case Form::kSeq: { auto a = parse_expr(); return seq(a, parse_expr()); }
      case Form::kFst: return fst(parse_expr());
      case Form::kSnd: return snd(parse_expr());
      case Form::kInl: return inl(parse_expr());
      case Form::kInr: return inr(parse_expr());
      case Form::kRef: return ref(parse_expr());
      case Form::kDeref: return deref(parse_expr());
      case Form::kReset: return reset(parse_expr());
      case Form::kLam: {
        auto p = ident();
        return lam(p, parse_expr());
      }
      case Form::kShift: {
        auto k = ident();
        return shift(k, parse_expr());
      }
      case Form::kLet: {
        auto n = ident();
        auto b = parse_expr();
        return let(n, b, parse_expr());
      }
      case Form::kCase: {
        auto s = parse_expr();
        auto n1 = ident();
        auto e1 = parse_expr();
        auto n2 = ident();
        return case_of(s, n1, e1, n2, parse_expr());
      }
      case Form::kIf: {
        auto c = parse_expr();
        auto t = parse_expr();
        return if_then_else(c, t, parse_expr());
      }
      case Form::kLetrec: {
        auto n = ident();
        Token at = look_;
        auto fn = parse_expr();
        if (fn->kind != Kind::kLam) fail("letrec expects a (lam ...) binding", at);
        return letrec(n, fn, parse_expr());
      }
    }
    fail("unknown form", head);
  }

  Lexer lex_;
  Token look_;
};

// Real literals always carry a fraction or exponent so they read as floats
// to a human; the grammar accepts either.
std::string literal(double v) {
  std::string s = format_real(v);
  if (s.find_first_of(".enEN") == std::string::npos) s += ".0";
  return s;
}

std::string flat(const Expr& e);

std::string flat_kids(const Expr& e, std::string out) {
  for (const auto& k : e.kids) out += " " + flat(*k);
  return out + ")";
}

std::string flat(const Expr& e) {
  switch (e.kind) {
    case Kind::kConst: return literal(e.value);
    case Kind::kUnit: return "()";
    case Kind::kVar: return e.name;
    case Kind::kLam:
    case Kind::kShift:
      return "(" + std::string(kind_name(e.kind)) + " " + e.name + " " +
             flat(e.kid(0)) + ")";
    case Kind::kLet:
    case Kind::kLetrec:
      return "(" + std::string(kind_name(e.kind)) + " " + e.name + " " +
             flat(e.kid(0)) + " " + flat(e.kid(1)) + ")";
    case Kind::kCase:
      return "(case " + flat(e.kid(0)) + " " + e.name + " " + flat(e.kid(1)) +
             " " + e.name2 + " " + flat(e.kid(2)) + ")";
    default:
      return flat_kids(e, "(" + std::string(kind_name(e.kind)));
  }
}

constexpr std::size_t kWidth = 80;

void layout(const Expr& e, int indent, std::string& out) {
  std::string f = flat(e);
  if (f.size() + static_cast<std::size_t>(indent) <= kWidth || e.kids.empty()) {
    out += f;
    return;
  }
  std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
  out += "(";
  out += kind_name(e.kind);
  auto child = [&](const Expr& k) {
    out += "\n" + pad;
    layout(k, indent + 2, out);
  };
  switch (e.kind) {
    case Kind::kLam:
    case Kind::kShift:
      out += " " + e.name;
      child(e.kid(0));
      break;
    case Kind::kLet:
    case Kind::kLetrec:
      // Let chains read top to bottom; keep the body at the same depth.
      out += " " + e.name;
      child(e.kid(0));
      child(e.kid(1));
      break;
    case Kind::kCase:
      child(e.kid(0));
      out += "\n" + pad + e.name;
      child(e.kid(1));
      out += "\n" + pad + e.name2;
      child(e.kid(2));
      break;
    default:
      for (const auto& k : e.kids) child(*k);
      break;
  }
  out += ")";
}

}  // namespace

ExprPtr parse(std::string_view text) { return Parser(text).parse_all(); }

std::string pretty(const Expr& e) {
  std::string out;
  layout(e, 0, out);
  return out;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace adlc
