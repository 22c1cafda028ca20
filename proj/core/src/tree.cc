#include "adlc/tree.h"

#include <cctype>
#include <charconv>

#include "adlc/names.h"
#include "adlc/syntax.h"

namespace adlc {

Tree leaf() { return nullptr; }

Tree node(double value, Tree left, Tree right) {
  return std::make_shared<const TreeNode>(TreeNode{value, std::move(left), std::move(right)});
}

namespace {

class TreeParser {
 public:
  explicit TreeParser(std::string_view s) : s_(s) {}

  Tree parse_all() {
    Tree t = parse_one(0);
    skip();
    if (pos_ != s_.size()) fail("trailing input after tree");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  void skip() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == ';') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view atom() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != '(' && s_[pos_] != ')' && s_[pos_] != ';')
      ++pos_;
    if (start == pos_) fail("expected an atom");
    return s_.substr(start, pos_ - start);
  }

  void expect(char c) {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Tree parse_one(int depth) {
    // Explicit limit; tree input comes from files and should not blow the stack.
    if (depth > 10000) fail("tree nested too deeply");
    expect('(');
    std::string_view head = atom();
    if (head == "leaf") {
      expect(')');
      return leaf();
    }
    if (head != "node") fail("expected 'leaf' or 'node'");
    std::string_view num = atom();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec != std::errc() || ptr != num.data() + num.size()) fail("expected a number");
    Tree l = parse_one(depth + 1);
    Tree r = parse_one(depth + 1);
    expect(')');
    return node(v, std::move(l), std::move(r));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Tree parse_tree(std::string_view text) { return TreeParser(text).parse_all(); }

std::string print_tree(const Tree& t) {
  if (!t) return "(leaf)";
  return "(node " + format_real(t->value) + " " + print_tree(t->left) + " " +
         print_tree(t->right) + ")";
}

std::size_t tree_size(const Tree& t) {
  return t ? 1 + tree_size(t->left) + tree_size(t->right) : 0;
}

ExprPtr tree_literal(const Tree& t) {
  if (!t) return inl(unit());
  return inr(pair(real(t->value), pair(tree_literal(t->left), tree_literal(t->right))));
}

ExprPtr tree_fold_program(const ExprPtr& body, const Tree& t) {
  ExprPtr n = var("n");
  ExprPtr step = let("l", app(var("fold"), fst(snd(n))),
                     let("r", app(var("fold"), snd(snd(n))),
                         app(app(app(body, var("l")), var("r")), fst(n))));
  ExprPtr fold_fn = lam("t", case_of(var("t"), "u", var("x"), "n", step));
  return freshen(lam("x", letrec("fold", fold_fn, app(var("fold"), tree_literal(t)))));
}

}  // namespace adlc
