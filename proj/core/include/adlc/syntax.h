#ifndef ADLC_SYNTAX_H_
#define ADLC_SYNTAX_H_

#include <stdexcept>
#include <string>
#include <string_view>

#include "adlc/expr.h"

namespace adlc {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Parses one expression in the S-expression syntax. Sugar forms (if,
// letrec, seq) are kept as-is. Trailing input other than whitespace and
// comments is an error.
ExprPtr parse(std::string_view text);

// Renders `e` so that parse(pretty(e)) is structurally equal to `e`.
// Short subterms stay on one line; longer ones break with 2-space indent.
std::string pretty(const Expr& e);

// Shortest decimal that reads back to the same double.
std::string format_real(double v);

}  // namespace adlc

#endif  // ADLC_SYNTAX_H_
