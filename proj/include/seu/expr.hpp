#pragma once

#include <string>
#include <vector>

#include "seu/matrix.hpp"

namespace seu {

/// One parsed arithmetic expression over variables x1..xK with +, -, *, /,
/// sqrt, parentheses and numeric literals. Compiled to a flat postfix
/// program; evaluation is allocation-free.
class Expr {
 public:
  /// Parses a comma-separated list of K expressions. Throws ConfigError
  /// with a character position on malformed input or out-of-range
  /// variables.
  static std::vector<Expr> parse_list(const std::string& text, int K);
  static Expr parse(const std::string& text, int K);

  double eval(const Vec& x) const;

 private:
  enum class Op : int { PushConst, PushVar, Add, Sub, Mul, Div, Neg, Sqrt };
  struct Instr {
    Op op;
    double value = 0.0;
    int var = 0;
  };
  std::vector<Instr> program_;
  friend class ExprParser;
};

}  // namespace seu
