#include "seu/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "seu/errors.hpp"

namespace seu {

namespace {

[[noreturn]] void fail(const std::string& text, std::size_t pos, const std::string& what) {
  std::ostringstream os;
  os << "rho expression error at position " << (pos + 1) << ": " << what << " in \"" << text
     << "\"";
  throw ConfigError(os.str());
}

}  // namespace

class ExprParser {
 public:
  ExprParser(const std::string& text, int K) : text_(text), K_(K) {}

  std::vector<Expr> parse_all() {
    std::vector<Expr> out;
    for (;;) {
      Expr e;
      target_ = &e;
      expression();
      out.push_back(std::move(e));
      skip_ws();
      if (at_ >= text_.size()) break;
      if (text_[at_] != ',') fail(text_, at_, "expected ',' or end of input");
      ++at_;
    }
    return out;
  }

 private:
  void emit(Expr::Op op, double value = 0.0, int var = 0) {
    target_->program_.push_back({op, value, var});
  }

  void skip_ws() {
    while (at_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[at_]))) ++at_;
  }

  bool consume(char c) {
    skip_ws();
    if (at_ < text_.size() && text_[at_] == c) {
      ++at_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return at_ < text_.size() ? text_[at_] : '\0';
  }

  // expression := term (('+'|'-') term)*
  void expression() {
    term();
    for (;;) {
      if (consume('+')) {
        term();
        emit(Expr::Op::Add);
      } else if (consume('-')) {
        term();
        emit(Expr::Op::Sub);
      } else {
        return;
      }
    }
  }

  // term := factor (('*'|'/') factor)*
  void term() {
    factor();
    for (;;) {
      if (consume('*')) {
        factor();
        emit(Expr::Op::Mul);
      } else if (consume('/')) {
        factor();
        emit(Expr::Op::Div);
      } else {
        return;
      }
    }
  }

  // factor := ('+'|'-') factor | primary
  void factor() {
    if (consume('-')) {
      factor();
      emit(Expr::Op::Neg);
      return;
    }
    if (consume('+')) {
      factor();
      return;
    }
    primary();
  }

  void primary() {
    skip_ws();
    if (at_ >= text_.size()) fail(text_, at_, "unexpected end of input");
    const char c = text_[at_];
    if (c == '(') {
      ++at_;
      expression();
      if (!consume(')')) fail(text_, at_, "missing ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      identifier();
      return;
    }
    fail(text_, at_, std::string("unexpected character '") + c + "'");
  }

  void number() {
    const char* start = text_.c_str() + at_;
    char* end = nullptr;
    const double val = std::strtod(start, &end);
    if (end == start) fail(text_, at_, "malformed number");
    at_ += static_cast<std::size_t>(end - start);
    emit(Expr::Op::PushConst, val);
  }

  void identifier() {
    const std::size_t start = at_;
    while (at_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[at_])) ||
                                  text_[at_] == '_'))
      ++at_;
    const std::string name = text_.substr(start, at_ - start);
    if (name == "sqrt") {
      if (!consume('(')) fail(text_, at_, "sqrt needs parentheses");
      expression();
      if (!consume(')')) fail(text_, at_, "missing ')' after sqrt argument");
      emit(Expr::Op::Sqrt);
      return;
    }
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        const int idx = std::atoi(name.c_str() + 1);
        if (idx < 1 || idx > K_)
          fail(text_, start, "variable " + name + " out of range for " + std::to_string(K_) +
                                 " arms");
        emit(Expr::Op::PushVar, 0.0, idx - 1);
        return;
      }
    }
    fail(text_, start, "unknown identifier '" + name + "'");
  }

  const std::string& text_;
  int K_;
  std::size_t at_ = 0;
  Expr* target_ = nullptr;
};

std::vector<Expr> Expr::parse_list(const std::string& text, int K) {
  ExprParser p(text, K);
  return p.parse_all();
}

Expr Expr::parse(const std::string& text, int K) {
  auto list = parse_list(text, K);
  if (list.size() != 1) throw ConfigError("expected a single expression");
  return std::move(list.front());
}

double Expr::eval(const Vec& x) const {
  double stack[64];
  int top = -1;
  for (const Instr& ins : program_) {
    switch (ins.op) {
      case Op::PushConst:
        stack[++top] = ins.value;
        break;
      case Op::PushVar:
        stack[++top] = x[ins.var];
        break;
      case Op::Add:
        --top;
        stack[top] += stack[top + 1];
        break;
      case Op::Sub:
        --top;
        stack[top] -= stack[top + 1];
        break;
      case Op::Mul:
        --top;
        stack[top] *= stack[top + 1];
        break;
      case Op::Div:
        --top;
        stack[top] /= stack[top + 1];
        break;
      case Op::Neg:
        stack[top] = -stack[top];
        break;
      case Op::Sqrt:
        stack[top] = std::sqrt(stack[top]);
        break;
    }
  }
  return stack[0];
}

}  // namespace seu
