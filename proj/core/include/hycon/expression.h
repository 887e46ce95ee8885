#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hycon/types.h"

namespace hycon {

// A small arithmetic expression language used by JSON system definitions.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | identifier | identifier '(' expr (',' expr)* ')'
//            | '(' expr ')'
//
// Functions: exp, log, sqrt, sin, cos, tanh, abs, min, max, pow, sat
// (sat(x) = x / sqrt(1 + x^2)).  The identifier `t` is time.
class Expression {
 public:
  struct Node;

  Expression();
  explicit Expression(double value);

  // Throws ConfigError with the column of the offending token.
  static Expression parse(const std::string& text);

  // Replace identifiers: parameters become constants, state names become
  // slots x[i], `t` becomes the time slot.  Throws ConfigError on unknown
  // identifiers.
  Expression bind(const std::vector<std::string>& state_names,
                  const std::map<std::string, double>& parameters) const;

  // Evaluate a bound expression.
  double eval(double t, const Vec& x) const;

  // Symbolic partial derivative of a bound expression w.r.t. x[index]
  // (index = -1 means time).
  Expression derivative(int index) const;

  bool is_constant() const;
  std::string to_string() const;

  const std::shared_ptr<const Node>& root() const { return root_; }

 private:
  explicit Expression(std::shared_ptr<const Node> root);
  std::shared_ptr<const Node> root_;
};

// Evaluate a list of bound expressions as a vector.
Vec eval_all(const std::vector<Expression>& exprs, double t, const Vec& x);

}  // namespace hycon
