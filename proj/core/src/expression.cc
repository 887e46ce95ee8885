#include "hycon/expression.h"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <utility>

#include "hycon/errors.h"

namespace hycon {

enum class Op {
  kNumber,
  kIdent,  // unbound identifier
  kSlot,   // bound state component; index -1 is time
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kCall,
  kSelectLe,  // args: a, b, then, else  ->  a <= b ? then : else
};

struct Expression::Node {
  Op op{Op::kNumber};
  double value{0.0};
  std::string name;
  int index{0};
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::kNumber;
  n->value = v;
  return n;
}

NodePtr make_node(Op op, std::vector<NodePtr> args, std::string name = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  n->name = std::move(name);
  return n;
}

bool is_number(const NodePtr& n, double v) {
  return n->op == Op::kNumber && n->value == v;
}

NodePtr add(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  if (a->op == Op::kNumber && b->op == Op::kNumber) {
    return make_number(a->value + b->value);
  }
  return make_node(Op::kAdd, {std::move(a), std::move(b)});
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_number(b, 0.0)) return a;
  if (a->op == Op::kNumber && b->op == Op::kNumber) {
    return make_number(a->value - b->value);
  }
  if (is_number(a, 0.0)) return make_node(Op::kNeg, {std::move(b)});
  return make_node(Op::kSub, {std::move(a), std::move(b)});
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return make_number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  if (a->op == Op::kNumber && b->op == Op::kNumber) {
    return make_number(a->value * b->value);
  }
  return make_node(Op::kMul, {std::move(a), std::move(b)});
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0)) return make_number(0.0);
  if (is_number(b, 1.0)) return a;
  return make_node(Op::kDiv, {std::move(a), std::move(b)});
}

NodePtr neg(NodePtr a) {
  if (a->op == Op::kNumber) return make_number(-a->value);
  return make_node(Op::kNeg, {std::move(a)});
}

NodePtr call(const std::string& f, std::vector<NodePtr> args) {
  return make_node(Op::kCall, std::move(args), f);
}

int arity(const std::string& f) {
  if (f == "min" || f == "max" || f == "pow") return 2;
  if (f == "exp" || f == "log" || f == "sqrt" || f == "sin" || f == "cos" ||
      f == "tanh" || f == "abs" || f == "sat") {
    return 1;
  }
  return -1;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "': " + what + " at column " +
                      std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(Op::kAdd, {lhs, term()});
      } else if (accept('-')) {
        lhs = make_node(Op::kSub, {lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_node(Op::kMul, {lhs, unary()});
      } else if (accept('/')) {
        lhs = make_node(Op::kDiv, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_node(Op::kNeg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make_node(Op::kPow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make_number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      std::string name = s_.substr(start, pos_ - start);
      if (accept('(')) {
        const int n = arity(name);
        if (n < 0) fail("unknown function '" + name + "'");
        std::vector<NodePtr> args;
        args.push_back(expr());
        while (accept(',')) args.push_back(expr());
        if (!accept(')')) fail("expected ')'");
        if (static_cast<int>(args.size()) != n) {
          fail("function '" + name + "' expects " + std::to_string(n) +
               " argument(s)");
        }
        return call(name, std::move(args));
      }
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::kIdent;
      n->name = std::move(name);
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_{0};
};

NodePtr bind_node(const NodePtr& n, const std::vector<std::string>& names,
                  const std::map<std::string, double>& params) {
  if (n->op == Op::kIdent) {
    if (n->name == "t") {
      auto s = std::make_shared<Expression::Node>();
      s->op = Op::kSlot;
      s->index = -1;
      s->name = "t";
      return s;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == n->name) {
        auto s = std::make_shared<Expression::Node>();
        s->op = Op::kSlot;
        s->index = static_cast<int>(i);
        s->name = n->name;
        return s;
      }
    }
    auto it = params.find(n->name);
    if (it != params.end()) return make_number(it->second);
    throw ConfigError("unknown identifier '" + n->name + "'");
  }
  if (n->args.empty()) return n;
  auto copy = std::make_shared<Expression::Node>(*n);
  for (auto& a : copy->args) a = bind_node(a, names, params);
  return copy;
}

double eval_node(const Expression::Node& n, double t, const Vec& x) {
  switch (n.op) {
    case Op::kNumber:
      return n.value;
    case Op::kIdent:
      throw ConfigError("unbound identifier '" + n.name + "'");
    case Op::kSlot:
      if (n.index < 0) return t;
      if (n.index >= x.size()) {
        throw DimensionError("expression references x[" +
                             std::to_string(n.index) + "] beyond state size " +
                             std::to_string(x.size()));
      }
      return x(n.index);
    case Op::kNeg:
      return -eval_node(*n.args[0], t, x);
    case Op::kAdd:
      return eval_node(*n.args[0], t, x) + eval_node(*n.args[1], t, x);
    case Op::kSub:
      return eval_node(*n.args[0], t, x) - eval_node(*n.args[1], t, x);
    case Op::kMul:
      return eval_node(*n.args[0], t, x) * eval_node(*n.args[1], t, x);
    case Op::kDiv:
      return eval_node(*n.args[0], t, x) / eval_node(*n.args[1], t, x);
    case Op::kPow:
      return std::pow(eval_node(*n.args[0], t, x), eval_node(*n.args[1], t, x));
    case Op::kSelectLe:
      return eval_node(*n.args[0], t, x) <= eval_node(*n.args[1], t, x)
                 ? eval_node(*n.args[2], t, x)
                 : eval_node(*n.args[3], t, x);
    case Op::kCall: {
      const double a = eval_node(*n.args[0], t, x);
      const std::string& f = n.name;
      if (f == "exp") return std::exp(a);
      if (f == "log") return std::log(a);
      if (f == "sqrt") return std::sqrt(a);
      if (f == "sin") return std::sin(a);
      if (f == "cos") return std::cos(a);
      if (f == "tanh") return std::tanh(a);
      if (f == "abs") return std::abs(a);
      if (f == "sat") return a / std::sqrt(1.0 + a * a);
      const double b = eval_node(*n.args[1], t, x);
      if (f == "min") return std::min(a, b);
      if (f == "max") return std::max(a, b);
      if (f == "pow") return std::pow(a, b);
      throw ConfigError("unknown function '" + f + "'");
    }
  }
  return 0.0;
}

NodePtr diff_node(const NodePtr& n, int index) {
  switch (n->op) {
    case Op::kNumber:
      return make_number(0.0);
    case Op::kIdent:
      throw ConfigError("cannot differentiate unbound identifier '" + n->name + "'");
    case Op::kSlot:
      return make_number(n->index == index ? 1.0 : 0.0);
    case Op::kNeg:
      return neg(diff_node(n->args[0], index));
    case Op::kAdd:
      return add(diff_node(n->args[0], index), diff_node(n->args[1], index));
    case Op::kSub:
      return sub(diff_node(n->args[0], index), diff_node(n->args[1], index));
    case Op::kMul: {
      const NodePtr& a = n->args[0];
      const NodePtr& b = n->args[1];
      return add(mul(diff_node(a, index), b), mul(a, diff_node(b, index)));
    }
    case Op::kDiv: {
      const NodePtr& a = n->args[0];
      const NodePtr& b = n->args[1];
      NodePtr num = sub(mul(diff_node(a, index), b), mul(a, diff_node(b, index)));
      return div(num, mul(b, b));
    }
    case Op::kPow:
    case Op::kCall: {
      const std::string f = n->op == Op::kPow ? "pow" : n->name;
      const NodePtr& a = n->args[0];
      NodePtr da = diff_node(a, index);
      if (f == "exp") return mul(da, n);
      if (f == "log") return div(da, a);
      if (f == "sqrt") return div(da, mul(make_number(2.0), n));
      if (f == "sin") return mul(da, call("cos", {a}));
      if (f == "cos") return neg(mul(da, call("sin", {a})));
      if (f == "tanh") return mul(da, sub(make_number(1.0), mul(n, n)));
      if (f == "abs") {
        return mul(da, make_node(Op::kSelectLe, {make_number(0.0), a, make_number(1.0),
                                                 make_number(-1.0)}));
      }
      if (f == "sat") {
        // d/da a (1+a^2)^(-1/2) = (1+a^2)^(-3/2)
        NodePtr q = add(make_number(1.0), mul(a, a));
        return mul(da, make_node(Op::kPow, {q, make_number(-1.5)}));
      }
      const NodePtr& b = n->args[1];
      NodePtr db = diff_node(b, index);
      if (f == "min") return make_node(Op::kSelectLe, {a, b, da, db});
      if (f == "max") return make_node(Op::kSelectLe, {b, a, da, db});
      // pow
      if (b->op == Op::kNumber) {
        NodePtr p = make_node(Op::kPow, {a, make_number(b->value - 1.0)});
        return mul(mul(make_number(b->value), p), da);
      }
      NodePtr term1 = mul(db, call("log", {a}));
      NodePtr term2 = div(mul(b, da), a);
      return mul(n, add(term1, term2));
    }
    case Op::kSelectLe: {
      return make_node(Op::kSelectLe, {n->args[0], n->args[1], diff_node(n->args[2], index),
                                       diff_node(n->args[3], index)});
    }
  }
  return make_number(0.0);
}

std::string number_to_string(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string print_node(const Expression::Node& n) {
  switch (n.op) {
    case Op::kNumber: {
      const std::string s = number_to_string(n.value);
      return n.value < 0 ? "(" + s + ")" : s;
    }
    case Op::kIdent:
    case Op::kSlot:
      return n.name.empty() ? "x" + std::to_string(n.index + 1) : n.name;
    case Op::kNeg:
      return "(-" + print_node(*n.args[0]) + ")";
    case Op::kAdd:
      return "(" + print_node(*n.args[0]) + " + " + print_node(*n.args[1]) + ")";
    case Op::kSub:
      return "(" + print_node(*n.args[0]) + " - " + print_node(*n.args[1]) + ")";
    case Op::kMul:
      return "(" + print_node(*n.args[0]) + " * " + print_node(*n.args[1]) + ")";
    case Op::kDiv:
      return "(" + print_node(*n.args[0]) + " / " + print_node(*n.args[1]) + ")";
    case Op::kPow:
      return "(" + print_node(*n.args[0]) + " ^ " + print_node(*n.args[1]) + ")";
    case Op::kCall: {
      std::string s = n.name + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i > 0) s += ", ";
        s += print_node(*n.args[i]);
      }
      return s + ")";
    }
    case Op::kSelectLe:
      return "select_le(" + print_node(*n.args[0]) + ", " + print_node(*n.args[1]) +
             ", " + print_node(*n.args[2]) + ", " + print_node(*n.args[3]) + ")";
  }
  return "";
}

bool constant_node(const Expression::Node& n) {
  if (n.op == Op::kSlot || n.op == Op::kIdent) return false;
  for (const auto& a : n.args) {
    if (!constant_node(*a)) return false;
  }
  return true;
}

}  // namespace

Expression::Expression() : root_(make_number(0.0)) {}
Expression::Expression(double value) : root_(make_number(value)) {}
Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expression Expression::parse(const std::string& text) {
  return Expression(Parser(text).parse());
}

Expression Expression::bind(const std::vector<std::string>& state_names,
                            const std::map<std::string, double>& parameters) const {
  return Expression(bind_node(root_, state_names, parameters));
}

double Expression::eval(double t, const Vec& x) const {
  return eval_node(*root_, t, x);
}

Expression Expression::derivative(int index) const {
  return Expression(diff_node(root_, index));
}

bool Expression::is_constant() const { return constant_node(*root_); }

std::string Expression::to_string() const { return print_node(*root_); }

Vec eval_all(const std::vector<Expression>& exprs, double t, const Vec& x) {
  Vec out(static_cast<Eigen::Index>(exprs.size()));
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = exprs[i].eval(t, x);
  }
  return out;
}

}  // namespace hycon
