#pragma once

// Scalar expressions over state variables x1..xn: parsing, printing,
// evaluation, constant folding and symbolic differentiation.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace limitset {

enum class Op {
    Const,
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
};

/// Name used by the text grammar for a unary function op, or empty.
std::string_view function_name(Op op);
bool is_function(Op op);
bool is_binary(Op op);

/// Raised by parse(). `position` is a 0-based byte offset into the input.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position);
    std::size_t position() const noexcept { return position_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    std::size_t position_;
};

/// Raised by evaluate() for log(x<=0), sqrt(x<0), x/0 and similar.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;  // Const only
    int index = 0;       // Var only, 1-based
    NodePtr lhs;         // unary operand or left operand
    NodePtr rhs;         // right operand of binary ops
};

/// Immutable expression tree. Copies share structure.
class Expression {
public:
    Expression();  // the constant 0
    explicit Expression(NodePtr root);

    static Expression constant(double value);
    static Expression variable(int index);
    static Expression unary(Op op, const Expression& operand);
    static Expression binary(Op op, const Expression& lhs, const Expression& rhs);

    const Node& node() const { return *root_; }
    const NodePtr& root() const { return root_; }
    Op op() const { return root_->op; }

    bool is_constant() const { return root_->op == Op::Const; }
    bool is_constant(double v) const { return is_constant() && root_->value == v; }

    /// Largest variable index used, 0 if none.
    int max_variable() const;

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);

private:
    NodePtr root_;
};

/// Parses `text` against the infix grammar, with variables x1..x`dimension`.
/// The returned tree is constant-folded.
Expression parse(std::string_view text, int dimension);

/// Same grammar, no folding. Mostly useful for tests.
Expression parse_raw(std::string_view text, int dimension);

/// Prints in the grammar accepted by parse(); parse(print(e)) is structurally
/// equal to fold(e).
std::string print(const Expression& e);

double evaluate(const Expression& e, std::span<const double> point);

/// Evaluation with frozen switches. Each abs/sign node, in a fixed traversal
/// order, consumes one entry of `modes` starting at `cursor`: a nonzero mode m
/// turns abs(u) into m*u and sign(u) into m, so the expression stays smooth
/// while u keeps its sign. The actual sign of every switch argument is
/// appended to `seen` when it is non-null.
double evaluate_locked(const Expression& e, std::span<const double> point, std::span<const signed char> modes,
                       std::size_t& cursor, std::vector<signed char>* seen);

/// Number of abs/sign nodes.
std::size_t switch_count(const Expression& e);

/// Constant folding: combines constants, 0*e -> 0, 1*e -> e, e+0 -> e,
/// e^1 -> e, e^0 -> 1, --e -> e. No other rewriting.
Expression fold(const Expression& e);

bool structurally_equal(const Expression& a, const Expression& b);

/// d e / d x_var, folded. d|u| = sign(u) du, d sign(u) = 0.
Expression differentiate(const Expression& e, int var);

std::vector<Expression> gradient(const Expression& e, int dimension);

/// Individual terms (dV/dx_i) * f_i of the Lie derivative, folded.
std::vector<Expression> lie_terms(const Expression& v, std::span<const Expression> field);

/// sum_i (dV/dx_i) * f_i, folded.
Expression lie_derivative(const Expression& v, std::span<const Expression> field);

}  // namespace limitset
