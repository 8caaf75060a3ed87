#include "limitset/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

namespace limitset {

namespace {

struct FunctionEntry {
    std::string_view name;
    Op op;
};

constexpr std::array<FunctionEntry, 7> kFunctions{{
    {"sin", Op::Sin},
    {"cos", Op::Cos},
    {"exp", Op::Exp},
    {"log", Op::Log},
    {"sqrt", Op::Sqrt},
    {"abs", Op::Abs},
    {"sign", Op::Sign},
}};

NodePtr make_node(Op op, double value, int index, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->index = index;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(std::string_view text, int dimension) : text_(text), dimension_(dimension) {}

    Expression run() {
        skip_ws();
        if (pos_ >= text_.size()) fail("empty expression");
        Expression e = parse_sum();
        skip_ws();
        if (pos_ < text_.size()) fail(std::string("unexpected character '") + text_[pos_] + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) { throw ParseError(what, pos_); }
    [[noreturn]] void fail_at(const std::string& what, std::size_t at) { throw ParseError(what, at); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expression parse_sum() {
        Expression lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = Expression::binary(Op::Add, lhs, parse_term());
            } else if (accept('-')) {
                lhs = Expression::binary(Op::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    Expression parse_term() {
        Expression lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expression::binary(Op::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = Expression::binary(Op::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expression parse_unary() {
        if (accept('-')) return Expression::unary(Op::Neg, parse_unary());
        return parse_power();
    }

    Expression parse_power() {
        Expression base = parse_primary();
        if (accept('^')) return Expression::binary(Op::Pow, base, parse_unary());
        return base;
    }

    Expression parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expression inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    Expression parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) fail_at("malformed number", start);
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;  // "2e" is 2 followed by garbage
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
            fail_at("malformed number", start);
        }
        return Expression::constant(value);
    }

    Expression parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);

        for (const auto& f : kFunctions) {
            if (f.name == name) {
                if (!accept('(')) fail("expected '(' after function " + std::string(name));
                Expression arg = parse_sum();
                if (!accept(')')) fail("expected ')'");
                return Expression::unary(f.op, arg);
            }
        }

        if (name.size() >= 2 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }) &&
            name[1] != '0') {
            int index = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (ec != std::errc() || ptr != name.data() + name.size()) fail_at("variable index out of range", start);
            if (index > dimension_) {
                fail_at("variable " + std::string(name) + " exceeds dimension " + std::to_string(dimension_), start);
            }
            return Expression::variable(index);
        }
        fail_at("unknown identifier '" + std::string(name) + "'", start);
    }

    std::string_view text_;
    int dimension_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
    return v;
}

double integer_power(double base, double exponent) {
    if (std::fabs(exponent) > 1e9) return std::pow(base, exponent);
    long long n = static_cast<long long>(exponent);
    bool invert = n < 0;
    unsigned long long k = invert ? static_cast<unsigned long long>(-n) : static_cast<unsigned long long>(n);
    double result = 1.0;
    double b = base;
    while (k) {
        if (k & 1ULL) result *= b;
        k >>= 1;
        if (k) b *= b;
    }
    if (invert) {
        if (result == 0.0) throw DomainError("division by zero in negative power");
        result = 1.0 / result;
    }
    return result;
}

// Switch locking for abs/sign nodes; see evaluate_locked().
struct Lock {
    std::span<const signed char> modes;
    std::size_t cursor = 0;
    std::vector<signed char>* seen = nullptr;
};

double eval_node(const Node& n, std::span<const double> x, Lock* lk) {
    switch (n.op) {
    case Op::Const:
        return n.value;
    case Op::Var:
        if (static_cast<std::size_t>(n.index) > x.size()) {
            throw DimensionError("point has dimension " + std::to_string(x.size()) + " but expression uses x" +
                                 std::to_string(n.index));
        }
        return x[n.index - 1];
    case Op::Neg:
        return -eval_node(*n.lhs, x, lk);
    case Op::Add:
        return checked(eval_node(*n.lhs, x, lk) + eval_node(*n.rhs, x, lk), "addition");
    case Op::Sub:
        return checked(eval_node(*n.lhs, x, lk) - eval_node(*n.rhs, x, lk), "subtraction");
    case Op::Mul:
        return checked(eval_node(*n.lhs, x, lk) * eval_node(*n.rhs, x, lk), "multiplication");
    case Op::Div: {
        double num = eval_node(*n.lhs, x, lk);
        double den = eval_node(*n.rhs, x, lk);
        if (den == 0.0) throw DomainError("division by zero");
        return checked(num / den, "division");
    }
    case Op::Pow: {
        double base = eval_node(*n.lhs, x, lk);
        double exponent = eval_node(*n.rhs, x, lk);
        if (exponent == std::floor(exponent)) return checked(integer_power(base, exponent), "power");
        if (base <= 0.0) throw DomainError("non-integer power of non-positive base");
        return checked(std::pow(base, exponent), "power");
    }
    case Op::Sin:
        return std::sin(eval_node(*n.lhs, x, lk));
    case Op::Cos:
        return std::cos(eval_node(*n.lhs, x, lk));
    case Op::Exp:
        return checked(std::exp(eval_node(*n.lhs, x, lk)), "exp");
    case Op::Log: {
        double u = eval_node(*n.lhs, x, lk);
        if (u <= 0.0) throw DomainError("log of non-positive argument");
        return std::log(u);
    }
    case Op::Sqrt: {
        double u = eval_node(*n.lhs, x, lk);
        if (u < 0.0) throw DomainError("sqrt of negative argument");
        return std::sqrt(u);
    }
    case Op::Abs:
    case Op::Sign: {
        const double u = eval_node(*n.lhs, x, lk);
        const signed char actual = static_cast<signed char>((u > 0.0) - (u < 0.0));
        signed char mode = 0;
        if (lk) {
            if (lk->cursor < lk->modes.size()) mode = lk->modes[lk->cursor];
            ++lk->cursor;
            if (lk->seen) lk->seen->push_back(actual);
        }
        if (mode == 0) mode = actual;
        return n.op == Op::Abs ? mode * u : static_cast<double>(mode);
    }
    }
    throw std::logic_error("unknown op");
}

// ---------------------------------------------------------------------------
// Folding

std::optional<double> try_constant(const Expression& e) {
    try {
        double v = eval_node(e.node(), {}, nullptr);
        if (std::isfinite(v)) return v;
    } catch (const DomainError&) {
    }
    return std::nullopt;
}

Expression fold_neg(const Expression& u) {
    if (u.is_constant()) return Expression::constant(-u.node().value);
    if (u.op() == Op::Neg) return Expression(u.node().lhs);
    return Expression::unary(Op::Neg, u);
}

Expression fold_binary(Op op, const Expression& a, const Expression& b) {
    if (a.is_constant() && b.is_constant()) {
        Expression whole = Expression::binary(op, a, b);
        if (auto v = try_constant(whole)) return Expression::constant(*v);
        return whole;
    }
    switch (op) {
    case Op::Add:
        if (a.is_constant(0.0)) return b;
        if (b.is_constant(0.0)) return a;
        break;
    case Op::Sub:
        if (b.is_constant(0.0)) return a;
        if (a.is_constant(0.0)) return fold_neg(b);
        break;
    case Op::Mul:
        if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
        if (a.is_constant(1.0)) return b;
        if (b.is_constant(1.0)) return a;
        if (a.is_constant(-1.0)) return fold_neg(b);
        if (b.is_constant(-1.0)) return fold_neg(a);
        break;
    case Op::Div:
        if (b.is_constant(1.0)) return a;
        break;
    case Op::Pow:
        if (b.is_constant(1.0)) return a;
        if (b.is_constant(0.0)) return Expression::constant(1.0);
        break;
    default:
        break;
    }
    return Expression::binary(op, a, b);
}

Expression fold_node(const Expression& e) {
    const Node& n = e.node();
    switch (n.op) {
    case Op::Const:
    case Op::Var:
        return e;
    case Op::Neg:
        return fold_neg(fold_node(Expression(n.lhs)));
    default:
        break;
    }
    if (is_binary(n.op)) return fold_binary(n.op, fold_node(Expression(n.lhs)), fold_node(Expression(n.rhs)));

    Expression arg = fold_node(Expression(n.lhs));
    Expression whole = Expression::unary(n.op, arg);
    if (arg.is_constant()) {
        if (auto v = try_constant(whole)) return Expression::constant(*v);
    }
    return whole;
}

// ---------------------------------------------------------------------------
// Printing

int precedence(const Node& n) {
    switch (n.op) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Neg:
        return 3;
    case Op::Pow:
        return 4;
    case Op::Const:
        return std::signbit(n.value) ? 3 : 5;
    default:
        return 5;
    }
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

void print_node(const Node& n, int min_prec, std::string& out) {
    const bool paren = precedence(n) < min_prec;
    if (paren) out += '(';
    switch (n.op) {
    case Op::Const:
        out += format_number(n.value);
        break;
    case Op::Var:
        out += 'x';
        out += std::to_string(n.index);
        break;
    case Op::Neg:
        out += '-';
        print_node(*n.lhs, 3, out);
        break;
    case Op::Add:
    case Op::Sub:
        print_node(*n.lhs, 1, out);
        out += n.op == Op::Add ? " + " : " - ";
        print_node(*n.rhs, 2, out);
        break;
    case Op::Mul:
    case Op::Div:
        print_node(*n.lhs, 2, out);
        out += n.op == Op::Mul ? '*' : '/';
        print_node(*n.rhs, 3, out);
        break;
    case Op::Pow:
        print_node(*n.lhs, 5, out);
        out += '^';
        print_node(*n.rhs, 3, out);
        break;
    default:
        out += function_name(n.op);
        out += '(';
        print_node(*n.lhs, 0, out);
        out += ')';
        break;
    }
    if (paren) out += ')';
}

// ---------------------------------------------------------------------------
// Differentiation (unfolded; callers fold once at the end)

bool depends_on(const Node& n, int var) {
    if (n.op == Op::Var) return n.index == var;
    if (n.op == Op::Const) return false;
    if (n.lhs && depends_on(*n.lhs, var)) return true;
    return n.rhs && depends_on(*n.rhs, var);
}

Expression derive(const Expression& e, int var) {
    const Node& n = e.node();
    if (!depends_on(n, var)) return Expression::constant(0.0);

    auto c = [](double v) { return Expression::constant(v); };
    if (n.op == Op::Const) return c(0.0);
    if (n.op == Op::Var) return c(n.index == var ? 1.0 : 0.0);
    const Expression u(n.lhs);
    switch (n.op) {
    case Op::Const:
    case Op::Var:
        break;
    case Op::Neg:
        return -derive(u, var);
    case Op::Add:
        return derive(u, var) + derive(Expression(n.rhs), var);
    case Op::Sub:
        return derive(u, var) - derive(Expression(n.rhs), var);
    case Op::Mul: {
        const Expression v(n.rhs);
        return derive(u, var) * v + u * derive(v, var);
    }
    case Op::Div: {
        const Expression v(n.rhs);
        return (derive(u, var) * v - u * derive(v, var)) / Expression::binary(Op::Pow, v, c(2.0));
    }
    case Op::Pow: {
        const Expression v(n.rhs);
        if (!depends_on(*n.rhs, var)) {
            Expression reduced = fold(v - c(1.0));
            return v * Expression::binary(Op::Pow, u, reduced) * derive(u, var);
        }
        return e * (derive(v, var) * Expression::unary(Op::Log, u) + v * derive(u, var) / u);
    }
    case Op::Sin:
        return Expression::unary(Op::Cos, u) * derive(u, var);
    case Op::Cos:
        return -Expression::unary(Op::Sin, u) * derive(u, var);
    case Op::Exp:
        return e * derive(u, var);
    case Op::Log:
        return derive(u, var) / u;
    case Op::Sqrt:
        return derive(u, var) / (c(2.0) * e);
    case Op::Abs:
        return Expression::unary(Op::Sign, u) * derive(u, var);
    case Op::Sign:
        return c(0.0);
    }
    throw std::logic_error("unknown op");
}

bool equal_nodes(const Node& a, const Node& b) {
    if (&a == &b) return true;
    if (a.op != b.op) return false;
    switch (a.op) {
    case Op::Const:
        return a.value == b.value;
    case Op::Var:
        return a.index == b.index;
    default:
        break;
    }
    if (!equal_nodes(*a.lhs, *b.lhs)) return false;
    if (is_binary(a.op)) return equal_nodes(*a.rhs, *b.rhs);
    return true;
}

int max_var_node(const Node& n) {
    if (n.op == Op::Var) return n.index;
    int m = 0;
    if (n.lhs) m = std::max(m, max_var_node(*n.lhs));
    if (n.rhs) m = std::max(m, max_var_node(*n.rhs));
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)), detail_(message), position_(position) {}

std::string_view function_name(Op op) {
    for (const auto& f : kFunctions) {
        if (f.op == op) return f.name;
    }
    return {};
}

bool is_function(Op op) { return !function_name(op).empty(); }

bool is_binary(Op op) {
    return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div || op == Op::Pow;
}

Expression::Expression() : root_(make_node(Op::Const, 0.0, 0, nullptr, nullptr)) {}

Expression::Expression(NodePtr root) : root_(std::move(root)) {
    if (!root_) throw std::invalid_argument("null expression node");
}

Expression Expression::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("expression constants must be finite");
    return Expression(make_node(Op::Const, value, 0, nullptr, nullptr));
}

Expression Expression::variable(int index) {
    if (index < 1) throw std::invalid_argument("variable indices start at 1");
    return Expression(make_node(Op::Var, 0.0, index, nullptr, nullptr));
}

Expression Expression::unary(Op op, const Expression& operand) {
    if (op != Op::Neg && !is_function(op)) throw std::invalid_argument("not a unary op");
    return Expression(make_node(op, 0.0, 0, operand.root_, nullptr));
}

Expression Expression::binary(Op op, const Expression& lhs, const Expression& rhs) {
    if (!is_binary(op)) throw std::invalid_argument("not a binary op");
    return Expression(make_node(op, 0.0, 0, lhs.root_, rhs.root_));
}

int Expression::max_variable() const { return max_var_node(*root_); }

Expression operator+(const Expression& a, const Expression& b) { return Expression::binary(Op::Add, a, b); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::binary(Op::Sub, a, b); }
Expression operator*(const Expression& a, const Expression& b) { return Expression::binary(Op::Mul, a, b); }
Expression operator/(const Expression& a, const Expression& b) { return Expression::binary(Op::Div, a, b); }
Expression operator-(const Expression& a) { return Expression::unary(Op::Neg, a); }

Expression parse_raw(std::string_view text, int dimension) {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    return Parser(text, dimension).run();
}

Expression parse(std::string_view text, int dimension) { return fold(parse_raw(text, dimension)); }

std::string print(const Expression& e) {
    std::string out;
    print_node(e.node(), 0, out);
    return out;
}

double evaluate(const Expression& e, std::span<const double> point) { return eval_node(e.node(), point, nullptr); }

double evaluate_locked(const Expression& e, std::span<const double> point, std::span<const signed char> modes,
                       std::size_t& cursor, std::vector<signed char>* seen) {
    Lock lk{modes, cursor, seen};
    const double v = eval_node(e.node(), point, &lk);
    cursor = lk.cursor;
    return v;
}

std::size_t switch_count(const Expression& e) {
    std::size_t count = 0;
    auto walk = [&](auto&& self, const Node& n) -> void {
        if (n.op == Op::Abs || n.op == Op::Sign) ++count;
        if (n.lhs) self(self, *n.lhs);
        if (n.rhs) self(self, *n.rhs);
    };
    walk(walk, e.node());
    return count;
}

Expression fold(const Expression& e) { return fold_node(e); }

bool structurally_equal(const Expression& a, const Expression& b) { return equal_nodes(a.node(), b.node()); }

Expression differentiate(const Expression& e, int var) {
    if (var < 1) throw std::invalid_argument("variable indices start at 1");
    return fold(derive(e, var));
}

std::vector<Expression> gradient(const Expression& e, int dimension) {
    if (e.max_variable() > dimension) throw DimensionError("expression uses variables beyond the dimension");
    std::vector<Expression> g;
    g.reserve(static_cast<std::size_t>(dimension));
    for (int i = 1; i <= dimension; ++i) g.push_back(differentiate(e, i));
    return g;
}

std::vector<Expression> lie_terms(const Expression& v, std::span<const Expression> field) {
    const int n = static_cast<int>(field.size());
    if (n == 0) throw DimensionError("empty vector field");
    if (v.max_variable() > n) throw DimensionError("V uses variables beyond the field dimension");
    for (const auto& fi : field) {
        if (fi.max_variable() > n) throw DimensionError("field component uses variables beyond the field dimension");
    }
    std::vector<Expression> terms;
    terms.reserve(field.size());
    for (int i = 1; i <= n; ++i) terms.push_back(fold(differentiate(v, i) * field[i - 1]));
    return terms;
}

Expression lie_derivative(const Expression& v, std::span<const Expression> field) {
    auto terms = lie_terms(v, field);
    Expression sum = Expression::constant(0.0);
    for (const auto& t : terms) sum = fold(sum + t);
    return sum;
}

}  // namespace limitset
