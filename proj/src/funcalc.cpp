#include "spx/funcalc.hpp"

#include <Eigen/Dense>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spx::funcalc {

namespace detail {

enum class Op {
    Const,
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Sin,
    Cos,
    Pow,  // integer exponent in `value`
};

struct Node {
    Op op;
    double value = 0.0;  // constant value or integer exponent
    std::shared_ptr<const Node> lhs, rhs;
};

using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

// ---------------------------------------------------------------------------
// Truncated power series arithmetic (Taylor mode). All series share a fixed
// length = order+1; coeffs[k] = f^(k)/k!.

using Series = std::vector<double>;

Series series_const(double c, std::size_t len) {
    Series s(len, 0.0);
    s[0] = c;
    return s;
}

Series series_var(double center, std::size_t len) {
    Series s(len, 0.0);
    s[0] = center;
    if (len > 1) s[1] = 1.0;
    return s;
}

Series series_add(const Series& a, const Series& b) {
    Series r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] + b[k];
    return r;
}

Series series_sub(const Series& a, const Series& b) {
    Series r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
    return r;
}

Series series_neg(const Series& a) {
    Series r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = -a[k];
    return r;
}

Series series_mul(const Series& a, const Series& b) {
    Series r(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; i + j < a.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Series series_div(const Series& n, const Series& d) {
    if (std::abs(d[0]) < 1e-14)
        throw EvalError("division by a series with vanishing leading coefficient");
    Series q(n.size(), 0.0);
    for (std::size_t k = 0; k < n.size(); ++k) {
        double acc = n[k];
        for (std::size_t j = 0; j < k; ++j) acc -= q[j] * d[k - j];
        q[k] = acc / d[0];
    }
    return q;
}

Series series_exp(const Series& a) {
    Series e(a.size(), 0.0);
    e[0] = std::exp(a[0]);
    for (std::size_t k = 1; k < a.size(); ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= k; ++j) acc += j * a[j] * e[k - j];
        e[k] = acc / static_cast<double>(k);
    }
    return e;
}

// sin and cos propagate jointly: s' = a'c, c' = -a's.
void series_sincos(const Series& a, Series& s, Series& c) {
    s.assign(a.size(), 0.0);
    c.assign(a.size(), 0.0);
    s[0] = std::sin(a[0]);
    c[0] = std::cos(a[0]);
    for (std::size_t k = 1; k < a.size(); ++k) {
        double acc_s = 0.0, acc_c = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
            acc_s += j * a[j] * c[k - j];
            acc_c += j * a[j] * s[k - j];
        }
        s[k] = acc_s / static_cast<double>(k);
        c[k] = -acc_c / static_cast<double>(k);
    }
}

Series series_ipow(const Series& base, long n, std::size_t len) {
    if (n < 0) return series_div(series_const(1.0, len), series_ipow(base, -n, len));
    Series result = series_const(1.0, len);
    Series b = base;
    long e = n;
    while (e > 0) {
        if (e & 1) result = series_mul(result, b);
        e >>= 1;
        if (e > 0) b = series_mul(b, b);
    }
    return result;
}

Series eval_series(const Node& node, double center, std::size_t len) {
    switch (node.op) {
        case Op::Const: return series_const(node.value, len);
        case Op::Var: return series_var(center, len);
        case Op::Add: return series_add(eval_series(*node.lhs, center, len),
                                        eval_series(*node.rhs, center, len));
        case Op::Sub: return series_sub(eval_series(*node.lhs, center, len),
                                        eval_series(*node.rhs, center, len));
        case Op::Mul: return series_mul(eval_series(*node.lhs, center, len),
                                        eval_series(*node.rhs, center, len));
        case Op::Div: return series_div(eval_series(*node.lhs, center, len),
                                        eval_series(*node.rhs, center, len));
        case Op::Neg: return series_neg(eval_series(*node.lhs, center, len));
        case Op::Exp: return series_exp(eval_series(*node.lhs, center, len));
        case Op::Sin: {
            Series s, c;
            series_sincos(eval_series(*node.lhs, center, len), s, c);
            return s;
        }
        case Op::Cos: {
            Series s, c;
            series_sincos(eval_series(*node.lhs, center, len), s, c);
            return c;
        }
        case Op::Pow:
            return series_ipow(eval_series(*node.lhs, center, len),
                               static_cast<long>(node.value), len);
    }
    throw EvalError("corrupt expression tree");
}

double eval_node(const Node& node, double x) {
    switch (node.op) {
        case Op::Const: return node.value;
        case Op::Var: return x;
        case Op::Add: return eval_node(*node.lhs, x) + eval_node(*node.rhs, x);
        case Op::Sub: return eval_node(*node.lhs, x) - eval_node(*node.rhs, x);
        case Op::Mul: return eval_node(*node.lhs, x) * eval_node(*node.rhs, x);
        case Op::Div: {
            double d = eval_node(*node.rhs, x);
            if (d == 0.0) throw EvalError("division by zero");
            return eval_node(*node.lhs, x) / d;
        }
        case Op::Neg: return -eval_node(*node.lhs, x);
        case Op::Exp: return std::exp(eval_node(*node.lhs, x));
        case Op::Sin: return std::sin(eval_node(*node.lhs, x));
        case Op::Cos: return std::cos(eval_node(*node.lhs, x));
        case Op::Pow: {
            double b = eval_node(*node.lhs, x);
            long n = static_cast<long>(node.value);
            if (n < 0 && b == 0.0) throw EvalError("zero raised to a negative power");
            return std::pow(b, static_cast<double>(n));
        }
    }
    throw EvalError("corrupt expression tree");
}

NodePtr reflect_node(const NodePtr& node) {
    if (!node) return nullptr;
    if (node->op == Op::Var)
        return make(Op::Sub, make(Op::Const, nullptr, nullptr, 1.0), make(Op::Var));
    auto n = std::make_shared<Node>();
    n->op = node->op;
    n->value = node->value;
    n->lhs = reflect_node(node->lhs);
    n->rhs = reflect_node(node->rhs);
    return n;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser.

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", 0);
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            char c = peek();
            if (c == '+' || c == '-') {
                ++pos_;
                NodePtr rhs = parse_term();
                lhs = make(c == '+' ? Op::Add : Op::Sub, lhs, rhs);
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            char c = peek();
            if (c == '*' || c == '/') {
                ++pos_;
                NodePtr rhs = parse_unary();
                lhs = make(c == '*' ? Op::Mul : Op::Div, lhs, rhs);
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        char c = peek();
        if (c == '-') {
            ++pos_;
            return make(Op::Neg, parse_unary());
        }
        if (c == '+') {
            ++pos_;
            return parse_unary();
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (peek() == '^') {
            ++pos_;
            long n = parse_int_exponent();
            return make(Op::Pow, base, nullptr, static_cast<double>(n));
        }
        return base;
    }

    long parse_int_exponent() {
        skip_ws();
        std::size_t start = pos_;
        bool neg = false;
        if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
            neg = src_[pos_] == '-';
            ++pos_;
        }
        if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
            throw ParseError("integer exponent expected after '^'", start);
        long n = 0;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            n = n * 10 + (src_[pos_] - '0');
            ++pos_;
        }
        return neg ? -n : n;
    }

    NodePtr parse_atom() {
        char c = peek();
        std::size_t start = pos_;
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (peek() != ')') throw ParseError("')' expected", pos_);
            ++pos_;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.data() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) throw ParseError("malformed number", pos_);
            pos_ += static_cast<std::size_t>(end - begin);
            return make(Op::Const, nullptr, nullptr, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t id_start = pos_;
            while (pos_ < src_.size() &&
                   std::isalnum(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            std::string id(src_.substr(id_start, pos_ - id_start));
            if (id == "x") return make(Op::Var);
            if (id == "pi") return make(Op::Const, nullptr, nullptr, M_PI);
            if (id == "e") return make(Op::Const, nullptr, nullptr, M_E);
            Op fn;
            if (id == "exp") fn = Op::Exp;
            else if (id == "sin") fn = Op::Sin;
            else if (id == "cos") fn = Op::Cos;
            else throw ParseError("unknown identifier '" + id + "'", id_start);
            if (peek() != '(') throw ParseError("'(' expected after '" + id + "'", pos_);
            ++pos_;
            NodePtr arg = parse_expr();
            if (peek() != ')') throw ParseError("')' expected", pos_);
            ++pos_;
            return make(fn, arg);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// AnalyticFunction

double AnalyticFunction::eval(double x) const {
    if (!root_) return 0.0;
    double v = detail::eval_node(*root_, x);
    if (!std::isfinite(v)) throw EvalError("non-finite value at x=" + std::to_string(x));
    return v;
}

std::vector<double> AnalyticFunction::taylor(double center, int order) const {
    if (order < 0) throw EvalError("negative Taylor order");
    if (!root_) return std::vector<double>(order + 1, 0.0);
    auto s = detail::eval_series(*root_, center, static_cast<std::size_t>(order) + 1);
    for (double c : s)
        if (!std::isfinite(c)) throw EvalError("non-finite Taylor coefficient");
    return s;
}

AnalyticFunction AnalyticFunction::reflected() const {
    AnalyticFunction r;
    r.root_ = detail::reflect_node(root_);
    r.src_ = src_.empty() ? std::string() : "reflect(" + src_ + ")";
    return r;
}

AnalyticFunction AnalyticFunction::constant(double c) {
    AnalyticFunction r;
    r.root_ = detail::make(detail::Op::Const, nullptr, nullptr, c);
    std::ostringstream os;
    os << c;
    r.src_ = os.str();
    return r;
}

AnalyticFunction parse_function(std::string_view src) {
    if (src.empty()) throw ParseError("empty expression", 0);
    detail::Parser p(src);
    AnalyticFunction f;
    f.root_ = p.parse();
    f.src_ = std::string(src);
    return f;
}

PowerSeries taylor_at(const AnalyticFunction& fn, double center, int order) {
    PowerSeries ps;
    ps.center = center;
    ps.coeffs = fn.taylor(center, order);
    return ps;
}

// ---------------------------------------------------------------------------
// ChebSeries

namespace {

std::vector<double> cgl_points(int n) {
    // t_k = cos(k pi / n) mapped to [0,1]; x_0 = 1 descending to x_n = 0.
    std::vector<double> x(n + 1);
    for (int k = 0; k <= n; ++k) x[k] = 0.5 * (1.0 + std::cos(M_PI * k / n));
    return x;
}

std::vector<double> values_to_coeffs(const std::vector<double>& fv) {
    const int n = static_cast<int>(fv.size()) - 1;
    std::vector<double> a(n + 1, 0.0);
    if (n == 0) {
        a[0] = fv[0];
        return a;
    }
    for (int j = 0; j <= n; ++j) {
        double acc = 0.5 * (fv[0] + (j % 2 == 0 ? fv[n] : -fv[n]));
        for (int k = 1; k < n; ++k) acc += fv[k] * std::cos(M_PI * j * k / n);
        a[j] = 2.0 * acc / n;
    }
    a[0] *= 0.5;
    a[n] *= 0.5;
    return a;
}

}  // namespace

ChebSeries::ChebSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.assign(1, 0.0);
}

double ChebSeries::eval(double x) const {
    // Clenshaw recurrence in t = 2x - 1.
    const double t = 2.0 * x - 1.0;
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(coeffs_.size()) - 1; k >= 1; --k) {
        double b0 = 2.0 * t * b1 - b2 + coeffs_[k];
        b2 = b1;
        b1 = b0;
    }
    return t * b1 - b2 + coeffs_[0];
}

ChebSeries ChebSeries::derivative() const {
    const int n = degree();
    if (n == 0) return ChebSeries();
    std::vector<double> c(n, 0.0);
    for (int k = n - 1; k >= 0; --k)
        c[k] = (k + 2 <= n - 1 ? c[k + 2] : 0.0) + 2.0 * (k + 1) * coeffs_[k + 1];
    c[0] *= 0.5;
    for (double& v : c) v *= 2.0;  // d/dx = 2 d/dt on [0,1]
    return ChebSeries(std::move(c));
}

double ChebSeries::tail_estimate() const {
    const std::size_t n = coeffs_.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double m = 0.0;
    for (std::size_t k = n - tail; k < n; ++k) m = std::max(m, std::abs(coeffs_[k]));
    return m;
}

double ChebSeries::max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

bool ChebSeries::is_zero(double tol) const { return max_abs_coeff() <= tol; }

ChebSeries ChebSeries::scaled(double c) const {
    std::vector<double> a = coeffs_;
    for (double& v : a) v *= c;
    return ChebSeries(std::move(a));
}

ChebSeries ChebSeries::plus(const ChebSeries& other) const {
    std::vector<double> a(std::max(coeffs_.size(), other.coeffs_.size()), 0.0);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) a[k] += coeffs_[k];
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) a[k] += other.coeffs_[k];
    return ChebSeries(std::move(a));
}

ChebSeries ChebSeries::fit(const std::function<double(double)>& fn, int degree) {
    if (degree < 1) throw EvalError("Chebyshev fit needs degree >= 1");
    auto x = cgl_points(degree);
    std::vector<double> fv(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) fv[k] = fn(x[k]);
    return ChebSeries(values_to_coeffs(fv));
}

ChebSeries ChebSeries::fit_adaptive(const std::function<double(double)>& fn,
                                    bool* resolution_limited) {
    if (resolution_limited) *resolution_limited = false;
    ChebSeries best = fit(fn, 16);
    for (int n = 32; n <= 512; n *= 2) {
        if (best.tail_estimate() <= 1e-12 * best.max_abs_coeff()) return best;
        ChebSeries cur = fit(fn, n);
        // A stalled tail means we are fitting noise; keep the shorter series.
        if (best.tail_estimate() > 0.0 &&
            cur.tail_estimate() > 0.25 * best.tail_estimate()) {
            if (resolution_limited) *resolution_limited = true;
            return best;
        }
        best = std::move(cur);
    }
    if (best.tail_estimate() > 1e-12 * best.max_abs_coeff() && resolution_limited)
        *resolution_limited = true;
    return best;
}

// ---------------------------------------------------------------------------
// Chebyshev collocation scalar BVP

namespace {

Eigen::MatrixXd cgl_diff_matrix(int n) {
    // First-derivative matrix in t on cos(k pi / n), k = 0..n.
    Eigen::MatrixXd d(n + 1, n + 1);
    std::vector<double> t(n + 1), c(n + 1, 1.0);
    for (int k = 0; k <= n; ++k) t[k] = std::cos(M_PI * k / n);
    c[0] = c[n] = 2.0;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            d(i, j) = (c[i] / c[j]) * sign / (t[i] - t[j]);
        }
    }
    d(0, 0) = (2.0 * n * n + 1.0) / 6.0;
    d(n, n) = -(2.0 * n * n + 1.0) / 6.0;
    for (int i = 1; i < n; ++i) d(i, i) = -t[i] / (2.0 * (1.0 - t[i] * t[i]));
    return d;
}

}  // namespace

ChebSeries cheb_solve_scalar_bvp(const std::function<double(double)>& c,
                                 const std::function<double(double)>& rhs,
                                 double mu, double bc0, double bc1,
                                 bool* resolution_limited) {
    if (resolution_limited) *resolution_limited = false;
    ChebSeries best;
    bool have_best = false;
    for (int n = 32; n <= 512; n *= 2) {
        auto x = cgl_points(n);
        Eigen::MatrixXd d = cgl_diff_matrix(n);
        Eigen::MatrixXd d2x = 4.0 * (d * d);  // second derivative in x
        Eigen::MatrixXd m = -mu * mu * d2x;
        Eigen::VectorXd b(n + 1);
        for (int k = 0; k <= n; ++k) {
            double ck = c(x[k]);
            if (ck <= 0.0) throw EvalError("nonpositive reaction coefficient");
            m(k, k) += ck;
            b(k) = rhs(x[k]);
        }
        m.row(0).setZero();
        m(0, 0) = 1.0;
        b(0) = bc1;  // x_0 = 1
        m.row(n).setZero();
        m(n, n) = 1.0;
        b(n) = bc0;  // x_n = 0
        Eigen::VectorXd v = m.partialPivLu().solve(b);
        std::vector<double> fv(v.data(), v.data() + v.size());
        ChebSeries cur(values_to_coeffs(fv));
        if (cur.tail_estimate() <= 1e-12 * std::max(cur.max_abs_coeff(), 1e-300))
            return cur;
        if (have_best && cur.tail_estimate() > 0.25 * best.tail_estimate()) {
            if (resolution_limited) *resolution_limited = true;
            return best;
        }
        best = std::move(cur);
        have_best = true;
    }
    if (resolution_limited) *resolution_limited = true;
    return best;
}

// ---------------------------------------------------------------------------
// ProblemSpec

void ProblemSpec::validate() {
    if (!(epsilon > 0.0) || !(mu > 0.0) || epsilon > mu || mu > 1.0)
        throw EvalError("parameters must satisfy 0 < epsilon <= mu <= 1");
    double min_eig = std::numeric_limits<double>::infinity();
    double worst_x = 0.0;
    for (int k = 0; k < kProbePoints; ++k) {
        double x = static_cast<double>(k) / (kProbePoints - 1);
        double m11 = a11.eval(x), m12 = a12.eval(x);
        double m21 = a21.eval(x), m22 = a22.eval(x);
        f.eval(x);
        g.eval(x);
        double off = 0.5 * (m12 + m21);
        double mean = 0.5 * (m11 + m22);
        double rad = std::sqrt(0.25 * (m11 - m22) * (m11 - m22) + off * off);
        double lam = mean - rad;
        if (lam < min_eig) {
            min_eig = lam;
            worst_x = x;
        }
    }
    if (!(min_eig > 0.0)) {
        std::ostringstream os;
        os << "A(x) is not positive definite: smallest symmetric-part eigenvalue "
           << min_eig << " at x=" << worst_x;
        throw EvalError(os.str());
    }
    double alpha_sq = min_eig - 1e-12;
    alpha = std::sqrt(alpha_sq);
    for (int k = 0; k < kProbePoints; ++k) {
        double x = static_cast<double>(k) / (kProbePoints - 1);
        double m11 = a11.eval(x), m22 = a22.eval(x);
        double det = m11 * m22 - a12.eval(x) * a21.eval(x);
        if (m11 < alpha_sq - 1e-10 || m22 < alpha_sq - 1e-10 ||
            det < alpha_sq * alpha_sq - 1e-10) {
            std::ostringstream os;
            os << "positivity consequences violated at x=" << x;
            throw EvalError(os.str());
        }
    }
}

ProblemSpec ProblemSpec::reflected() const {
    ProblemSpec r;
    r.epsilon = epsilon;
    r.mu = mu;
    r.a11 = a11.reflected();
    r.a12 = a12.reflected();
    r.a21 = a21.reflected();
    r.a22 = a22.reflected();
    r.f = f.reflected();
    r.g = g.reflected();
    r.alpha = alpha;
    return r;
}

ProblemSpec ProblemSpec::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw EvalError(std::string("malformed problem JSON: ") + e.what());
    }
    static const char* kFields[] = {"epsilon", "mu", "a11", "a12", "a21", "a22", "f", "g"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* f : kFields) known = known || it.key() == f;
        if (!known) throw EvalError("unknown field '" + it.key() + "' in problem JSON");
    }
    for (const char* f : kFields)
        if (!j.contains(f)) throw EvalError(std::string("missing field '") + f + "'");
    ProblemSpec p;
    if (!j["epsilon"].is_number() || !j["mu"].is_number())
        throw EvalError("epsilon and mu must be numbers");
    p.epsilon = j["epsilon"].get<double>();
    p.mu = j["mu"].get<double>();
    auto expr = [&](const char* f) {
        if (!j[f].is_string()) throw EvalError(std::string(f) + " must be an expression string");
        return parse_function(j[f].get<std::string>());
    };
    p.a11 = expr("a11");
    p.a12 = expr("a12");
    p.a21 = expr("a21");
    p.a22 = expr("a22");
    p.f = expr("f");
    p.g = expr("g");
    p.validate();
    return p;
}

ProblemSpec ProblemSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot open problem file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return from_json(os.str());
}

}  // namespace spx::funcalc
