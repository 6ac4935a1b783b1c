#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spx::funcalc {

/// Error raised while parsing an expression; `offset` is the 0-based
/// position in the source text where parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t offset)
        : std::runtime_error(std::move(msg)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Error raised during evaluation or Taylor-mode arithmetic (division by a
/// vanishing denominator, domain errors, non-finite results).
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

/// Immutable expression tree over {constant, x, pi, e, + - * / ^, unary -,
/// exp, sin, cos}. Evaluation is pure; all calculus is done by Taylor-mode
/// arithmetic on the tree, never by finite differences.
class AnalyticFunction {
public:
    AnalyticFunction() = default;  // the zero function

    double eval(double x) const;

    /// Taylor coefficients f^(k)(center)/k!, k = 0..order.
    std::vector<double> taylor(double center, int order) const;

    /// The function x -> f(1 - x).
    AnalyticFunction reflected() const;

    const std::string& source() const { return src_; }

    static AnalyticFunction constant(double c);

    friend AnalyticFunction parse_function(std::string_view src);

private:
    std::shared_ptr<const detail::Node> root_;
    std::string src_;
};

AnalyticFunction parse_function(std::string_view src);

/// Truncated Taylor series of f around `center`; coeffs[k] = f^(k)(center)/k!.
struct PowerSeries {
    double center = 0.0;
    std::vector<double> coeffs;
};

PowerSeries taylor_at(const AnalyticFunction& fn, double center, int order);

/// Chebyshev series on [0,1] (basis T_k(2x-1)). Degree N stores N+1
/// coefficients. Differentiation is exact on the represented polynomial.
class ChebSeries {
public:
    ChebSeries() : coeffs_(1, 0.0) {}
    explicit ChebSeries(std::vector<double> coeffs);

    double eval(double x) const;
    ChebSeries derivative() const;

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const { return coeffs_; }

    /// max |a_k| over the last 10% of the coefficients.
    double tail_estimate() const;
    double max_abs_coeff() const;

    bool is_zero(double tol = 0.0) const;

    ChebSeries scaled(double c) const;
    ChebSeries plus(const ChebSeries& other) const;

    static ChebSeries zero() { return ChebSeries(); }

    /// Interpolation at the degree+1 Chebyshev-Gauss-Lobatto points of [0,1].
    static ChebSeries fit(const std::function<double(double)>& fn, int degree);

    /// Doubles the degree from 16 until the tail drops below
    /// 1e-12 * max|a_k|, the tail stops improving, or degree 512 is reached.
    /// `resolution_limited` (optional) reports a fit that never converged.
    static ChebSeries fit_adaptive(const std::function<double(double)>& fn,
                                   bool* resolution_limited = nullptr);

private:
    std::vector<double> coeffs_;
};

/// Solves -mu^2 v'' + c(x) v = rhs(x) on (0,1), v(0)=bc0, v(1)=bc1, by
/// Chebyshev collocation; the degree is raised until the coefficient tail
/// is resolved. Requires c > 0 on [0,1].
ChebSeries cheb_solve_scalar_bvp(const std::function<double(double)>& c,
                                 const std::function<double(double)>& rhs,
                                 double mu, double bc0, double bc1,
                                 bool* resolution_limited = nullptr);

/// Number of points in the uniform probe grid used by all validation.
inline constexpr int kProbePoints = 1001;

/// The coupled two-parameter problem -E U'' + A(x) U = F on (0,1) with
/// homogeneous Dirichlet conditions. `alpha` is derived from A on
/// construction (not user supplied).
struct ProblemSpec {
    double epsilon = 1.0;
    double mu = 1.0;
    AnalyticFunction a11, a12, a21, a22, f, g;
    double alpha = 0.0;

    /// Validates parameter ordering, evaluability on the probe grid, and
    /// positive definiteness of the symmetric part of A; computes alpha.
    /// Throws EvalError on violation.
    void validate();

    /// The problem under x -> 1-x (layers at 1 become layers at 0).
    ProblemSpec reflected() const;

    static ProblemSpec from_json(const std::string& json_text);
    static ProblemSpec from_json_file(const std::string& path);
};

}  // namespace spx::funcalc
