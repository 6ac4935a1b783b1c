#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "spx/funcalc.hpp"

namespace spx::halfline {

using funcalc::EvalError;
using cplx = std::complex<double>;

/// Which stretched half-line variable an ExpPoly's argument denotes.
enum class ScaleTag { TildeLeft, HatLeft, TildeRight, HatRight };

std::string to_string(ScaleTag tag);
ScaleTag scale_tag_from_string(const std::string& s);

/// Finite sum of decaying exponential-times-polynomial terms
/// sum_m e^{-beta_m s} p_m(s) on s >= 0. Every rate has Re > 0; terms with
/// rates equal within 1e-12 relative are merged on construction. This class
/// is closed under differentiation, monomial multiplication, the decaying
/// BVP solution operators, and the double antiderivative.
class ExpPoly {
public:
    struct Term {
        cplx rate;                 // Re(rate) > 0
        std::vector<cplx> poly;    // poly[k] multiplies s^k
    };

    ExpPoly() = default;  // zero
    explicit ExpPoly(ScaleTag tag) : tag_(tag) {}
    ExpPoly(std::vector<Term> terms, ScaleTag tag);

    /// Re of the sum at real s >= 0; asserts the imaginary residue is small
    /// relative to the magnitude.
    double eval(double s) const;
    cplx eval_complex(double s) const;

    ExpPoly derivative(int k = 1) const;

    /// Multiply every term's polynomial by s^k.
    ExpPoly mul_monomial(int k) const;

    ExpPoly scaled(cplx c) const;
    ExpPoly plus(const ExpPoly& other) const;

    bool is_zero(double tol = 0.0) const;
    double max_abs_coeff() const;

    /// Smallest Re(rate) over the terms; +inf for the zero ExpPoly.
    double min_rate() const;

    const std::vector<Term>& terms() const { return terms_; }
    ScaleTag scale_tag() const { return tag_; }
    ExpPoly with_tag(ScaleTag tag) const;

    std::string to_json() const;
    static ExpPoly from_json(const std::string& json_text);

private:
    std::vector<Term> terms_;
    ScaleTag tag_ = ScaleTag::HatLeft;
    void normalize();
};

/// Pair of ExpPoly components sharing a scale tag.
struct VectorExpPoly {
    ExpPoly u_comp, v_comp;
};

/// Solves -w'' + a_sq w = rhs on (0,inf), w(0) = bc, w decaying.
/// Resonance (a forcing rate within 1e-10 relative of sqrt(a_sq)) is handled
/// by raising that term's polynomial degree by one.
ExpPoly solve_decaying_scalar(double a_sq, const ExpPoly& rhs, double bc);

/// W(s) = int_s^inf int_t^inf rhs(tau) dtau dt; W'' = rhs exactly.
ExpPoly double_antiderivative(const ExpPoly& rhs);

/// Solves -diag(nu_sq,1) U'' + B U = rhs on (0,inf), U(0) = bc, U decaying.
/// Homogeneous modes come from the pencil (lambda^2 diag(nu_sq,1) - B) w = 0.
/// Throws EvalError("degenerate coupling") when the eigenvector matrix is
/// ill-conditioned and EvalError("non-dissipative system") when a homogeneous
/// rate has nonpositive real part.
VectorExpPoly solve_decaying_system(double nu_sq, const std::array<double, 4>& B,
                                    const VectorExpPoly& rhs,
                                    const std::array<double, 2>& bc);

}  // namespace spx::halfline
