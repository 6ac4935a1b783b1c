#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spx/expansion.hpp"
#include "spx/refsolve.hpp"

namespace spx::analysis {

using expansion::Decomposition;
using funcalc::ProblemSpec;
using halfline::ExpPoly;
using refsolve::GridFunction;
using refsolve::Mesh;

/// Decay rates of the layer machinery: a_lower/a_upper are min/max of
/// {a11(c), detA(c)/a11(c)} at the endpoint c, beta the eps-scale rate
/// sqrt(a11(c)), beta0 the coupled mu-scale floor (= alpha).
struct LayerRates {
    double a_lower_left, a_upper_left;
    double a_lower_right, a_upper_right;
    double beta_left, beta_right;
    double beta0;
};

LayerRates layer_rates(const ProblemSpec& p);

/// sqrt(eps^2 |u|_1^2 + mu^2 |v|_1^2 + alpha^2 (||u||_0^2 + ||v||_0^2)),
/// composite Simpson on the mesh regions with exact derivatives.
double energy_norm(const std::function<double(double)>& u,
                   const std::function<double(double)>& du,
                   const std::function<double(double)>& v,
                   const std::function<double(double)>& dv,
                   const Mesh& mesh, double epsilon, double mu, double alpha);

/// Grid-function version: H1 seminorms from cell slopes, L2 by trapezoid.
double energy_norm(const GridFunction& g, double epsilon, double mu, double alpha);

/// sqrt(int_0^inf e^{2 beta s} |w(s)|^2 ds), closed form per term pair.
/// Throws EvalError when beta >= min Re(rate) (divergent integral).
double weighted_l2_norm(const ExpPoly& w, double beta);

/// Max over a layer-adapted sample grid of the componentwise PDE residual
/// |-E U'' + A U - F| of the decomposition, using exact derivatives.
double residual_sup(const ProblemSpec& p, const Decomposition& d, int sample = 0);

/// Energy norm of (reference - d) on the reference mesh.
double remainder_energy(const ProblemSpec& p, const Decomposition& d,
                        const GridFunction& reference);

/// max(|d(0)|, |d(1)|) componentwise; the exact solution vanishes there.
double boundary_mismatch(const Decomposition& d);

struct CheckResult {
    std::string name;
    bool pass;
    double magnitude;  // measured violation size
};

std::vector<CheckResult> structural_check(const expansion::ExpansionCaseIV& e);
std::vector<CheckResult> structural_check(const expansion::ExpansionCaseII& e);
std::vector<CheckResult> structural_check(const expansion::ExpansionCaseIII& e);

/// alpha plus the probe-grid verification of the positivity consequences
/// a_kk >= alpha^2 and det A >= alpha^2 max(a11,a22) >= alpha^4.
struct PositivityReport {
    double alpha;
    bool pass;
    std::string details;
};

PositivityReport positivity_check(ProblemSpec p);

enum class DecayModel { ExpReciprocal, Power };  // y = C e^{-b x} | y = C x^p

struct FitResult {
    double rate;       // b (exp) or p (power)
    double prefactor;  // C
    double r_squared;
};

/// Least squares in log space. Requires >= 3 points, ys > 0.
FitResult decay_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                    DecayModel model);

struct DerivativeProbeRow {
    int n;
    double norm;
    double ratio;  // norm / max{n, 1/eps}^n
};

/// L2 norms of differenced derivatives of the reference up to order n_max (<= 3).
std::vector<DerivativeProbeRow> derivative_growth_probe(const ProblemSpec& p,
                                                        const GridFunction& reference,
                                                        int n_max);

struct StudyRow {
    double epsilon, mu;
    int m1, m2;
    double rem_energy, resid_sup, bc_mismatch, ref_err;
    double fit_b, fit_r2;
    bool pass;
};

struct StudyReport {
    std::vector<StudyRow> rows;     // sorted by sweep key
    std::string problem_hash;
    double tol = 0.0;

    std::string to_csv() const;
    std::string to_json() const;
};

}  // namespace spx::analysis
