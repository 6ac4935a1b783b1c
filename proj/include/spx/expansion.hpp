#pragma once

#include <string>
#include <vector>

#include "spx/funcalc.hpp"
#include "spx/halfline.hpp"

namespace spx::expansion {

using funcalc::ChebSeries;
using funcalc::EvalError;
using funcalc::ProblemSpec;
using halfline::ExpPoly;
using halfline::VectorExpPoly;

enum class Regime { I, II, III, IV };

std::string to_string(Regime r);

/// IV if mu <= threshold and eps/mu <= threshold; II if only eps/mu small;
/// III if only mu small; else I.
Regime classify_regime(double epsilon, double mu, double threshold = 0.1);

struct ChebPair {
    ChebSeries u, v;
};

struct EpPair {
    ExpPoly u, v;
};

/// Three-scale expansion: outer terms U_ij on [0,1] plus, at each endpoint,
/// a mu-width layer pair and an eps-width layer pair, all indexed by (i,j)
/// with 0 <= i <= m1, 0 <= j <= m2 and weights mu^i (eps/mu)^j.
struct ExpansionCaseIV {
    int m1 = 0, m2 = 0;
    std::vector<std::vector<ChebPair>> outer;                       // [i][j]
    std::vector<std::vector<EpPair>> tilde_left, hat_left;          // [i][j]
    std::vector<std::vector<EpPair>> tilde_right, hat_right;
    bool resolution_limited = false;
};

/// Two-scale expansion with eps-width layers only; weights (eps/mu)^i.
struct ExpansionCaseII {
    int m = 0;
    std::vector<ChebSeries> outer_u, outer_v;                       // [i]
    std::vector<EpPair> hat_left, hat_right;
    bool resolution_limited = false;
};

/// Two-scale expansion with coupled mu-width layers; weights mu^i.
struct ExpansionCaseIII {
    int m = 0;
    std::vector<ChebPair> outer;                                    // [i]
    std::vector<VectorExpPoly> tilde_left, tilde_right;
    bool resolution_limited = false;
};

ExpansionCaseIV build_case_iv(const ProblemSpec& p, int m1, int m2);
ExpansionCaseII build_case_ii(const ProblemSpec& p, int m);
ExpansionCaseIII build_case_iii(const ProblemSpec& p, int m);

/// Collapsed, weighted form of an expansion: one smooth Chebyshev pair and
/// four exp-polynomial layer pairs, each in its own stretched variable.
/// Evaluation and the exact first/second derivatives are in the physical
/// variable x.
struct Decomposition {
    Regime regime = Regime::I;
    double epsilon = 1.0, mu = 1.0;
    int order1 = 0, order2 = 0;  // (m1,m2) for IV, (m,0) otherwise

    ChebSeries smooth_u, smooth_v;
    ChebSeries smooth_du, smooth_dv, smooth_d2u, smooth_d2v;
    EpPair tilde_left, hat_left, tilde_right, hat_right;  // pre-summed weights
    EpPair d_tilde_left, d_hat_left, d_tilde_right, d_hat_right;
    EpPair d2_tilde_left, d2_hat_left, d2_tilde_right, d2_hat_right;

    double u(double x) const;
    double v(double x) const;
    double du(double x) const;
    double dv(double x) const;
    double d2u(double x) const;
    double d2v(double x) const;

    /// Layer parts only (both endpoints, both widths) at x.
    double layers_u(double x) const;
    double layers_v(double x) const;

    /// The eps-width v-layer sum alone, in the left stretched variable
    /// s = x/eps (both endpoints' hat terms evaluated at distance s).
    double hat_v_sum(double s) const;
};

Decomposition assemble(const ExpansionCaseIV& e, const ProblemSpec& p);
Decomposition assemble(const ExpansionCaseII& e, const ProblemSpec& p);
Decomposition assemble(const ExpansionCaseIII& e, const ProblemSpec& p);

/// JSON term dump: case label, orders, outer Chebyshev coefficient arrays,
/// and layer terms in the ExpPoly serialization.
std::string terms_json(const ExpansionCaseIV& e);
std::string terms_json(const ExpansionCaseII& e);
std::string terms_json(const ExpansionCaseIII& e);

}  // namespace spx::expansion
