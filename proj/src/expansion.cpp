#include "spx/expansion.hpp"

#include <array>
#include <cmath>

#include "json.hpp"

namespace spx::expansion {

using halfline::ScaleTag;
using halfline::double_antiderivative;
using halfline::solve_decaying_scalar;
using halfline::solve_decaying_system;

std::string to_string(Regime r) {
    switch (r) {
        case Regime::I: return "I";
        case Regime::II: return "II";
        case Regime::III: return "III";
        case Regime::IV: return "IV";
    }
    return "?";
}

Regime classify_regime(double epsilon, double mu, double threshold) {
    if (!(epsilon > 0.0) || epsilon > mu || mu > 1.0)
        throw EvalError("classify_regime: need 0 < epsilon <= mu <= 1");
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw EvalError("classify_regime: threshold must lie in (0,1)");
    const bool mu_small = mu <= threshold;
    const bool ratio_small = epsilon / mu <= threshold;
    if (mu_small && ratio_small) return Regime::IV;
    if (ratio_small) return Regime::II;
    if (mu_small) return Regime::III;
    return Regime::I;
}

namespace {

// Endpoint Taylor data: t[k] holds the coefficient matrix a^(k)(c)/k! of the
// frozen-coefficient expansion in the (possibly mirrored) local variable.
struct TaylorA {
    std::vector<std::array<double, 4>> t;  // [k] -> {a11, a12, a21, a22}

    double a11() const { return t[0][0]; }
    double a12() const { return t[0][1]; }
    double a21() const { return t[0][2]; }
    double a22() const { return t[0][3]; }
    double det0() const { return a11() * a22() - a12() * a21(); }
};

TaylorA taylor_matrices(const ProblemSpec& p, int order) {
    TaylorA T;
    auto c11 = p.a11.taylor(0.0, order);
    auto c12 = p.a12.taylor(0.0, order);
    auto c21 = p.a21.taylor(0.0, order);
    auto c22 = p.a22.taylor(0.0, order);
    for (int k = 0; k <= order; ++k) T.t.push_back({c11[k], c12[k], c21[k], c22[k]});
    return T;
}

void invert_a_at(const ProblemSpec& p, double x, double r1, double r2, double& u,
                 double& v) {
    const double m11 = p.a11.eval(x), m12 = p.a12.eval(x);
    const double m21 = p.a21.eval(x), m22 = p.a22.eval(x);
    const double det = m11 * m22 - m12 * m21;
    u = (m22 * r1 - m12 * r2) / det;
    v = (m11 * r2 - m21 * r1) / det;
}

// -----------------------------------------------------------------------
// Case IV

struct IvChain {
    std::vector<std::vector<EpPair>> tilde, hat;  // [i][j]; hat.v extends to j+2
};

// The inner chains at one endpoint. `ou`, `ov` give the outer boundary
// values there. Per j level, ascending i: the mu-scale v (scalar BVP with
// the reduced coefficient detA/a11), the mu-scale u (algebraic
// elimination), the eps-scale u (scalar BVP with coefficient a11), the
// eps-scale v two levels up (double antiderivative).
IvChain build_iv_chain(const TaylorA& T, const std::function<double(int, int)>& ou,
                       const std::function<double(int, int)>& ov, int m1, int m2,
                       ScaleTag tilde_tag, ScaleTag hat_tag) {
    const double a11 = T.a11(), a12 = T.a12(), a21 = T.a21();
    const double tilde_sq = T.det0() / a11;
    const double hat_sq = a11;

    auto tu = std::vector<std::vector<ExpPoly>>(
        m1 + 1, std::vector<ExpPoly>(m2 + 1, ExpPoly(tilde_tag)));
    auto tv = tu;
    auto hu = std::vector<std::vector<ExpPoly>>(
        m1 + 1, std::vector<ExpPoly>(m2 + 1, ExpPoly(hat_tag)));
    auto hv = std::vector<std::vector<ExpPoly>>(
        m1 + 1, std::vector<ExpPoly>(m2 + 3, ExpPoly(hat_tag)));

    for (int j = 0; j <= m2; ++j) {
        for (int i = 0; i <= m1; ++i) {
            // mu-scale v component
            ExpPoly rhs_tv(tilde_tag);
            if (j >= 2)
                rhs_tv = rhs_tv.plus(tu[i][j - 2].derivative(2).scaled(-a21 / a11));
            for (int k = 1; k <= i; ++k) {
                ExpPoly mix = tu[i - k][j]
                                  .scaled(a21 / a11 * T.t[k][0] - T.t[k][2])
                                  .plus(tv[i - k][j].scaled(a21 / a11 * T.t[k][1] -
                                                            T.t[k][3]));
                rhs_tv = rhs_tv.plus(mix.mul_monomial(k));
            }
            const double bc_tv = -(ov(i, j) + hv[i][j].eval(0.0));
            tv[i][j] = solve_decaying_scalar(tilde_sq, rhs_tv, bc_tv);

            // mu-scale u component (algebraic)
            ExpPoly acc = tv[i][j].scaled(-a12 / a11);
            if (j >= 2) acc = acc.plus(tu[i][j - 2].derivative(2).scaled(1.0 / a11));
            for (int k = 1; k <= i; ++k) {
                ExpPoly mix = tu[i - k][j].scaled(T.t[k][0]).plus(
                    tv[i - k][j].scaled(T.t[k][1]));
                acc = acc.plus(mix.mul_monomial(k).scaled(-1.0 / a11));
            }
            tu[i][j] = acc;

            // eps-scale u component
            ExpPoly rhs_hu = hv[i][j].scaled(-a12);
            for (int k = 1; k <= std::min(i, j); ++k) {
                ExpPoly mix = hu[i - k][j - k].scaled(T.t[k][0]).plus(
                    hv[i - k][j - k].scaled(T.t[k][1]));
                rhs_hu = rhs_hu.plus(mix.mul_monomial(k).scaled(-1.0));
            }
            const double bc_hu = -(ou(i, j) + tu[i][j].eval(0.0));
            hu[i][j] = solve_decaying_scalar(hat_sq, rhs_hu, bc_hu);

            // eps-scale v component, two levels up
            ExpPoly rhs_hv(hat_tag);
            for (int k = 0; k <= std::min(i, j); ++k) {
                ExpPoly mix = hu[i - k][j - k].scaled(T.t[k][2]).plus(
                    hv[i - k][j - k].scaled(T.t[k][3]));
                rhs_hv = rhs_hv.plus(mix.mul_monomial(k));
            }
            hv[i][j + 2] = double_antiderivative(rhs_hv);
        }
    }

    IvChain chain;
    chain.tilde.assign(m1 + 1, std::vector<EpPair>(m2 + 1));
    chain.hat.assign(m1 + 1, std::vector<EpPair>(m2 + 1));
    for (int i = 0; i <= m1; ++i)
        for (int j = 0; j <= m2; ++j) {
            chain.tilde[i][j] = {tu[i][j], tv[i][j]};
            chain.hat[i][j] = {hu[i][j], hv[i][j]};
        }
    return chain;
}

}  // namespace

ExpansionCaseIV build_case_iv(const ProblemSpec& p, int m1, int m2) {
    if (m1 < 0 || m2 < 0) throw EvalError("orders must be nonnegative");
    ExpansionCaseIV e;
    e.m1 = m1;
    e.m2 = m2;
    e.outer.assign(m1 + 1, std::vector<ChebPair>(m2 + 1));
    std::vector<std::vector<ChebPair>> d2(m1 + 1, std::vector<ChebPair>(m2 + 1));

    for (int i = 0; i <= m1; ++i) {
        for (int j = 0; j <= m2; ++j) {
            if (j > i || i % 2 == 1 || j % 2 == 1) continue;  // known-zero pattern
            auto rhs1 = [&](double x) {
                if (i == 0 && j == 0) return p.f.eval(x);
                return (i >= 2 && j >= 2) ? d2[i - 2][j - 2].u.eval(x) : 0.0;
            };
            auto rhs2 = [&](double x) {
                if (i == 0 && j == 0) return p.g.eval(x);
                return (i >= 2) ? d2[i - 2][j].v.eval(x) : 0.0;
            };
            bool lim_u = false, lim_v = false;
            e.outer[i][j].u = funcalc::ChebSeries::fit_adaptive(
                [&](double x) {
                    double u, v;
                    invert_a_at(p, x, rhs1(x), rhs2(x), u, v);
                    return u;
                },
                &lim_u);
            e.outer[i][j].v = funcalc::ChebSeries::fit_adaptive(
                [&](double x) {
                    double u, v;
                    invert_a_at(p, x, rhs1(x), rhs2(x), u, v);
                    return v;
                },
                &lim_v);
            e.resolution_limited = e.resolution_limited || lim_u || lim_v;
            d2[i][j].u = e.outer[i][j].u.derivative().derivative();
            d2[i][j].v = e.outer[i][j].v.derivative().derivative();
        }
    }

    const int torder = std::max(m1, 1);
    TaylorA TL = taylor_matrices(p, torder);
    ProblemSpec pr = p.reflected();
    TaylorA TR = taylor_matrices(pr, torder);

    auto left_u = [&](int i, int j) { return e.outer[i][j].u.eval(0.0); };
    auto left_v = [&](int i, int j) { return e.outer[i][j].v.eval(0.0); };
    auto right_u = [&](int i, int j) { return e.outer[i][j].u.eval(1.0); };
    auto right_v = [&](int i, int j) { return e.outer[i][j].v.eval(1.0); };

    IvChain left = build_iv_chain(TL, left_u, left_v, m1, m2, ScaleTag::TildeLeft,
                                  ScaleTag::HatLeft);
    IvChain right = build_iv_chain(TR, right_u, right_v, m1, m2, ScaleTag::TildeRight,
                                   ScaleTag::HatRight);
    e.tilde_left = std::move(left.tilde);
    e.hat_left = std::move(left.hat);
    e.tilde_right = std::move(right.tilde);
    e.hat_right = std::move(right.hat);
    return e;
}

// ---------------------------------------------------------------------------
// Case II

ExpansionCaseII build_case_ii(const ProblemSpec& p, int m) {
    if (m < 0) throw EvalError("order must be nonnegative");
    ExpansionCaseII e;
    e.m = m;
    e.outer_u.resize(m + 1);
    e.outer_v.resize(m + 1);
    e.hat_left.assign(m + 1, {ExpPoly(ScaleTag::HatLeft), ExpPoly(ScaleTag::HatLeft)});
    e.hat_right.assign(m + 1,
                       {ExpPoly(ScaleTag::HatRight), ExpPoly(ScaleTag::HatRight)});
    // Hat-v terms are produced two levels ahead.
    std::vector<ExpPoly> hvl(m + 3, ExpPoly(ScaleTag::HatLeft));
    std::vector<ExpPoly> hvr(m + 3, ExpPoly(ScaleTag::HatRight));

    const int torder = std::max(m, 1);
    TaylorA TL = taylor_matrices(p, torder);
    ProblemSpec pr = p.reflected();
    TaylorA TR = taylor_matrices(pr, torder);
    const double mu = p.mu, mu2 = mu * mu;

    std::vector<funcalc::ChebSeries> d2u(m + 1);

    auto reduced_c = [&](double x) {
        return (p.a22.eval(x) * p.a11.eval(x) - p.a12.eval(x) * p.a21.eval(x)) /
               p.a11.eval(x);
    };

    for (int i = 0; i <= m; ++i) {
        auto fi = [&](double x) { return i == 0 ? p.f.eval(x) : 0.0; };
        auto gi = [&](double x) { return i == 0 ? p.g.eval(x) : 0.0; };
        auto fi_full = [&](double x) {
            return fi(x) + (i >= 2 ? mu2 * d2u[i - 2].eval(x) : 0.0);
        };
        auto rhs = [&](double x) {
            return gi(x) - p.a21.eval(x) / p.a11.eval(x) * fi_full(x);
        };
        bool lim_v = false, lim_u = false;
        e.outer_v[i] = funcalc::cheb_solve_scalar_bvp(
            reduced_c, rhs, mu, -hvl[i].eval(0.0), -hvr[i].eval(0.0), &lim_v);
        e.outer_u[i] = funcalc::ChebSeries::fit_adaptive(
            [&](double x) {
                return (fi_full(x) - p.a12.eval(x) * e.outer_v[i].eval(x)) /
                       p.a11.eval(x);
            },
            &lim_u);
        e.resolution_limited = e.resolution_limited || lim_v || lim_u;
        d2u[i] = e.outer_u[i].derivative().derivative();

        // eps-scale layer pair at each endpoint; the Taylor coupling carries
        // mu^k with the k-th monomial.
        auto hat_u_solve = [&](const TaylorA& T, std::vector<EpPair>& hats,
                               const std::vector<ExpPoly>& hv, double bc) {
            ExpPoly rhs_hu = hv[i].scaled(-T.a12());
            for (int k = 1; k <= i; ++k) {
                ExpPoly mix = hats[i - k].u.scaled(T.t[k][0]).plus(
                    hv[i - k].scaled(T.t[k][1]));
                rhs_hu =
                    rhs_hu.plus(mix.mul_monomial(k).scaled(-std::pow(mu, k)));
            }
            hats[i].u = solve_decaying_scalar(T.a11(), rhs_hu, bc);
        };
        hat_u_solve(TL, e.hat_left, hvl, -e.outer_u[i].eval(0.0));
        hat_u_solve(TR, e.hat_right, hvr, -e.outer_u[i].eval(1.0));

        auto hat_v_next = [&](const TaylorA& T, std::vector<EpPair>& hats,
                              std::vector<ExpPoly>& hv) {
            ExpPoly acc(hats[i].u.scale_tag());
            for (int k = 0; k <= i; ++k) {
                ExpPoly mix = hats[i - k].u.scaled(T.t[k][2]).plus(
                    hv[i - k].scaled(T.t[k][3]));
                acc = acc.plus(mix.mul_monomial(k).scaled(std::pow(mu, k)));
            }
            hv[i + 2] = double_antiderivative(acc);
        };
        hat_v_next(TL, e.hat_left, hvl);
        hat_v_next(TR, e.hat_right, hvr);
        e.hat_left[i].v = hvl[i];
        e.hat_right[i].v = hvr[i];
    }
    return e;
}

// ---------------------------------------------------------------------------
// Case III

ExpansionCaseIII build_case_iii(const ProblemSpec& p, int m) {
    if (m < 0) throw EvalError("order must be nonnegative");
    ExpansionCaseIII e;
    e.m = m;
    e.outer.resize(m + 1);
    e.tilde_left.resize(m + 1);
    e.tilde_right.resize(m + 1);
    std::vector<ChebPair> d2(m + 1);

    const double r = p.epsilon / p.mu;
    const double nu_sq = r * r;
    const int torder = std::max(m, 1);
    TaylorA TL = taylor_matrices(p, torder);
    ProblemSpec pr = p.reflected();
    TaylorA TR = taylor_matrices(pr, torder);

    for (int i = 0; i <= m; ++i) {
        if (i % 2 == 0) {
            auto rhs1 = [&](double x) {
                double base = i == 0 ? p.f.eval(x) : 0.0;
                return base + (i >= 2 ? nu_sq * d2[i - 2].u.eval(x) : 0.0);
            };
            auto rhs2 = [&](double x) {
                double base = i == 0 ? p.g.eval(x) : 0.0;
                return base + (i >= 2 ? d2[i - 2].v.eval(x) : 0.0);
            };
            bool lim_u = false, lim_v = false;
            e.outer[i].u = funcalc::ChebSeries::fit_adaptive(
                [&](double x) {
                    double u, v;
                    invert_a_at(p, x, rhs1(x), rhs2(x), u, v);
                    return u;
                },
                &lim_u);
            e.outer[i].v = funcalc::ChebSeries::fit_adaptive(
                [&](double x) {
                    double u, v;
                    invert_a_at(p, x, rhs1(x), rhs2(x), u, v);
                    return v;
                },
                &lim_v);
            e.resolution_limited = e.resolution_limited || lim_u || lim_v;
            d2[i].u = e.outer[i].u.derivative().derivative();
            d2[i].v = e.outer[i].v.derivative().derivative();
        }

        auto inner = [&](const TaylorA& T, const std::vector<VectorExpPoly>& prev,
                         double bu, double bv, ScaleTag tag) {
            VectorExpPoly rhs;
            rhs.u_comp = ExpPoly(tag);
            rhs.v_comp = ExpPoly(tag);
            for (int n = 0; n < i; ++n) {
                const int k = i - n;
                rhs.u_comp = rhs.u_comp.plus(prev[n]
                                                 .u_comp.scaled(T.t[k][0])
                                                 .plus(prev[n].v_comp.scaled(T.t[k][1]))
                                                 .mul_monomial(k)
                                                 .scaled(-1.0));
                rhs.v_comp = rhs.v_comp.plus(prev[n]
                                                 .u_comp.scaled(T.t[k][2])
                                                 .plus(prev[n].v_comp.scaled(T.t[k][3]))
                                                 .mul_monomial(k)
                                                 .scaled(-1.0));
            }
            return solve_decaying_system(
                nu_sq, {T.t[0][0], T.t[0][1], T.t[0][2], T.t[0][3]}, rhs, {bu, bv});
        };
        e.tilde_left[i] = inner(TL, e.tilde_left, -e.outer[i].u.eval(0.0),
                                -e.outer[i].v.eval(0.0), ScaleTag::TildeLeft);
        e.tilde_right[i] = inner(TR, e.tilde_right, -e.outer[i].u.eval(1.0),
                                 -e.outer[i].v.eval(1.0), ScaleTag::TildeRight);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Assembly

double Decomposition::u(double x) const {
    return smooth_u.eval(x) + tilde_left.u.eval(x / mu) + hat_left.u.eval(x / epsilon) +
           tilde_right.u.eval((1.0 - x) / mu) + hat_right.u.eval((1.0 - x) / epsilon);
}

double Decomposition::v(double x) const {
    return smooth_v.eval(x) + tilde_left.v.eval(x / mu) + hat_left.v.eval(x / epsilon) +
           tilde_right.v.eval((1.0 - x) / mu) + hat_right.v.eval((1.0 - x) / epsilon);
}

double Decomposition::du(double x) const {
    return smooth_du.eval(x) + d_tilde_left.u.eval(x / mu) / mu +
           d_hat_left.u.eval(x / epsilon) / epsilon -
           d_tilde_right.u.eval((1.0 - x) / mu) / mu -
           d_hat_right.u.eval((1.0 - x) / epsilon) / epsilon;
}

double Decomposition::dv(double x) const {
    return smooth_dv.eval(x) + d_tilde_left.v.eval(x / mu) / mu +
           d_hat_left.v.eval(x / epsilon) / epsilon -
           d_tilde_right.v.eval((1.0 - x) / mu) / mu -
           d_hat_right.v.eval((1.0 - x) / epsilon) / epsilon;
}

double Decomposition::d2u(double x) const {
    return smooth_d2u.eval(x) + d2_tilde_left.u.eval(x / mu) / (mu * mu) +
           d2_hat_left.u.eval(x / epsilon) / (epsilon * epsilon) +
           d2_tilde_right.u.eval((1.0 - x) / mu) / (mu * mu) +
           d2_hat_right.u.eval((1.0 - x) / epsilon) / (epsilon * epsilon);
}

double Decomposition::d2v(double x) const {
    return smooth_d2v.eval(x) + d2_tilde_left.v.eval(x / mu) / (mu * mu) +
           d2_hat_left.v.eval(x / epsilon) / (epsilon * epsilon) +
           d2_tilde_right.v.eval((1.0 - x) / mu) / (mu * mu) +
           d2_hat_right.v.eval((1.0 - x) / epsilon) / (epsilon * epsilon);
}

double Decomposition::layers_u(double x) const { return u(x) - smooth_u.eval(x); }
double Decomposition::layers_v(double x) const { return v(x) - smooth_v.eval(x); }

double Decomposition::hat_v_sum(double s) const {
    return hat_left.v.eval(s) + hat_right.v.eval(s);
}

namespace {

void finish(Decomposition& d) {
    d.smooth_du = d.smooth_u.derivative();
    d.smooth_dv = d.smooth_v.derivative();
    d.smooth_d2u = d.smooth_du.derivative();
    d.smooth_d2v = d.smooth_dv.derivative();
    auto derive = [](const EpPair& p, int k) {
        return EpPair{p.u.derivative(k), p.v.derivative(k)};
    };
    d.d_tilde_left = derive(d.tilde_left, 1);
    d.d_hat_left = derive(d.hat_left, 1);
    d.d_tilde_right = derive(d.tilde_right, 1);
    d.d_hat_right = derive(d.hat_right, 1);
    d.d2_tilde_left = derive(d.tilde_left, 2);
    d.d2_hat_left = derive(d.hat_left, 2);
    d.d2_tilde_right = derive(d.tilde_right, 2);
    d.d2_hat_right = derive(d.hat_right, 2);
}

}  // namespace

Decomposition assemble(const ExpansionCaseIV& e, const ProblemSpec& p) {
    Decomposition d;
    d.regime = Regime::IV;
    d.epsilon = p.epsilon;
    d.mu = p.mu;
    d.order1 = e.m1;
    d.order2 = e.m2;
    d.tilde_left = {ExpPoly(ScaleTag::TildeLeft), ExpPoly(ScaleTag::TildeLeft)};
    d.hat_left = {ExpPoly(ScaleTag::HatLeft), ExpPoly(ScaleTag::HatLeft)};
    d.tilde_right = {ExpPoly(ScaleTag::TildeRight), ExpPoly(ScaleTag::TildeRight)};
    d.hat_right = {ExpPoly(ScaleTag::HatRight), ExpPoly(ScaleTag::HatRight)};
    const double r = p.epsilon / p.mu;
    for (int i = 0; i <= e.m1; ++i) {
        for (int j = 0; j <= e.m2; ++j) {
            const double w = std::pow(p.mu, i) * std::pow(r, j);
            d.smooth_u = d.smooth_u.plus(e.outer[i][j].u.scaled(w));
            d.smooth_v = d.smooth_v.plus(e.outer[i][j].v.scaled(w));
            d.tilde_left.u = d.tilde_left.u.plus(e.tilde_left[i][j].u.scaled(w));
            d.tilde_left.v = d.tilde_left.v.plus(e.tilde_left[i][j].v.scaled(w));
            d.hat_left.u = d.hat_left.u.plus(e.hat_left[i][j].u.scaled(w));
            d.hat_left.v = d.hat_left.v.plus(e.hat_left[i][j].v.scaled(w));
            d.tilde_right.u = d.tilde_right.u.plus(e.tilde_right[i][j].u.scaled(w));
            d.tilde_right.v = d.tilde_right.v.plus(e.tilde_right[i][j].v.scaled(w));
            d.hat_right.u = d.hat_right.u.plus(e.hat_right[i][j].u.scaled(w));
            d.hat_right.v = d.hat_right.v.plus(e.hat_right[i][j].v.scaled(w));
        }
    }
    finish(d);
    return d;
}

Decomposition assemble(const ExpansionCaseII& e, const ProblemSpec& p) {
    Decomposition d;
    d.regime = Regime::II;
    d.epsilon = p.epsilon;
    d.mu = p.mu;
    d.order1 = e.m;
    d.tilde_left = {ExpPoly(ScaleTag::TildeLeft), ExpPoly(ScaleTag::TildeLeft)};
    d.hat_left = {ExpPoly(ScaleTag::HatLeft), ExpPoly(ScaleTag::HatLeft)};
    d.tilde_right = {ExpPoly(ScaleTag::TildeRight), ExpPoly(ScaleTag::TildeRight)};
    d.hat_right = {ExpPoly(ScaleTag::HatRight), ExpPoly(ScaleTag::HatRight)};
    const double r = p.epsilon / p.mu;
    for (int i = 0; i <= e.m; ++i) {
        const double w = std::pow(r, i);
        d.smooth_u = d.smooth_u.plus(e.outer_u[i].scaled(w));
        d.smooth_v = d.smooth_v.plus(e.outer_v[i].scaled(w));
        d.hat_left.u = d.hat_left.u.plus(e.hat_left[i].u.scaled(w));
        d.hat_left.v = d.hat_left.v.plus(e.hat_left[i].v.scaled(w));
        d.hat_right.u = d.hat_right.u.plus(e.hat_right[i].u.scaled(w));
        d.hat_right.v = d.hat_right.v.plus(e.hat_right[i].v.scaled(w));
    }
    finish(d);
    return d;
}

Decomposition assemble(const ExpansionCaseIII& e, const ProblemSpec& p) {
    Decomposition d;
    d.regime = Regime::III;
    d.epsilon = p.epsilon;
    d.mu = p.mu;
    d.order1 = e.m;
    d.tilde_left = {ExpPoly(ScaleTag::TildeLeft), ExpPoly(ScaleTag::TildeLeft)};
    d.hat_left = {ExpPoly(ScaleTag::HatLeft), ExpPoly(ScaleTag::HatLeft)};
    d.tilde_right = {ExpPoly(ScaleTag::TildeRight), ExpPoly(ScaleTag::TildeRight)};
    d.hat_right = {ExpPoly(ScaleTag::HatRight), ExpPoly(ScaleTag::HatRight)};
    for (int i = 0; i <= e.m; ++i) {
        const double w = std::pow(p.mu, i);
        d.smooth_u = d.smooth_u.plus(e.outer[i].u.scaled(w));
        d.smooth_v = d.smooth_v.plus(e.outer[i].v.scaled(w));
        d.tilde_left.u = d.tilde_left.u.plus(e.tilde_left[i].u_comp.scaled(w));
        d.tilde_left.v = d.tilde_left.v.plus(e.tilde_left[i].v_comp.scaled(w));
        d.tilde_right.u = d.tilde_right.u.plus(e.tilde_right[i].u_comp.scaled(w));
        d.tilde_right.v = d.tilde_right.v.plus(e.tilde_right[i].v_comp.scaled(w));
    }
    finish(d);
    return d;
}

// ---------------------------------------------------------------------------
// Term dumps

namespace {

nlohmann::json ep_json(const ExpPoly& p) { return nlohmann::json::parse(p.to_json()); }

nlohmann::json cheb_json(const funcalc::ChebSeries& s) {
    return nlohmann::json(s.coeffs());
}

}  // namespace

std::string terms_json(const ExpansionCaseIV& e) {
    nlohmann::json j;
    j["case"] = "IV";
    j["m1"] = e.m1;
    j["m2"] = e.m2;
    j["resolution_limited"] = e.resolution_limited;
    auto outer = nlohmann::json::array();
    auto tl = nlohmann::json::array(), hl = nlohmann::json::array();
    auto tr = nlohmann::json::array(), hr = nlohmann::json::array();
    for (int i = 0; i <= e.m1; ++i) {
        nlohmann::json ro = nlohmann::json::array(), rtl = nlohmann::json::array(),
                       rhl = nlohmann::json::array(), rtr = nlohmann::json::array(),
                       rhr = nlohmann::json::array();
        for (int j2 = 0; j2 <= e.m2; ++j2) {
            ro.push_back({{"u", cheb_json(e.outer[i][j2].u)},
                          {"v", cheb_json(e.outer[i][j2].v)}});
            rtl.push_back({{"u", ep_json(e.tilde_left[i][j2].u)},
                           {"v", ep_json(e.tilde_left[i][j2].v)}});
            rhl.push_back({{"u", ep_json(e.hat_left[i][j2].u)},
                           {"v", ep_json(e.hat_left[i][j2].v)}});
            rtr.push_back({{"u", ep_json(e.tilde_right[i][j2].u)},
                           {"v", ep_json(e.tilde_right[i][j2].v)}});
            rhr.push_back({{"u", ep_json(e.hat_right[i][j2].u)},
                           {"v", ep_json(e.hat_right[i][j2].v)}});
        }
        outer.push_back(ro);
        tl.push_back(rtl);
        hl.push_back(rhl);
        tr.push_back(rtr);
        hr.push_back(rhr);
    }
    j["outer"] = outer;
    j["tilde_left"] = tl;
    j["hat_left"] = hl;
    j["tilde_right"] = tr;
    j["hat_right"] = hr;
    return j.dump(2);
}

std::string terms_json(const ExpansionCaseII& e) {
    nlohmann::json j;
    j["case"] = "II";
    j["m"] = e.m;
    j["resolution_limited"] = e.resolution_limited;
    auto outer = nlohmann::json::array(), hl = nlohmann::json::array(),
         hr = nlohmann::json::array();
    for (int i = 0; i <= e.m; ++i) {
        outer.push_back(
            {{"u", cheb_json(e.outer_u[i])}, {"v", cheb_json(e.outer_v[i])}});
        hl.push_back(
            {{"u", ep_json(e.hat_left[i].u)}, {"v", ep_json(e.hat_left[i].v)}});
        hr.push_back(
            {{"u", ep_json(e.hat_right[i].u)}, {"v", ep_json(e.hat_right[i].v)}});
    }
    j["outer"] = outer;
    j["hat_left"] = hl;
    j["hat_right"] = hr;
    return j.dump(2);
}

std::string terms_json(const ExpansionCaseIII& e) {
    nlohmann::json j;
    j["case"] = "III";
    j["m"] = e.m;
    j["resolution_limited"] = e.resolution_limited;
    auto outer = nlohmann::json::array(), tl = nlohmann::json::array(),
         tr = nlohmann::json::array();
    for (int i = 0; i <= e.m; ++i) {
        outer.push_back({{"u", cheb_json(e.outer[i].u)}, {"v", cheb_json(e.outer[i].v)}});
        tl.push_back({{"u", ep_json(e.tilde_left[i].u_comp)},
                      {"v", ep_json(e.tilde_left[i].v_comp)}});
        tr.push_back({{"u", ep_json(e.tilde_right[i].u_comp)},
                      {"v", ep_json(e.tilde_right[i].v_comp)}});
    }
    j["outer"] = outer;
    j["tilde_left"] = tl;
    j["tilde_right"] = tr;
    return j.dump(2);
}

}  // namespace spx::expansion
