#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "spx/expansion.hpp"

using namespace spx::expansion;
using spx::funcalc::ProblemSpec;
using spx::funcalc::parse_function;

namespace {

ProblemSpec constant_problem(double eps, double mu) {
    ProblemSpec p;
    p.epsilon = eps;
    p.mu = mu;
    p.a11 = parse_function("2");
    p.a22 = parse_function("2");
    p.a12 = parse_function("0");
    p.a21 = parse_function("0");
    p.f = parse_function("1");
    p.g = parse_function("1");
    p.validate();
    return p;
}

ProblemSpec canonical_problem(double eps, double mu) {
    ProblemSpec p;
    p.epsilon = eps;
    p.mu = mu;
    p.a11 = parse_function("2 + x");
    p.a22 = parse_function("2 + x");
    p.a12 = parse_function("1");
    p.a21 = parse_function("1");
    p.f = parse_function("exp(x)");
    p.g = parse_function("1 + x");
    p.validate();
    return p;
}

// Residual of the first equation, -eps^2 u'' + a11 u + a12 v - f, sampled on
// a layer-aware grid; this is the substitution oracle for every regime.
double residual_max(const ProblemSpec& p, const Decomposition& d) {
    double worst = 0.0;
    auto probe = [&](double x) {
        const double r1 = -p.epsilon * p.epsilon * d.d2u(x) +
                          p.a11.eval(x) * d.u(x) + p.a12.eval(x) * d.v(x) -
                          p.f.eval(x);
        const double r2 = -p.mu * p.mu * d.d2v(x) + p.a21.eval(x) * d.u(x) +
                          p.a22.eval(x) * d.v(x) - p.g.eval(x);
        worst = std::max({worst, std::abs(r1), std::abs(r2)});
    };
    for (int k = 0; k <= 40; ++k) {
        const double t = static_cast<double>(k) / 40.0;
        probe(t);                                  // bulk
        probe(t * 10.0 * p.mu);                    // left mu-layer
        probe(t * 10.0 * p.epsilon);               // left eps-layer
        probe(1.0 - t * 10.0 * p.mu);              // right mu-layer
        probe(1.0 - t * 10.0 * p.epsilon);         // right eps-layer
    }
    return worst;
}

void check_derivative_chain(const Decomposition& d) {
    const double h = 1e-6;
    for (double x : {0.001, 0.05, 0.3, 0.7, 0.95, 0.999}) {
        const double fd_u = (d.u(x + h) - d.u(x - h)) / (2.0 * h);
        const double fd_v = (d.v(x + h) - d.v(x - h)) / (2.0 * h);
        const double su = std::max(1.0, std::abs(d.du(x)));
        const double sv = std::max(1.0, std::abs(d.dv(x)));
        CHECK(std::abs(d.du(x) - fd_u) <= 1e-4 * su);
        CHECK(std::abs(d.dv(x) - fd_v) <= 1e-4 * sv);
        const double fd_du = (d.du(x + h) - d.du(x - h)) / (2.0 * h);
        const double s2 = std::max(1.0, std::abs(d.d2u(x)));
        CHECK(std::abs(d.d2u(x) - fd_du) <= 1e-3 * s2);
    }
}

}  // namespace

TEST_CASE("regime classification") {
    CHECK(classify_regime(1e-4, 1e-2) == Regime::IV);
    CHECK(classify_regime(1e-3, 0.5) == Regime::II);
    CHECK(classify_regime(0.05, 0.08) == Regime::III);
    CHECK(classify_regime(0.3, 0.5) == Regime::I);
    // Thresholds are inclusive.
    CHECK(classify_regime(0.01, 0.1) == Regime::IV);
    CHECK(classify_regime(0.05, 0.5) == Regime::II);
    CHECK(to_string(Regime::IV) == "IV");
}

TEST_CASE("three-scale expansion, constant coefficients") {
    auto p = constant_problem(1e-4, 1e-2);
    auto e = build_case_iv(p, 2, 2);

    // Leading outer term solves A U = (f,g): U_00 = (1/2, 1/2).
    CHECK(e.outer[0][0].u.eval(0.3) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.outer[0][0].v.eval(0.8) == doctest::Approx(0.5).epsilon(1e-12));

    // Leading mu-layer: v-component -(1/2) e^{-sqrt2 s}, u-component zero.
    const auto& tl = e.tilde_left[0][0];
    CHECK(tl.u.is_zero(1e-13));
    REQUIRE(tl.v.terms().size() == 1);
    CHECK(std::abs(tl.v.terms()[0].rate - std::complex<double>(std::sqrt(2.0))) <=
          1e-12);
    CHECK(tl.v.eval(0.0) == doctest::Approx(-0.5).epsilon(1e-12));

    // Leading eps-layer: u-component -(1/2) e^{-sqrt2 s}, and the v-partner
    // two levels up vanishes because a21(0) = 0 here.
    const auto& hl = e.hat_left[0][0];
    REQUIRE(hl.u.terms().size() == 1);
    CHECK(std::abs(hl.u.terms()[0].rate - std::complex<double>(std::sqrt(2.0))) <=
          1e-12);
    CHECK(hl.u.eval(0.0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(e.hat_left[0][2].v.is_zero(1e-13));

    // Symmetric data: the right-edge layers mirror the left ones.
    for (int i = 0; i <= 2; ++i) {
        for (int j = 0; j <= 2; ++j) {
            for (double s : {0.0, 0.5, 1.7}) {
                CHECK(e.hat_right[i][j].u.eval(s) ==
                      doctest::Approx(e.hat_left[i][j].u.eval(s)).epsilon(1e-10));
                CHECK(e.tilde_right[i][j].v.eval(s) ==
                      doctest::Approx(e.tilde_left[i][j].v.eval(s)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("three-scale expansion, structural zero patterns") {
    auto p = canonical_problem(1e-4, 1e-2);
    auto e = build_case_iv(p, 3, 3);
    for (int i = 0; i <= 3; ++i) {
        for (int j = 0; j <= 3; ++j) {
            const bool must_vanish = (j > i) || (i % 2 == 1) || (j % 2 == 1);
            if (must_vanish) {
                CHECK(e.outer[i][j].u.max_abs_coeff() <= 1e-11);
                CHECK(e.outer[i][j].v.max_abs_coeff() <= 1e-11);
            }
        }
        // The eps-layer v-partner lags two levels: levels 0 and 1 vanish.
        CHECK(e.hat_left[i][0].v.is_zero(1e-13));
        CHECK(e.hat_left[i][1].v.is_zero(1e-13));
        CHECK(e.hat_right[i][0].v.is_zero(1e-13));
        CHECK(e.hat_right[i][1].v.is_zero(1e-13));
    }
    // Leading outer term is genuinely nonzero.
    CHECK(e.outer[0][0].u.max_abs_coeff() > 0.1);
}

TEST_CASE("three-scale expansion, boundary cancellation and residual") {
    auto p = canonical_problem(1e-5, 1e-2);
    auto e = build_case_iv(p, 2, 2);
    auto d = assemble(e, p);

    CHECK(std::abs(d.u(0.0)) <= 1e-9);
    CHECK(std::abs(d.u(1.0)) <= 1e-9);
    CHECK(std::abs(d.v(0.0)) <= 1e-9);
    CHECK(std::abs(d.v(1.0)) <= 1e-9);

    const double r2 = residual_max(p, d);
    CHECK(r2 <= 1e-3);
    auto d0 = assemble(build_case_iv(p, 0, 0), p);
    CHECK(r2 <= 0.5 * residual_max(p, d0));

    check_derivative_chain(d);
}

TEST_CASE("two-scale eps-layer expansion, constant coefficients") {
    auto p = constant_problem(1e-4, 1e-2);
    auto e = build_case_ii(p, 0);

    CHECK(e.outer_u[0].eval(0.3) == doctest::Approx(0.5).epsilon(1e-10));
    const double r = std::sqrt(2.0) / p.mu;
    auto exact_v = [&](double x) {
        return 0.5 * (1.0 - (std::exp(-r * x) + std::exp(-r * (1.0 - x))) /
                                (1.0 + std::exp(-r)));
    };
    for (double x : {0.0, 0.005, 0.02, 0.3, 0.98, 1.0}) {
        CHECK(std::abs(e.outer_v[0].eval(x) - exact_v(x)) <= 1e-8);
    }

    // Leading eps layer cancels u_0(0): -(1/2+o(1)) e^{-sqrt2 s}.
    REQUIRE(e.hat_left[0].u.terms().size() == 1);
    CHECK(e.hat_left[0].u.eval(0.0) ==
          doctest::Approx(-e.outer_u[0].eval(0.0)).epsilon(1e-10));
    CHECK(std::abs(e.hat_left[0].u.terms()[0].rate -
                   std::complex<double>(std::sqrt(2.0))) <= 1e-12);
}

TEST_CASE("two-scale eps-layer expansion, residual and boundaries") {
    auto p = canonical_problem(1e-5, 0.4);
    auto e = build_case_ii(p, 3);
    auto d = assemble(e, p);

    CHECK(std::abs(d.u(0.0)) <= 1e-9);
    CHECK(std::abs(d.u(1.0)) <= 1e-9);
    CHECK(std::abs(d.v(0.0)) <= 1e-9);
    CHECK(std::abs(d.v(1.0)) <= 1e-9);

    const double r3 = residual_max(p, d);
    const double r1 = residual_max(p, assemble(build_case_ii(p, 1), p));
    CHECK(r3 <= 1e-4);
    CHECK(r3 <= 0.5 * r1);
    check_derivative_chain(d);
}

TEST_CASE("two-scale mu-layer expansion, constant coefficients") {
    auto p = constant_problem(0.04, 0.08);  // eps/mu = 0.5, mu small
    auto e = build_case_iii(p, 0);

    CHECK(e.outer[0].u.eval(0.6) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(e.outer[0].v.eval(0.6) == doctest::Approx(0.5).epsilon(1e-10));

    // Decoupled constant system: u-layer decays at rate sqrt2*mu/eps in the
    // mu-scaled variable, v-layer at rate sqrt2, both with weight -1/2.
    const auto& U = e.tilde_left[0];
    REQUIRE(U.u_comp.terms().size() == 1);
    REQUIRE(U.v_comp.terms().size() == 1);
    const double ratio = p.mu / p.epsilon;
    CHECK(std::abs(U.u_comp.terms()[0].rate -
                   std::complex<double>(std::sqrt(2.0) * ratio)) <= 1e-10);
    CHECK(std::abs(U.v_comp.terms()[0].rate -
                   std::complex<double>(std::sqrt(2.0))) <= 1e-12);
    CHECK(U.u_comp.eval(0.0) == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(U.v_comp.eval(0.0) == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("two-scale mu-layer expansion, residual and boundaries") {
    auto p = canonical_problem(0.02, 0.05);
    auto e = build_case_iii(p, 3);
    auto d = assemble(e, p);

    CHECK(std::abs(d.u(0.0)) <= 1e-9);
    CHECK(std::abs(d.u(1.0)) <= 1e-9);
    CHECK(std::abs(d.v(0.0)) <= 1e-9);
    CHECK(std::abs(d.v(1.0)) <= 1e-9);

    const double r3 = residual_max(p, d);
    const double r1 = residual_max(p, assemble(build_case_iii(p, 1), p));
    CHECK(r3 <= 1e-2);
    CHECK(r3 <= 0.5 * r1);
    check_derivative_chain(d);

    // Odd outer terms vanish.
    CHECK(e.outer[1].u.max_abs_coeff() <= 1e-11);
    CHECK(e.outer[3].v.max_abs_coeff() <= 1e-11);
}

TEST_CASE("term dumps are valid JSON with the expected shape") {
    auto p = canonical_problem(1e-4, 1e-2);
    auto j4 = nlohmann::json::parse(terms_json(build_case_iv(p, 1, 1)));
    CHECK(j4.contains("case"));
    CHECK(j4.contains("outer"));
    CHECK(j4["outer"].size() == 2);

    auto p2 = canonical_problem(1e-4, 0.4);
    auto j2 = nlohmann::json::parse(terms_json(build_case_ii(p2, 2)));
    CHECK(j2["outer"].size() == 3);
    CHECK(j2["hat_left"].size() == 3);

    auto p3 = canonical_problem(0.02, 0.05);
    auto j3 = nlohmann::json::parse(terms_json(build_case_iii(p3, 2)));
    CHECK(j3["tilde_left"].size() == 3);
}
