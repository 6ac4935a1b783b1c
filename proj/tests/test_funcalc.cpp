#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "spx/funcalc.hpp"

using namespace spx::funcalc;

TEST_CASE("parse and evaluate") {
    CHECK(parse_function("2 + x*x").eval(0.5) == doctest::Approx(2.25).epsilon(1e-14));
    CHECK(parse_function("exp(x)").eval(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(parse_function("sin(pi/2)").eval(0.3) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(parse_function("e").eval(0.0) == doctest::Approx(std::exp(1.0)));
    CHECK(parse_function("2^-2").eval(0.0) == doctest::Approx(0.25));
    CHECK(parse_function("-x^2").eval(2.0) == doctest::Approx(-4.0));
    CHECK(parse_function("(1+x)^3").eval(1.0) == doctest::Approx(8.0));
}

TEST_CASE("parse errors carry the offset") {
    try {
        parse_function("2 +* x");
        FAIL("expected a syntax error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
    }
    CHECK_THROWS_AS(parse_function(""), ParseError);
    CHECK_THROWS_AS(parse_function("2 + foo(x)"), ParseError);
    CHECK_THROWS_AS(parse_function("(1+x"), ParseError);
    CHECK_THROWS_AS(parse_function("x^y"), ParseError);
}

TEST_CASE("Taylor coefficients at a center") {
    auto c = parse_function("exp(x)").taylor(0.0, 3);
    CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c[2] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c[3] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    c = parse_function("2 + x").taylor(0.0, 2);
    CHECK(c == std::vector<double>{2.0, 1.0, 0.0});

    c = parse_function("1/(1+x)").taylor(0.0, 3);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(-1.0));
    CHECK(c[2] == doctest::Approx(1.0));
    CHECK(c[3] == doctest::Approx(-1.0));

    // sin/cos joint propagation, checked against the known series of sin at 0.
    c = parse_function("sin(x)").taylor(0.0, 5);
    CHECK(c[1] == doctest::Approx(1.0));
    CHECK(c[3] == doctest::Approx(-1.0 / 6.0));
    CHECK(c[5] == doctest::Approx(1.0 / 120.0));

    CHECK_THROWS_AS(parse_function("1/x").taylor(0.0, 2), EvalError);
}

TEST_CASE("Taylor products are Cauchy products") {
    std::mt19937 rng(12345);
    std::uniform_int_distribution<int> coeff(-5, 5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> p(5), q(5);
        std::string ps, qs;
        auto render = [&](const std::vector<double>& c) {
            std::string s = "0";
            for (int k = 0; k < 5; ++k) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), " + (%.17g)*x^%d", c[k], k);
                s += buf;
            }
            return s;
        };
        for (int k = 0; k < 5; ++k) {
            p[k] = coeff(rng);
            q[k] = coeff(rng);
        }
        ps = render(p);
        qs = render(q);
        auto got = parse_function("(" + ps + ")*(" + qs + ")").taylor(0.0, 8);
        std::vector<double> want(9, 0.0);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) want[i + j] += p[i] * q[j];
        for (int k = 0; k <= 8; ++k) {
            const double scale = std::max(1.0, std::abs(want[k]));
            CHECK(std::abs(got[k] - want[k]) <= 1e-13 * scale);
        }
    }
}

TEST_CASE("Chebyshev fit reproduces functions") {
    auto x2 = ChebSeries::fit([](double x) { return x * x; }, 4);
    CHECK(x2.eval(0.3) == doctest::Approx(0.09).epsilon(1e-14));

    auto ex = ChebSeries::fit([](double x) { return std::exp(x); }, 16);
    CHECK(std::abs(ex.eval(1.0) - std::exp(1.0)) <= 1e-12);

    auto c5 = ChebSeries::fit([](double) { return 5.0; }, 2);
    REQUIRE(c5.coeffs().size() == 3);
    CHECK(c5.coeffs()[0] == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(std::abs(c5.coeffs()[1]) <= 1e-13);
    CHECK(std::abs(c5.coeffs()[2]) <= 1e-13);
}

TEST_CASE("Chebyshev fit accuracy once the tail is resolved") {
    const char* exprs[] = {"exp(x)", "sin(3*x)", "1/(2+x)", "x^4 - x"};
    for (const char* src : exprs) {
        auto fn = parse_function(src);
        bool limited = true;
        auto fit = ChebSeries::fit_adaptive([&](double x) { return fn.eval(x); },
                                            &limited);
        CHECK(!limited);
        CHECK(fit.tail_estimate() <= 1e-12 * fit.max_abs_coeff());
        for (int k = 0; k < kProbePoints; ++k) {
            const double x = static_cast<double>(k) / (kProbePoints - 1);
            CHECK(std::abs(fit.eval(x) - fn.eval(x)) <= 1e-10);
        }
    }
}

TEST_CASE("Chebyshev derivative is the exact polynomial derivative") {
    auto x2 = ChebSeries::fit([](double x) { return x * x; }, 4);
    CHECK(x2.derivative().eval(0.25) == doctest::Approx(0.5).epsilon(1e-13));

    auto c = ChebSeries::fit([](double) { return 7.0; }, 4);
    CHECK(c.derivative().max_abs_coeff() <= 1e-12);

    auto ex = ChebSeries::fit([](double x) { return std::exp(x); }, 20);
    CHECK(std::abs(ex.derivative().eval(0.5) - std::exp(0.5)) <= 1e-10);
}

TEST_CASE("second Chebyshev derivative of sin(pi x)") {
    auto s = ChebSeries::fit([](double x) { return std::sin(M_PI * x); }, 24);
    auto d2 = s.derivative().derivative();
    for (int k = 0; k <= 100; ++k) {
        const double x = k / 100.0;
        CHECK(std::abs(d2.eval(x) + M_PI * M_PI * std::sin(M_PI * x)) <= 1e-8);
    }
}

TEST_CASE("collocation scalar BVP matches the closed form") {
    // -mu^2 v'' + 2 v = 1, v(0)=v(1)=0.
    const double mu = 0.5;
    auto v = cheb_solve_scalar_bvp([](double) { return 2.0; },
                                   [](double) { return 1.0; }, mu, 0.0, 0.0);
    auto exact = [&](double x) {
        const double r = std::sqrt(2.0) / mu;
        return 0.5 * (1.0 - (std::exp(-r * x) + std::exp(-r * (1.0 - x))) /
                                (1.0 + std::exp(-r)));
    };
    for (int k = 0; k <= 200; ++k) {
        const double x = k / 200.0;
        CHECK(std::abs(v.eval(x) - exact(x)) <= 1e-9);
    }

    // Constant solution: rhs = c, bc = 1 -> v = 1.
    auto one = cheb_solve_scalar_bvp([](double x) { return 2.0 + x; },
                                     [](double x) { return 2.0 + x; }, 0.3, 1.0, 1.0);
    CHECK(std::abs(one.eval(0.37) - 1.0) <= 1e-10);
}

static std::string canonical_json() {
    return R"json({"epsilon": 1e-4, "mu": 1e-2,
                   "a11": "2 + x", "a12": "1", "a21": "1", "a22": "2 + x",
                   "f": "exp(x)", "g": "1 + x"})json";
}

TEST_CASE("problem validation computes alpha and rejects indefinite data") {
    auto p = ProblemSpec::from_json(canonical_json());
    CHECK(p.alpha > 0.0);
    // Symmetric part eigenvalues of [[2+x,1],[1,2+x]] are 1+x and 3+x.
    CHECK(p.alpha * p.alpha == doctest::Approx(1.0).epsilon(1e-9));

    ProblemSpec identity2;
    identity2.epsilon = 0.5;
    identity2.mu = 0.5;
    identity2.a11 = identity2.a22 = parse_function("2");
    identity2.a12 = identity2.a21 = parse_function("0");
    identity2.f = identity2.g = parse_function("1");
    identity2.validate();
    CHECK(identity2.alpha * identity2.alpha == doctest::Approx(2.0).epsilon(1e-9));

    ProblemSpec bad = identity2;
    bad.a11 = bad.a22 = parse_function("1");
    bad.a12 = parse_function("3");
    bad.a21 = parse_function("0");
    CHECK_THROWS_AS(bad.validate(), EvalError);

    ProblemSpec order = identity2;
    order.epsilon = 0.9;  // epsilon > mu
    CHECK_THROWS_AS(order.validate(), EvalError);
}

TEST_CASE("problem JSON rejects unknown and missing fields") {
    CHECK_THROWS_AS(ProblemSpec::from_json(R"({"epsilon":0.1})"), EvalError);
    CHECK_THROWS_AS(
        ProblemSpec::from_json(
            R"({"epsilon":0.1,"mu":0.5,"a11":"2","a12":"0","a21":"0","a22":"2",
                "f":"1","g":"1","extra":1})"),
        EvalError);
    CHECK_THROWS_AS(ProblemSpec::from_json("not json"), EvalError);
}

TEST_CASE("reflection maps x to 1-x") {
    auto f = parse_function("exp(x) + x^2");
    auto r = f.reflected();
    for (int k = 0; k <= 10; ++k) {
        const double x = k / 10.0;
        CHECK(r.eval(x) == doctest::Approx(f.eval(1.0 - x)).epsilon(1e-14));
    }
    auto p = ProblemSpec::from_json(canonical_json());
    auto pr = p.reflected();
    CHECK(pr.a11.eval(0.25) == doctest::Approx(p.a11.eval(0.75)).epsilon(1e-14));
    CHECK(pr.f.eval(0.0) == doctest::Approx(p.f.eval(1.0)).epsilon(1e-14));
}
