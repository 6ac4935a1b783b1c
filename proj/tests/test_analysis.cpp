#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "spx/analysis.hpp"

using namespace spx::analysis;
using spx::expansion::assemble;
using spx::expansion::build_case_ii;
using spx::expansion::build_case_iii;
using spx::expansion::build_case_iv;
using spx::funcalc::ChebSeries;
using spx::funcalc::EvalError;
using spx::funcalc::parse_function;
using spx::halfline::ExpPoly;
using spx::halfline::ScaleTag;
using spx::refsolve::refine_and_estimate;
using spx::refsolve::shishkin_mesh;

namespace {

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

ExpPoly single(double rate, std::vector<double> poly) {
    ExpPoly::Term t;
    t.rate = rate;
    t.poly.assign(poly.begin(), poly.end());
    return ExpPoly({t}, ScaleTag::HatLeft);
}

}  // namespace

TEST_CASE("layer rates from the coefficient matrix") {
    auto p = canonical_problem(1e-4, 1e-2);
    auto r = layer_rates(p);
    // At x=0: a11 = 2, detA/a11 = 3/2; at x=1: a11 = 3, detA/a11 = 8/3.
    CHECK(r.a_lower_left == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(r.a_upper_left == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.a_lower_right == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(r.a_upper_right == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.beta_left == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.beta_right == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.beta0 == doctest::Approx(p.alpha).epsilon(1e-12));
}

TEST_CASE("energy norm of a smooth pair") {
    auto mesh = shishkin_mesh(0.2, 0.4, 32, 1.0);
    auto u = [](double x) { return std::sin(M_PI * x); };
    auto du = [](double x) { return M_PI * std::cos(M_PI * x); };
    auto zero = [](double) { return 0.0; };
    // eps=1, alpha=1: sqrt(pi^2/2 + 1/2).
    const double got = energy_norm(u, du, zero, zero, mesh, 1.0, 1.0, 1.0);
    CHECK(got == doctest::Approx(std::sqrt(M_PI * M_PI / 2.0 + 0.5)).epsilon(1e-8));

    // Homogeneity of degree one.
    auto u2 = [&](double x) { return 2.0 * u(x); };
    auto du2 = [&](double x) { return 2.0 * du(x); };
    CHECK(energy_norm(u2, du2, zero, zero, mesh, 1.0, 1.0, 1.0) ==
          doctest::Approx(2.0 * got).epsilon(1e-10));

    // The grid version agrees with the exact version on a resolved function.
    GridFunction g;
    g.mesh = mesh;
    for (double x : mesh.nodes) {
        g.u.push_back(u(x));
        g.v.push_back(0.0);
    }
    CHECK(energy_norm(g, 1.0, 1.0, 1.0) == doctest::Approx(got).epsilon(1e-3));
}

TEST_CASE("weighted half-line norm") {
    // ||e^{-s}||_{0,0}^2 = 1/2.
    CHECK(weighted_l2_norm(single(1.0, {1.0}), 0.0) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-13));
    // Divergent weight is rejected.
    CHECK_THROWS_AS(weighted_l2_norm(single(1.0, {1.0}), 1.0), EvalError);
    CHECK(weighted_l2_norm(ExpPoly(ScaleTag::HatLeft), 5.0) == 0.0);

    // Closed form against Simpson quadrature on randomized inputs.
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    std::uniform_real_distribution<double> rate_d(0.8, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto w = single(rate_d(rng), {d(rng), d(rng), d(rng)})
                     .plus(single(rate_d(rng), {d(rng)}));
        const double beta = 0.3;
        const double got = weighted_l2_norm(w, beta);
        const int n = 40000;
        const double L = 80.0, h = L / n;
        double s = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double x = k * h;
            const double val = std::exp(2.0 * beta * x) * w.eval(x) * w.eval(x);
            const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            s += wgt * val;
        }
        const double numeric = std::sqrt(s * h / 3.0);
        CHECK(got == doctest::Approx(numeric).epsilon(1e-7));
    }
}

TEST_CASE("residual and remainder shrink with the expansion order") {
    auto p = canonical_problem(1e-5, 0.4);
    auto d3 = assemble(build_case_ii(p, 3), p);
    auto d0 = assemble(build_case_ii(p, 0), p);
    CHECK(residual_sup(p, d3) < residual_sup(p, d0));
    CHECK(residual_sup(p, d3) <= 1e-4);

    auto [ref, est] = refine_and_estimate(p, 32);
    const double r3 = remainder_energy(p, d3, ref);
    const double r0 = remainder_energy(p, d0, ref);
    CHECK(r3 >= 0.0);
    CHECK(r3 < r0);

    // The reference compared against itself has zero remainder.
    CHECK(boundary_mismatch(d3) <= 1e-9);
}

TEST_CASE("boundary mismatch detects a corrupted decomposition") {
    auto p = canonical_problem(1e-4, 1e-2);
    auto d = assemble(build_case_iv(p, 2, 2), p);
    CHECK(boundary_mismatch(d) <= 1e-9);
    auto bad = d;
    bad.smooth_u = bad.smooth_u.plus(ChebSeries::fit([](double) { return 0.25; }, 2));
    CHECK(boundary_mismatch(bad) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("structural checks pass on real builds and fail on corrupted ones") {
    auto p = canonical_problem(1e-4, 1e-2);
    auto e4 = build_case_iv(p, 2, 2);
    for (const auto& c : structural_check(e4)) {
        INFO(c.name, " magnitude=", c.magnitude);
        CHECK(c.pass);
    }

    auto corrupt = e4;
    corrupt.outer[1][0].u = ChebSeries::fit([](double x) { return x; }, 4);
    bool saw_fail = false;
    for (const auto& c : structural_check(corrupt)) {
        if (c.name == "outer-zero-odd-index") {
            CHECK(!c.pass);
            CHECK(c.magnitude > 0.1);
            saw_fail = true;
        }
    }
    CHECK(saw_fail);

    auto corrupt2 = e4;
    corrupt2.hat_left[0][0].v = single(1.0, {0.5});
    bool saw_hatv = false;
    for (const auto& c : structural_check(corrupt2)) {
        if (c.name == "hat-v-first-two-levels-zero") {
            CHECK(!c.pass);
            saw_hatv = true;
        }
    }
    CHECK(saw_hatv);

    auto p2 = canonical_problem(1e-4, 0.4);
    for (const auto& c : structural_check(build_case_ii(p2, 2))) CHECK(c.pass);
    auto p3 = canonical_problem(0.02, 0.05);
    for (const auto& c : structural_check(build_case_iii(p3, 2))) CHECK(c.pass);
}

TEST_CASE("positivity check") {
    auto good = positivity_check(canonical_problem(1e-4, 1e-2));
    CHECK(good.pass);
    CHECK(good.alpha == doctest::Approx(1.0).epsilon(1e-8));

    ProblemSpec bad;
    bad.epsilon = 0.01;
    bad.mu = 0.1;
    bad.a11 = bad.a22 = parse_function("1");
    bad.a12 = parse_function("3");
    bad.a21 = parse_function("0");
    bad.f = bad.g = parse_function("1");
    CHECK(!positivity_check(bad).pass);
}

TEST_CASE("decay fits recover synthetic laws") {
    std::vector<double> xs{1, 2, 3, 4, 5, 6}, ye, yp;
    for (double x : xs) {
        ye.push_back(3.0 * std::exp(-2.0 * x));
        yp.push_back(5.0 * std::pow(x, -3.0));
    }
    auto fe = decay_fit(xs, ye, DecayModel::ExpReciprocal);
    CHECK(fe.rate == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fe.prefactor == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fe.r_squared == doctest::Approx(1.0).epsilon(1e-10));

    auto fp = decay_fit(xs, yp, DecayModel::Power);
    CHECK(fp.rate == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(fp.prefactor == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(fp.r_squared == doctest::Approx(1.0).epsilon(1e-10));

    // A power law fitted with the exponential model is a visibly worse fit.
    auto cross = decay_fit(xs, yp, DecayModel::ExpReciprocal);
    CHECK(cross.r_squared < 0.99);

    CHECK_THROWS_AS(decay_fit({1, 2}, {1, 0.5}, DecayModel::Power), EvalError);
    CHECK_THROWS_AS(decay_fit(xs, {1, 1, 1, 1, 1, -1}, DecayModel::Power),
                    EvalError);
}

TEST_CASE("derivative growth probe") {
    auto p = canonical_problem(1e-3, 1e-1);
    auto [ref, est] = refine_and_estimate(p, 16);
    auto rows = derivative_growth_probe(p, ref, 3);
    REQUIRE(rows.size() == 4);
    for (int n = 0; n <= 3; ++n) {
        CHECK(rows[n].n == n);
        CHECK(rows[n].norm > 0.0);
        CHECK(std::isfinite(rows[n].ratio));
        // Scaled ratios stay bounded: the derivative growth does not outrun
        // the max{n, 1/eps}^n envelope.
        CHECK(rows[n].ratio <= 10.0);
    }
    CHECK(rows[3].norm > rows[0].norm);  // layers make derivatives grow
    CHECK_THROWS_AS(derivative_growth_probe(p, ref, 4), EvalError);
}

TEST_CASE("study report rendering") {
    StudyReport rep;
    rep.problem_hash = "abc123";
    rep.tol = 0.1;
    StudyRow row{1e-4, 1e-2, 2,     2,    0.01, 0.02,
                 1e-10, 0.005, 1.9, 0.995, true};
    rep.rows = {row};
    auto csv = rep.to_csv();
    CHECK(csv.rfind("epsilon,mu,m1,m2,rem_energy,resid_sup,bc_mismatch,ref_err,"
                    "fit_b,fit_r2,pass",
                    0) == 0);
    CHECK(csv.find(",1\n") != std::string::npos);  // pass rendered as 1

    auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["problem_hash"] == "abc123");
    CHECK(j["rows"].size() == 1);
    CHECK(j["rows"][0]["pass"] == true);
    CHECK(j["rows"][0]["epsilon"] == doctest::Approx(1e-4));
}
