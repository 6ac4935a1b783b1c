#include "spx/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace spx::analysis {

using funcalc::EvalError;
using halfline::cplx;

LayerRates layer_rates(const ProblemSpec& p) {
    auto pair_at = [&](double x, double& lo, double& hi) {
        const double a11 = p.a11.eval(x);
        const double det = a11 * p.a22.eval(x) - p.a12.eval(x) * p.a21.eval(x);
        const double reduced = det / a11;
        lo = std::min(a11, reduced);
        hi = std::max(a11, reduced);
    };
    LayerRates r{};
    pair_at(0.0, r.a_lower_left, r.a_upper_left);
    pair_at(1.0, r.a_lower_right, r.a_upper_right);
    r.beta_left = std::sqrt(p.a11.eval(0.0));
    r.beta_right = std::sqrt(p.a11.eval(1.0));
    r.beta0 = p.alpha;
    if (!(r.a_lower_left > 0.0) || !(r.a_lower_right > 0.0) || !(r.beta0 > 0.0))
        throw EvalError("layer rates are not all positive");
    return r;
}

double energy_norm(const std::function<double(double)>& u,
                   const std::function<double(double)>& du,
                   const std::function<double(double)>& v,
                   const std::function<double(double)>& dv, const Mesh& mesh,
                   double epsilon, double mu, double alpha) {
    double h1u = 0.0, h1v = 0.0, l2u = 0.0, l2v = 0.0;
    auto sq = [](double x) { return x * x; };
    for (std::size_t i = 0; i + 1 < mesh.nodes.size(); ++i) {
        const double a = mesh.nodes[i], b = mesh.nodes[i + 1];
        const double h = b - a, m = 0.5 * (a + b);
        // Simpson on the cell.
        h1u += h / 6.0 * (sq(du(a)) + 4.0 * sq(du(m)) + sq(du(b)));
        h1v += h / 6.0 * (sq(dv(a)) + 4.0 * sq(dv(m)) + sq(dv(b)));
        l2u += h / 6.0 * (sq(u(a)) + 4.0 * sq(u(m)) + sq(u(b)));
        l2v += h / 6.0 * (sq(v(a)) + 4.0 * sq(v(m)) + sq(v(b)));
    }
    return std::sqrt(epsilon * epsilon * h1u + mu * mu * h1v +
                     alpha * alpha * (l2u + l2v));
}

double energy_norm(const GridFunction& g, double epsilon, double mu, double alpha) {
    double h1u = 0.0, h1v = 0.0, l2u = 0.0, l2v = 0.0;
    const auto& x = g.mesh.nodes;
    const bool has_v = g.v.size() == g.u.size();
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double h = x[i + 1] - x[i];
        const double su = (g.u[i + 1] - g.u[i]) / h;
        h1u += h * su * su;
        l2u += 0.5 * h * (g.u[i] * g.u[i] + g.u[i + 1] * g.u[i + 1]);
        if (has_v) {
            const double sv = (g.v[i + 1] - g.v[i]) / h;
            h1v += h * sv * sv;
            l2v += 0.5 * h * (g.v[i] * g.v[i] + g.v[i + 1] * g.v[i + 1]);
        }
    }
    return std::sqrt(epsilon * epsilon * h1u + mu * mu * h1v +
                     alpha * alpha * (l2u + l2v));
}

double weighted_l2_norm(const ExpPoly& w, double beta) {
    if (beta >= w.min_rate())
        throw EvalError("divergent weighted integral: weight exceeds the decay rate");
    // Write the real part as 1/2 (z + conj z) and integrate products of the
    // complex terms: int_0^inf e^{-c s} s^k ds = k! / c^{k+1}.
    struct CTerm {
        cplx rate;
        std::vector<cplx> poly;
    };
    std::vector<CTerm> parts;
    for (const auto& t : w.terms()) {
        CTerm a{t.rate, t.poly};
        for (cplx& c : a.poly) c *= 0.5;
        CTerm b{std::conj(t.rate), t.poly};
        for (cplx& c : b.poly) c = std::conj(c) * 0.5;
        parts.push_back(std::move(a));
        parts.push_back(std::move(b));
    }
    cplx total = 0.0;
    for (const CTerm& a : parts) {
        for (const CTerm& b : parts) {
            const cplx c = a.rate + b.rate - 2.0 * beta;
            double fact = 1.0;
            for (std::size_t ka = 0; ka < a.poly.size(); ++ka) {
                for (std::size_t kb = 0; kb < b.poly.size(); ++kb) {
                    const int k = static_cast<int>(ka + kb);
                    fact = 1.0;
                    for (int n = 2; n <= k; ++n) fact *= n;
                    total += a.poly[ka] * b.poly[kb] * fact /
                             std::pow(c, static_cast<double>(k + 1));
                }
            }
        }
    }
    return std::sqrt(std::max(0.0, total.real()));
}

double residual_sup(const ProblemSpec& p, const Decomposition& d, int sample) {
    if (sample <= 0) sample = 60;
    std::vector<double> xs;
    // Uniform in each layer variable near the endpoints, uniform inside.
    for (int k = 0; k <= sample; ++k) {
        const double t = static_cast<double>(k) / sample;
        xs.push_back(std::min(0.5, 8.0 * p.epsilon * t));
        xs.push_back(std::min(0.5, 8.0 * p.mu * t));
        xs.push_back(std::max(0.5, 1.0 - 8.0 * p.epsilon * t));
        xs.push_back(std::max(0.5, 1.0 - 8.0 * p.mu * t));
        xs.push_back(t);
    }
    double worst = 0.0;
    for (double x : xs) {
        const double u = d.u(x), v = d.v(x);
        const double r1 = -p.epsilon * p.epsilon * d.d2u(x) + p.a11.eval(x) * u +
                          p.a12.eval(x) * v - p.f.eval(x);
        const double r2 = -p.mu * p.mu * d.d2v(x) + p.a21.eval(x) * u +
                          p.a22.eval(x) * v - p.g.eval(x);
        worst = std::max({worst, std::abs(r1), std::abs(r2)});
    }
    return worst;
}

double remainder_energy(const ProblemSpec& p, const Decomposition& d,
                        const GridFunction& reference) {
    GridFunction diff;
    diff.mesh = reference.mesh;
    diff.u.reserve(reference.u.size());
    diff.v.reserve(reference.v.size());
    for (std::size_t i = 0; i < reference.mesh.nodes.size(); ++i) {
        const double x = reference.mesh.nodes[i];
        diff.u.push_back(reference.u[i] - d.u(x));
        diff.v.push_back(reference.v[i] - d.v(x));
    }
    return energy_norm(diff, p.epsilon, p.mu, p.alpha);
}

double boundary_mismatch(const Decomposition& d) {
    return std::max({std::abs(d.u(0.0)), std::abs(d.v(0.0)), std::abs(d.u(1.0)),
                     std::abs(d.v(1.0))});
}

namespace {

CheckResult check_magnitude(std::string name, double magnitude, double tol) {
    return {std::move(name), magnitude <= tol, magnitude};
}

}  // namespace

std::vector<CheckResult> structural_check(const expansion::ExpansionCaseIV& e) {
    std::vector<CheckResult> out;
    double zero_jgti = 0.0, zero_odd = 0.0, hatv_low = 0.0;
    double scale = 1.0;
    for (int i = 0; i <= e.m1; ++i)
        for (int j = 0; j <= e.m2; ++j) {
            const double mag = std::max(e.outer[i][j].u.max_abs_coeff(),
                                        e.outer[i][j].v.max_abs_coeff());
            scale = std::max(scale, mag);
            if (j > i) zero_jgti = std::max(zero_jgti, mag);
            if (i % 2 == 1 || j % 2 == 1) zero_odd = std::max(zero_odd, mag);
            if (j <= 1) {
                hatv_low = std::max(hatv_low, e.hat_left[i][j].v.max_abs_coeff());
                hatv_low = std::max(hatv_low, e.hat_right[i][j].v.max_abs_coeff());
            }
        }
    out.push_back(check_magnitude("outer-zero-above-diagonal", zero_jgti, 1e-12 * scale));
    out.push_back(check_magnitude("outer-zero-odd-index", zero_odd, 1e-12 * scale));
    out.push_back(check_magnitude("hat-v-first-two-levels-zero", hatv_low, 1e-12 * scale));
    double bc = 0.0;
    for (int i = 0; i <= e.m1; ++i)
        for (int j = 0; j <= e.m2; ++j) {
            bc = std::max(bc, std::abs(e.outer[i][j].u.eval(0.0) +
                                       e.tilde_left[i][j].u.eval(0.0) +
                                       e.hat_left[i][j].u.eval(0.0)));
            bc = std::max(bc, std::abs(e.outer[i][j].v.eval(0.0) +
                                       e.tilde_left[i][j].v.eval(0.0) +
                                       e.hat_left[i][j].v.eval(0.0)));
            bc = std::max(bc, std::abs(e.outer[i][j].u.eval(1.0) +
                                       e.tilde_right[i][j].u.eval(0.0) +
                                       e.hat_right[i][j].u.eval(0.0)));
            bc = std::max(bc, std::abs(e.outer[i][j].v.eval(1.0) +
                                       e.tilde_right[i][j].v.eval(0.0) +
                                       e.hat_right[i][j].v.eval(0.0)));
        }
    out.push_back(check_magnitude("bc-cancellation", bc, 1e-9 * scale));
    return out;
}

std::vector<CheckResult> structural_check(const expansion::ExpansionCaseII& e) {
    std::vector<CheckResult> out;
    double scale = 1.0, hatv_low = 0.0, bc = 0.0;
    for (int i = 0; i <= e.m; ++i)
        scale = std::max({scale, e.outer_u[i].max_abs_coeff(),
                          e.outer_v[i].max_abs_coeff()});
    for (int i = 0; i <= std::min(e.m, 1); ++i) {
        hatv_low = std::max(hatv_low, e.hat_left[i].v.max_abs_coeff());
        hatv_low = std::max(hatv_low, e.hat_right[i].v.max_abs_coeff());
    }
    out.push_back(check_magnitude("hat-v-first-two-levels-zero", hatv_low, 1e-12 * scale));
    for (int i = 0; i <= e.m; ++i) {
        bc = std::max(bc, std::abs(e.outer_u[i].eval(0.0) + e.hat_left[i].u.eval(0.0)));
        bc = std::max(bc, std::abs(e.outer_v[i].eval(0.0) + e.hat_left[i].v.eval(0.0)));
        bc = std::max(bc, std::abs(e.outer_u[i].eval(1.0) + e.hat_right[i].u.eval(0.0)));
        bc = std::max(bc, std::abs(e.outer_v[i].eval(1.0) + e.hat_right[i].v.eval(0.0)));
    }
    out.push_back(check_magnitude("bc-cancellation", bc, 1e-9 * scale));
    return out;
}

std::vector<CheckResult> structural_check(const expansion::ExpansionCaseIII& e) {
    std::vector<CheckResult> out;
    double scale = 1.0, zero_odd = 0.0, bc = 0.0;
    for (int i = 0; i <= e.m; ++i) {
        const double mag =
            std::max(e.outer[i].u.max_abs_coeff(), e.outer[i].v.max_abs_coeff());
        scale = std::max(scale, mag);
        if (i % 2 == 1) zero_odd = std::max(zero_odd, mag);
    }
    out.push_back(check_magnitude("outer-zero-odd-index", zero_odd, 1e-12 * scale));
    for (int i = 0; i <= e.m; ++i) {
        bc = std::max(bc, std::abs(e.outer[i].u.eval(0.0) +
                                   e.tilde_left[i].u_comp.eval(0.0)));
        bc = std::max(bc, std::abs(e.outer[i].v.eval(0.0) +
                                   e.tilde_left[i].v_comp.eval(0.0)));
        bc = std::max(bc, std::abs(e.outer[i].u.eval(1.0) +
                                   e.tilde_right[i].u_comp.eval(0.0)));
        bc = std::max(bc, std::abs(e.outer[i].v.eval(1.0) +
                                   e.tilde_right[i].v_comp.eval(0.0)));
    }
    out.push_back(check_magnitude("bc-cancellation", bc, 1e-9 * scale));
    return out;
}

PositivityReport positivity_check(ProblemSpec p) {
    PositivityReport r{0.0, false, ""};
    try {
        p.validate();
    } catch (const EvalError& e) {
        r.details = e.what();
        return r;
    }
    r.alpha = p.alpha;
    const double a2 = p.alpha * p.alpha;
    double worst = 0.0;
    for (int k = 0; k < funcalc::kProbePoints; ++k) {
        const double x = static_cast<double>(k) / (funcalc::kProbePoints - 1);
        const double m11 = p.a11.eval(x), m22 = p.a22.eval(x);
        const double det = m11 * m22 - p.a12.eval(x) * p.a21.eval(x);
        worst = std::max({worst, a2 - m11, a2 - m22, a2 * std::max(m11, m22) - det,
                          a2 * a2 - det});
    }
    r.pass = worst <= 1e-10;
    std::ostringstream os;
    os << "alpha=" << r.alpha << "; worst positivity slack " << -worst;
    r.details = os.str();
    return r;
}

FitResult decay_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                    DecayModel model) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw EvalError("decay fit needs at least 3 points");
    std::vector<double> t(xs.size()), ly(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!(ys[k] > 0.0)) throw EvalError("decay fit needs positive values");
        ly[k] = std::log(ys[k]);
        if (model == DecayModel::Power) {
            if (!(xs[k] > 0.0)) throw EvalError("power fit needs positive abscissae");
            t[k] = std::log(xs[k]);
        } else {
            t[k] = xs[k];
        }
    }
    const double n = static_cast<double>(xs.size());
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        st += t[k];
        sy += ly[k];
        stt += t[k] * t[k];
        sty += t[k] * ly[k];
    }
    const double denom = n * stt - st * st;
    double slope = denom != 0.0 ? (n * sty - st * sy) / denom : 0.0;
    const double intercept = (sy - slope * st) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean = sy / n;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double fit = intercept + slope * t[k];
        ss_res += (ly[k] - fit) * (ly[k] - fit);
        ss_tot += (ly[k] - mean) * (ly[k] - mean);
    }
    FitResult r;
    r.rate = model == DecayModel::ExpReciprocal ? -slope : slope;
    r.prefactor = std::exp(intercept);
    r.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return r;
}

std::vector<DerivativeProbeRow> derivative_growth_probe(const ProblemSpec& p,
                                                        const GridFunction& reference,
                                                        int n_max) {
    if (n_max < 0 || n_max > 3)
        throw EvalError("derivative probe supports orders 0..3");
    std::vector<DerivativeProbeRow> rows;
    std::vector<double> x = reference.mesh.nodes, u = reference.u, v = reference.v;
    for (int n = 0; n <= n_max; ++n) {
        double l2u = 0.0, l2v = 0.0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            const double h = x[i + 1] - x[i];
            l2u += 0.5 * h * (u[i] * u[i] + u[i + 1] * u[i + 1]);
            l2v += 0.5 * h * (v[i] * v[i] + v[i + 1] * v[i + 1]);
        }
        const double norm = std::sqrt(l2u) + std::sqrt(l2v);
        const double base = std::max(static_cast<double>(n), 1.0 / p.epsilon);
        rows.push_back({n, norm, norm / std::pow(base, n)});
        if (n == n_max) break;
        // Difference onto midpoints for the next order.
        std::vector<double> xn, un, vn;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            const double h = x[i + 1] - x[i];
            xn.push_back(0.5 * (x[i] + x[i + 1]));
            un.push_back((u[i + 1] - u[i]) / h);
            vn.push_back((v[i + 1] - v[i]) / h);
        }
        x = std::move(xn);
        u = std::move(un);
        v = std::move(vn);
    }
    return rows;
}

std::string StudyReport::to_csv() const {
    std::string out =
        "epsilon,mu,m1,m2,rem_energy,resid_sup,bc_mismatch,ref_err,fit_b,fit_r2,pass\n";
    char buf[512];
    for (const StudyRow& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%.12e,%.12e,%d,%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%d\n",
                      r.epsilon, r.mu, r.m1, r.m2, r.rem_energy, r.resid_sup,
                      r.bc_mismatch, r.ref_err, r.fit_b, r.fit_r2, r.pass ? 1 : 0);
        out += buf;
    }
    return out;
}

std::string StudyReport::to_json() const {
    nlohmann::ordered_json j;
    j["problem_hash"] = problem_hash;
    j["tol"] = tol;
    j["columns"] = {"epsilon", "mu",          "m1",    "m2",     "rem_energy",
                    "resid_sup", "bc_mismatch", "ref_err", "fit_b", "fit_r2",
                    "pass"};
    auto rows_json = nlohmann::ordered_json::array();
    for (const StudyRow& r : rows) {
        nlohmann::ordered_json row;
        row["epsilon"] = r.epsilon;
        row["mu"] = r.mu;
        row["m1"] = r.m1;
        row["m2"] = r.m2;
        row["rem_energy"] = r.rem_energy;
        row["resid_sup"] = r.resid_sup;
        row["bc_mismatch"] = r.bc_mismatch;
        row["ref_err"] = r.ref_err;
        row["fit_b"] = r.fit_b;
        row["fit_r2"] = r.fit_r2;
        row["pass"] = r.pass;
        rows_json.push_back(std::move(row));
    }
    j["rows"] = rows_json;
    return j.dump(2);
}

}  // namespace spx::analysis
