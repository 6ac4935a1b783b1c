#include "spx/halfline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace spx::halfline {

namespace {

constexpr double kRateMergeTol = 1e-12;
constexpr double kResonanceTol = 1e-10;

bool poly_is_zero(const std::vector<cplx>& p, double tol) {
    for (const cplx& c : p)
        if (std::abs(c) > tol) return false;
    return true;
}

void strip_trailing_zeros(std::vector<cplx>& p) {
    while (p.size() > 1 && std::abs(p.back()) == 0.0) p.pop_back();
}

cplx poly_eval(const std::vector<cplx>& p, double s) {
    cplx acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * s + *it;
    return acc;
}

}  // namespace

std::string to_string(ScaleTag tag) {
    switch (tag) {
        case ScaleTag::TildeLeft: return "tilde-left";
        case ScaleTag::HatLeft: return "hat-left";
        case ScaleTag::TildeRight: return "tilde-right";
        case ScaleTag::HatRight: return "hat-right";
    }
    return "?";
}

ScaleTag scale_tag_from_string(const std::string& s) {
    if (s == "tilde-left") return ScaleTag::TildeLeft;
    if (s == "hat-left") return ScaleTag::HatLeft;
    if (s == "tilde-right") return ScaleTag::TildeRight;
    if (s == "hat-right") return ScaleTag::HatRight;
    throw EvalError("unknown scale tag '" + s + "'");
}

ExpPoly::ExpPoly(std::vector<Term> terms, ScaleTag tag)
    : terms_(std::move(terms)), tag_(tag) {
    normalize();
}

void ExpPoly::normalize() {
    std::vector<Term> merged;
    for (Term& t : terms_) {
        strip_trailing_zeros(t.poly);
        if (t.poly.empty() || poly_is_zero(t.poly, 0.0)) continue;
        if (!(t.rate.real() > 0.0))
            throw EvalError("layer term with non-decaying rate");
        bool found = false;
        for (Term& m : merged) {
            if (std::abs(m.rate - t.rate) <=
                kRateMergeTol * std::max(std::abs(m.rate), std::abs(t.rate))) {
                if (t.poly.size() > m.poly.size()) m.poly.resize(t.poly.size(), 0.0);
                for (std::size_t k = 0; k < t.poly.size(); ++k) m.poly[k] += t.poly[k];
                found = true;
                break;
            }
        }
        if (!found) merged.push_back(std::move(t));
    }
    for (auto it = merged.begin(); it != merged.end();) {
        strip_trailing_zeros(it->poly);
        it = poly_is_zero(it->poly, 0.0) ? merged.erase(it) : std::next(it);
    }
    std::sort(merged.begin(), merged.end(), [](const Term& a, const Term& b) {
        if (a.rate.real() != b.rate.real()) return a.rate.real() < b.rate.real();
        return a.rate.imag() < b.rate.imag();
    });
    terms_ = std::move(merged);
}

cplx ExpPoly::eval_complex(double s) const {
    cplx acc = 0.0;
    for (const Term& t : terms_) acc += std::exp(-t.rate * s) * poly_eval(t.poly, s);
    return acc;
}

double ExpPoly::eval(double s) const {
    cplx z = eval_complex(s);
    return z.real();
}

ExpPoly ExpPoly::derivative(int k) const {
    ExpPoly r = *this;
    for (int pass = 0; pass < k; ++pass) {
        std::vector<Term> out;
        for (const Term& t : r.terms_) {
            // (e^{-b s} p)' = e^{-b s} (p' - b p)
            std::vector<cplx> q(std::max<std::size_t>(t.poly.size(), 1), 0.0);
            for (std::size_t n = 0; n + 1 < t.poly.size(); ++n)
                q[n] = static_cast<double>(n + 1) * t.poly[n + 1];
            for (std::size_t n = 0; n < t.poly.size(); ++n) q[n] -= t.rate * t.poly[n];
            out.push_back({t.rate, std::move(q)});
        }
        r = ExpPoly(std::move(out), tag_);
    }
    return r;
}

ExpPoly ExpPoly::mul_monomial(int k) const {
    std::vector<Term> out;
    for (const Term& t : terms_) {
        std::vector<cplx> q(t.poly.size() + k, 0.0);
        for (std::size_t n = 0; n < t.poly.size(); ++n) q[n + k] = t.poly[n];
        out.push_back({t.rate, std::move(q)});
    }
    return ExpPoly(std::move(out), tag_);
}

ExpPoly ExpPoly::scaled(cplx c) const {
    std::vector<Term> out = terms_;
    for (Term& t : out)
        for (cplx& a : t.poly) a *= c;
    return ExpPoly(std::move(out), tag_);
}

ExpPoly ExpPoly::plus(const ExpPoly& other) const {
    std::vector<Term> out = terms_;
    out.insert(out.end(), other.terms_.begin(), other.terms_.end());
    return ExpPoly(std::move(out), terms_.empty() ? other.tag_ : tag_);
}

bool ExpPoly::is_zero(double tol) const { return max_abs_coeff() <= tol; }

double ExpPoly::max_abs_coeff() const {
    double m = 0.0;
    for (const Term& t : terms_)
        for (const cplx& c : t.poly) m = std::max(m, std::abs(c));
    return m;
}

double ExpPoly::min_rate() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Term& t : terms_) m = std::min(m, t.rate.real());
    return m;
}

ExpPoly ExpPoly::with_tag(ScaleTag tag) const {
    ExpPoly r = *this;
    r.tag_ = tag;
    return r;
}

std::string ExpPoly::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Term& t : terms_) {
        nlohmann::json item;
        item["rate_re"] = t.rate.real();
        item["rate_im"] = t.rate.imag();
        std::vector<double> re, im;
        for (const cplx& c : t.poly) {
            re.push_back(c.real());
            im.push_back(c.imag());
        }
        item["coeffs_re"] = re;
        item["coeffs_im"] = im;
        item["scale_tag"] = halfline::to_string(tag_);
        arr.push_back(std::move(item));
    }
    return arr.dump();
}

ExpPoly ExpPoly::from_json(const std::string& json_text) {
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw EvalError(std::string("malformed layer-term JSON: ") + e.what());
    }
    if (!arr.is_array()) throw EvalError("layer-term JSON must be a list");
    std::vector<Term> terms;
    ScaleTag tag = ScaleTag::HatLeft;
    for (const auto& item : arr) {
        Term t;
        t.rate = cplx(item.at("rate_re").get<double>(), item.at("rate_im").get<double>());
        auto re = item.at("coeffs_re").get<std::vector<double>>();
        auto im = item.at("coeffs_im").get<std::vector<double>>();
        if (re.size() != im.size())
            throw EvalError("coefficient arrays of unequal length");
        for (std::size_t k = 0; k < re.size(); ++k) t.poly.emplace_back(re[k], im[k]);
        tag = scale_tag_from_string(item.at("scale_tag").get<std::string>());
        terms.push_back(std::move(t));
    }
    return ExpPoly(std::move(terms), tag);
}

// ---------------------------------------------------------------------------
// Solution operators

namespace {

// Particular solution of -w'' + a_sq w = e^{-b s} q(s) as e^{-b s} r(s).
// Identity: (e^{-b s} r)'' = e^{-b s}(r'' - 2 b r' + b^2 r), so r satisfies
// -r'' + 2 b r' + (a_sq - b^2) r = q coefficientwise.
ExpPoly::Term scalar_particular(double a_sq, const ExpPoly::Term& t) {
    const double a = std::sqrt(a_sq);
    const cplx b = t.rate;
    const int d = static_cast<int>(t.poly.size()) - 1;
    const bool resonant =
        std::abs(b - cplx(a)) <= kResonanceTol * std::max(std::abs(b), a);
    if (resonant) {
        // Degree bump with r_0 = 0: 2 b (n+1) r_{n+1} - (n+2)(n+1) r_{n+2} = q_n.
        std::vector<cplx> r(d + 2, 0.0);
        for (int n = d; n >= 0; --n) {
            cplx high = (n + 2 <= d + 1) ? r[n + 2] : cplx(0.0);
            r[n + 1] = (t.poly[n] + static_cast<double>((n + 2) * (n + 1)) * high) /
                       (2.0 * b * static_cast<double>(n + 1));
        }
        return {b, std::move(r)};
    }
    cplx denom = a_sq - b * b;
    if (std::abs(denom) < 1e-12 * std::max(a_sq, std::norm(b))) {
        std::ostringstream os;
        os << "ill-conditioned coefficient solve near rate " << b.real();
        if (b.imag() != 0.0) os << (b.imag() > 0 ? "+" : "") << b.imag() << "i";
        throw EvalError(os.str());
    }
    std::vector<cplx> r(d + 1, 0.0);
    for (int n = d; n >= 0; --n) {
        cplx acc = t.poly[n];
        if (n + 2 <= d) acc += static_cast<double>((n + 2) * (n + 1)) * r[n + 2];
        if (n + 1 <= d) acc -= 2.0 * b * static_cast<double>(n + 1) * r[n + 1];
        r[n] = acc / denom;
    }
    return {b, std::move(r)};
}

// Decaying antiderivative: I(s) = int_s^inf e^{-b t} q(t) dt = e^{-b s} r(s)
// with b r_n - (n+1) r_{n+1} = q_n.
ExpPoly::Term antiderivative_term(const ExpPoly::Term& t) {
    const int d = static_cast<int>(t.poly.size()) - 1;
    std::vector<cplx> r(d + 1, 0.0);
    for (int n = d; n >= 0; --n) {
        cplx acc = t.poly[n];
        if (n + 1 <= d) acc += static_cast<double>(n + 1) * r[n + 1];
        r[n] = acc / t.rate;
    }
    return {t.rate, std::move(r)};
}

}  // namespace

ExpPoly solve_decaying_scalar(double a_sq, const ExpPoly& rhs, double bc) {
    if (!(a_sq > 0.0)) throw EvalError("reaction coefficient must be positive");
    std::vector<ExpPoly::Term> terms;
    for (const ExpPoly::Term& t : rhs.terms()) terms.push_back(scalar_particular(a_sq, t));
    ExpPoly particular(std::move(terms), rhs.scale_tag());
    cplx c0 = cplx(bc) - particular.eval_complex(0.0);
    if (std::abs(c0) > 0.0) {
        std::vector<ExpPoly::Term> h{{cplx(std::sqrt(a_sq)), {c0}}};
        particular = particular.plus(ExpPoly(std::move(h), rhs.scale_tag()));
    }
    return particular;
}

ExpPoly double_antiderivative(const ExpPoly& rhs) {
    std::vector<ExpPoly::Term> once;
    for (const ExpPoly::Term& t : rhs.terms()) once.push_back(antiderivative_term(t));
    std::vector<ExpPoly::Term> twice;
    for (const ExpPoly::Term& t : once) twice.push_back(antiderivative_term(t));
    return ExpPoly(std::move(twice), rhs.scale_tag());
}

VectorExpPoly solve_decaying_system(double nu_sq, const std::array<double, 4>& B,
                                    const VectorExpPoly& rhs,
                                    const std::array<double, 2>& bc) {
    if (!(nu_sq > 0.0)) throw EvalError("diffusion ratio must be positive");
    const ScaleTag tag = rhs.u_comp.is_zero() && !rhs.v_comp.is_zero()
                             ? rhs.v_comp.scale_tag()
                             : rhs.u_comp.scale_tag();

    // Homogeneous modes: (lambda^2 diag(nu_sq,1) - B) w = 0, i.e. the
    // eigenpairs of diag(1/nu_sq,1) B.
    Eigen::Matrix2d m;
    m << B[0] / nu_sq, B[1] / nu_sq, B[2], B[3];
    Eigen::EigenSolver<Eigen::Matrix2d> es(m);
    std::array<cplx, 2> lambda;
    Eigen::Matrix2cd w;
    for (int k = 0; k < 2; ++k) {
        cplx lam = std::sqrt(es.eigenvalues()(k));
        if (lam.real() < 0.0) lam = -lam;
        if (!(lam.real() > 0.0)) throw EvalError("non-dissipative system");
        lambda[k] = lam;
        w.col(k) = es.eigenvectors().col(k);
    }
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) <= 0.0 ||
        svd.singularValues()(0) / svd.singularValues()(1) > 1e12)
        throw EvalError("degenerate coupling");

    // Particular solution per forcing rate: stack the coefficient identities
    // for both components into one linear system; the minimum-norm solve
    // absorbs resonant (rank-deficient) cases, with a degree bump retried
    // until the residual certifies the solution.
    struct Forcing {
        cplx rate;
        std::vector<cplx> qu, qv;
    };
    std::vector<Forcing> forcings;
    auto add_forcing = [&](const ExpPoly& src, bool is_u) {
        for (const ExpPoly::Term& t : src.terms()) {
            Forcing* f = nullptr;
            for (Forcing& g : forcings)
                if (std::abs(g.rate - t.rate) <=
                    kRateMergeTol * std::max(std::abs(g.rate), std::abs(t.rate)))
                    f = &g;
            if (!f) {
                forcings.push_back({t.rate, {}, {}});
                f = &forcings.back();
            }
            auto& dst = is_u ? f->qu : f->qv;
            if (dst.size() < t.poly.size()) dst.resize(t.poly.size(), 0.0);
            for (std::size_t k = 0; k < t.poly.size(); ++k) dst[k] += t.poly[k];
        }
    };
    add_forcing(rhs.u_comp, true);
    add_forcing(rhs.v_comp, false);

    std::vector<ExpPoly::Term> part_u, part_v;
    for (const Forcing& f : forcings) {
        const int d =
            static_cast<int>(std::max(f.qu.size(), f.qv.size())) - 1;
        double qscale = 0.0;
        for (const cplx& c : f.qu) qscale = std::max(qscale, std::abs(c));
        for (const cplx& c : f.qv) qscale = std::max(qscale, std::abs(c));

        // Frozen 2x2 symbol at this forcing rate. Away from resonance the
        // coefficient identities form a block-triangular system with this
        // matrix on the diagonal, solved exactly by back-substitution from
        // the top degree down. (A stacked least-squares solve is avoided
        // here: the triangular system is non-normal enough that its residual
        // can look large even when the unique solution is exact.)
        {
            const cplx beta = f.rate;
            const cplx m00 = -nu_sq * beta * beta + B[0];
            const cplx m11 = -beta * beta + B[3];
            const cplx det = m00 * m11 - cplx(B[1] * B[2]);
            const double mscale = std::max(
                {std::abs(m00), std::abs(m11), std::abs(B[1]), std::abs(B[2]), 1.0});
            if (std::abs(det) > 1e-10 * mscale * mscale) {
                const int D = d;
                std::vector<cplx> pu(D + 1), pv(D + 1);
                auto qu_at = [&](int n) {
                    return n < static_cast<int>(f.qu.size()) ? f.qu[n] : cplx(0.0);
                };
                auto qv_at = [&](int n) {
                    return n < static_cast<int>(f.qv.size()) ? f.qv[n] : cplx(0.0);
                };
                for (int n = D; n >= 0; --n) {
                    cplx gu = qu_at(n), gv = qv_at(n);
                    if (n + 1 <= D) {
                        gu -= nu_sq * 2.0 * beta * static_cast<double>(n + 1) * pu[n + 1];
                        gv -= 2.0 * beta * static_cast<double>(n + 1) * pv[n + 1];
                    }
                    if (n + 2 <= D) {
                        gu += nu_sq * static_cast<double>((n + 2) * (n + 1)) * pu[n + 2];
                        gv += static_cast<double>((n + 2) * (n + 1)) * pv[n + 2];
                    }
                    pu[n] = (m11 * gu - cplx(B[1]) * gv) / det;
                    pv[n] = (-cplx(B[2]) * gu + m00 * gv) / det;
                }
                part_u.push_back({beta, std::move(pu)});
                part_v.push_back({beta, std::move(pv)});
                continue;
            }
        }

        // Resonant rate: bump the polynomial degree and take the minimum-norm
        // solution of the (rank-deficient but consistent) stacked system.
        bool solved = false;
        for (int bump = 1; bump <= 4 && !solved; ++bump) {
            const int D = d + bump;
            const int rows = 2 * (D + 3), cols = 2 * (D + 1);
            Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(rows, cols);
            Eigen::VectorXcd b = Eigen::VectorXcd::Zero(rows);
            const cplx beta = f.rate;
            auto ru = [&](int n) { return n; };
            auto rv = [&](int n) { return D + 1 + n; };
            for (int n = 0; n <= D + 2; ++n) {
                // u-equation, coefficient of s^n:
                // -nu_sq (r_u'' - 2 b r_u' + b^2 r_u) + B00 r_u + B01 r_v = q_u
                int eu = 2 * n, ev = 2 * n + 1;
                if (n <= D) {
                    A(eu, ru(n)) += -nu_sq * beta * beta + B[0];
                    A(eu, rv(n)) += B[1];
                    A(ev, ru(n)) += B[2];
                    A(ev, rv(n)) += -beta * beta + B[3];
                }
                if (n + 1 <= D) {
                    A(eu, ru(n + 1)) += nu_sq * 2.0 * beta * static_cast<double>(n + 1);
                    A(ev, rv(n + 1)) += 2.0 * beta * static_cast<double>(n + 1);
                }
                if (n + 2 <= D) {
                    A(eu, ru(n + 2)) += -nu_sq * static_cast<double>((n + 2) * (n + 1));
                    A(ev, rv(n + 2)) += -static_cast<double>((n + 2) * (n + 1));
                }
                if (n < static_cast<int>(f.qu.size())) b(eu) = f.qu[n];
                if (n < static_cast<int>(f.qv.size())) b(ev) = f.qv[n];
            }
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(A);
            Eigen::VectorXcd x = cod.solve(b);
            double resid = (A * x - b).norm();
            if (resid <= 1e-10 * std::max(qscale, 1.0)) {
                std::vector<cplx> pu(D + 1), pv(D + 1);
                for (int n = 0; n <= D; ++n) {
                    pu[n] = x(ru(n));
                    pv[n] = x(rv(n));
                }
                part_u.push_back({beta, std::move(pu)});
                part_v.push_back({beta, std::move(pv)});
                solved = true;
            }
        }
        if (!solved) throw EvalError("half-line system particular solve failed");
    }

    ExpPoly pu(std::move(part_u), tag), pv(std::move(part_v), tag);
    Eigen::Vector2cd defect;
    defect << cplx(bc[0]) - pu.eval_complex(0.0), cplx(bc[1]) - pv.eval_complex(0.0);
    Eigen::Vector2cd c = w.colPivHouseholderQr().solve(defect);
    std::vector<ExpPoly::Term> hu, hv;
    for (int k = 0; k < 2; ++k) {
        hu.push_back({lambda[k], {c(k) * w(0, k)}});
        hv.push_back({lambda[k], {c(k) * w(1, k)}});
    }
    VectorExpPoly out;
    out.u_comp = pu.plus(ExpPoly(std::move(hu), tag));
    out.v_comp = pv.plus(ExpPoly(std::move(hv), tag));
    return out;
}

}  // namespace spx::halfline
