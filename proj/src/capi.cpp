#include "spx.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spx/analysis.hpp"
#include "spx/expansion.hpp"
#include "spx/funcalc.hpp"
#include "spx/refsolve.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string fnv1a_hex(const std::string& data) {
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", h);
    return buf;
}

// Validation failures (as opposed to malformed input) get SPX_ERR_INVALID.
bool is_validation_message(const std::string& msg) {
    return msg.find("not positive definite") != std::string::npos ||
           msg.find("parameters must satisfy") != std::string::npos ||
           msg.find("positivity consequences") != std::string::npos;
}

constexpr int kDefaultCellsPerRegion = 64;

}  // namespace

struct spx_problem {
    spx::funcalc::ProblemSpec spec;
    std::string hash;
};

struct spx_expansion {
    int case_id = 0;
    spx::funcalc::ProblemSpec spec;
    std::optional<spx::expansion::ExpansionCaseII> e2;
    std::optional<spx::expansion::ExpansionCaseIII> e3;
    std::optional<spx::expansion::ExpansionCaseIV> e4;
};

extern "C" {

const char* spx_last_error(void) { return g_last_error.c_str(); }

void spx_string_free(char* s) { std::free(s); }

spx_status spx_problem_from_json(const char* json_text, spx_problem** out) {
    if (!json_text || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        auto p = new spx_problem;
        p->spec = spx::funcalc::ProblemSpec::from_json(json_text);
        std::ostringstream key;
        key << json_text << "#" << p->spec.epsilon << "#" << p->spec.mu;
        p->hash = fnv1a_hex(key.str());
        *out = p;
        return SPX_OK;
    } catch (const spx::funcalc::ParseError& e) {
        set_error(std::string(e.what()) + " (offset " + std::to_string(e.offset()) + ")");
        return SPX_ERR_PARSE;
    } catch (const std::exception& e) {
        set_error(e.what());
        return is_validation_message(e.what()) ? SPX_ERR_INVALID : SPX_ERR_PARSE;
    }
}

spx_status spx_problem_load(const char* path, spx_problem** out) {
    if (!path || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    std::ifstream in(path);
    if (!in) {
        set_error(std::string("cannot open problem file: ") + path);
        return SPX_ERR_IO;
    }
    std::ostringstream os;
    os << in.rdbuf();
    return spx_problem_from_json(os.str().c_str(), out);
}

spx_status spx_problem_with_params(const spx_problem* p, double epsilon, double mu,
                                   spx_problem** out) {
    if (!p || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        auto q = new spx_problem;
        q->spec = p->spec;
        q->spec.epsilon = epsilon;
        q->spec.mu = mu;
        q->spec.validate();
        std::ostringstream key;
        key << p->hash << "#" << epsilon << "#" << mu;
        q->hash = fnv1a_hex(key.str());
        *out = q;
        return SPX_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SPX_ERR_INVALID;
    }
}

void spx_problem_free(spx_problem* p) { delete p; }

double spx_problem_epsilon(const spx_problem* p) { return p ? p->spec.epsilon : 0.0; }
double spx_problem_mu(const spx_problem* p) { return p ? p->spec.mu : 0.0; }
double spx_problem_alpha(const spx_problem* p) { return p ? p->spec.alpha : 0.0; }

spx_status spx_problem_hash(const spx_problem* p, char** out) {
    if (!p || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    *out = dup_string(p->hash);
    return SPX_OK;
}

spx_status spx_classify(double epsilon, double mu, double threshold, int* out_case) {
    if (!out_case) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        *out_case =
            static_cast<int>(spx::expansion::classify_regime(epsilon, mu, threshold)) + 1;
        return SPX_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SPX_ERR_INVALID;
    }
}

spx_status spx_expand(const spx_problem* p, int case_id, int m1, int m2,
                      spx_expansion** out) {
    if (!p || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        if (case_id == 0)
            case_id = static_cast<int>(spx::expansion::classify_regime(
                          p->spec.epsilon, p->spec.mu)) +
                      1;
        if (case_id == 1) {
            set_error("regime I has no layer expansion; use the reference solver");
            return SPX_ERR_INVALID;
        }
        auto e = std::make_unique<spx_expansion>();
        e->case_id = case_id;
        e->spec = p->spec;
        switch (case_id) {
            case 2: e->e2 = spx::expansion::build_case_ii(p->spec, m1); break;
            case 3: e->e3 = spx::expansion::build_case_iii(p->spec, m1); break;
            case 4: e->e4 = spx::expansion::build_case_iv(p->spec, m1, m2); break;
            default:
                set_error("case must be one of auto, i, ii, iii, iv");
                return SPX_ERR_INVALID;
        }
        *out = e.release();
        return SPX_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SPX_ERR_NUMERIC;
    }
}

void spx_expansion_free(spx_expansion* e) { delete e; }

spx_status spx_expansion_terms_json(const spx_expansion* e, char** out) {
    if (!e || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        std::string terms;
        if (e->e2) terms = spx::expansion::terms_json(*e->e2);
        if (e->e3) terms = spx::expansion::terms_json(*e->e3);
        if (e->e4) terms = spx::expansion::terms_json(*e->e4);
        // Attach the structural-check summary to the dump.
        char* checks = nullptr;
        int all_pass = 0;
        spx_status st = spx_expansion_checks_json(e, &checks, &all_pass);
        if (st != SPX_OK) return st;
        std::string merged = terms;
        const std::string needle = "\n}";
        auto pos = merged.rfind(needle);
        if (pos != std::string::npos)
            merged = merged.substr(0, pos) + ",\n  \"checks\": " + checks + "\n}";
        spx_string_free(checks);
        *out = dup_string(merged);
        return SPX_OK;
    } catch (const std::exception& e2) {
        set_error(e2.what());
        return SPX_ERR_NUMERIC;
    }
}

spx_status spx_expansion_checks_json(const spx_expansion* e, char** out, int* all_pass) {
    if (!e || !out || !all_pass) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        std::vector<spx::analysis::CheckResult> checks;
        if (e->e2) checks = spx::analysis::structural_check(*e->e2);
        if (e->e3) checks = spx::analysis::structural_check(*e->e3);
        if (e->e4) checks = spx::analysis::structural_check(*e->e4);
        *all_pass = 1;
        std::ostringstream os;
        os << "[";
        for (std::size_t k = 0; k < checks.size(); ++k) {
            if (k) os << ",";
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6e", checks[k].magnitude);
            os << "{\"name\":\"" << checks[k].name << "\",\"pass\":"
               << (checks[k].pass ? "true" : "false") << ",\"magnitude\":" << buf << "}";
            if (!checks[k].pass) *all_pass = 0;
        }
        os << "]";
        *out = dup_string(os.str());
        return SPX_OK;
    } catch (const std::exception& e2) {
        set_error(e2.what());
        return SPX_ERR_NUMERIC;
    }
}

spx_status spx_reference_csv(const spx_problem* p, int n_per_region, char** out_csv,
                             double* out_error_estimate) {
    if (!p || !out_csv) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        const int n = n_per_region > 0 ? n_per_region : kDefaultCellsPerRegion;
        auto [grid, est] = spx::refsolve::refine_and_estimate(p->spec, n);
        std::string csv = "x,u,v\n";
        char buf[128];
        for (std::size_t i = 0; i < grid.mesh.nodes.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12e,%.12e,%.12e\n", grid.mesh.nodes[i],
                          grid.u[i], grid.v[i]);
            csv += buf;
        }
        *out_csv = dup_string(csv);
        if (out_error_estimate) *out_error_estimate = est;
        return SPX_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SPX_ERR_NUMERIC;
    }
}

spx_status spx_verify(const spx_problem* p, int case_id, int m1, int m2,
                      int n_per_region, spx_verify_result* out) {
    if (!p || !out) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    spx_expansion* e = nullptr;
    spx_status st = spx_expand(p, case_id, m1, m2, &e);
    if (st != SPX_OK) return st;
    try {
        spx::expansion::Decomposition d;
        std::vector<spx::analysis::CheckResult> checks;
        if (e->e2) {
            d = spx::expansion::assemble(*e->e2, p->spec);
            checks = spx::analysis::structural_check(*e->e2);
        } else if (e->e3) {
            d = spx::expansion::assemble(*e->e3, p->spec);
            checks = spx::analysis::structural_check(*e->e3);
        } else {
            d = spx::expansion::assemble(*e->e4, p->spec);
            checks = spx::analysis::structural_check(*e->e4);
        }
        const int n = n_per_region > 0 ? n_per_region : kDefaultCellsPerRegion;
        auto [grid, est] = spx::refsolve::refine_and_estimate(p->spec, n);
        out->rem_energy = spx::analysis::remainder_energy(p->spec, d, grid);
        out->resid_sup = spx::analysis::residual_sup(p->spec, d);
        out->bc_mismatch = spx::analysis::boundary_mismatch(d);
        out->ref_err = est;
        out->ref_energy =
            spx::analysis::energy_norm(grid, p->spec.epsilon, p->spec.mu, p->spec.alpha);
        // Stability ceiling alpha^-1 sqrt(||f||^2 + ||g||^2), composite Simpson.
        double ff = 0.0, gg = 0.0;
        const int qn = 1000;
        for (int k = 0; k <= qn; ++k) {
            const double x = static_cast<double>(k) / qn;
            const double w =
                (k == 0 || k == qn) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            ff += w * p->spec.f.eval(x) * p->spec.f.eval(x);
            gg += w * p->spec.g.eval(x) * p->spec.g.eval(x);
        }
        ff /= 3.0 * qn;
        gg /= 3.0 * qn;
        out->apriori_bound = std::sqrt(ff + gg) / p->spec.alpha;
        out->checks_pass = 1;
        for (const auto& c : checks)
            if (!c.pass) out->checks_pass = 0;
        spx_expansion_free(e);
        return SPX_OK;
    } catch (const std::exception& ex) {
        spx_expansion_free(e);
        set_error(ex.what());
        return SPX_ERR_NUMERIC;
    }
}

spx_status spx_decay_fit(const double* xs, const double* ys, int n, int model,
                         double* out_rate, double* out_prefactor, double* out_r2) {
    if (!xs || !ys || !out_rate) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    try {
        std::vector<double> vx(xs, xs + n), vy(ys, ys + n);
        auto fit = spx::analysis::decay_fit(
            vx, vy,
            model == 1 ? spx::analysis::DecayModel::Power
                       : spx::analysis::DecayModel::ExpReciprocal);
        *out_rate = fit.rate;
        if (out_prefactor) *out_prefactor = fit.prefactor;
        if (out_r2) *out_r2 = fit.r_squared;
        return SPX_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SPX_ERR_INVALID;
    }
}

spx_status spx_report_render(const spx_verify_result* results, const double* epsilons,
                             const double* mus, const int* m1s, const int* m2s, int n,
                             double fit_b, double fit_r2, const char* problem_hash,
                             double tol, char** out_csv, char** out_json) {
    if (!results || !epsilons || !mus || !m1s || !m2s || n < 0) {
        set_error("null argument");
        return SPX_ERR_INVALID;
    }
    spx::analysis::StudyReport rep;
    rep.problem_hash = problem_hash ? problem_hash : "";
    rep.tol = tol;
    for (int k = 0; k < n; ++k) {
        spx::analysis::StudyRow row;
        row.epsilon = epsilons[k];
        row.mu = mus[k];
        row.m1 = m1s[k];
        row.m2 = m2s[k];
        row.rem_energy = results[k].rem_energy;
        row.resid_sup = results[k].resid_sup;
        row.bc_mismatch = results[k].bc_mismatch;
        row.ref_err = results[k].ref_err;
        row.fit_b = fit_b;
        row.fit_r2 = fit_r2;
        bool finite = std::isfinite(row.rem_energy) && std::isfinite(row.resid_sup) &&
                      std::isfinite(row.bc_mismatch) && std::isfinite(row.ref_err);
        row.pass = results[k].checks_pass != 0 && finite &&
                   (tol <= 0.0 || row.rem_energy <= tol);
        rep.rows.push_back(row);
    }
    if (out_csv) *out_csv = dup_string(rep.to_csv());
    if (out_json) *out_json = dup_string(rep.to_json());
    return SPX_OK;
}

}  // extern "C"
