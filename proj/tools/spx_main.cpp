// Command-line driver. Links only the C API.
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "spx.h"

namespace {

int exit_code_for(spx_status st) {
    switch (st) {
        case SPX_OK: return 0;
        case SPX_ERR_INVALID: return 1;
        default: return 2;  // parse / io / numeric failures are input-side
    }
}

int fail(spx_status st) {
    std::cerr << "error: " << spx_last_error() << "\n";
    return exit_code_for(st);
}

int case_id_from(const std::string& s) {
    if (s == "auto") return 0;
    if (s == "i") return 1;
    if (s == "ii") return 2;
    if (s == "iii") return 3;
    if (s == "iv") return 4;
    return -1;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return out.good();
}

struct OrderArgs {
    int m1 = -1, m2 = -1, m = -1;

    // Conservative defaults: (2,2) for the three-scale case, 3 otherwise.
    void resolve(int case_id, int& r1, int& r2) const {
        if (case_id == 4) {
            r1 = m1 >= 0 ? m1 : 2;
            r2 = m2 >= 0 ? m2 : 2;
        } else {
            r1 = m >= 0 ? m : (m1 >= 0 ? m1 : 3);
            r2 = 0;
        }
    }
};

struct SweepPoint {
    double eps, mu;
    spx_verify_result result{};
    spx_status status = SPX_OK;
    std::string error;
    int m1 = 0, m2 = 0;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-parameter reaction-diffusion expansion toolkit"};
    app.require_subcommand(1);

    std::string problem_path, case_name = "auto", out_path, eps_list, mu_list;
    OrderArgs orders;
    int n_mesh = 0, jobs = 1;
    double tol = 0.0;

    auto add_common = [&](CLI::App* cmd, bool needs_problem = true) {
        auto* opt = cmd->add_option("--problem", problem_path, "problem JSON file");
        if (needs_problem) opt->required();
        cmd->add_option("--case", case_name, "regime: auto, i, ii, iii, iv");
        cmd->add_option("--m1", orders.m1, "first truncation order");
        cmd->add_option("--m2", orders.m2, "second truncation order (three-scale case)");
        cmd->add_option("--m", orders.m, "truncation order (two-scale cases)");
        cmd->add_option("--n-mesh", n_mesh, "cells per mesh region");
        cmd->add_option("--jobs", jobs, "concurrent sweep points");
        cmd->add_option("--out", out_path, "output path");
        cmd->add_option("--tol", tol, "remainder tolerance for the pass flag");
    };

    auto* c_check = app.add_subcommand("check", "parse the problem and report alpha");
    add_common(c_check);
    auto* c_solve = app.add_subcommand("solve", "reference solve, CSV output");
    add_common(c_solve);
    auto* c_expand = app.add_subcommand("expand", "build an expansion and dump terms");
    add_common(c_expand);
    auto* c_verify = app.add_subcommand("verify", "single-point verification report");
    add_common(c_verify);
    auto* c_sweep = app.add_subcommand("sweep", "parameter study with decay fit");
    add_common(c_sweep);
    c_sweep->add_option("--eps", eps_list, "comma-separated epsilon values");
    c_sweep->add_option("--mu", mu_list, "comma-separated mu values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    const int case_id = case_id_from(case_name);
    if (case_id < 0) {
        std::cerr << "error: unknown case '" << case_name << "'\n";
        return 2;
    }

    spx_problem* problem = nullptr;
    spx_status st = spx_problem_load(problem_path.c_str(), &problem);
    if (st != SPX_OK) return fail(st);

    int rc = 0;
    if (c_check->parsed()) {
        std::printf("alpha = %.12e\n", spx_problem_alpha(problem));
        int regime = 0;
        if (spx_classify(spx_problem_epsilon(problem), spx_problem_mu(problem), 0.1,
                         &regime) == SPX_OK) {
            const char* names[] = {"?", "I", "II", "III", "IV"};
            std::printf("regime = %s\n", names[regime]);
        }
    } else if (c_solve->parsed()) {
        char* csv = nullptr;
        double est = 0.0;
        st = spx_reference_csv(problem, n_mesh, &csv, &est);
        if (st != SPX_OK) {
            spx_problem_free(problem);
            return fail(st);
        }
        if (!out_path.empty()) {
            if (!write_file(out_path, csv)) {
                std::cerr << "error: cannot write " << out_path << "\n";
                rc = 2;
            }
        } else {
            std::fputs(csv, stdout);
        }
        std::fprintf(stderr, "error estimate: %.3e\n", est);
        spx_string_free(csv);
    } else if (c_expand->parsed()) {
        int m1 = 0, m2 = 0;
        int effective = case_id;
        if (effective == 0) {
            spx_classify(spx_problem_epsilon(problem), spx_problem_mu(problem), 0.1,
                         &effective);
        }
        orders.resolve(effective, m1, m2);
        spx_expansion* e = nullptr;
        st = spx_expand(problem, case_id, m1, m2, &e);
        if (st != SPX_OK) {
            spx_problem_free(problem);
            return fail(st);
        }
        char* dump = nullptr;
        st = spx_expansion_terms_json(e, &dump);
        if (st == SPX_OK) {
            if (!out_path.empty()) {
                if (!write_file(out_path, dump)) {
                    std::cerr << "error: cannot write " << out_path << "\n";
                    rc = 2;
                }
            } else {
                std::fputs(dump, stdout);
                std::fputs("\n", stdout);
            }
            spx_string_free(dump);
        }
        char* checks = nullptr;
        int all_pass = 0;
        if (st == SPX_OK) st = spx_expansion_checks_json(e, &checks, &all_pass);
        spx_expansion_free(e);
        if (st != SPX_OK) {
            spx_problem_free(problem);
            return fail(st);
        }
        if (!all_pass) {
            std::cerr << "structural checks failed: " << checks << "\n";
            rc = 1;
        }
        spx_string_free(checks);
    } else if (c_verify->parsed() || c_sweep->parsed()) {
        std::vector<double> eps_values, mu_values;
        if (c_sweep->parsed() && (!eps_list.empty() || !mu_list.empty())) {
            eps_values = parse_list(eps_list);
            mu_values = parse_list(mu_list);
            if (eps_values.empty()) eps_values = {spx_problem_epsilon(problem)};
            if (mu_values.empty()) mu_values = {spx_problem_mu(problem)};
            if (eps_values.size() == 1 && mu_values.size() > 1)
                eps_values.assign(mu_values.size(), eps_values[0]);
            if (mu_values.size() == 1 && eps_values.size() > 1)
                mu_values.assign(eps_values.size(), mu_values[0]);
            if (eps_values.size() != mu_values.size()) {
                std::cerr << "error: --eps and --mu lists must have equal length\n";
                spx_problem_free(problem);
                return 2;
            }
        } else {
            eps_values = {spx_problem_epsilon(problem)};
            mu_values = {spx_problem_mu(problem)};
        }

        std::vector<SweepPoint> points(eps_values.size());
        for (std::size_t k = 0; k < points.size(); ++k) {
            points[k].eps = eps_values[k];
            points[k].mu = mu_values[k];
        }
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t k = next.fetch_add(1);
                if (k >= points.size()) return;
                SweepPoint& pt = points[k];
                spx_problem* local = nullptr;
                spx_status s = spx_problem_with_params(problem, pt.eps, pt.mu, &local);
                if (s != SPX_OK) {
                    pt.status = s;
                    pt.error = spx_last_error();
                    continue;
                }
                int effective = case_id;
                if (effective == 0) spx_classify(pt.eps, pt.mu, 0.1, &effective);
                orders.resolve(effective, pt.m1, pt.m2);
                s = spx_verify(local, case_id, pt.m1, pt.m2, n_mesh, &pt.result);
                if (s != SPX_OK) {
                    pt.status = s;
                    pt.error = spx_last_error();
                }
                spx_problem_free(local);
            }
        };
        const int nthreads =
            std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        for (const SweepPoint& pt : points) {
            if (pt.status != SPX_OK) {
                std::cerr << "error at (eps=" << pt.eps << ", mu=" << pt.mu
                          << "): " << pt.error << "\n";
                spx_problem_free(problem);
                return exit_code_for(pt.status);
            }
        }

        // Decay fit of the remainder against the sweep key: 1/mu when mu
        // varies, mu/eps otherwise.
        double fit_b = std::numeric_limits<double>::quiet_NaN();
        double fit_r2 = std::numeric_limits<double>::quiet_NaN();
        if (points.size() >= 3) {
            bool mu_varies = false;
            for (const auto& pt : points) mu_varies |= pt.mu != points[0].mu;
            std::vector<double> xs, ys;
            bool fit_ok = true;
            for (const auto& pt : points) {
                xs.push_back(mu_varies ? 1.0 / pt.mu : pt.mu / pt.eps);
                if (!(pt.result.rem_energy > 0.0)) fit_ok = false;
                ys.push_back(pt.result.rem_energy);
            }
            double c = 0.0;
            if (fit_ok)
                spx_decay_fit(xs.data(), ys.data(), static_cast<int>(xs.size()), 0,
                              &fit_b, &c, &fit_r2);
        }

        std::vector<spx_verify_result> results;
        std::vector<double> eps_arr, mu_arr;
        std::vector<int> m1_arr, m2_arr;
        for (const auto& pt : points) {
            results.push_back(pt.result);
            eps_arr.push_back(pt.eps);
            mu_arr.push_back(pt.mu);
            m1_arr.push_back(pt.m1);
            m2_arr.push_back(pt.m2);
        }
        char* hash = nullptr;
        spx_problem_hash(problem, &hash);
        char* csv = nullptr;
        char* json = nullptr;
        st = spx_report_render(results.data(), eps_arr.data(), mu_arr.data(),
                               m1_arr.data(), m2_arr.data(),
                               static_cast<int>(results.size()), fit_b, fit_r2, hash,
                               tol, &csv, &json);
        spx_string_free(hash);
        if (st != SPX_OK) {
            spx_problem_free(problem);
            return fail(st);
        }
        if (!out_path.empty()) {
            bool ok = write_file(out_path, csv) && write_file(out_path + ".json", json);
            if (!ok) {
                std::cerr << "error: cannot write " << out_path << "\n";
                rc = 2;
            }
        } else {
            std::fputs(csv, stdout);
        }
        // Exit 1 when any enabled check failed.
        for (const auto& r : results)
            if (!r.checks_pass) rc = std::max(rc, 1);
        if (tol > 0.0)
            for (const auto& r : results)
                if (!(r.rem_energy <= tol)) rc = std::max(rc, 1);
        spx_string_free(csv);
        spx_string_free(json);
    }

    spx_problem_free(problem);
    return rc;
}
