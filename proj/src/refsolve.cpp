#include "spx/refsolve.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace spx::refsolve {

namespace {

// Region cell counts of an existing mesh (nodes between consecutive breakpoints).
std::vector<int> region_cells(const Mesh& m) {
    std::vector<int> counts;
    std::size_t k = 0;
    for (std::size_t r = 0; r + 1 < m.breakpoints.size(); ++r) {
        int c = 0;
        while (k + 1 < m.nodes.size() &&
               m.nodes[k + 1] <= m.breakpoints[r + 1] + 1e-14) {
            ++c;
            ++k;
        }
        counts.push_back(c);
    }
    return counts;
}

Mesh mesh_from_breakpoints(std::vector<double> bp, const std::vector<int>& cells,
                           bool coalesced) {
    Mesh m;
    m.breakpoints = std::move(bp);
    m.coalesced = coalesced;
    m.nodes.push_back(0.0);
    for (std::size_t r = 0; r + 1 < m.breakpoints.size(); ++r) {
        double a = m.breakpoints[r], b = m.breakpoints[r + 1];
        for (int k = 1; k <= cells[r]; ++k)
            m.nodes.push_back(a + (b - a) * k / cells[r]);
    }
    m.nodes.back() = 1.0;
    return m;
}

}  // namespace

Mesh shishkin_mesh(double epsilon, double mu, int n_per_region, double rate,
                   double sigma) {
    if (!(epsilon > 0.0) || !(mu >= epsilon) || !(mu <= 1.0))
        throw EvalError("mesh parameters must satisfy 0 < epsilon <= mu <= 1");
    if (n_per_region < 1) throw EvalError("n_per_region must be >= 1");
    if (!(rate > 0.0)) throw EvalError("layer rate must be positive");
    const double n_total = 8.0 * n_per_region;
    const double tau_e = std::min(0.125, sigma * epsilon * std::log(n_total) / rate);
    const double tau_m = std::min(0.25, sigma * mu * std::log(n_total) / rate);

    std::vector<double> bp = {0.0,       tau_e,       tau_m,       0.25, 0.5,
                              0.75,      1.0 - tau_m, 1.0 - tau_e, 1.0};
    std::sort(bp.begin(), bp.end());
    // Degenerate orderings (caps hit, or epsilon ~ mu) collapse breakpoints;
    // coalesce and re-split the widest intervals so the region count is kept.
    std::vector<double> uniq;
    for (double b : bp)
        if (uniq.empty() || b > uniq.back() + 1e-12) uniq.push_back(b);
    uniq.back() = 1.0;
    bool coalesced = uniq.size() != bp.size();
    while (uniq.size() < bp.size()) {
        std::size_t widest = 0;
        for (std::size_t k = 1; k + 1 < uniq.size(); ++k)
            if (uniq[k + 1] - uniq[k] > uniq[widest + 1] - uniq[widest]) widest = k;
        uniq.insert(uniq.begin() + widest + 1, 0.5 * (uniq[widest] + uniq[widest + 1]));
    }
    return mesh_from_breakpoints(std::move(uniq),
                                 std::vector<int>(8, n_per_region), coalesced);
}

Mesh refine_mesh(const Mesh& mesh) {
    auto cells = region_cells(mesh);
    for (int& c : cells) c *= 2;
    return mesh_from_breakpoints(mesh.breakpoints, cells, mesh.coalesced);
}

GridFunction solve_full_system(const ProblemSpec& p, const Mesh& mesh) {
    const int n = mesh.cell_count();
    const int m = n - 1;  // interior nodes
    const double e2 = p.epsilon * p.epsilon, m2 = p.mu * p.mu;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs(2 * m);
    for (int i = 1; i < n; ++i) {
        const double hl = mesh.nodes[i] - mesh.nodes[i - 1];
        const double hr = mesh.nodes[i + 1] - mesh.nodes[i];
        const double w = 2.0 / (hl + hr);
        const double cl = w / hl, cr = w / hr, cc = cl + cr;
        const double x = mesh.nodes[i];
        const int ru = 2 * (i - 1), rv = ru + 1;
        trip.emplace_back(ru, ru, e2 * cc + p.a11.eval(x));
        trip.emplace_back(ru, rv, p.a12.eval(x));
        trip.emplace_back(rv, ru, p.a21.eval(x));
        trip.emplace_back(rv, rv, m2 * cc + p.a22.eval(x));
        if (i > 1) {
            trip.emplace_back(ru, ru - 2, -e2 * cl);
            trip.emplace_back(rv, rv - 2, -m2 * cl);
        }
        if (i < n - 1) {
            trip.emplace_back(ru, ru + 2, -e2 * cr);
            trip.emplace_back(rv, rv + 2, -m2 * cr);
        }
        rhs(ru) = p.f.eval(x);
        rhs(rv) = p.g.eval(x);
    }
    Eigen::SparseMatrix<double> a(2 * m, 2 * m);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw EvalError("singular discrete system (factorization failed)");
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw EvalError("discrete system solve failed");
    GridFunction g;
    g.mesh = mesh;
    g.u.assign(n + 1, 0.0);
    g.v.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        g.u[i] = sol(2 * (i - 1));
        g.v[i] = sol(2 * (i - 1) + 1);
    }
    return g;
}

GridFunction solve_scalar_bvp(const std::function<double(double)>& c,
                              const std::function<double(double)>& rhs, double mu,
                              double bc0, double bc1, const Mesh& mesh) {
    const int n = mesh.cell_count();
    const double m2 = mu * mu;
    std::vector<double> low(n - 1), diag(n - 1), up(n - 1), b(n - 1);
    for (int i = 1; i < n; ++i) {
        const double hl = mesh.nodes[i] - mesh.nodes[i - 1];
        const double hr = mesh.nodes[i + 1] - mesh.nodes[i];
        const double w = 2.0 / (hl + hr);
        const double cl = w / hl, cr = w / hr;
        const double x = mesh.nodes[i];
        const double cx = c(x);
        if (!(cx > 0.0)) throw EvalError("nonpositive reaction coefficient");
        low[i - 1] = -m2 * cl;
        up[i - 1] = -m2 * cr;
        diag[i - 1] = m2 * (cl + cr) + cx;
        b[i - 1] = rhs(x);
    }
    b[0] -= low[0] * bc0;
    b[n - 2] -= up[n - 2] * bc1;
    // Thomas sweep.
    for (int i = 1; i < n - 1; ++i) {
        double f = low[i] / diag[i - 1];
        diag[i] -= f * up[i - 1];
        b[i] -= f * b[i - 1];
    }
    GridFunction g;
    g.mesh = mesh;
    g.u.assign(n + 1, 0.0);
    g.u[0] = bc0;
    g.u[n] = bc1;
    g.u[n - 1] = b[n - 2] / diag[n - 2];
    for (int i = n - 2; i >= 1; --i)
        g.u[i] = (b[i - 1] - up[i - 1] * g.u[i + 1]) / diag[i - 1];
    return g;
}

std::pair<GridFunction, double> refine_and_estimate(const ProblemSpec& p, int base_n) {
    if (base_n < 1) throw EvalError("base_n must be >= 1");
    Mesh coarse = shishkin_mesh(p.epsilon, p.mu, base_n, p.alpha);
    Mesh fine = refine_mesh(coarse);
    GridFunction gc = solve_full_system(p, coarse);
    GridFunction gf = solve_full_system(p, fine);
    double est = 0.0;
    for (std::size_t i = 0; i < gc.u.size(); ++i) {
        est = std::max(est, std::abs(gc.u[i] - gf.u[2 * i]));
        est = std::max(est, std::abs(gc.v[i] - gf.v[2 * i]));
    }
    return {std::move(gf), est};
}

}  // namespace spx::refsolve
