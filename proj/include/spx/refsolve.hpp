#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "spx/funcalc.hpp"

namespace spx::refsolve {

using funcalc::AnalyticFunction;
using funcalc::EvalError;
using funcalc::ProblemSpec;

/// Piecewise-uniform layer-adapted mesh on [0,1].
struct Mesh {
    std::vector<double> nodes;           // strictly increasing, nodes[0]=0, back()=1
    std::vector<double> breakpoints;     // region boundaries incl. 0 and 1
    bool coalesced = false;              // a degenerate transition ordering was repaired

    int cell_count() const { return static_cast<int>(nodes.size()) - 1; }
};

/// Nodal values on a mesh; the system solver fills both components, the
/// scalar solver only `u`.
struct GridFunction {
    Mesh mesh;
    std::vector<double> u, v;
};

/// Mesh with transition points min(1/8, sigma*epsilon*ln(N)/rate) and
/// min(1/4, sigma*mu*ln(N)/rate) from each endpoint, n_per_region cells in
/// each of the 8 regions (N = total cell count).
Mesh shishkin_mesh(double epsilon, double mu, int n_per_region,
                   double rate, double sigma = 2.5);

/// Same breakpoints, twice the cells per region: the coarse nodes are a
/// subset of the fine ones.
Mesh refine_mesh(const Mesh& mesh);

/// Central-difference solve of the coupled system with homogeneous Dirichlet
/// conditions; deterministic sparse direct solve.
GridFunction solve_full_system(const ProblemSpec& p, const Mesh& mesh);

/// Central-difference solve of -mu^2 u'' + c(x) u = rhs(x), u(0)=bc0,
/// u(1)=bc1. Requires c > 0 on the mesh.
GridFunction solve_scalar_bvp(const std::function<double(double)>& c,
                              const std::function<double(double)>& rhs,
                              double mu, double bc0, double bc1, const Mesh& mesh);

/// Solves on a Shishkin mesh with base_n and 2*base_n cells per region;
/// returns the finer solution and the max-norm difference on shared nodes.
std::pair<GridFunction, double> refine_and_estimate(const ProblemSpec& p, int base_n);

}  // namespace spx::refsolve
