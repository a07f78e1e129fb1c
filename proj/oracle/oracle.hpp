#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nldiff/evolution.hpp"
#include "nldiff/stationary.hpp"

namespace nldiff::oracle {

struct DenseInstance {
    std::size_t n = 0;
    Eigen::MatrixXd m;
    Eigen::VectorXd nu;

    static DenseInstance from(const FiniteRandomWalkSpace& space);
};

// At most three unknowns: nested bisection on the subdifferential of the
// energy, any graphs.  Four to eight unknowns: multistart dense Newton,
// graphs must be strictly increasing and onto.
SolutionPair dense_gp_oracle(const DenseInstance& inst, const StationaryProblem& problem, int grid_resolution = 200,
                             std::uint64_t seed = 7);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;  // v on omega1, w on omega2
};

// Exact solution of nu v' = A v + nu f for the p = 2 identity case with a
// time-constant source.
Trajectory linear_evolution_oracle(const DenseInstance& inst, const EvolutionProblem& problem,
                                   const std::vector<double>& times);

// Same, for a given symmetric A on a node list (v0, f indexed like nodes).
Trajectory linear_ode(const Eigen::VectorXd& nu, const Eigen::MatrixXd& a, const Eigen::VectorXd& v0,
                      const Eigen::VectorXd& f, const std::vector<double>& times);

// Schur complement S of the weighted Laplacian on the m-closure of W,
// eliminating W; boundary ordering follows m_boundary.  The
// Dirichlet-to-Neumann matrix is diag(nu_B)^{-1} S.
Eigen::MatrixXd schur_dtn_oracle(const DenseInstance& inst, const NodeSet& w);

}
