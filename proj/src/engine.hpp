#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nldiff/flux.hpp"
#include "nldiff/space.hpp"

namespace nldiff::detail {

struct Coupled {
    std::size_t y;
    double m;
};

// Nodes of a domain with their coupled neighbours; the operator is
// lambda * sum_y m_xy a(x, y, u_y - u_x).
struct Network {
    const FiniteRandomWalkSpace* space;
    const LerayLionsFlux* flux;
    double lambda;
    std::vector<std::size_t> nodes;
    std::vector<std::vector<Coupled>> adj;

    Network(const FiniteRandomWalkSpace& s, const LerayLionsFlux& f, const NodeSet& omega, const CouplingSet& q,
            double lambda);
    double div(std::size_t x, const Vec& u) const;
};

// Residual that rounding in u alone can produce at node x.  Bounded by a few
// ulps for Lipschitz fluxes; dominant when the flux slope is singular at 0.
double rounding_floor(const Network& net, std::size_t x, const Vec& u);

using Law = std::function<void(std::size_t x, double u, double& value, double& slope)>;

struct Outcome {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

// Solves law_x(u_x) - (lambda div u)_x = rhs_x for x in free, other entries
// of u held fixed.  The system is the gradient of a convex energy, which the
// line search exploits.
Outcome newton(const Network& net, const std::vector<std::size_t>& free, Vec& u, const Law& law, const Vec& rhs,
               double tol, int max_iter);

Outcome gauss_seidel(const Network& net, const std::vector<std::size_t>& free, Vec& u, const Law& law,
                     const Vec& rhs, double tol, int max_sweeps);

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}
