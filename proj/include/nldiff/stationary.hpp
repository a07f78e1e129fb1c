#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nldiff/flux.hpp"
#include "nldiff/monotone.hpp"
#include "nldiff/space.hpp"

namespace nldiff {

enum class IntegrationSet { Q1, Q2 };

struct StationaryProblem {
    std::shared_ptr<const FiniteRandomWalkSpace> space;
    DomainPartition partition;
    LerayLionsFlux flux = LerayLionsFlux::p_laplacian(2.0);
    MonotoneGraph gamma;
    MonotoneGraph beta;
    Vec phi;  // one entry per node, read on Omega only
    IntegrationSet integration_set = IntegrationSet::Q1;
    double lambda_scale = 1.0;

    NodeSet omega() const { return partition.omega(); }
    CouplingSet coupling() const;
    // gamma on omega1, beta on omega2
    const MonotoneGraph& graph_at(std::size_t x) const;
    void validate() const;
};

struct ScheduleEntry {
    long n;
    long k;
    double change;
};

struct SolutionPair {
    Vec u;
    Vec v;
    double residual_inf = 0.0;
    int iterations = 0;
    std::vector<ScheduleEntry> schedule_trace;
    std::string method;
};

struct RangeReport {
    double r_minus = 0.0;
    double r_plus = 0.0;
    double integral_phi = 0.0;
    bool feasible = false;
    double margin = 0.0;
};

struct VerifyReport {
    double inclusion = 0.0;
    double residual = 0.0;
    double conservation = 0.0;
    std::size_t worst_inclusion_node = 0;
    std::size_t worst_residual_node = 0;
    bool inclusion_ok = false;
    bool residual_ok = false;
    bool conservation_ok = false;
    bool passed() const { return inclusion_ok && residual_ok && conservation_ok; }
};

struct EnergyReport {
    double gradient_energy = 0.0;
    double bound = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_stages = 48;
    int max_newton = 60;
    bool polish = true;
    std::optional<Vec> start;
};

RangeReport check_range(const StationaryProblem& problem);

// Truncation level removing T_K at the (n,k) approximate solution.
double truncation_level(const StationaryProblem& problem, long n, long k);

Vec solve_approximate(const StationaryProblem& problem, long n, long k, double K, const Vec& start,
                      int* iterations = nullptr);

SolutionPair solve_gp(const StationaryProblem& problem, const SolverOptions& options);
inline SolutionPair solve_gp(const StationaryProblem& problem, double tol = 1e-10) {
    SolverOptions o;
    o.tol = tol;
    return solve_gp(problem, o);
}

VerifyReport verify_solution(const StationaryProblem& problem, const SolutionPair& pair, double tol);

std::pair<double, double> contraction_gap(const StationaryProblem& p1, const StationaryProblem& p2,
                                          const SolutionPair& s1, const SolutionPair& s2);

EnergyReport energy_report(const StationaryProblem& problem, const SolutionPair& pair, int probes = 200,
                           std::uint64_t seed = 0);

}
