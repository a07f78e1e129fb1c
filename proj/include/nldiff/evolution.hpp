#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nldiff/stationary.hpp"

namespace nldiff {

enum class EvolutionMode { Dynamical, StaticBoundary };

// Time-dependent node field: a callable, or a piecewise-constant table with
// value k on (times[k], times[k+1]] (the last row continues past the end).
class Source {
public:
    using Fn = std::function<Vec(double)>;

    static Source zero(std::size_t n);
    static Source constant(Vec values);
    static Source table(std::vector<double> times, std::vector<Vec> values);
    static Source callable(Fn f, std::size_t n);

    std::size_t size() const { return n_; }
    // zero outside the mask
    Source masked(const std::vector<char>& keep) const;
    // pointwise sum; two tables merge into a table on the union of times
    Source plus(const Source& other) const;
    bool is_table() const { return !fn_; }
    Vec at(double t) const;
    Vec integral(double a, double b) const;
    Vec average(double a, double b) const;

private:
    std::size_t n_ = 0;
    std::vector<double> times_;
    std::vector<Vec> values_;
    Fn fn_;
};

struct EvolutionProblem {
    std::shared_ptr<const FiniteRandomWalkSpace> space;
    DomainPartition partition;
    LerayLionsFlux flux = LerayLionsFlux::p_laplacian(2.0);
    MonotoneGraph gamma;
    MonotoneGraph beta;
    IntegrationSet integration_set = IntegrationSet::Q1;
    EvolutionMode mode = EvolutionMode::Dynamical;
    Vec v0;  // read on omega1
    Vec w0;  // read on omega2, dynamical mode only
    Source source;  // f on omega1 and, in dynamical mode, g on omega2
    double horizon = 1.0;

    void validate() const;
};

struct StepState {
    double t = 0.0;
    Vec u;
    Vec v;
    Vec w;
};

struct MassRecord {
    double t;
    double mass_omega1;
    double mass_omega2;
    double source_integral;
};

struct MildSolution {
    int n = 0;
    double horizon = 0.0;
    std::vector<double> times;
    std::vector<StepState> states;  // states[0] is the initial datum
    std::vector<Vec> f_averages;    // f_averages[i-1] belongs to step i
    std::vector<MassRecord> mass_series;
    std::vector<double> residuals;
    std::vector<std::string> methods;
};

struct CompatibilityReport {
    bool passed = true;
    double first_violation_time = -1.0;
    double min_margin = kInf;
    std::string message;
};

struct LedgerReport {
    std::vector<double> step_residuals;
    std::vector<double> energy_series;
    double energy_initial = 0.0;
    double energy_final = 0.0;
    double dissipation = 0.0;
    double source_work = 0.0;
    double gap = 0.0;
    bool holds = false;
};

struct StaticStep {
    Vec v;
    Vec u;
    Vec w;
    SolutionPair pair;
};

SolutionPair resolvent_dynamical(const EvolutionProblem& problem, double lambda, const Vec& psi,
                                 const SolverOptions& options = {});
StaticStep resolvent_static_boundary(const EvolutionProblem& problem, double lambda, const Vec& psi,
                                     const SolverOptions& options = {});

CompatibilityReport compatibility_check(const EvolutionProblem& problem, int n_probe);

MildSolution mild_solve(const EvolutionProblem& problem, int n_steps, double tol = 1e-10);

std::vector<std::pair<int, double>> refine_and_compare(const EvolutionProblem& problem, int n_start, int doublings);

LedgerReport strong_residual(const EvolutionProblem& problem, const MildSolution& solution);

// Ordered like m_boundary(space, w).ids().
Vec dtn_apply(const FiniteRandomWalkSpace& space, const NodeSet& w, const LerayLionsFlux& flux,
              const Vec& f_boundary);

// g and w0 are full-length node vectors read on the m-boundary of w.
MildSolution dtn_evolve(std::shared_ptr<const FiniteRandomWalkSpace> space, const NodeSet& w,
                        const LerayLionsFlux& flux, const Source& g, const Vec& w0, double horizon, int n_steps);
EvolutionProblem dtn_problem(std::shared_ptr<const FiniteRandomWalkSpace> space, const NodeSet& w,
                             const LerayLionsFlux& flux, const Source& g, const Vec& w0, double horizon);

// Combined state (v on omega1, w on omega2 in dynamical mode).
Vec stacked_state(const EvolutionProblem& problem, const StepState& s);

}
