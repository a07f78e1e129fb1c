#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/SparseCore>

#include "nldiff/error.hpp"

namespace nldiff {

using Vec = std::vector<double>;

class NodeSet {
public:
    NodeSet() = default;
    NodeSet(std::initializer_list<std::size_t> ids);
    explicit NodeSet(std::vector<std::size_t> ids);

    static NodeSet all(std::size_t n);
    static NodeSet from_mask(const std::vector<char>& mask);

    bool empty() const { return ids_.empty(); }
    std::size_t size() const { return ids_.size(); }
    bool contains(std::size_t x) const;
    const std::vector<std::size_t>& ids() const { return ids_; }
    auto begin() const { return ids_.begin(); }
    auto end() const { return ids_.end(); }

    std::vector<char> mask(std::size_t n) const;
    void check_range(std::size_t n) const;

    NodeSet unite(const NodeSet& other) const;
    NodeSet intersect(const NodeSet& other) const;
    NodeSet minus(const NodeSet& other) const;

    bool operator==(const NodeSet&) const = default;

private:
    std::vector<std::size_t> ids_;
};

struct DomainPartition {
    NodeSet omega1;
    NodeSet omega2;

    DomainPartition() = default;
    DomainPartition(NodeSet o1, NodeSet o2);

    NodeSet omega() const { return omega1.unite(omega2); }
};

// Which pairs (x,y) of the domain carry interaction.  Q1 keeps all of
// Omega x Omega, Q2 drops the pairs with both ends in omega2.
class CouplingSet {
public:
    static CouplingSet q1() { return CouplingSet(); }
    static CouplingSet q2(NodeSet omega2);

    bool is_q2() const { return q2_; }
    const NodeSet& omega2() const { return omega2_; }
    std::vector<char> omega2_mask(std::size_t n) const { return omega2_.mask(n); }

private:
    bool q2_ = false;
    NodeSet omega2_;
};

using Kernel = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Triplet {
    std::size_t i;
    std::size_t j;
    double w;
};

class FiniteRandomWalkSpace {
public:
    // weights must be symmetric, nonnegative
    static FiniteRandomWalkSpace from_weighted_graph(const Kernel& weights);
    // Edges are matrix entries; a missing mirror entry is filled in, a
    // conflicting one is an AsymmetricWeights error.
    static FiniteRandomWalkSpace from_edges(std::size_t n, const std::vector<Triplet>& edges);

    std::size_t node_count() const { return nu_.size(); }
    const Vec& nu() const { return nu_; }
    double nu(std::size_t x) const { return nu_[x]; }
    const Kernel& kernel() const { return kernel_; }
    double m(std::size_t x, std::size_t y) const { return kernel_.coeff(long(x), long(y)); }

    double measure(const NodeSet& a) const;
    double reversibility_defect() const;
    double max_row_defect() const;

    template <class F>
    void for_each_neighbor(std::size_t x, F&& f) const {
        for (Kernel::InnerIterator it(kernel_, long(x)); it; ++it) f(std::size_t(it.col()), it.value());
    }

private:
    FiniteRandomWalkSpace(Vec nu, Kernel kernel) : nu_(std::move(nu)), kernel_(std::move(kernel)) {}

    Vec nu_;
    Kernel kernel_;
};

struct KernelProfile {
    enum class Type { Indicator, Gaussian, Table };
    Type type = Type::Indicator;
    double radius = 1.0;
    double height = 1.0;
    double sigma = 1.0;
    std::vector<double> table_r;
    std::vector<double> table_j;

    static KernelProfile indicator(double radius, double height);
    static KernelProfile gaussian(double sigma, double cutoff);
    static KernelProfile table(std::vector<double> r, std::vector<double> j);

    double operator()(double dist) const;
};

FiniteRandomWalkSpace from_kernel_grid(const std::vector<std::vector<double>>& points, double spacing,
                                       const KernelProfile& profile);

inline FiniteRandomWalkSpace from_weighted_graph(const Kernel& w) {
    return FiniteRandomWalkSpace::from_weighted_graph(w);
}

NodeSet m_boundary(const FiniteRandomWalkSpace& space, const NodeSet& w);
NodeSet m_closure(const FiniteRandomWalkSpace& space, const NodeSet& w);
double interaction(const FiniteRandomWalkSpace& space, const NodeSet& a, const NodeSet& b);
bool is_m_connected(const FiniteRandomWalkSpace& space, const NodeSet& omega);
// Connectivity of the support graph restricted to coupled pairs.
bool is_connected_under(const FiniteRandomWalkSpace& space, const NodeSet& omega, const CouplingSet& q);

double poincare_ratio(const FiniteRandomWalkSpace& space, const NodeSet& omega, const CouplingSet& q,
                      std::span<const double> u, const NodeSet& z, double p);

double estimate_poincare_constant(const FiniteRandomWalkSpace& space, const NodeSet& omega,
                                  const CouplingSet& q, double p, double l, int probe_count,
                                  std::uint64_t seed);

}
