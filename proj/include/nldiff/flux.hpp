#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>

#include "nldiff/space.hpp"

namespace nldiff {

class LerayLionsFlux {
public:
    enum class Kind { PLaplacian, Weighted, Custom };
    using Evaluator = std::function<double(std::size_t, std::size_t, double)>;

    static LerayLionsFlux p_laplacian(double p);
    static LerayLionsFlux weighted(double p, Vec phi);
    // Rejected unless antisymmetry, monotonicity, growth and coercivity hold
    // on random samples.  Without a derivative a central difference is used.
    static LerayLionsFlux custom(double p, Evaluator a, double c_p, double C_p, std::size_t node_count,
                                 Evaluator derivative = {}, std::uint64_t seed = 0);

    double p() const { return p_; }
    Kind kind() const { return kind_; }
    double c_p() const { return c_p_; }
    double C_p() const { return C_p_; }
    const Vec& phi() const { return phi_; }

    double value(std::size_t x, std::size_t y, double r) const;
    // d value / dr, bounded near r = 0 when p < 2
    double slope(std::size_t x, std::size_t y, double r) const;

private:
    double p_ = 2.0;
    Kind kind_ = Kind::PLaplacian;
    double c_p_ = 1.0;
    double C_p_ = 1.0;
    Vec phi_;
    Evaluator eval_;
    Evaluator deriv_;
};

inline LerayLionsFlux p_laplacian_flux(double p) { return LerayLionsFlux::p_laplacian(p); }
inline LerayLionsFlux weighted_flux(double p, Vec phi) { return LerayLionsFlux::weighted(p, std::move(phi)); }

// Full-length vector; entries outside omega are zero.
Vec divergence(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
               const NodeSet& omega, const CouplingSet& q = CouplingSet::q1());

// Values ordered like m_boundary(space, w).ids().
Vec neumann_n1(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
               const NodeSet& w);
Vec neumann_n2(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
               const NodeSet& w);

std::pair<double, double> pairing_identity(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux,
                                           std::span<const double> u, std::span<const double> w,
                                           const NodeSet& omega, const CouplingSet& q = CouplingSet::q1());

// 1/2 * sum over coupled pairs of nu_x m_xy a(x,y,du) dw
double flux_pairing(const FiniteRandomWalkSpace& space, const LerayLionsFlux& flux, std::span<const double> u,
                    std::span<const double> w, const NodeSet& omega, const CouplingSet& q = CouplingSet::q1());

}
