#include "nldiff/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace nldiff {

NodeSet::NodeSet(std::initializer_list<std::size_t> ids) : NodeSet(std::vector<std::size_t>(ids)) {}

NodeSet::NodeSet(std::vector<std::size_t> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

NodeSet NodeSet::all(std::size_t n) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return NodeSet(std::move(ids));
}

NodeSet NodeSet::from_mask(const std::vector<char>& mask) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) ids.push_back(i);
    return NodeSet(std::move(ids));
}

bool NodeSet::contains(std::size_t x) const { return std::binary_search(ids_.begin(), ids_.end(), x); }

std::vector<char> NodeSet::mask(std::size_t n) const {
    std::vector<char> m(n, 0);
    for (auto i : ids_)
        if (i < n) m[i] = 1;
    return m;
}

void NodeSet::check_range(std::size_t n) const {
    if (!ids_.empty() && ids_.back() >= n)
        throw Error(ErrorKind::InvalidParameter,
                    "node index " + std::to_string(ids_.back()) + " out of range for " + std::to_string(n) +
                        " nodes");
}

NodeSet NodeSet::unite(const NodeSet& other) const {
    std::vector<std::size_t> out;
    std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(), std::back_inserter(out));
    return NodeSet(std::move(out));
}

NodeSet NodeSet::intersect(const NodeSet& other) const {
    std::vector<std::size_t> out;
    std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                          std::back_inserter(out));
    return NodeSet(std::move(out));
}

NodeSet NodeSet::minus(const NodeSet& other) const {
    std::vector<std::size_t> out;
    std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                        std::back_inserter(out));
    return NodeSet(std::move(out));
}

DomainPartition::DomainPartition(NodeSet o1, NodeSet o2) : omega1(std::move(o1)), omega2(std::move(o2)) {
    if (!omega1.intersect(omega2).empty())
        throw Error(ErrorKind::InvalidParameter, "omega1 and omega2 overlap");
    if (omega1.empty() && omega2.empty()) throw Error(ErrorKind::InvalidParameter, "empty domain");
}

CouplingSet CouplingSet::q2(NodeSet omega2) {
    CouplingSet q;
    q.q2_ = true;
    q.omega2_ = std::move(omega2);
    return q;
}

FiniteRandomWalkSpace FiniteRandomWalkSpace::from_weighted_graph(const Kernel& weights) {
    const auto n = std::size_t(weights.rows());
    if (n == 0 || weights.cols() != weights.rows())
        throw Error(ErrorKind::InvalidParameter, "weight matrix must be square and nonempty");
    Kernel wt = weights.transpose();
    double wmax = 0.0;
    for (std::size_t x = 0; x < n; ++x)
        for (Kernel::InnerIterator it(weights, long(x)); it; ++it) {
            if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
                throw Error(ErrorKind::InvalidParameter, "weights must be finite and nonnegative");
            wmax = std::max(wmax, it.value());
        }
    Kernel diff = weights - wt;
    for (std::size_t x = 0; x < n; ++x)
        for (Kernel::InnerIterator it(diff, long(x)); it; ++it)
            if (std::abs(it.value()) > 1e-14 * wmax)
                throw Error(ErrorKind::AsymmetricWeights,
                            "w(" + std::to_string(x) + "," + std::to_string(it.col()) + ") differs from its mirror");

    Vec nu(n, 0.0);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t x = 0; x < n; ++x) {
        for (Kernel::InnerIterator it(weights, long(x)); it; ++it) nu[x] += it.value();
        if (!(nu[x] > 0.0)) throw Error(ErrorKind::IsolatedNode, "node " + std::to_string(x) + " has zero degree");
        for (Kernel::InnerIterator it(weights, long(x)); it; ++it)
            if (it.value() > 0.0) trips.emplace_back(long(x), it.col(), it.value() / nu[x]);
    }
    Kernel k(static_cast<long>(n), static_cast<long>(n));
    k.setFromTriplets(trips.begin(), trips.end());
    k.makeCompressed();
    return FiniteRandomWalkSpace(std::move(nu), std::move(k));
}

FiniteRandomWalkSpace FiniteRandomWalkSpace::from_edges(std::size_t n, const std::vector<Triplet>& edges) {
    std::map<std::pair<std::size_t, std::size_t>, double> entries;
    for (const auto& e : edges) {
        if (e.i >= n || e.j >= n) throw Error(ErrorKind::InvalidParameter, "edge index out of range");
        if (!(e.w >= 0.0) || !std::isfinite(e.w))
            throw Error(ErrorKind::InvalidParameter, "weights must be finite and nonnegative");
        auto [it, fresh] = entries.emplace(std::make_pair(e.i, e.j), e.w);
        if (!fresh && it->second != e.w)
            throw Error(ErrorKind::AsymmetricWeights, "conflicting duplicate edge");
    }
    auto all = entries;
    for (const auto& [key, w] : entries) {
        auto mirror = std::make_pair(key.second, key.first);
        auto it = all.find(mirror);
        if (it == all.end())
            all.emplace(mirror, w);
        else if (it->second != w)
            throw Error(ErrorKind::AsymmetricWeights, "w(" + std::to_string(key.first) + "," +
                                                          std::to_string(key.second) + ") differs from its mirror");
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& [key, w] : all) trips.emplace_back(long(key.first), long(key.second), w);
    Kernel wm(static_cast<long>(n), static_cast<long>(n));
    wm.setFromTriplets(trips.begin(), trips.end());
    return from_weighted_graph(wm);
}

double FiniteRandomWalkSpace::measure(const NodeSet& a) const {
    double s = 0.0;
    for (auto x : a) s += nu_[x];
    return s;
}

double FiniteRandomWalkSpace::reversibility_defect() const {
    double worst = 0.0;
    for (std::size_t x = 0; x < node_count(); ++x)
        for_each_neighbor(x, [&](std::size_t y, double mxy) {
            worst = std::max(worst, std::abs(nu_[x] * mxy - nu_[y] * m(y, x)));
        });
    return worst;
}

double FiniteRandomWalkSpace::max_row_defect() const {
    double worst = 0.0;
    for (std::size_t x = 0; x < node_count(); ++x) {
        double s = 0.0;
        for_each_neighbor(x, [&](std::size_t, double mxy) { s += mxy; });
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

KernelProfile KernelProfile::indicator(double radius, double height) {
    if (!(radius > 0.0) || !(height > 0.0)) throw Error(ErrorKind::InvalidParameter, "indicator needs radius, height > 0");
    KernelProfile k;
    k.type = Type::Indicator;
    k.radius = radius;
    k.height = height;
    return k;
}

KernelProfile KernelProfile::gaussian(double sigma, double cutoff) {
    if (!(sigma > 0.0) || !(cutoff > 0.0)) throw Error(ErrorKind::InvalidParameter, "gaussian needs sigma, cutoff > 0");
    KernelProfile k;
    k.type = Type::Gaussian;
    k.sigma = sigma;
    k.radius = cutoff;
    return k;
}

KernelProfile KernelProfile::table(std::vector<double> r, std::vector<double> j) {
    if (r.size() != j.size() || r.size() < 2) throw Error(ErrorKind::InvalidParameter, "table needs matching r, J arrays");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(j[i] >= 0.0)) throw Error(ErrorKind::InvalidParameter, "table values must be nonnegative");
        if (i > 0 && !(r[i] > r[i - 1])) throw Error(ErrorKind::InvalidParameter, "table radii must increase");
    }
    if (r.front() < 0.0) throw Error(ErrorKind::InvalidParameter, "table radii must be nonnegative");
    KernelProfile k;
    k.type = Type::Table;
    k.radius = r.back();
    k.table_r = std::move(r);
    k.table_j = std::move(j);
    return k;
}

double KernelProfile::operator()(double d) const {
    switch (type) {
    case Type::Indicator: return d <= radius ? height : 0.0;
    case Type::Gaussian: return d <= radius ? std::exp(-0.5 * d * d / (sigma * sigma)) : 0.0;
    case Type::Table: {
        if (d > table_r.back()) return 0.0;
        if (d <= table_r.front()) return table_j.front();
        auto it = std::upper_bound(table_r.begin(), table_r.end(), d);
        auto i = std::size_t(it - table_r.begin());
        double t = (d - table_r[i - 1]) / (table_r[i] - table_r[i - 1]);
        return (1 - t) * table_j[i - 1] + t * table_j[i];
    }
    }
    return 0.0;
}

FiniteRandomWalkSpace from_kernel_grid(const std::vector<std::vector<double>>& points, double spacing,
                                       const KernelProfile& profile) {
    if (points.empty()) throw Error(ErrorKind::InvalidParameter, "no points");
    if (!(spacing > 0.0)) throw Error(ErrorKind::InvalidParameter, "spacing must be positive");
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim || dim == 0) throw Error(ErrorKind::InvalidParameter, "inconsistent point dimensions");
    const double cell = std::pow(spacing, double(dim));
    const std::size_t n = points.size();
    std::vector<Eigen::Triplet<double>> trips;
    Vec row_mass(n, 0.0);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) {
            if (x == y) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) d2 += (points[x][c] - points[y][c]) * (points[x][c] - points[y][c]);
            double w = profile(std::sqrt(d2)) * cell;
            if (w > 0.0) {
                trips.emplace_back(long(x), long(y), w);
                row_mass[x] += w;
            }
        }
    for (std::size_t x = 0; x < n; ++x)
        if (!(row_mass[x] > 0.0))
            throw Error(ErrorKind::EmptyStencil, "point " + std::to_string(x) + " sees no kernel mass");
    Kernel wm(static_cast<long>(n), static_cast<long>(n));
    wm.setFromTriplets(trips.begin(), trips.end());
    return FiniteRandomWalkSpace::from_weighted_graph(wm);
}

NodeSet m_boundary(const FiniteRandomWalkSpace& space, const NodeSet& w) {
    w.check_range(space.node_count());
    auto in = w.mask(space.node_count());
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < space.node_count(); ++x) {
        if (in[x]) continue;
        double mass = 0.0;
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (in[y]) mass += mxy;
        });
        if (mass > 0.0) out.push_back(x);
    }
    return NodeSet(std::move(out));
}

NodeSet m_closure(const FiniteRandomWalkSpace& space, const NodeSet& w) { return w.unite(m_boundary(space, w)); }

double interaction(const FiniteRandomWalkSpace& space, const NodeSet& a, const NodeSet& b) {
    a.check_range(space.node_count());
    b.check_range(space.node_count());
    auto inb = b.mask(space.node_count());
    double s = 0.0;
    for (auto x : a) {
        double row = 0.0;
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (inb[y]) row += mxy;
        });
        s += space.nu(x) * row;
    }
    return s;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

bool coupled(const CouplingSet& q, const std::vector<char>& in2, std::size_t x, std::size_t y) {
    return !(q.is_q2() && in2[x] && in2[y]);
}

}

bool is_connected_under(const FiniteRandomWalkSpace& space, const NodeSet& omega, const CouplingSet& q) {
    omega.check_range(space.node_count());
    if (omega.empty()) throw Error(ErrorKind::InvalidParameter, "empty set");
    const auto n = space.node_count();
    auto in = omega.mask(n);
    auto in2 = q.omega2_mask(n);
    UnionFind uf(n);
    for (auto x : omega)
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (in[y] && mxy > 0.0 && coupled(q, in2, x, y)) uf.join(x, y);
        });
    auto root = uf.find(omega.ids().front());
    return std::all_of(omega.begin(), omega.end(), [&](std::size_t x) { return uf.find(x) == root; });
}

bool is_m_connected(const FiniteRandomWalkSpace& space, const NodeSet& omega) {
    return is_connected_under(space, omega, CouplingSet::q1());
}

double poincare_ratio(const FiniteRandomWalkSpace& space, const NodeSet& omega, const CouplingSet& q,
                      std::span<const double> u, const NodeSet& z, double p) {
    const auto n = space.node_count();
    if (u.size() != n) throw Error(ErrorKind::MissingValues, "u must have one value per node");
    if (!(p > 1.0)) throw Error(ErrorKind::InvalidExponent, "p must exceed 1");
    if (z.empty() || !(space.measure(z) > 0.0)) throw Error(ErrorKind::EmptyZ, "Z must have positive measure");
    auto in = omega.mask(n);
    for (auto x : z)
        if (!in[x]) throw Error(ErrorKind::InvalidParameter, "Z must lie inside Omega");
    auto in2 = q.omega2_mask(n);
    double num = 0.0, grad = 0.0, mean = 0.0;
    for (auto x : omega) {
        if (!std::isfinite(u[x])) throw Error(ErrorKind::MissingValues, "u must be finite on Omega");
        num += space.nu(x) * std::pow(std::abs(u[x]), p);
        space.for_each_neighbor(x, [&](std::size_t y, double mxy) {
            if (in[y] && coupled(q, in2, x, y)) grad += space.nu(x) * mxy * std::pow(std::abs(u[y] - u[x]), p);
        });
    }
    for (auto x : z) mean += space.nu(x) * u[x];
    num = std::pow(num, 1.0 / p);
    double den = std::pow(grad, 1.0 / p) + std::abs(mean);
    if (num == 0.0) return 0.0;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

namespace {

// Random subset grown until its measure reaches l.
NodeSet random_z(const FiniteRandomWalkSpace& space, const NodeSet& omega, double l, std::mt19937_64& rng) {
    auto ids = omega.ids();
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::size_t> z;
    double mass = 0.0;
    for (auto x : ids) {
        z.push_back(x);
        mass += space.nu(x);
        if (mass >= l) break;
    }
    return NodeSet(std::move(z));
}

// Greedy subset of measure >= l keeping |int_Z u| small.
NodeSet balanced_z(const FiniteRandomWalkSpace& space, const NodeSet& omega, double l, std::span<const double> u) {
    std::vector<std::size_t> pos, neg;
    for (auto x : omega) (u[x] >= 0 ? pos : neg).push_back(x);
    auto by_mag = [&](std::size_t a, std::size_t b) { return std::abs(u[a]) * space.nu(a) < std::abs(u[b]) * space.nu(b); };
    std::sort(pos.begin(), pos.end(), by_mag);
    std::sort(neg.begin(), neg.end(), by_mag);
    std::vector<std::size_t> z;
    double mass = 0.0, sum = 0.0;
    std::size_t ip = 0, in = 0;
    while (mass < l && (ip < pos.size() || in < neg.size())) {
        bool take_pos;
        if (ip == pos.size()) take_pos = false;
        else if (in == neg.size()) take_pos = true;
        else take_pos = sum <= 0.0;
        auto x = take_pos ? pos[ip++] : neg[in++];
        z.push_back(x);
        mass += space.nu(x);
        sum += space.nu(x) * u[x];
    }
    return NodeSet(std::move(z));
}

}

double estimate_poincare_constant(const FiniteRandomWalkSpace& space, const NodeSet& omega,
                                  const CouplingSet& q, double p, double l, int probe_count,
                                  std::uint64_t seed) {
    omega.check_range(space.node_count());
    if (omega.empty()) throw Error(ErrorKind::InvalidParameter, "empty Omega");
    if (!is_connected_under(space, omega, q)) throw Error(ErrorKind::NotConnected, "Omega is not m-connected");
    const double total = space.measure(omega);
    if (!(l > 0.0) || l > total * (1 + 1e-12)) throw Error(ErrorKind::InvalidParameter, "need 0 < l <= nu(Omega)");
    const auto n = space.node_count();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double best = 0.0;

    auto consider = [&](Vec u) {
        double norm = 0.0;
        for (auto x : omega) norm += space.nu(x) * std::pow(std::abs(u[x]), p);
        if (!(norm > 0.0)) return;
        norm = std::pow(norm, 1.0 / p);
        for (auto x : omega) u[x] /= norm;
        best = std::max(best, poincare_ratio(space, omega, q, u, balanced_z(space, omega, l, u), p));
        for (int t = 0; t < 4; ++t)
            best = std::max(best, poincare_ratio(space, omega, q, u, random_z(space, omega, l, rng), p));
    };

    double mean_w = 0.0;
    Vec ones(n, 0.0);
    for (auto x : omega) ones[x] = 1.0;
    consider(ones);
    for (auto x : omega) {
        Vec e(n, 0.0);
        e[x] = 1.0;
        consider(e);
        mean_w = space.nu(x) / total;
        Vec c(n, 0.0);
        for (auto y : omega) c[y] = (y == x ? 1.0 : 0.0) - mean_w;
        consider(c);
    }
    for (int k = 0; k < probe_count; ++k) {
        Vec u(n, 0.0);
        for (auto x : omega) u[x] = gauss(rng);
        consider(u);
    }
    return best;
}

}
