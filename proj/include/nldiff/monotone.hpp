#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nldiff/error.hpp"

namespace nldiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = kInf;
    double hi = -kInf;
    bool empty() const { return lo > hi; }
    double distance(double v) const { return v < lo ? lo - v : (v > hi ? v - hi : 0.0); }
    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

// A segment of a monotone graph: either a single abscissa carrying a
// closed value interval, or an open interval (lo, hi) on which the graph
// is the function offset + coef * sign(r - center) * |r - center|^expo.
struct Segment {
    enum class Kind { Point, Piece };
    Kind kind = Kind::Piece;
    double lo = -kInf;
    double hi = kInf;
    double vlo = 0.0;
    double vhi = 0.0;
    double offset = 0.0;
    double coef = 0.0;
    double expo = 1.0;
    double center = 0.0;

    static Segment point(double at, double vlo, double vhi);
    static Segment piece(double lo, double hi, double offset, double coef, double expo = 1.0, double center = 0.0);
    static Segment affine(double lo, double hi, double intercept, double slope);

    bool is_point() const { return kind == Kind::Point; }
    double at() const { return lo; }
    double eval(double r) const;
    double slope(double r) const;
    double integral(double a, double b) const;
    Segment scaled(double c) const;
};

class MonotoneGraph {
public:
    MonotoneGraph();
    explicit MonotoneGraph(std::vector<Segment> segments);

    static MonotoneGraph identity();
    static MonotoneGraph zero();
    static MonotoneGraph stefan(double latent);
    static MonotoneGraph hele_shaw();
    static MonotoneGraph power(double s);
    static MonotoneGraph obstacle(double lo, double hi, const MonotoneGraph& inner);

    const std::vector<Segment>& segments() const { return segs_; }
    // Index of the segment containing r, or -1 when r is outside the domain.
    long locate(double r) const;

    Interval values(double r) const;
    double minimal_section(double r) const;
    double resolvent(double mu, double s) const;
    double yosida(double lambda, double s) const;
    double yosida_slope(double lambda, double s) const;
    // Segment index the resolvent of s lands in.
    std::size_t resolvent_segment(double mu, double s) const;

    MonotoneGraph split_plus() const;
    MonotoneGraph split_minus() const;
    MonotoneGraph inverse() const;
    MonotoneGraph scaled(double c) const;

    double primitive(double r) const;
    double conjugate(double v) const;

    std::pair<double, double> range_bounds() const;
    std::pair<double, double> domain() const;
    // Sup-metric distance from (r, v) to the graph.
    double distance(double r, double v) const;
    bool is_strictly_increasing_surjective() const;

private:
    std::vector<Segment> segs_;
    // solves y = f(s - y/lambda) on a piece
    double piece_yosida(const Segment& seg, double lambda, double s) const;
};

using Graph = MonotoneGraph;

inline MonotoneGraph make_identity() { return MonotoneGraph::identity(); }
inline MonotoneGraph make_zero() { return MonotoneGraph::zero(); }
inline MonotoneGraph make_stefan(double latent) { return MonotoneGraph::stefan(latent); }
inline MonotoneGraph make_hele_shaw() { return MonotoneGraph::hele_shaw(); }
inline MonotoneGraph make_power(double s) { return MonotoneGraph::power(s); }
inline MonotoneGraph make_obstacle(double lo, double hi, const MonotoneGraph& inner) {
    return MonotoneGraph::obstacle(lo, hi, inner);
}

}
