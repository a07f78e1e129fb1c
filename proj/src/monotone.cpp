#include "nldiff/monotone.hpp"

#include <algorithm>
#include <cmath>

namespace nldiff {

namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// c * v that treats 0 * inf as 0
double mul(double c, double v) { return (c == 0.0 || v == 0.0) ? 0.0 : c * v; }

}

Segment Segment::point(double at, double vlo, double vhi) {
    Segment s;
    s.kind = Kind::Point;
    s.lo = s.hi = at;
    s.vlo = vlo;
    s.vhi = vhi;
    return s;
}

Segment Segment::piece(double lo, double hi, double offset, double coef, double expo, double center) {
    Segment s;
    s.kind = Kind::Piece;
    s.lo = lo;
    s.hi = hi;
    s.offset = offset;
    s.coef = coef;
    s.expo = expo;
    s.center = center;
    return s;
}

Segment Segment::affine(double lo, double hi, double intercept, double slope) {
    return piece(lo, hi, intercept, slope, 1.0, 0.0);
}

double Segment::eval(double r) const {
    if (coef == 0.0) return offset;
    double d = r - center;
    if (std::isinf(d)) return d;
    if (expo == 1.0) return offset + coef * d;
    return offset + coef * sgn(d) * std::pow(std::abs(d), expo);
}

double Segment::slope(double r) const {
    if (coef == 0.0) return 0.0;
    if (expo == 1.0) return coef;
    double d = std::abs(r - center);
    if (d == 0.0) return expo < 1.0 ? kInf : 0.0;
    return coef * expo * std::pow(d, expo - 1.0);
}

double Segment::integral(double a, double b) const {
    double s = offset * (b - a);
    if (coef == 0.0) return s;
    double e1 = expo + 1.0;
    return s + coef * (std::pow(std::abs(b - center), e1) - std::pow(std::abs(a - center), e1)) / e1;
}

Segment Segment::scaled(double c) const {
    Segment s = *this;
    if (is_point()) {
        s.vlo = mul(c, vlo);
        s.vhi = mul(c, vhi);
    } else {
        s.offset *= c;
        s.coef *= c;
    }
    return s;
}

MonotoneGraph::MonotoneGraph() : MonotoneGraph(identity()) {}

MonotoneGraph::MonotoneGraph(std::vector<Segment> in) {
    std::vector<Segment> segs;
    for (auto& s : in) {
        if (s.is_point()) {
            if (!std::isfinite(s.at())) throw Error(ErrorKind::InvalidParameter, "breakpoint must be finite");
            if (!(s.vlo <= s.vhi)) throw Error(ErrorKind::InvalidParameter, "empty value interval at breakpoint");
            if (!segs.empty() && segs.back().is_point() && segs.back().at() == s.at()) {
                segs.back().vlo = std::min(segs.back().vlo, s.vlo);
                segs.back().vhi = std::max(segs.back().vhi, s.vhi);
                continue;
            }
        } else {
            if (!(s.coef >= 0.0) || !std::isfinite(s.coef) || !(s.expo > 0.0) || !std::isfinite(s.offset) ||
                !std::isfinite(s.center))
                throw Error(ErrorKind::InvalidParameter, "piece needs finite offset/center, coef >= 0, exponent > 0");
            if (!(s.lo < s.hi)) continue;
            if (!segs.empty() && !segs.back().is_point()) {
                const auto& prev = segs.back();
                if (prev.hi != s.lo) throw Error(ErrorKind::InvalidParameter, "gap between pieces");
                double a = prev.eval(prev.hi), b = s.eval(s.lo);
                segs.push_back(Segment::point(s.lo, a, b));
            }
        }
        segs.push_back(s);
    }
    if (segs.empty()) throw Error(ErrorKind::InvalidParameter, "graph has no segments");
    if (!segs.front().is_point() && std::isfinite(segs.front().lo))
        segs.insert(segs.begin(), Segment::point(segs.front().lo, -kInf, 0.0));
    if (!segs.back().is_point() && std::isfinite(segs.back().hi))
        segs.push_back(Segment::point(segs.back().hi, 0.0, kInf));
    if (segs.front().is_point()) segs.front().vlo = -kInf;
    if (segs.back().is_point()) segs.back().vhi = kInf;

    for (std::size_t i = 0; i < segs.size(); ++i) {
        auto& s = segs[i];
        if (!s.is_point()) {
            if (i > 0 && segs[i - 1].at() != s.lo) throw Error(ErrorKind::InvalidParameter, "gap in domain");
            if (i + 1 < segs.size() && segs[i + 1].at() != s.hi) throw Error(ErrorKind::InvalidParameter, "gap in domain");
            continue;
        }
        if (i > 0) {
            if (segs[i - 1].is_point()) throw Error(ErrorKind::InvalidParameter, "gap in domain");
            s.vlo = segs[i - 1].eval(s.at());
        }
        if (i + 1 < segs.size()) {
            if (segs[i + 1].is_point()) throw Error(ErrorKind::InvalidParameter, "gap in domain");
            s.vhi = segs[i + 1].eval(s.at());
        }
        if (!(s.vlo <= s.vhi)) throw Error(ErrorKind::InvalidParameter, "graph is not monotone at a breakpoint");
    }
    segs_ = std::move(segs);
    auto v0 = values(0.0);
    if (v0.empty() || v0.distance(0.0) > 0.0) throw Error(ErrorKind::InvalidParameter, "graph must contain (0,0)");
}

MonotoneGraph MonotoneGraph::identity() { return MonotoneGraph({Segment::affine(-kInf, kInf, 0.0, 1.0)}); }

MonotoneGraph MonotoneGraph::zero() { return MonotoneGraph({Segment::affine(-kInf, kInf, 0.0, 0.0)}); }

MonotoneGraph MonotoneGraph::stefan(double latent) {
    if (!(latent > 0.0) || !std::isfinite(latent)) throw Error(ErrorKind::InvalidParameter, "latent heat must be positive");
    return MonotoneGraph({Segment::affine(-kInf, 0.0, 0.0, 1.0), Segment::point(0.0, 0.0, latent),
                          Segment::affine(0.0, kInf, latent, 1.0)});
}

MonotoneGraph MonotoneGraph::hele_shaw() {
    return MonotoneGraph({Segment::affine(-kInf, 0.0, 0.0, 0.0), Segment::point(0.0, 0.0, 1.0),
                          Segment::affine(0.0, kInf, 1.0, 0.0)});
}

MonotoneGraph MonotoneGraph::power(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidParameter, "power exponent must be positive");
    return MonotoneGraph({Segment::piece(-kInf, kInf, 0.0, 1.0, s, 0.0)});
}

MonotoneGraph MonotoneGraph::obstacle(double lo, double hi, const MonotoneGraph& inner) {
    if (!(lo <= 0.0) || !(hi >= 0.0)) throw Error(ErrorKind::InvalidParameter, "obstacle needs lo <= 0 <= hi");
    if ((std::isfinite(lo) && inner.values(lo).empty()) || (std::isfinite(hi) && inner.values(hi).empty()))
        throw Error(ErrorKind::InvalidParameter, "obstacle bounds outside the inner domain");
    std::vector<Segment> out;
    if (std::isfinite(lo)) out.push_back(Segment::point(lo, -kInf, inner.values(lo).hi));
    for (auto s : inner.segs_) {
        if (s.is_point()) {
            if (s.at() > lo && s.at() < hi) out.push_back(s);
            continue;
        }
        s.lo = std::max(s.lo, lo);
        s.hi = std::min(s.hi, hi);
        if (s.lo < s.hi) out.push_back(s);
    }
    if (std::isfinite(hi)) {
        auto vh = inner.values(hi);
        out.push_back(Segment::point(hi, vh.lo, kInf));
    }
    if (lo == hi) return MonotoneGraph({Segment::point(0.0, -kInf, kInf)});
    return MonotoneGraph(std::move(out));
}

long MonotoneGraph::locate(double r) const {
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        const auto& s = segs_[i];
        if (s.is_point() ? r == s.at() : (r > s.lo && r < s.hi)) return long(i);
    }
    return -1;
}

Interval MonotoneGraph::values(double r) const {
    auto i = locate(r);
    if (i < 0) return {};
    const auto& s = segs_[std::size_t(i)];
    if (s.is_point()) return {s.vlo, s.vhi};
    double v = s.eval(r);
    return {v, v};
}

std::pair<double, double> MonotoneGraph::domain() const {
    return {segs_.front().is_point() ? segs_.front().at() : segs_.front().lo,
            segs_.back().is_point() ? segs_.back().at() : segs_.back().hi};
}

std::pair<double, double> MonotoneGraph::range_bounds() const {
    const auto& a = segs_.front();
    const auto& b = segs_.back();
    return {a.is_point() ? a.vlo : a.eval(a.lo), b.is_point() ? b.vhi : b.eval(b.hi)};
}

double MonotoneGraph::minimal_section(double r) const {
    auto [dlo, dhi] = domain();
    if (r > dhi) return kInf;
    if (r < dlo) return -kInf;
    return values(r).clamp(0.0);
}

std::size_t MonotoneGraph::resolvent_segment(double mu, double s) const {
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        const auto& g = segs_[i];
        if (g.is_point()) {
            if (s <= g.at() + mul(mu, g.vhi)) return i;
        } else {
            double upper = std::isinf(g.hi) ? kInf : g.hi + mu * g.eval(g.hi);
            if (s < upper) return i;
        }
    }
    return segs_.size() - 1;
}

double MonotoneGraph::piece_yosida(const Segment& g, double lambda, double s) const {
    if (g.coef == 0.0) return g.offset;
    if (g.expo == 1.0) return (g.offset + g.coef * (s - g.center)) / (1.0 + g.coef / lambda);
    double y0 = g.eval(std::clamp(s, g.lo, g.hi));
    double a = std::min(0.0, y0), b = std::max(0.0, y0);
    for (int it = 0; it < 400; ++it) {
        double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        if (m - g.eval(s - m / lambda) > 0.0) b = m;
        else a = m;
        if (b - a <= 1e-16 * (1.0 + std::abs(m))) break;
    }
    return 0.5 * (a + b);
}

double MonotoneGraph::yosida(double lambda, double s) const {
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidParameter, "lambda must be positive");
    const auto& g = segs_[resolvent_segment(1.0 / lambda, s)];
    if (g.is_point()) return lambda * (s - g.at());
    return piece_yosida(g, lambda, s);
}

double MonotoneGraph::resolvent(double mu, double s) const {
    if (!(mu > 0.0)) throw Error(ErrorKind::InvalidParameter, "mu must be positive");
    const auto& g = segs_[resolvent_segment(mu, s)];
    if (g.is_point()) return g.at();
    double r = s - mu * piece_yosida(g, 1.0 / mu, s);
    return std::clamp(r, g.lo, g.hi);
}

double MonotoneGraph::yosida_slope(double lambda, double s) const {
    const auto& g = segs_[resolvent_segment(1.0 / lambda, s)];
    if (g.is_point()) return lambda;
    double y = piece_yosida(g, lambda, s);
    double d = g.slope(s - y / lambda);
    if (std::isinf(d)) return lambda;
    return lambda * d / (lambda + d);
}

MonotoneGraph MonotoneGraph::split_plus() const {
    std::vector<Segment> out{Segment::affine(-kInf, 0.0, 0.0, 0.0)};
    out.push_back(Segment::point(0.0, 0.0, values(0.0).hi));
    for (auto s : segs_) {
        if (s.is_point()) {
            if (s.at() > 0.0) out.push_back(s);
            continue;
        }
        s.lo = std::max(s.lo, 0.0);
        if (s.lo < s.hi) out.push_back(s);
    }
    return MonotoneGraph(std::move(out));
}

MonotoneGraph MonotoneGraph::split_minus() const {
    std::vector<Segment> out;
    for (auto s : segs_) {
        if (s.is_point()) {
            if (s.at() < 0.0) out.push_back(s);
            continue;
        }
        s.hi = std::min(s.hi, 0.0);
        if (s.lo < s.hi) out.push_back(s);
    }
    out.push_back(Segment::point(0.0, values(0.0).lo, 0.0));
    out.push_back(Segment::affine(0.0, kInf, 0.0, 0.0));
    return MonotoneGraph(std::move(out));
}

MonotoneGraph MonotoneGraph::inverse() const {
    std::vector<Segment> out;
    for (const auto& s : segs_) {
        if (s.is_point()) {
            if (s.vlo < s.vhi) out.push_back(Segment::affine(s.vlo, s.vhi, s.at(), 0.0));
            else out.push_back(Segment::point(s.vlo, s.at(), s.at()));
        } else if (s.coef == 0.0) {
            out.push_back(Segment::point(s.offset, s.lo, s.hi));
        } else {
            out.push_back(Segment::piece(s.eval(s.lo), s.eval(s.hi), s.center, std::pow(s.coef, -1.0 / s.expo),
                                         1.0 / s.expo, s.offset));
        }
    }
    return MonotoneGraph(std::move(out));
}

MonotoneGraph MonotoneGraph::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidParameter, "scale must be positive");
    std::vector<Segment> out;
    for (const auto& s : segs_) out.push_back(s.scaled(c));
    return MonotoneGraph(std::move(out));
}

double MonotoneGraph::primitive(double r) const {
    auto [dlo, dhi] = domain();
    if (r > dhi || r < dlo) return kInf;
    double total = 0.0;
    for (const auto& s : segs_) {
        if (s.is_point()) continue;
        if (r >= 0.0) {
            double a = std::max(s.lo, 0.0), b = std::min(s.hi, r);
            if (a < b) total += s.integral(a, b);
        } else {
            double a = std::max(s.lo, r), b = std::min(s.hi, 0.0);
            if (a < b) total -= s.integral(a, b);
        }
    }
    return std::max(total, 0.0);
}

double MonotoneGraph::conjugate(double v) const { return inverse().primitive(v); }

double MonotoneGraph::distance(double r, double v) const {
    double best = kInf;
    for (const auto& s : segs_) {
        if (s.is_point()) {
            best = std::min(best, std::max(std::abs(r - s.at()), Interval{s.vlo, s.vhi}.distance(v)));
            continue;
        }
        double c = std::clamp(r, s.lo, s.hi);
        double fc = s.eval(c);
        double d0 = std::max(std::abs(r - c), std::abs(v - fc));
        if (!std::isfinite(d0)) continue;
        // the optimum moves from c towards the side where f meets v
        double a = c, b = v >= fc ? std::min(s.hi, c + d0) : std::max(s.lo, c - d0);
        auto gap = [&](double t) { return std::abs(t - r) - std::abs(v - s.eval(t)); };
        if (gap(b) <= 0.0) {
            best = std::min(best, std::max(std::abs(b - r), std::abs(v - s.eval(b))));
            continue;
        }
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (a + b);
            if (m == a || m == b) break;
            (gap(m) > 0.0 ? b : a) = m;
        }
        best = std::min(best, std::min(d0, std::max(std::abs(b - r), std::abs(v - s.eval(b)))));
    }
    return best;
}

bool MonotoneGraph::is_strictly_increasing_surjective() const {
    return segs_.size() == 1 && !segs_[0].is_point() && segs_[0].coef > 0.0;
}

}
