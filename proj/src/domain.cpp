#include "rkfusion/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rkfusion {

Domain::Domain(std::vector<Interval> pieces) : pieces_(std::move(pieces)) {
    for (const auto& p : pieces_) {
        if (!(p.lo <= p.hi)) throw std::invalid_argument("interval with lo > hi");
    }
}

bool Domain::contains(double x) const {
    return std::any_of(pieces_.begin(), pieces_.end(),
                       [x](const Interval& p) { return p.contains(x); });
}

double Domain::total_length() const {
    double len = 0.0;
    for (const auto& p : pieces_) len += p.length();
    return len;
}

Interval Domain::hull() const {
    if (pieces_.empty()) throw std::logic_error("hull of empty domain");
    Interval h = pieces_.front();
    for (const auto& p : pieces_) {
        h.lo = std::min(h.lo, p.lo);
        h.hi = std::max(h.hi, p.hi);
    }
    return h;
}

std::vector<double> Domain::grid(int total_points) const {
    std::vector<double> pts;
    if (pieces_.empty() || total_points <= 0) return pts;
    const double len = total_length();
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const Interval& p = pieces_[i];
        int n;
        if (len <= 0.0) {
            n = 1;  // degenerate points
        } else {
            n = std::max(2, static_cast<int>(std::lround(total_points * p.length() / len)));
        }
        for (int k = 0; k < n; ++k) {
            const double t = (n == 1) ? 0.0 : static_cast<double>(k) / (n - 1);
            pts.push_back(p.lo + t * p.length());
        }
    }
    return pts;
}

Domain Domain::hull_of(const Domain& a, const Domain& b) {
    Interval ha = a.hull(), hb = b.hull();
    return Domain({Interval{std::min(ha.lo, hb.lo), std::max(ha.hi, hb.hi)}});
}

std::string Domain::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (i) os << " | ";
        os << pieces_[i].lo << ".." << pieces_[i].hi;
    }
    return os.str();
}

}  // namespace rkfusion
