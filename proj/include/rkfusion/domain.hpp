#pragma once

#include <string>
#include <vector>

namespace rkfusion {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Union of closed intervals; pieces kept in insertion order.
class Domain {
  public:
    Domain() = default;
    explicit Domain(std::vector<Interval> pieces);

    const std::vector<Interval>& pieces() const { return pieces_; }
    bool empty() const { return pieces_.empty(); }
    bool contains(double x) const;
    double total_length() const;
    Interval hull() const;

    /// Uniform grid with points allocated to pieces proportionally to their
    /// length (at least two per piece, endpoints included).
    std::vector<double> grid(int total_points) const;

    static Domain hull_of(const Domain& a, const Domain& b);
    std::string to_string() const;

  private:
    std::vector<Interval> pieces_;
};

}  // namespace rkfusion
