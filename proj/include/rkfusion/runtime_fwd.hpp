#pragma once

#include <string>

namespace rkfusion {

/// Regularization schedule: constant c, linear c*n, or geometric c*r^n.
struct Schedule {
    enum class Kind { Constant, Linear, Geometric };
    Kind kind = Kind::Constant;
    double base = 1.0;
    double ratio = 2.0;  // geometric only

    double value(int n) const;
    std::string to_string() const;

    static Schedule constant(double c) { return {Kind::Constant, c, 1.0}; }
    static Schedule linear(double c) { return {Kind::Linear, c, 1.0}; }
    static Schedule geometric(double c, double r) { return {Kind::Geometric, c, r}; }
};

}  // namespace rkfusion
