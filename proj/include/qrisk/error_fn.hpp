#pragma once

#include <cmath>

#include "qrisk/common.hpp"

namespace qrisk {

// Symmetric strictly convex error with e(0) = 0. Square uses t^2/2; the
// p-th power family uses |t|^p / [p(p-1)] for p in (2, inf), which makes
// e''(t) = |t|^{p-2}.
class ErrorFn {
  public:
    enum class Kind { square, ppower };

    static ErrorFn square() { return ErrorFn(Kind::square, 2.0); }

    static ErrorFn ppower(double p) {
        if (!(p > 2.0) || !std::isfinite(p)) throw invalid_input("ErrorFn: p must lie in (2, inf)");
        return ErrorFn(Kind::ppower, p);
    }

    Kind kind() const { return kind_; }
    double p() const { return p_; }

    double value(double t) const {
        if (kind_ == Kind::square) return 0.5 * t * t;
        return std::pow(std::abs(t), p_) / (p_ * (p_ - 1.0));
    }

    double deriv(double t) const {
        if (kind_ == Kind::square) return t;
        if (t == 0.0) return 0.0;
        return std::copysign(std::pow(std::abs(t), p_ - 1.0), t) / (p_ - 1.0);
    }

    double second(double t) const {
        if (kind_ == Kind::square) return 1.0;
        return std::pow(std::abs(t), p_ - 2.0);
    }

  private:
    ErrorFn(Kind k, double p) : kind_(k), p_(p) {}

    Kind kind_;
    double p_;
};

}  // namespace qrisk
