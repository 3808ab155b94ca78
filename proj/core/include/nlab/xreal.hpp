#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "nlab/common.hpp"

namespace nlab {

// Scalar in [0, +inf]. Exchange rates live here: 0 means the quoted currency
// is worthless in the base currency, +inf means the base currency is worthless
// in the quoted one. The one arithmetic landmine is 0 * inf, which is left
// undefined and throws; every algorithm that multiplies rates must either
// know the product is defined or catch/skip.
class XReal {
 public:
  XReal() : v_(0.0) {}

  explicit XReal(double v) : v_(v) {
    if (std::isnan(v) || v < 0.0)
      throw std::invalid_argument("XReal: value must be in [0, inf], got " +
                                  std::to_string(v));
  }

  static XReal inf() { return XReal(std::numeric_limits<double>::infinity()); }

  bool is_inf() const { return std::isinf(v_); }
  bool is_finite() const { return !std::isinf(v_); }
  bool is_zero() const { return v_ == 0.0; }

  // Raw double, +inf included.
  double raw() const { return v_; }

  // Finite value or throw.
  double finite() const {
    if (is_inf()) throw std::domain_error("XReal: expected finite value");
    return v_;
  }

  // 1/0 = inf, 1/inf = 0.
  XReal reciprocal() const {
    if (is_zero()) return inf();
    if (is_inf()) return XReal(0.0);
    return XReal(1.0 / v_);
  }

  friend XReal operator*(XReal a, XReal b) {
    if ((a.is_zero() && b.is_inf()) || (a.is_inf() && b.is_zero()))
      throw UndefinedProductError("0 * inf is undefined");
    if (a.is_inf() || b.is_inf()) return inf();
    return XReal(a.v_ * b.v_);
  }

  friend XReal operator+(XReal a, XReal b) {
    if (a.is_inf() || b.is_inf()) return inf();
    return XReal(a.v_ + b.v_);
  }

  friend bool operator==(XReal a, XReal b) { return a.v_ == b.v_; }
  friend bool operator!=(XReal a, XReal b) { return a.v_ != b.v_; }
  friend bool operator<(XReal a, XReal b) { return a.v_ < b.v_; }
  friend bool operator<=(XReal a, XReal b) { return a.v_ <= b.v_; }
  friend bool operator>(XReal a, XReal b) { return a.v_ > b.v_; }
  friend bool operator>=(XReal a, XReal b) { return a.v_ >= b.v_; }

  // True when the product with `other` would be undefined.
  bool product_undefined_with(XReal other) const {
    return (is_zero() && other.is_inf()) || (is_inf() && other.is_zero());
  }

 private:
  double v_;
};

}  // namespace nlab
