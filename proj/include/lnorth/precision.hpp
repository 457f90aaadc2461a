#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace lnorth {

/// Binary floating point with `Bits` mantissa bits. Expression templates are
/// disabled so the type behaves like a plain value type in generic code.
template <unsigned Bits>
using Float = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<Bits, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

using Float128 = Float<128>;
using Float256 = Float<256>;
using Float512 = Float<512>;

/// Default working type for the coefficient pipeline.
using Real = Float256;

struct PrecisionConfig {
  int working_bits = 256;
  int quadrature_nodes = 64;

  void validate() const {
    if (working_bits < 64) {
      throw std::invalid_argument("working_bits must be >= 64, got " + std::to_string(working_bits));
    }
    if (quadrature_nodes < 1) {
      throw std::invalid_argument("quadrature_nodes must be >= 1, got " +
                                  std::to_string(quadrature_nodes));
    }
  }
};

template <class T>
constexpr int mantissa_bits() {
  return std::numeric_limits<T>::digits;
}

/// 2^{-(bits - slack)} for the mantissa width of T.
template <class T>
T precision_tolerance(int slack = 8) {
  using std::ldexp;
  return ldexp(T(1), -(mantissa_bits<T>() - slack));
}

template <class T>
T pi_v() {
  return boost::math::constants::pi<T>();
}

template <class T>
struct type_tag {
  using type = T;
};

/// Invokes `fn(type_tag<Float<B>>{})` with the smallest supported width
/// B >= `bits`. Supported widths: 128, 256, 512 (64 maps to 128).
template <class Fn>
decltype(auto) with_working_precision(int bits, Fn&& fn) {
  if (bits < 64) {
    throw std::invalid_argument("working_bits must be >= 64, got " + std::to_string(bits));
  }
  if (bits <= 128) return fn(type_tag<Float128>{});
  if (bits <= 256) return fn(type_tag<Float256>{});
  if (bits <= 512) return fn(type_tag<Float512>{});
  throw std::invalid_argument("working_bits above 512 is not supported, got " +
                              std::to_string(bits));
}

/// Neumaier-compensated accumulator.
template <class T>
class CompensatedSum {
 public:
  void add(const T& x) {
    using std::abs;
    T t = sum_ + x;
    if (abs(sum_) >= abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  T value() const { return sum_ + comp_; }

 private:
  T sum_ = T(0);
  T comp_ = T(0);
};

template <class T>
double to_double(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return static_cast<double>(x);
  } else {
    return x.template convert_to<double>();
  }
}

}  // namespace lnorth
