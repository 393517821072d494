#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace defectlab {

using Complex = std::complex<double>;

class GrassmannContext;
using ContextPtr = std::shared_ptr<const GrassmannContext>;

struct ContextMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ParityError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Fixed set of anticommuting generators; every element of a computation
/// shares one context. Mixing contexts is an error, not an embedding.
class GrassmannContext {
 public:
  explicit GrassmannContext(int num_generators,
                            std::vector<std::string> labels = {},
                            double prune_threshold = 0.0);

  static ContextPtr make(int num_generators,
                         std::vector<std::string> labels = {},
                         double prune_threshold = 0.0);

  int num_generators() const { return n_; }
  const std::string& label(int k) const;  // k in {1..N}
  double prune_threshold() const { return prune_; }

 private:
  int n_;
  std::vector<std::string> labels_;
  double prune_;
};

enum class Parity { Even, Odd, Mixed };

/// Element of the exterior algebra over the context generators, stored as a
/// sorted sparse list of (bitmask multi-index, complex coefficient) terms.
/// Values are immutable after construction and safe to share across threads.
class GrassmannElement {
 public:
  GrassmannElement() = default;  // context-free zero; adopts a context on use

  static GrassmannElement zero(ContextPtr ctx);
  static GrassmannElement scalar(ContextPtr ctx, Complex c);
  static GrassmannElement generator(ContextPtr ctx, int k);  // k in {1..N}
  static GrassmannElement from_terms(
      ContextPtr ctx, std::vector<std::pair<std::uint32_t, Complex>> terms);

  const ContextPtr& context() const { return ctx_; }
  bool has_context() const { return ctx_ != nullptr; }

  bool is_zero() const { return terms_.empty(); }
  Complex body() const;
  GrassmannElement soul() const;
  Complex coefficient(std::uint32_t mask) const;
  const std::vector<std::pair<std::uint32_t, Complex>>& terms() const {
    return terms_;
  }

  Parity parity() const;  // zero counts as even
  bool is_even() const { return parity() == Parity::Even; }
  bool is_odd() const { return parity() == Parity::Odd; }

  /// Left derivative with respect to generator k (1-based).
  GrassmannElement derivative(int k) const;

  double max_abs() const;  // Chebyshev norm over basis coefficients

  GrassmannElement operator-() const;
  GrassmannElement& operator+=(const GrassmannElement& o);
  GrassmannElement& operator-=(const GrassmannElement& o);

  friend GrassmannElement operator+(GrassmannElement a,
                                    const GrassmannElement& b) {
    a += b;
    return a;
  }
  friend GrassmannElement operator-(GrassmannElement a,
                                    const GrassmannElement& b) {
    a -= b;
    return a;
  }
  friend GrassmannElement operator*(const GrassmannElement& a,
                                    const GrassmannElement& b);
  friend GrassmannElement operator*(const GrassmannElement& a, Complex s);
  friend GrassmannElement operator*(Complex s, const GrassmannElement& a) {
    return a * s;
  }
  friend GrassmannElement operator*(const GrassmannElement& a, double s) {
    return a * Complex(s, 0.0);
  }
  friend GrassmannElement operator*(double s, const GrassmannElement& a) {
    return a * Complex(s, 0.0);
  }
  friend GrassmannElement operator/(const GrassmannElement& a, Complex s) {
    return a * (Complex(1.0, 0.0) / s);
  }
  friend GrassmannElement operator/(const GrassmannElement& a, double s) {
    return a * Complex(1.0 / s, 0.0);
  }
  friend GrassmannElement operator+(const GrassmannElement& a, Complex s);
  friend GrassmannElement operator+(Complex s, const GrassmannElement& a) {
    return a + s;
  }
  friend GrassmannElement operator-(const GrassmannElement& a, Complex s) {
    return a + (-s);
  }
  friend GrassmannElement operator-(Complex s, const GrassmannElement& a) {
    return (-a) + s;
  }

  bool operator==(const GrassmannElement& o) const {
    return terms_ == o.terms_;
  }

  nlohmann::json to_json() const;

 private:
  GrassmannElement(ContextPtr ctx,
                   std::vector<std::pair<std::uint32_t, Complex>> terms)
      : ctx_(std::move(ctx)), terms_(std::move(terms)) {}

  void prune();
  static const ContextPtr& join_context(const GrassmannElement& a,
                                        const GrassmannElement& b);

  ContextPtr ctx_;
  std::vector<std::pair<std::uint32_t, Complex>> terms_;  // sorted by mask
};

enum class AnalyticFn { Exp, Sinh, Cosh, Log };

/// f(body) plus the Taylor series of f applied to the nilpotent soul; the
/// series terminates exactly. Requires an even argument.
GrassmannElement gr_analytic(AnalyticFn f, const GrassmannElement& a);

GrassmannElement gr_exp(const GrassmannElement& a);
GrassmannElement gr_sinh(const GrassmannElement& a);
GrassmannElement gr_cosh(const GrassmannElement& a);
GrassmannElement gr_log(const GrassmannElement& a);

GrassmannElement gr_element_from_json(const ContextPtr& ctx,
                                      const nlohmann::json& j);

}  // namespace defectlab
