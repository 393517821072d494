#include "defectlab/grassmann.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace defectlab {

namespace {

// Sign of e_A ^ e_B for disjoint masks: each generator in B passes over the
// generators of A above it.
int wedge_sign(std::uint32_t a, std::uint32_t b) {
  int swaps = 0;
  while (b) {
    const int j = std::countr_zero(b);
    swaps += std::popcount(a >> (j + 1));
    b &= b - 1;
  }
  return (swaps & 1) ? -1 : 1;
}

}  // namespace

GrassmannContext::GrassmannContext(int num_generators,
                                   std::vector<std::string> labels,
                                   double prune_threshold)
    : n_(num_generators), labels_(std::move(labels)), prune_(prune_threshold) {
  if (n_ < 0 || n_ > 30)
    throw std::invalid_argument("GrassmannContext: generator count out of range");
  if (prune_ < 0.0)
    throw std::invalid_argument("GrassmannContext: negative prune threshold");
  for (int k = static_cast<int>(labels_.size()); k < n_; ++k)
    labels_.push_back("g" + std::to_string(k + 1));
}

ContextPtr GrassmannContext::make(int num_generators,
                                  std::vector<std::string> labels,
                                  double prune_threshold) {
  return std::make_shared<const GrassmannContext>(
      num_generators, std::move(labels), prune_threshold);
}

const std::string& GrassmannContext::label(int k) const {
  if (k < 1 || k > n_)
    throw std::invalid_argument("GrassmannContext: label index out of range");
  return labels_[k - 1];
}

GrassmannElement GrassmannElement::zero(ContextPtr ctx) {
  return GrassmannElement(std::move(ctx), {});
}

GrassmannElement GrassmannElement::scalar(ContextPtr ctx, Complex c) {
  GrassmannElement e(std::move(ctx), {{0u, c}});
  e.prune();
  return e;
}

GrassmannElement GrassmannElement::generator(ContextPtr ctx, int k) {
  if (!ctx) throw std::invalid_argument("generator: null context");
  if (k < 1 || k > ctx->num_generators())
    throw std::invalid_argument("generator: index out of range");
  return GrassmannElement(std::move(ctx),
                          {{std::uint32_t{1} << (k - 1), Complex(1.0, 0.0)}});
}

GrassmannElement GrassmannElement::from_terms(
    ContextPtr ctx, std::vector<std::pair<std::uint32_t, Complex>> terms) {
  if (!ctx) throw std::invalid_argument("from_terms: null context");
  const std::uint32_t top = (ctx->num_generators() >= 32)
                                ? ~std::uint32_t{0}
                                : (std::uint32_t{1} << ctx->num_generators());
  for (auto& [m, c] : terms)
    if (m >= top) throw std::invalid_argument("from_terms: mask out of range");
  std::sort(terms.begin(), terms.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  // combine duplicates
  std::vector<std::pair<std::uint32_t, Complex>> out;
  for (const auto& t : terms) {
    if (!out.empty() && out.back().first == t.first)
      out.back().second += t.second;
    else
      out.push_back(t);
  }
  GrassmannElement e(std::move(ctx), std::move(out));
  e.prune();
  return e;
}

Complex GrassmannElement::body() const { return coefficient(0u); }

GrassmannElement GrassmannElement::soul() const {
  std::vector<std::pair<std::uint32_t, Complex>> t;
  t.reserve(terms_.size());
  for (const auto& [m, c] : terms_)
    if (m != 0u) t.emplace_back(m, c);
  return GrassmannElement(ctx_, std::move(t));
}

Complex GrassmannElement::coefficient(std::uint32_t mask) const {
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), mask,
      [](const auto& t, std::uint32_t m) { return t.first < m; });
  if (it != terms_.end() && it->first == mask) return it->second;
  return Complex(0.0, 0.0);
}

Parity GrassmannElement::parity() const {
  bool has_even = false, has_odd = false;
  for (const auto& [m, c] : terms_)
    ((std::popcount(m) & 1) ? has_odd : has_even) = true;
  if (has_even && has_odd) return Parity::Mixed;
  if (has_odd) return Parity::Odd;
  return Parity::Even;
}

GrassmannElement GrassmannElement::derivative(int k) const {
  if (!ctx_) return {};
  if (k < 1 || k > ctx_->num_generators())
    throw std::invalid_argument("derivative: generator index out of range");
  const std::uint32_t bit = std::uint32_t{1} << (k - 1);
  const std::uint32_t below = bit - 1;
  std::vector<std::pair<std::uint32_t, Complex>> t;
  for (const auto& [m, c] : terms_) {
    if (!(m & bit)) continue;
    const int sgn = (std::popcount(m & below) & 1) ? -1 : 1;
    t.emplace_back(m & ~bit, static_cast<double>(sgn) * c);
  }
  std::sort(t.begin(), t.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  GrassmannElement e(ctx_, std::move(t));
  e.prune();
  return e;
}

double GrassmannElement::max_abs() const {
  double m = 0.0;
  for (const auto& [mask, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

GrassmannElement GrassmannElement::operator-() const {
  auto t = terms_;
  for (auto& [m, c] : t) c = -c;
  return GrassmannElement(ctx_, std::move(t));
}

const ContextPtr& GrassmannElement::join_context(const GrassmannElement& a,
                                                 const GrassmannElement& b) {
  if (a.ctx_ && b.ctx_) {
    if (a.ctx_ != b.ctx_)
      throw ContextMismatchError("Grassmann operands from different contexts");
    return a.ctx_;
  }
  return a.ctx_ ? a.ctx_ : b.ctx_;
}

GrassmannElement& GrassmannElement::operator+=(const GrassmannElement& o) {
  ContextPtr ctx = join_context(*this, o);
  std::vector<std::pair<std::uint32_t, Complex>> out;
  out.reserve(terms_.size() + o.terms_.size());
  std::size_t i = 0, j = 0;
  while (i < terms_.size() || j < o.terms_.size()) {
    if (j == o.terms_.size() ||
        (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
      out.push_back(terms_[i++]);
    } else if (i == terms_.size() || o.terms_[j].first < terms_[i].first) {
      out.push_back(o.terms_[j++]);
    } else {
      out.emplace_back(terms_[i].first, terms_[i].second + o.terms_[j].second);
      ++i;
      ++j;
    }
  }
  ctx_ = std::move(ctx);
  terms_ = std::move(out);
  prune();
  return *this;
}

GrassmannElement& GrassmannElement::operator-=(const GrassmannElement& o) {
  return *this += -o;
}

GrassmannElement operator*(const GrassmannElement& a,
                           const GrassmannElement& b) {
  ContextPtr ctx = GrassmannElement::join_context(a, b);
  std::vector<std::pair<std::uint32_t, Complex>> prod;
  prod.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      if (ma & mb) continue;  // repeated generator
      const int sgn = wedge_sign(ma, mb);
      prod.emplace_back(ma | mb, static_cast<double>(sgn) * (ca * cb));
    }
  }
  std::sort(prod.begin(), prod.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::pair<std::uint32_t, Complex>> out;
  for (const auto& t : prod) {
    if (!out.empty() && out.back().first == t.first)
      out.back().second += t.second;
    else
      out.push_back(t);
  }
  GrassmannElement e(std::move(ctx), std::move(out));
  e.prune();
  return e;
}

GrassmannElement operator*(const GrassmannElement& a, Complex s) {
  auto t = a.terms_;
  for (auto& [m, c] : t) c *= s;
  GrassmannElement e(a.ctx_, std::move(t));
  e.prune();
  return e;
}

GrassmannElement operator+(const GrassmannElement& a, Complex s) {
  return a + GrassmannElement::scalar(a.ctx_, s);
}

void GrassmannElement::prune() {
  const double thr = ctx_ ? ctx_->prune_threshold() : 0.0;
  std::erase_if(terms_, [thr](const auto& t) {
    const Complex& c = t.second;
    if (c == Complex(0.0, 0.0)) return true;
    return thr > 0.0 && std::abs(c) <= thr;
  });
}

nlohmann::json GrassmannElement::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [m, c] : terms_) {
    nlohmann::json idx = nlohmann::json::array();
    std::uint32_t mm = m;
    while (mm) {
      idx.push_back(std::countr_zero(mm) + 1);
      mm &= mm - 1;
    }
    arr.push_back({{"multi_index", idx}, {"re", c.real()}, {"im", c.imag()}});
  }
  return arr;
}

GrassmannElement gr_element_from_json(const ContextPtr& ctx,
                                      const nlohmann::json& j) {
  std::vector<std::pair<std::uint32_t, Complex>> terms;
  for (const auto& t : j) {
    std::uint32_t m = 0;
    for (const auto& k : t.at("multi_index"))
      m |= std::uint32_t{1} << (k.get<int>() - 1);
    terms.emplace_back(
        m, Complex(t.at("re").get<double>(), t.at("im").get<double>()));
  }
  return GrassmannElement::from_terms(ctx, std::move(terms));
}

GrassmannElement gr_analytic(AnalyticFn f, const GrassmannElement& a) {
  if (!a.is_even())
    throw ParityError("gr_analytic: argument must be even");
  const Complex b = a.body();
  const GrassmannElement s = a.soul();

  auto deriv = [&](int k) -> Complex {
    switch (f) {
      case AnalyticFn::Exp:
        return std::exp(b);
      case AnalyticFn::Sinh:
        return (k % 2 == 0) ? std::sinh(b) : std::cosh(b);
      case AnalyticFn::Cosh:
        return (k % 2 == 0) ? std::cosh(b) : std::sinh(b);
      case AnalyticFn::Log: {
        if (k == 0) return std::log(b);
        // d^k log = (-1)^{k-1} (k-1)! / b^k
        Complex v = Complex(1.0, 0.0);
        for (int i = 1; i < k; ++i) v *= static_cast<double>(i);
        v /= std::pow(b, static_cast<double>(k));
        return ((k - 1) % 2 == 0) ? v : -v;
      }
    }
    return {};
  };

  if (f == AnalyticFn::Log && b == Complex(0.0, 0.0))
    throw std::domain_error("gr_analytic: log of element with zero body");

  GrassmannElement result = GrassmannElement::scalar(a.context(), deriv(0));
  if (s.is_zero()) return result;

  GrassmannElement spow = s;  // s^k
  double factorial = 1.0;
  const int n = a.context() ? a.context()->num_generators() : 0;
  for (int k = 1; k <= n; ++k) {
    factorial *= static_cast<double>(k);
    if (spow.is_zero()) break;
    result += spow * (deriv(k) / factorial);
    if (k < n) spow = spow * s;
  }
  return result;
}

GrassmannElement gr_exp(const GrassmannElement& a) {
  return gr_analytic(AnalyticFn::Exp, a);
}
GrassmannElement gr_sinh(const GrassmannElement& a) {
  return gr_analytic(AnalyticFn::Sinh, a);
}
GrassmannElement gr_cosh(const GrassmannElement& a) {
  return gr_analytic(AnalyticFn::Cosh, a);
}
GrassmannElement gr_log(const GrassmannElement& a) {
  return gr_analytic(AnalyticFn::Log, a);
}

}  // namespace defectlab
