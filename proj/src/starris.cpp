#include "starsem/starris.hpp"

#include <string>

namespace starsem {

TransmissionConfig TransmissionConfig::from_phases(const Eigen::VectorXd& phases) {
  TransmissionConfig t;
  t.q = phases.unaryExpr([](double p) { return std::polar(1.0, p); });
  return t;
}

TransmissionConfig TransmissionConfig::flat(int n) {
  TransmissionConfig t;
  t.q = CVector::Ones(n);
  return t;
}

ReflectionConfig ReflectionConfig::all_active_phases(const Eigen::VectorXd& phases) {
  ReflectionConfig r;
  r.q = phases.unaryExpr([](double p) { return std::polar(1.0, p); });
  r.active = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(phases.size(), true);
  return r;
}

CascadedTerms cascaded_terms(const CVector& h, const CMatrix& H, const CVector& w_p, Side side) {
  if (h.size() != H.rows() || H.cols() != w_p.size())
    throw SurfaceError("cascaded_terms: dimension mismatch (h " + std::to_string(h.size()) +
                       ", H " + std::to_string(H.rows()) + "x" + std::to_string(H.cols()) +
                       ", w " + std::to_string(w_p.size()) + ")");
  CascadedTerms t;
  t.side = side;
  t.a = h.conjugate().cwiseProduct(H * w_p);
  return t;
}

Complex effective_coefficient(const TransmissionConfig& q, const CascadedTerms& terms) {
  if (q.q.size() != terms.a.size())
    throw SurfaceError("effective_coefficient: length mismatch");
  return (q.q.array() * terms.a.array()).sum();
}

Complex effective_coefficient(const ReflectionConfig& q, const CascadedTerms& terms) {
  if (q.q.size() != terms.a.size() || q.active.size() != terms.a.size())
    throw SurfaceError("effective_coefficient: length mismatch");
  Complex sum{0.0, 0.0};
  for (Eigen::Index n = 0; n < q.q.size(); ++n)
    if (q.active(n)) sum += q.q(n) * terms.a(n);
  return sum;
}

}  // namespace starsem
