#include "cardio/ionic.hpp"

#include "cardio/errors.hpp"

#include <cmath>

namespace cardio {

std::string to_string(IonicModel kind) {
  switch (kind) {
    case IonicModel::FitzHughNagumo: return "FitzHughNagumo";
    case IonicModel::RogersMcCulloch: return "RogersMcCulloch";
    case IonicModel::AlievPanfilov: return "AlievPanfilov";
  }
  return "unknown";
}

IonicModel parse_ionic_model(const std::string& name) {
  if (name == "FitzHughNagumo" || name == "FHN" || name == "fhn") return IonicModel::FitzHughNagumo;
  if (name == "RogersMcCulloch" || name == "RM" || name == "rm") return IonicModel::RogersMcCulloch;
  if (name == "AlievPanfilov" || name == "AP" || name == "ap") return IonicModel::AlievPanfilov;
  throw ValidationError("model: unknown ionic model '" + name +
                        "' (expected FitzHughNagumo, RogersMcCulloch or AlievPanfilov)");
}

void IonicParams::validate() const {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("a: must lie in (0,1), got " + std::to_string(a));
  if (!(b > 0.0)) throw ValidationError("b: must be > 0, got " + std::to_string(b));
  if (!(kappa > 0.0)) throw ValidationError("kappa: must be > 0, got " + std::to_string(kappa));
  if (!(eps > 0.0)) throw ValidationError("eps: must be > 0, got " + std::to_string(eps));
}

double i_ion(const IonicParams& p, double phi, double w) {
  if (p.kind == IonicModel::FitzHughNagumo) return cubic(p.a, phi) + w;
  return p.b * cubic(p.a, phi) + phi * w;
}

double gating_source(const IonicParams& p, double phi) {
  if (p.kind == IonicModel::AlievPanfilov) return p.kappa * ((p.a + 1.0) * phi - phi * phi);
  return p.kappa * phi;
}

double gating_source_derivative(const IonicParams& p, double phi) {
  if (p.kind == IonicModel::AlievPanfilov) return p.kappa * (p.a + 1.0 - 2.0 * phi);
  return p.kappa;
}

double g_gate(const IonicParams& p, double phi, double w) { return p.eps * w - p.eps * gating_source(p, phi); }

Partials d_i_ion(const IonicParams& p, double phi, double w) {
  const double dcubic = 3.0 * phi * phi - 2.0 * (p.a + 1.0) * phi + p.a;
  if (p.kind == IonicModel::FitzHughNagumo) return {dcubic, 1.0};
  return {p.b * dcubic + w, phi};
}

Partials d_g(const IonicParams& p, double phi, double /*w*/) {
  return {-p.eps * gating_source_derivative(p, phi), p.eps};
}

double gating_exact_update(const IonicParams& p, double w_prev, std::pair<double, double> phi_samples,
                           double dt) {
  const double decay = std::exp(-p.eps * dt);
  const double gain = -std::expm1(-p.eps * dt);
  const double phi_bar = 0.5 * (phi_samples.first + phi_samples.second);
  return decay * w_prev + gain * gating_source(p, phi_bar);
}

}  // namespace cardio
