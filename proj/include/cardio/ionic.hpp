#pragma once

#include <string>
#include <utility>

namespace cardio {

enum class IonicModel { FitzHughNagumo, RogersMcCulloch, AlievPanfilov };

std::string to_string(IonicModel kind);
IonicModel parse_ionic_model(const std::string& name);

/// Parameters of the two-variable ionic models. `b` is ignored by
/// FitzHugh-Nagumo, which uses b = 1 and an additive recovery term.
struct IonicParams {
  IonicModel kind = IonicModel::RogersMcCulloch;
  double a = 0.13;
  double b = 1.0;
  double kappa = 4.0;
  double eps = 0.01;

  /// Throws ValidationError naming the offending parameter.
  void validate() const;
  bool operator==(const IonicParams&) const = default;
};

struct Partials {
  double d_phi;
  double d_w;
};

/// Ionic current I_ion(phi, w).
double i_ion(const IonicParams& p, double phi, double w);
/// Gating right-hand side G(phi, w), with dw/dt + G = 0.
double g_gate(const IonicParams& p, double phi, double w);
Partials d_i_ion(const IonicParams& p, double phi, double w);
Partials d_g(const IonicParams& p, double phi, double w);

/// Source s(phi) of the linear gating ODE dw/dt + eps w = eps s(phi).
double gating_source(const IonicParams& p, double phi);
double gating_source_derivative(const IonicParams& p, double phi);

/// Exponential-integrator gating step: exact for phi constant over the step;
/// the source is evaluated at the trapezoid mean of the two phi samples.
double gating_exact_update(const IonicParams& p, double w_prev, std::pair<double, double> phi_samples,
                           double dt);

/// The cubic phi(phi - a)(phi - 1) = phi^3 - (a+1) phi^2 + a phi.
inline double cubic(double a, double phi) { return phi * (phi - a) * (phi - 1.0); }

}  // namespace cardio
