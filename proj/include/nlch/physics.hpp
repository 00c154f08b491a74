#pragma once

#include <string>

#include "nlch/kernels.hpp"

namespace nlch {

enum class PotentialFamily { quartic_double_well };
enum class ProliferationFamily { smoothed_ramp, constant_zero };
enum class DistributionFamily { same_as_P, constant_one };

std::string to_string(PotentialFamily f);
std::string to_string(ProliferationFamily f);
std::string to_string(DistributionFamily f);
PotentialFamily potential_from_string(const std::string& s);
ProliferationFamily proliferation_from_string(const std::string& s);
DistributionFamily distribution_from_string(const std::string& s);

struct ModelParams {
  double A = 1.0;
  double B = 4.0;
  double chi = 0.0;
  PotentialFamily potential = PotentialFamily::quartic_double_well;
  ProliferationFamily proliferation = ProliferationFamily::smoothed_ramp;
  DistributionFamily distribution = DistributionFamily::same_as_P;
  /// Linear stabilisation of the semi-implicit scheme.
  double lambda_s = 2.0;

  bool operator==(const ModelParams&) const = default;
};

/// F(s) = (1 - s^2)^2 / 4 and its derivatives up to order 3.
double F_eval(PotentialFamily f, double s, int order);

/// C2 proliferation ramp: quintic smoothstep of t = (s + 1) / 2 clamped to
/// [0, 1], so P = 0 below -1, P = 1 above 1. Derivatives up to order 2.
double P_eval(ProliferationFamily f, double s, int order);

/// Distribution of the radiotherapy control, derivatives up to order 2.
double h_eval(const ModelParams& params, double s, int order);

/// Lower bound of A F''(s) + B a(x) over all s and cells: -A + B min(a).
double ellipticity_margin(const ModelParams& params, const KernelData& k);

/// Checks A, B > 0, chi >= 0, lambda_s >= 0 and margin > chi^2. Throws
/// HypothesisViolation quoting the failed inequality.
void validate_hypotheses(const ModelParams& params, const KernelData& k);

}  // namespace nlch
