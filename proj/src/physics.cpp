#include "nlch/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlch/errors.hpp"

namespace nlch {

std::string to_string(PotentialFamily) { return "quartic_double_well"; }

std::string to_string(ProliferationFamily f) {
  return f == ProliferationFamily::smoothed_ramp ? "smoothed_ramp" : "constant_zero";
}

std::string to_string(DistributionFamily f) {
  return f == DistributionFamily::same_as_P ? "same_as_P" : "constant_one";
}

PotentialFamily potential_from_string(const std::string& s) {
  if (s == "quartic_double_well") return PotentialFamily::quartic_double_well;
  throw ValidationError("unknown potential '" + s + "'");
}

ProliferationFamily proliferation_from_string(const std::string& s) {
  if (s == "smoothed_ramp") return ProliferationFamily::smoothed_ramp;
  if (s == "constant_zero") return ProliferationFamily::constant_zero;
  throw ValidationError("unknown proliferation function '" + s + "'");
}

DistributionFamily distribution_from_string(const std::string& s) {
  if (s == "same_as_P") return DistributionFamily::same_as_P;
  if (s == "constant_one") return DistributionFamily::constant_one;
  throw ValidationError("unknown distribution function '" + s + "'");
}

double F_eval(PotentialFamily, double s, int order) {
  switch (order) {
    case 0: {
      const double d = 1.0 - s * s;
      return 0.25 * d * d;
    }
    case 1: return s * s * s - s;
    case 2: return 3.0 * s * s - 1.0;
    case 3: return 6.0 * s;
    default: throw ValidationError("F_eval: order must be in 0..3");
  }
}

double P_eval(ProliferationFamily f, double s, int order) {
  if (order < 0 || order > 2) throw ValidationError("P_eval: order must be in 0..2");
  if (f == ProliferationFamily::constant_zero) return 0.0;
  const double t = 0.5 * (s + 1.0);
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return order == 0 ? 1.0 : 0.0;
  switch (order) {
    case 0: return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    case 1: return 0.5 * 30.0 * t * t * (t - 1.0) * (t - 1.0);
    default: return 0.25 * 60.0 * t * (t - 1.0) * (2.0 * t - 1.0);
  }
}

double h_eval(const ModelParams& params, double s, int order) {
  if (params.distribution == DistributionFamily::constant_one) {
    if (order < 0 || order > 2) throw ValidationError("h_eval: order must be in 0..2");
    return order == 0 ? 1.0 : 0.0;
  }
  return P_eval(ProliferationFamily::smoothed_ramp, s, order);
}

double ellipticity_margin(const ModelParams& params, const KernelData& k) {
  const auto vals = k.a_field.values();
  const double a_min = *std::min_element(vals.begin(), vals.end());
  // min over s of F''(s) = 3 s^2 - 1 is -1 at s = 0.
  return -params.A + params.B * a_min;
}

void validate_hypotheses(const ModelParams& p, const KernelData& k) {
  auto fail = [](const std::string& msg, double margin) { throw HypothesisViolation(msg, margin); };
  const double c0 = ellipticity_margin(p, k);
  if (!(c0 > p.chi * p.chi)) {
    std::ostringstream os;
    os.precision(6);
    os << "hypothesis violated: ellipticity margin c0 <= chi^2 (c0 = -A + B min(a) = " << c0
       << ", chi^2 = " << p.chi * p.chi << ")";
    fail(os.str(), c0 - p.chi * p.chi);
  }
  if (!(p.A > 0.0)) fail("hypothesis violated: A > 0 (A = " + std::to_string(p.A) + ")", p.A);
  if (!(p.B > 0.0)) fail("hypothesis violated: B > 0 (B = " + std::to_string(p.B) + ")", p.B);
  if (!(p.chi >= 0.0)) fail("hypothesis violated: chi >= 0", p.chi);
  if (!(p.lambda_s >= 0.0)) fail("stabilisation lambda_s must be >= 0", p.lambda_s);
}

}  // namespace nlch
