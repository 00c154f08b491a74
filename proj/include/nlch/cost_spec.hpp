#pragma once

#include <vector>

#include "nlch/geometry.hpp"

namespace nlch {

/// Weights and targets of the tracking cost
///   1/2 aO |phi(T) - phi_O|^2 + 1/2 aQ sum_n dt |phi_n - phi_Q,n|^2
/// + 1/2 bO |sigma(T) - sigma_O|^2 + 1/2 bQ sum_n dt |sigma_n - sigma_Q,n|^2
/// + 1/2 au sum_n dt |u_n|^2 + 1/2 bv sum_n dt |v_n|^2
/// Running terms use the left-endpoint rule, n = 0 .. steps - 1.
struct CostSpec {
  double alpha_Omega = 0.0;
  double alpha_Q = 0.0;
  double beta_Omega = 0.0;
  double beta_Q = 0.0;
  double alpha_u = 0.0;
  double beta_v = 0.0;
  Field phi_Omega;
  Field sigma_Omega;
  std::vector<Field> phi_Q;    // one slice per step
  std::vector<Field> sigma_Q;

  bool all_weights_zero() const {
    return alpha_Omega == 0.0 && alpha_Q == 0.0 && beta_Omega == 0.0 && beta_Q == 0.0 &&
           alpha_u == 0.0 && beta_v == 0.0;
  }
  /// Cost with every weight multiplied by s.
  CostSpec scaled(double s) const;
};

/// Checks weights >= 0, targets finite and aligned with (grid, steps).
/// With require_nonzero, rejects the all-zero weight vector.
void validate(const CostSpec& spec, const Grid& grid, int steps, bool require_nonzero);

/// Targets identically zero on the given grid with all weights zero.
CostSpec zero_cost(const Grid& grid, int steps);

}  // namespace nlch
