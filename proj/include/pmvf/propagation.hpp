#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmvf/mean_value.hpp"

namespace pmvf {

// Discretized open set in (x, t), dimension 1: a bounding box plus a
// membership predicate (obstacles carve the box).
struct DomainGrid {
  Box box;
  int nx = 100;
  std::function<bool(const SpaceTimePoint&)> inside;  // defaults to box membership

  bool contains(const SpaceTimePoint& z) const {
    if (!box.contains(z)) return false;
    return inside ? inside(z) : true;
  }
};

// Attainable set by backward-in-time admissible curves, discretized with
// speed cap v_max and time step delta: from (x, t) one reaches (x', t-delta)
// when |x' - x| <= v_max delta and the segment stays inside the domain.
struct AttainableRegion {
  SpaceTimePoint source;
  double v_max = 1.0, delta = 0.01;
  Box box;
  int nx = 0, rows = 0;
  std::vector<std::uint8_t> mask;  // rows x (nx+1)
  std::vector<int> parent;         // column in the previous row, -1 if none

  bool reachable(int row, int ix) const { return mask[static_cast<std::size_t>(row) * (nx + 1) + ix] != 0; }
  SpaceTimePoint node(int row, int ix) const;
  std::size_t count() const;
  // Set inclusion against another mask on the same grid.
  bool subset_of(const AttainableRegion& other) const;
  // The stored discrete admissible curve from the source to a masked node.
  struct AdmissibleCurve curve_to(int row, int ix) const;
};

AttainableRegion reachable_set(const DomainGrid& domain, const SpaceTimePoint& z0, double v_max, double delta);

// Discrete admissible curve: unit backward-time speed, breakpoints at the
// BFS rows, finite discrete L^2 spatial speed.
struct AdmissibleCurve {
  std::vector<SpaceTimePoint> breakpoints;  // gamma(s_i), s_i = i * delta
  double delta = 0.0;
  // Discrete squared L^2 norm of the spatial speed, sum |dx|^2 / delta.
  double speed_l2_squared() const;
};

enum class MaxPrincipleMode { InteriorMax, SignedSolution };

struct MaxPrincipleReport {
  bool preconditions_hold = false;
  std::string precondition_failure;  // empty when preconditions hold
  double worst_u_deviation = 0.0;    // max |u - u(z0)| (or |u|) on the mask
  double worst_f_deviation = 0.0;    // max |f| on the mask
  bool conclusion_holds = false;     // deviations within tolerance
  std::size_t checked = 0;
};

// Report-style verification of the strong maximum principle on the
// reachable mask. InteriorMax mode: c = 0, u(z0) the sampled max, f >= 0;
// expects u constant and f = 0 on the mask. SignedSolution mode: u <= 0,
// f >= 0, u(z0) = 0; expects u = 0 and f = 0 on the mask.
MaxPrincipleReport check_strong_max_principle(const SolutionField& u, const SolutionField* f,
                                              const ParabolicOperator& op, const AttainableRegion& region,
                                              const DomainGrid& domain, MaxPrincipleMode mode, double tol);

struct PropagationStepReport {
  double deficit = 0.0;          // (1/rho^N) int M (u - u(z1))
  double f_term = 0.0;           // int f (1/rho^N - Gamma) over Omega_rho
  double max_deviation = 0.0;    // sup |M (u - u(z1))| on sampled interior points
  double deviating_fraction = 0.0;
  bool deficit_nonpositive = false;
};

// The mean-value engine of the propagation argument at center z1, radius rho
// (b = c = 0 scenarios): the deficit is <= 0 when u(z1) dominates, and = 0
// exactly when u is constant.
PropagationStepReport mvf_propagation_step(const SolutionField& u, const SolutionField* f,
                                           const ParabolicOperator& op, const KernelEvaluator& ev, double rho,
                                           const MeanValueConfig& cfg);

}  // namespace pmvf
