#ifndef TACFIT_TAC_HPP
#define TACFIT_TAC_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tacfit/observations.hpp"

namespace tacfit {

/// Indices i in [1, m-1] where the sign of the forward difference changes,
/// with sign(0) = 0 counted as its own sign so plateaus register as changes.
std::vector<std::size_t> sign_change_indices(std::span<const double> values);

/// Indices whose value is within tie_tol*(1+|min|) of the minimum.
std::vector<std::size_t> argmin_set(std::span<const double> values, double tie_tol);

/// Configuration of the mesh-refinement minimizer.
struct TacConfig {
  std::vector<Interval> axes;  // one search interval per dimension
  int initial_divisions = 10;  // n_0, mesh divisions per axis
  double alpha = 1e-9;         // stop tolerance on the located minimizer
  double tie_tol = 1e-12;      // relative tolerance for the argmin set J;
                               // 0 reproduces exact-equality ties
  int max_iterations = 200;
  long long densify_cap = 0;   // max divisions after doublings; 0 = 2^14 * n_0
  long long grid_budget = 0;   // d > 1: max grid tuples per pass; 0 = 2^20
  // Axes whose values must stay ascending (e.g. rate pairs); the grid is
  // restricted to the ordered region.
  std::vector<std::vector<std::size_t>> ordered_groups;
  int threads = 1;

  long long effective_densify_cap() const noexcept {
    return densify_cap > 0 ? densify_cap
                           : (1LL << 14) * static_cast<long long>(initial_divisions);
  }
  long long effective_grid_budget() const noexcept {
    return grid_budget > 0 ? grid_budget : (1LL << 20);
  }
  void validate() const;
};

/// One sampling pass of the loop. `branches` holds one letter per axis:
/// 'D' sign-change densification (C1), 'P' argmin-plateau bracketing (C2),
/// 'R' single-argmin refinement, 'S' refinement that already met the stop
/// tolerance.
struct TacIteration {
  std::vector<Interval> bracket;
  std::vector<int> mesh;
  std::vector<double> argmin;
  double min_value = 0.0;
  std::string branches;
};

struct TacResult {
  std::vector<double> minimizer;
  double objective_at_min = 0.0;
  std::vector<Interval> final_bracket;
  int iterations = 0;
  long long evaluations = 0;
  std::vector<TacIteration> trace;
};

/// Locates the minimizer of a scalar objective on an interval by repeated
/// mesh sampling: sign-change analysis densifies the mesh around suspected
/// multimodality, argmin plateaus are bracketed whole, and a unique argmin
/// shrinks the bracket to its two neighboring cells until consecutive
/// minimizers agree within alpha on a mesh whose cells resolve alpha.
/// Throws Error(BudgetExceeded) when the iteration or densification budget
/// runs out and Error(ObjectiveError) when the evaluator fails at a mesh
/// point.
TacResult tac_minimize_1d(const std::function<double(double)>& objective,
                          const TacConfig& cfg);

/// Tensor-grid extension of the 1-d loop: the full grid (restricted to the
/// ordered region) is sampled, then the 1-d branch logic is applied to each
/// axis-aligned slice through the grid argmin. Stops when every axis meets
/// the alpha condition in the same pass.
TacResult tac_minimize_nd(const std::function<double(std::span<const double>)>& objective,
                          const TacConfig& cfg);

}  // namespace tacfit

#endif  // TACFIT_TAC_HPP
