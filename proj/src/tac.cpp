#include "tacfit/tac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace tacfit {

namespace {

int sgn(double x) noexcept { return (x > 0.0) - (x < 0.0); }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::vector<std::size_t> sign_change_indices(std::span<const double> values) {
  if (values.size() < 3) {
    throw std::invalid_argument("sign_change_indices: need at least 3 values");
  }
  const std::size_t m = values.size() - 1;  // number of forward differences
  std::vector<int> s(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = sgn(values[i + 1] - values[i]);
  std::vector<std::size_t> changes;
  for (std::size_t i = 1; i < m; ++i) {
    if (s[i] != s[i - 1]) changes.push_back(i);
  }
  return changes;
}

std::vector<std::size_t> argmin_set(std::span<const double> values, double tie_tol) {
  if (values.empty()) {
    throw std::invalid_argument("argmin_set: values must be nonempty");
  }
  const double omega = *std::min_element(values.begin(), values.end());
  const double cut = omega + tie_tol * (1.0 + std::abs(omega));
  std::vector<std::size_t> set;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= cut) set.push_back(i);
  }
  return set;
}

void TacConfig::validate() const {
  if (axes.empty() || axes.size() > 4) {
    throw std::invalid_argument("TacConfig: between 1 and 4 axes required");
  }
  for (const Interval& iv : axes) {
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
      throw std::invalid_argument("TacConfig: every axis needs finite lo < hi");
    }
  }
  if (initial_divisions < 2) {
    throw std::invalid_argument("TacConfig: initial_divisions must be >= 2");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("TacConfig: alpha must be positive");
  if (tie_tol < 0.0) throw std::invalid_argument("TacConfig: tie_tol must be >= 0");
  if (max_iterations < 1) {
    throw std::invalid_argument("TacConfig: max_iterations must be >= 1");
  }
  if (effective_densify_cap() < initial_divisions) {
    throw std::invalid_argument("TacConfig: densify_cap must be >= initial_divisions");
  }
  for (const auto& group : ordered_groups) {
    for (std::size_t ax : group) {
      if (ax >= axes.size()) {
        throw std::invalid_argument("TacConfig: ordered group references unknown axis");
      }
    }
  }
  if (threads < 1) throw std::invalid_argument("TacConfig: threads must be >= 1");
}

namespace {

struct AxisState {
  Interval bracket;
  int divisions = 0;
  double kbar = 0.0;  // previous accepted minimizer, initialized with 0
};

std::vector<double> mesh_points(const Interval& bracket, int divisions) {
  std::vector<double> pts(static_cast<std::size_t>(divisions) + 1);
  const double width = bracket.hi - bracket.lo;
  for (int i = 0; i < divisions; ++i) {
    pts[static_cast<std::size_t>(i)] = bracket.lo + width * i / divisions;
  }
  pts.back() = bracket.hi;  // endpoint sampled exactly
  return pts;
}

void evaluate_points(const std::function<double(std::span<const double>)>& objective,
                     const std::vector<std::size_t>& todo,
                     const std::vector<std::vector<double>>& pts,
                     const std::vector<std::size_t>& strides, std::vector<double>& values,
                     int threads) {
  const std::size_t d = pts.size();
  std::exception_ptr failure;
  std::size_t failure_rank = todo.size();

  auto worker = [&](std::size_t begin, std::size_t end, std::exception_ptr& ep,
                    std::size_t& rank) {
    std::vector<double> point(d);
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t flat = todo[t];
      std::size_t rem = flat;
      for (std::size_t ax = 0; ax < d; ++ax) {
        point[ax] = pts[ax][rem / strides[ax]];
        rem %= strides[ax];
      }
      try {
        const double v = objective(point);
        if (!std::isfinite(v)) {
          throw Error(Errc::ObjectiveError, "objective returned a non-finite value");
        }
        values[flat] = v;
      } catch (...) {
        ep = std::current_exception();
        rank = t;
        return;
      }
    }
  };

  const std::size_t chunk_count =
      std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(todo.size(), 1));
  if (chunk_count <= 1) {
    worker(0, todo.size(), failure, failure_rank);
  } else {
    std::vector<std::exception_ptr> eps(chunk_count);
    std::vector<std::size_t> ranks(chunk_count, todo.size());
    std::vector<std::thread> pool;
    pool.reserve(chunk_count);
    const std::size_t per = (todo.size() + chunk_count - 1) / chunk_count;
    for (std::size_t c = 0; c < chunk_count; ++c) {
      const std::size_t begin = c * per;
      const std::size_t end = std::min(todo.size(), begin + per);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end, std::ref(eps[c]), std::ref(ranks[c]));
    }
    for (auto& th : pool) th.join();
    for (std::size_t c = 0; c < chunk_count; ++c) {
      if (eps[c] && ranks[c] < failure_rank) {
        failure = eps[c];
        failure_rank = ranks[c];
      }
    }
  }

  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const Error& e) {
      if (e.code() == Errc::ObjectiveError) throw;
      throw Error(Errc::ObjectiveError,
                  std::string("objective failed at a mesh point: ") + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::ObjectiveError,
                  std::string("objective failed at a mesh point: ") + e.what());
    }
  }
}
// Records one sampling pass in the trace; TACFIT_TRACE_STDERR=1 also prints
// it as a line for quick inspection.
void finish_iteration(TacResult& result, TacIteration& record, int iter) {
  static const bool stderr_trace = std::getenv("TACFIT_TRACE_STDERR") != nullptr;
  if (stderr_trace) {
    std::fprintf(stderr, "[tac] iter=%d %s omega=%.9g argmin=(", iter,
                 record.branches.c_str(), record.min_value);
    for (std::size_t ax = 0; ax < record.argmin.size(); ++ax) {
      std::fprintf(stderr, "%s%.9g", ax ? ", " : "", record.argmin[ax]);
    }
    std::fprintf(stderr, ") mesh=(");
    for (std::size_t ax = 0; ax < record.mesh.size(); ++ax) {
      std::fprintf(stderr, "%s%d", ax ? ", " : "", record.mesh[ax]);
    }
    std::fprintf(stderr, ")\n");
  }
  result.trace.push_back(std::move(record));
  result.iterations = iter;
}

TacResult run_engine(const std::function<double(std::span<const double>)>& objective,
                     const TacConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.axes.size();
  const long long cap = cfg.effective_densify_cap();
  const long long grid_budget = cfg.effective_grid_budget();
  // In one dimension the nested-bracket property of the quasiconvex theory
  // makes the literal flowchart updates safe. With several coupled axes the
  // slice through a coarse argmin can mislead, so the multi-axis run first
  // ramps resolution on the full region and later guards refined brackets
  // with edge reflection.
  const bool multi_axis = d > 1;

  std::vector<AxisState> axes(d);
  for (std::size_t ax = 0; ax < d; ++ax) {
    axes[ax] = AxisState{cfg.axes[ax], cfg.initial_divisions, 0.0};
  }

  TacResult result;
  bool ramping = multi_axis;
  std::vector<double> prev_argpoint;
  std::vector<double> prev_cell;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    std::vector<std::vector<double>> pts(d);
    std::vector<std::size_t> dims(d);
    for (std::size_t ax = 0; ax < d; ++ax) {
      pts[ax] = mesh_points(axes[ax].bracket, axes[ax].divisions);
      dims[ax] = pts[ax].size();
    }
    std::vector<std::size_t> strides(d, 1);
    for (std::size_t ax = d; ax-- > 1;) strides[ax - 1] = strides[ax] * dims[ax];
    const std::size_t total = strides[0] * dims[0];

    // Admissible tuples: every ordered group must be ascending by value.
    std::vector<std::size_t> todo;
    todo.reserve(total);
    std::vector<double> point(d);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      for (std::size_t ax = 0; ax < d; ++ax) {
        point[ax] = pts[ax][rem / strides[ax]];
        rem %= strides[ax];
      }
      bool ok = true;
      for (const auto& group : cfg.ordered_groups) {
        for (std::size_t g = 0; g + 1 < group.size() && ok; ++g) {
          ok = point[group[g]] <= point[group[g + 1]];
        }
        if (!ok) break;
      }
      if (ok) todo.push_back(flat);
    }
    if (todo.empty()) {
      throw Error(Errc::ObjectiveError, "no admissible grid point in the search region");
    }

    std::vector<double> values(total, kInf);
    evaluate_points(objective, todo, pts, strides, values, cfg.threads);
    result.evaluations += static_cast<long long>(todo.size());

    std::size_t best_flat = todo.front();
    for (std::size_t flat : todo) {
      if (values[flat] < values[best_flat]) best_flat = flat;
    }
    const double omega = values[best_flat];

    std::vector<std::size_t> argidx(d);
    std::vector<double> argpoint(d);
    {
      std::size_t rem = best_flat;
      for (std::size_t ax = 0; ax < d; ++ax) {
        argidx[ax] = rem / strides[ax];
        argpoint[ax] = pts[ax][argidx[ax]];
        rem %= strides[ax];
      }
    }

    // Contiguous admissible slice through the argmin along one axis. The
    // returned ends tell whether the slice stopped at the grid edge or at an
    // inadmissible (masked) neighbor.
    struct SliceRange {
      std::size_t lo, hi;
      bool masked_lo, masked_hi;
    };
    auto extract_slice = [&](std::size_t ax, std::vector<double>& slice) {
      const std::size_t m = dims[ax] - 1;
      std::size_t lo = argidx[ax], hi = argidx[ax];
      auto slice_value = [&](std::size_t i) {
        return values[best_flat + (i - argidx[ax]) * strides[ax]];
      };
      while (lo > 0 && std::isfinite(slice_value(lo - 1))) --lo;
      while (hi < m && std::isfinite(slice_value(hi + 1))) ++hi;
      slice.clear();
      slice.reserve(hi - lo + 1);
      for (std::size_t i = lo; i <= hi; ++i) slice.push_back(slice_value(i));
      return SliceRange{lo, hi, lo > 0, hi < m};
    };

    std::vector<std::size_t> slice_changes(d, 0);
    {
      std::vector<double> slice;
      for (std::size_t ax = 0; ax < d; ++ax) {
        extract_slice(ax, slice);
        if (slice.size() >= 3) slice_changes[ax] = sign_change_indices(slice).size();
      }
    }

    TacIteration record;
    for (std::size_t ax = 0; ax < d; ++ax) {
      record.bracket.push_back(axes[ax].bracket);
      record.mesh.push_back(axes[ax].divisions);
    }
    record.argmin = argpoint;
    record.min_value = omega;

    struct Update {
      Interval bracket;
      int divisions;
      double kbar;
    };
    std::vector<Update> updates(d);
    for (std::size_t ax = 0; ax < d; ++ax) {
      updates[ax] = {axes[ax].bracket, axes[ax].divisions, axes[ax].kbar};
    }
    bool all_stopped = true;
    bool any_progress = false;
    long long grid_product = static_cast<long long>(total);

    auto cell_of = [&](std::size_t ax) {
      return (axes[ax].bracket.hi - axes[ax].bracket.lo) /
             static_cast<double>(dims[ax] - 1);
    };

    // Ramp phase (multi-axis): brackets stay on the full region while the
    // mesh doubles, multimodal axes first, until the grid argmin is stable
    // across resolutions or the tuple budget denies every doubling. Slices
    // through an under-resolved argmin look deceptively clean, so refining
    // any bracket before this point can lock coupled axes onto a local
    // minimum.
    if (ramping) {
      bool stable = !prev_argpoint.empty();
      if (stable) {
        for (std::size_t ax = 0; ax < d && stable; ++ax) {
          const double tol =
              1.0000001 * std::max(cell_of(ax), prev_cell[ax]);
          stable = std::abs(argpoint[ax] - prev_argpoint[ax]) <= tol;
        }
      }
      const bool multimodal =
          std::any_of(slice_changes.begin(), slice_changes.end(),
                      [](std::size_t c) { return c > 1; });
      prev_argpoint = argpoint;
      prev_cell.resize(d);
      for (std::size_t ax = 0; ax < d; ++ax) prev_cell[ax] = cell_of(ax);

      if (stable && !multimodal) {
        ramping = false;  // structure resolved; fall through to refinement
      } else {
        // Double the neediest axes first: multimodal slices, then the
        // coarsest relative cells.
        std::vector<std::size_t> order(d);
        for (std::size_t ax = 0; ax < d; ++ax) order[ax] = ax;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          const bool ma = slice_changes[a] > 1, mb = slice_changes[b] > 1;
          if (ma != mb) return ma;
          const double ra = cell_of(a) / (cfg.axes[a].hi - cfg.axes[a].lo);
          const double rb = cell_of(b) / (cfg.axes[b].hi - cfg.axes[b].lo);
          if (ra != rb) return ra > rb;
          return a < b;
        });
        bool doubled_any = false;
        for (std::size_t ax : order) {
          const long long doubled = grid_product /
                                    static_cast<long long>(dims[ax]) *
                                    (2LL * axes[ax].divisions + 1);
          if (doubled <= grid_budget) {
            updates[ax].divisions = 2 * axes[ax].divisions;
            grid_product = doubled;
            doubled_any = true;
          }
        }
        if (doubled_any) {
          for (std::size_t ax = 0; ax < d; ++ax) {
            record.branches.push_back(updates[ax].divisions != axes[ax].divisions
                                          ? 'D'
                                          : 'h');
          }
          finish_iteration(result, record, iter);
          for (std::size_t ax = 0; ax < d; ++ax) {
            axes[ax].bracket = updates[ax].bracket;
            axes[ax].divisions = updates[ax].divisions;
            axes[ax].kbar = updates[ax].kbar;
          }
          continue;
        }
        ramping = false;  // budget exhausted; refine from the best cell found
      }
    }

    for (std::size_t ax = 0; ax < d; ++ax) {
      const std::size_t m = dims[ax] - 1;
      AxisState& st = axes[ax];
      Update& up = updates[ax];
      const double width = st.bracket.hi - st.bracket.lo;
      const double cell = width / static_cast<double>(m);

      // A bracket no wider than alpha cannot separate candidate minimizers
      // any further; the axis is converged no matter how its values tie.
      if (width <= cfg.alpha) {
        record.branches.push_back('S');
        continue;
      }

      std::vector<double> slice;
      const auto range = extract_slice(ax, slice);
      const std::size_t lo = range.lo;
      const std::size_t len = slice.size();

      const std::vector<std::size_t> ties = argmin_set(slice, cfg.tie_tol);
      std::vector<std::size_t> changes;
      if (len >= 3) changes = sign_change_indices(slice);

      const auto clamp_axis = [&](double x_lo, double x_hi) {
        return Interval{std::max(x_lo, cfg.axes[ax].lo),
                        std::min(x_hi, cfg.axes[ax].hi)};
      };
      // A slice end at an inadmissible neighbor behaves like a bound: growing
      // past it only ping-pongs against the mask. Growth is reserved for ends
      // sitting on a refined bracket's edge away from the global interval.
      const auto grow_lo = [&](std::size_t rel) {
        return rel == 0 && !range.masked_lo && st.bracket.lo > cfg.axes[ax].lo;
      };
      const auto grow_hi = [&](std::size_t rel) {
        return rel == len - 1 && !range.masked_hi && st.bracket.hi < cfg.axes[ax].hi;
      };
      // A slice tied end to end within tie_tol is a plateau; its sign
      // pattern is noise below the tie tolerance and must not trigger
      // densification, so it goes straight to the plateau safeguard.
      const bool whole_plateau = ties.size() == len && len > 1;
      char branch;
      if (changes.size() > 1 && !whole_plateau) {
        // C1: several sign changes; densify. One dimension follows the
        // flowchart: bracket every change and double the mesh up to the hard
        // cap. On a tensor grid the doubled meshes multiply across axes, so
        // the mesh doubles in place while the budget allows; once it denies,
        // the achieved resolution is the best this grid can afford and the
        // bracket descends to the argmin's neighboring cells.
        const long long doubled = grid_product /
                                  static_cast<long long>(dims[ax]) *
                                  (2LL * st.divisions + 1);
        if (!multi_axis) {
          // Persistent sign changes inside a small fraction of the original
          // interval mean the suspicious zone is resolved as well as it will
          // ever be: trust the deep-and-wide premise and descend into the
          // argmin's cells. A zone spanning most of the interval signals a
          // genuinely non-quasiconvexish objective instead.
          const double original = cfg.axes[ax].hi - cfg.axes[ax].lo;
          const bool resolution_spent =
              st.divisions >= 64LL * cfg.initial_divisions && width <= 0.5 * original;
          if (resolution_spent) {
            const std::size_t j = argidx[ax] - lo;
            const std::size_t i1 = j > 0 ? j - 1 : 0;
            const std::size_t i2 = std::min(j + 1, len - 1);
            up.bracket = {pts[ax][lo + i1], pts[ax][lo + i2]};
            up.divisions = cfg.initial_divisions;
            up.kbar = pts[ax][lo + j];
            branch = 'C';
          } else {
            if (2LL * st.divisions > cap) {
              throw Error(Errc::BudgetExceeded,
                          "densification cap reached on axis " + std::to_string(ax));
            }
            const std::size_t i1 = changes.front() - 1;
            const std::size_t i2 = std::min(changes.back() + 1, len - 1);
            up.bracket = {pts[ax][lo + i1], pts[ax][lo + i2]};
            up.divisions = 2 * st.divisions;
            branch = 'D';
          }
        } else if (doubled <= grid_budget) {
          up.divisions = 2 * st.divisions;
          grid_product = doubled;
          branch = 'D';
        } else {
          const std::size_t j = argidx[ax] - lo;
          const double kj = pts[ax][lo + j];
          up.bracket = clamp_axis(kj - (grow_lo(j) ? 2.0 * width : cell),
                                  kj + (grow_hi(j) ? 2.0 * width : cell));
          up.divisions = cfg.initial_divisions;
          up.kbar = kj;
          branch = 'C';
        }
        all_stopped = false;
        if (up.bracket.lo != st.bracket.lo || up.bracket.hi != st.bracket.hi ||
            up.divisions != st.divisions) {
          any_progress = true;
        }
      } else if (ties.size() > 1) {
        // C2: argmin plateau; bracket the whole tie set plus one cell. An
        // end pinned at a refined-bracket edge that is not the global bound
        // grows back outward (multi-axis only).
        const double tie_lo = pts[ax][lo + ties.front()];
        const double tie_hi = pts[ax][lo + ties.back()];
        if (multi_axis) {
          up.bracket = clamp_axis(tie_lo - (grow_lo(ties.front()) ? 2.0 * width : cell),
                                  tie_hi + (grow_hi(ties.back()) ? 2.0 * width : cell));
        } else {
          const std::size_t i1 = ties.front() > 0 ? ties.front() - 1 : 0;
          const std::size_t i2 = std::min(ties.back() + 1, len - 1);
          up.bracket = {pts[ax][lo + i1], pts[ax][lo + i2]};
        }
        up.divisions = st.divisions;
        branch = 'P';
        all_stopped = false;
        const bool stagnant =
            up.bracket.lo == st.bracket.lo && up.bracket.hi == st.bracket.hi;
        if (!stagnant) any_progress = true;
      } else {
        // Unique argmin: refine to its neighboring cells, reset the mesh.
        const std::size_t j = ties.front();
        const double kj = pts[ax][lo + j];
        if (multi_axis) {
          up.bracket = clamp_axis(kj - (grow_lo(j) ? 2.0 * width : cell),
                                  kj + (grow_hi(j) ? 2.0 * width : cell));
        } else {
          const std::size_t i1 = j > 0 ? j - 1 : 0;
          const std::size_t i2 = std::min(j + 1, len - 1);
          up.bracket = {pts[ax][lo + i1], pts[ax][lo + i2]};
        }
        up.divisions = cfg.initial_divisions;
        up.kbar = kj;
        // The refined bracket re-samples the previous argmin at its
        // midpoint, so consecutive minimizers can coincide while the mesh is
        // still coarse; accept the alpha agreement only once the cells
        // resolve it.
        const bool converged = std::abs(st.kbar - kj) <= cfg.alpha && cell <= cfg.alpha;
        branch = converged ? 'S' : 'R';
        if (!converged) all_stopped = false;
        any_progress = true;
      }
      record.branches.push_back(branch);
    }

    // While any axis is still densifying, the landscape is not resolved
    // enough to trust slice-based refinement on the other axes: their state
    // is held (shown lowercase in the trace).
    if (multi_axis && record.branches.find('D') != std::string::npos) {
      for (std::size_t ax = 0; ax < d; ++ax) {
        if (record.branches[ax] != 'D') {
          updates[ax] = {axes[ax].bracket, axes[ax].divisions, axes[ax].kbar};
          record.branches[ax] = static_cast<char>(
              std::tolower(static_cast<unsigned char>(record.branches[ax])));
        }
      }
      all_stopped = false;
    }

    finish_iteration(result, record, iter);

    // Stop when every axis met the alpha condition; accept the plateau when
    // no axis can make further progress (the whole bracket ties for the
    // minimum within tie_tol).
    if (all_stopped || !any_progress) {
      result.minimizer = argpoint;
      result.objective_at_min = omega;
      for (std::size_t ax = 0; ax < d; ++ax) {
        result.final_bracket.push_back(axes[ax].bracket);
      }
      return result;
    }

    for (std::size_t ax = 0; ax < d; ++ax) {
      axes[ax].bracket = updates[ax].bracket;
      axes[ax].divisions = updates[ax].divisions;
      axes[ax].kbar = updates[ax].kbar;
    }
  }
  throw Error(Errc::BudgetExceeded, "iteration budget exhausted");
}

}  // namespace

TacResult tac_minimize_1d(const std::function<double(double)>& objective,
                          const TacConfig& cfg) {
  if (cfg.axes.size() != 1) {
    throw std::invalid_argument("tac_minimize_1d: exactly one axis required");
  }
  return run_engine(
      [&objective](std::span<const double> p) { return objective(p[0]); }, cfg);
}

TacResult tac_minimize_nd(const std::function<double(std::span<const double>)>& objective,
                          const TacConfig& cfg) {
  return run_engine(objective, cfg);
}

}  // namespace tacfit
