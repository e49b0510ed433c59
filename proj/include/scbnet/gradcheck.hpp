#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "scbnet/errors.hpp"

namespace scbnet {

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
  size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  // elements where the finite difference never stabilized (a kink inside the
  // probe radius, or a gradient below the rounding-noise floor); they carry
  // no verdict either way
  size_t unresolved = 0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double tolerance = 1e-2;

  bool passed() const {
    for (const auto& b : blocks) {
      if (!(b.max_rel_err < tolerance)) return false;
    }
    return true;
  }

  double max_rel_err() const {
    double worst = 0.0;
    for (const auto& b : blocks) worst = std::max(worst, b.max_rel_err);
    return worst;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& b : blocks) {
      os << "  " << (b.max_rel_err < tolerance ? "ok  " : "FAIL") << "  "
         << b.name << "  max rel err " << b.max_rel_err << " (analytic "
         << b.analytic_at_worst << ", numeric " << b.numeric_at_worst
         << " at element " << b.worst_index << ")";
      if (b.unresolved > 0) {
        os << "  [" << b.unresolved << " probe"
           << (b.unresolved == 1 ? "" : "s") << " unresolved]";
      }
      os << "\n";
    }
    return os.str();
  }
};

// Central finite differences against caller-supplied analytic gradients.
// `blocks` point into live parameter storage that `loss` reads; each element
// is perturbed in place by +/- step and restored. Relative error uses
// max(|analytic|, |numeric|, floor) as the denominator so that finite
// difference noise on near-zero entries does not register as failure; the
// floor defaults to 1e-2 for float and 1e-6 for double runs.
// max_per_block > 0 switches a large block to a deterministic stride
// subsample of that many elements, bounding the cost on whole networks.
//
// A first-probe miss is re-measured before it counts as a failure, because a
// central difference can be wrong for reasons that have nothing to do with
// the analytic gradient: truncation when the interval is too wide, rounding
// noise when it is too narrow, or a non-differentiable point (relu gate,
// pool argmax flip) inside the probe radius. Re-probing at step/4 and at
// 4*step separates these: an estimate that converges onto the analytic value
// at some width clears the element, and estimates that move with the width
// mark it unresolved. A stable estimate that still disagrees is compared
// one-sided: when the slopes on the two sides of the sample differ, the
// point is a kink and the central difference converges to their midpoint,
// not to any defensible gradient, so the element is unresolved as well.
// Only a stable, two-sided-consistent disagreement counts as a failure.
template <class T>
GradCheckReport run_gradcheck(const std::vector<std::string>& names,
                              const std::vector<std::vector<T>*>& blocks,
                              const std::function<double()>& loss,
                              const std::vector<std::vector<T>>& analytic,
                              double step, double tolerance,
                              double denom_floor = -1.0,
                              size_t max_per_block = 0) {
  if (names.size() != blocks.size() || names.size() != analytic.size()) {
    throw ConfigError("gradcheck: block name/storage/gradient counts differ");
  }
  if (denom_floor < 0.0) {
    denom_floor = sizeof(T) == sizeof(float) ? 1e-2 : 1e-6;
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  for (size_t b = 0; b < blocks.size(); ++b) {
    std::vector<T>& theta = *blocks[b];
    const std::vector<T>& ga = analytic[b];
    if (theta.size() != ga.size()) {
      throw ShapeError("gradcheck: block '" + names[b] + "' has " +
                       std::to_string(theta.size()) + " parameters but " +
                       std::to_string(ga.size()) + " analytic gradients");
    }
    GradCheckBlock blk;
    blk.name = names[b];
    const size_t stride = (max_per_block > 0 && theta.size() > max_per_block)
                              ? theta.size() / max_per_block
                              : 1;
    for (size_t i = 0; i < theta.size(); i += stride) {
      if (!std::isfinite(static_cast<double>(ga[i]))) {
        throw Error("gradcheck",
                    "non-finite analytic gradient in block '" + names[b] +
                        "' at element " + std::to_string(i));
      }
      const T saved = theta[i];
      double last_lp = 0.0;
      double last_lm = 0.0;
      const auto probe = [&](double h) {
        theta[i] = saved + static_cast<T>(h);
        last_lp = loss();
        theta[i] = saved - static_cast<T>(h);
        last_lm = loss();
        theta[i] = saved;
        return (last_lp - last_lm) / (2.0 * h);
      };
      const double gn = probe(step);
      const double lp = last_lp;
      const double lm = last_lm;
      if (!std::isfinite(gn)) {
        throw Error("gradcheck", "non-finite numeric gradient in block '" +
                                     names[b] + "' at element " +
                                     std::to_string(i));
      }
      const double a = static_cast<double>(ga[i]);
      const auto rel_of = [&](double g) {
        return std::abs(a - g) /
               std::max({std::abs(a), std::abs(g), denom_floor});
      };
      double rel = rel_of(gn);
      double shown = gn;
      if (rel > tolerance) {
        const double gn_lo = probe(step / 4.0);
        if (!std::isfinite(gn_lo)) {
          ++blk.unresolved;
          continue;
        }
        const double gn_hi = probe(step * 4.0);
        if (rel_of(gn_lo) < tolerance) {
          rel = rel_of(gn_lo);
          shown = gn_lo;
        } else if (std::isfinite(gn_hi) && rel_of(gn_hi) < tolerance) {
          rel = rel_of(gn_hi);
          shown = gn_hi;
        } else if (std::abs(gn_lo - gn) > 0.25 * std::abs(a - gn)) {
          ++blk.unresolved;
          continue;
        } else {
          const double l0 = loss();
          const double d_plus = (lp - l0) / step;
          const double d_minus = (l0 - lm) / step;
          if (std::abs(d_plus - d_minus) >
              0.5 * std::max({std::abs(d_plus), std::abs(d_minus),
                              denom_floor})) {
            ++blk.unresolved;
            continue;
          }
        }
      }
      if (rel > blk.max_rel_err) {
        blk.max_rel_err = rel;
        blk.worst_index = i;
        blk.analytic_at_worst = a;
        blk.numeric_at_worst = shown;
      }
    }
    report.blocks.push_back(std::move(blk));
  }
  return report;
}

}  // namespace scbnet
