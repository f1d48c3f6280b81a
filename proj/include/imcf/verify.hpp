#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "imcf/model.hpp"
#include "imcf/solver.hpp"

namespace imcf {

// Independent residuals of a solved profile: r is resampled onto a uniform
// grid through the value-only interpolant, derivatives are rebuilt by
// 5-point central differences of those values alone, and both the r-chart
// equation and the geometric soliton identity are evaluated on the rebuilt
// derivatives.  Nothing the solver stored beyond r itself enters.
struct ResidualSummary {
    double max_ode_residual = 0.0;
    double max_soliton_residual = 0.0;
    int grid_size = 0;
    double window_lo = 0.0;  // resample window actually used
    double window_hi = 0.0;
};

// The window is the longest contiguous sample run with |r_y| <= 1 (the
// graph-regular core; excludes the near-axis blow-up and a descending pole),
// clipped to 4 geometric scales.  residual_check evaluates grid points in
// parallel (OpenMP when available); residual_check_serial is the reference
// implementation, bit-identical by construction.
ResidualSummary residual_check(const Profile& profile, const Params& params, int grid_size);
ResidualSummary residual_check_serial(const Profile& profile, const Params& params,
                                      int grid_size);

// Full named-check suite over the theorem conclusions: positivity, support
// margin, sign structure around y1/y2, support monotonicity, the arctan
// bound on y1, tail flatness/decay/exponent, h0-halving stability,
// cross-method agreement, and the even-start identities.  Checks whose
// hypotheses are unmet report NA rather than FAIL; events may be absent
// (failed extraction), which fails the event-dependent checks with detail.
VerificationReport property_suite(const Profile& profile, const std::optional<Events>& events,
                                  const Params& params);

struct ConvergenceResult {
    double observed_order = 0.0;
    std::vector<double> errors;     // per rung, loosest to tightest
    std::vector<double> h_effective;  // mean accepted step per rung
};

// Solves at every rung with the structural step cap released (so the step
// size tracks the tolerance), measures sup-error at each rung's own samples
// inside the structural window against `exact` (or the tightest rung when
// absent), and fits the log-log slope of error against effective step.
ConvergenceResult convergence_study(const Params& params, const SolveOptions& opts,
                                    const std::vector<Tolerances>& ladder,
                                    std::function<double(double)> exact = {});

struct CrossCheck {
    double sup_distance = 0.0;
    double lo = 0.0, hi = 0.0;  // overlap interval
};

// Sup of |r_a - r_b| over the overlapping y-range on a 10^3-point grid.
CrossCheck cross_validate(const Profile& a, const Profile& b);

}  // namespace imcf
