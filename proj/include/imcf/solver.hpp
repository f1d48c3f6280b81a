#pragma once

#include <array>
#include <string>
#include <vector>

#include "imcf/integrate.hpp"
#include "imcf/model.hpp"

namespace imcf {

// Knobs of the solve pipelines.  Zero-valued entries are resolved to
// scale-aware defaults at solve time, with L = max(1, |mu|) (or max(1, r1)
// for the even pipeline):
//   h0          = 1e-6 * L      series-start offset
//   y_max       = 1e3  * L      tail cutoff in y
//   tail_start  = 10   * L      hand-over from explicit to implicit stepping
//   struct_step = 2e-3 * max(0.5, |mu|)   cap on structural step size, which
//                 bounds the dense-output error feeding downstream
//                 finite-difference verification
struct SolveOptions {
    double h0 = 0.0;
    double slope_switch = 1.0;  // chart switch once y_r reaches this slope
    double y_max = 0.0;
    double r_floor = 1e-8;
    Tolerances tols;
    Method method = Method::CHART_SWITCH;
    double struct_step = 0.0;
    double tail_start = 0.0;
};

// Chart-switch pipeline: series start in the y-chart, explicit integration to
// the slope threshold, inversion into the r-chart, explicit integration
// through the structural region (maximum radius and inflection), implicit
// integration through the algebraically decaying tail.
Profile solve_profile(const Params& params, const SolveOptions& opts);

// Independent method for the same curve: the regular arc-length system from
// the exact singular point (r, y, theta) = (0, mu, 0).  Covers the structural
// region in arc-length parametrization; past tail_start the curve is a flat
// graph and the tail is continued with the same implicit r-chart leg as the
// chart pipeline (the two methods are independent precisely where the
// geometry is nontrivial).
Profile solve_arclength(const Params& params, const SolveOptions& opts);

// Even-solution pipeline: starts at y = 0 with r = r1, r_y = 0,
// r_yy = (n-1-1/lambda)/r1 < 0 and integrates forward; the reflection across
// y = 0 is implied.  params.mu is unused here (any valid placeholder).
Profile solve_even(const Params& params, double r1, const SolveOptions& opts);

// Dispatch on opts.method; BOTH runs the chart pipeline (callers wanting the
// cross-check solve the arc variant separately).
Profile solve(const Params& params, const SolveOptions& opts);

// Structural events: y1 from the unique sign change of r_y, y2 from the
// unique resolved sign change of r_yy (located on the analytic right side of
// the r-chart equation, not on finite differences), r1 = r(y1).  Curvature
// sign changes below the formula's resolution floor are round-off, not
// inflections, and are not counted.
Events extract_events(const Profile& profile, const Params& params);

// Count of resolved r_yy sign changes over the whole profile (exposed for
// the even-solution single-inflection check).
int resolved_inflection_count(const Profile& profile, const Params& params);

struct TailFit {
    double alpha_fit = 0.0;   // -slope of log r vs log y over the last decade
    double alpha_pred = 0.0;  // (1 - lambda(n-1))/(lambda(n-1))
    double rms = 0.0;         // fit residual
};

TailFit tail_fit(const Profile& profile, const Params& params);

inline double tail_alpha_pred(const Params& p) {
    return (1.0 - p.lambda * (p.n - 1)) / (p.lambda * (p.n - 1));
}

struct SweepRow {
    int n = 0;
    double lambda = 0.0, mu = 0.0;
    double y1 = 0.0, y2 = 0.0, r1 = 0.0;
    double alpha_fit = 0.0;
    double residual_max = 0.0;
    std::string status;  // "OK" or the error code of the failed stage
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

// One solve + events + tail fit + independent residual per grid point.  Rows
// are independent; per-row errors land in the row status and never abort the
// sweep.  sweep() runs rows in parallel (OpenMP when available) and is
// bit-identical to sweep_serial(), the reference implementation.
SweepTable sweep(const std::vector<std::array<double, 3>>& grid, const SolveOptions& opts);
SweepTable sweep_serial(const std::vector<std::array<double, 3>>& grid, const SolveOptions& opts);

// Cartesian grid builder.  An empty lambdas list expands, per dimension n,
// to the quartile points of the window (1/n, 1/(n-1)).
std::vector<std::array<double, 3>> lattice_grid(const std::vector<int>& ns,
                                                const std::vector<double>& lambdas,
                                                const std::vector<double>& mus);

// The canonical 27-point desk lattice: n in {2,3,4} x per-n window quartiles
// x mu in {-0.5, -1, -2}.
std::vector<std::array<double, 3>> default_lattice();

}  // namespace imcf
