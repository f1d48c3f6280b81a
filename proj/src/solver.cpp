#include "imcf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "imcf/dynamics.hpp"
#include "imcf/error.hpp"
#include "imcf/verify.hpp"

namespace imcf {

namespace {

// Explicit-leg horizon cap in units of the problem scale: if no inflection
// has been resolved by here, the implicit tail leg takes over regardless.
constexpr double kExtensionCap = 40.0;

// Descending slope beyond which the r-chart is closing onto the axis (the
// slope stays well below 1 on in-window tails; only capped profiles such as
// the sphere steepen without bound).  Past this the chart solution is
// dominated by pole smear and a continuation would sample a spurious
// post-pole branch, so the leg stops and reports the floor.
constexpr double kClosingSlope = -1e4;

// Scale-resolved copy of the options; zero entries are filled from the
// geometric scale (|mu|, or r1 for the even pipeline).
struct Resolved {
    double h0 = 0.0;
    double slope_switch = 1.0;
    double y_max = 0.0;
    double r_floor = 0.0;
    double struct_step = 0.0;
    double tail_start = 0.0;
    double scale = 1.0;
    Tolerances tols;
};

void check_finite(double v, const char* name) {
    if (!std::isfinite(v))
        throw Error(ErrorCode::NONFINITE_INPUT, std::string(name) + " is not finite");
}

Resolved resolve_options(const SolveOptions& opts, double geom) {
    check_finite(opts.h0, "h0");
    check_finite(opts.slope_switch, "slope_switch");
    check_finite(opts.y_max, "y_max");
    check_finite(opts.r_floor, "r_floor");
    check_finite(opts.struct_step, "struct_step");
    check_finite(opts.tail_start, "tail_start");
    check_finite(opts.tols.rel, "rel");
    check_finite(opts.tols.abs, "abs");
    check_finite(opts.tols.event_tol, "event_tol");
    if (!(opts.slope_switch >= 0.5 && opts.slope_switch <= 2.0))
        throw Error(ErrorCode::H0_OUT_OF_RANGE,
                    "slope_switch = " + std::to_string(opts.slope_switch) +
                        " outside [0.5, 2]");
    if (opts.h0 < 0.0)
        throw Error(ErrorCode::H0_OUT_OF_RANGE, "h0 must be positive (0 selects the default)");
    if (opts.y_max < 0.0 || opts.r_floor <= 0.0)
        throw Error(ErrorCode::H0_OUT_OF_RANGE, "y_max and r_floor must be positive");
    if (!(opts.tols.rel > 0.0) || !(opts.tols.abs > 0.0) || !(opts.tols.event_tol > 0.0))
        throw Error(ErrorCode::H0_OUT_OF_RANGE, "tolerances must be positive");

    Resolved R;
    R.scale = std::fmax(1.0, geom);
    R.h0 = opts.h0 > 0.0 ? opts.h0 : 1e-6 * R.scale;
    R.slope_switch = opts.slope_switch;
    R.y_max = opts.y_max > 0.0 ? opts.y_max : 1e3 * R.scale;
    R.r_floor = opts.r_floor;
    R.struct_step = opts.struct_step > 0.0 ? opts.struct_step : 2e-3 * std::fmax(0.5, geom);
    R.tail_start = opts.tail_start > 0.0 ? opts.tail_start : 10.0 * R.scale;
    R.tols = opts.tols;
    return R;
}

void seed_meta(ProfileMeta& meta, const Resolved& R) {
    meta.h0 = R.h0;
    meta.rel = R.tols.rel;
    meta.abs = R.tols.abs;
    meta.event_tol = R.tols.event_tol;
    meta.slope_switch = R.slope_switch;
    meta.r_floor = R.r_floor;
    meta.struct_step = R.struct_step;
    meta.tail_start = R.tail_start;
}

// Sample accumulator with the support-function monitor: every accepted point must
// keep r > 0 and the support function r - y*r_y above the singular guard.
struct Assembly {
    const Params& params;
    std::vector<Sample> samples;

    explicit Assembly(const Params& p) : params(p) {}

    void push(double y, double r, double p_slope) {
        const double S = r - y * p_slope;
        if (!(r > 0.0) || !(S > singular_eps(y, r)))
            throw Error(ErrorCode::SUPPORT_FUNCTION_VIOLATION,
                        "r - y*r_y = " + std::to_string(S) + " at y = " + std::to_string(y) +
                            " (r = " + std::to_string(r) + ")");
        if (!samples.empty() && !(y > samples.back().y)) return;  // leg-boundary duplicate
        samples.push_back({y, r, p_slope, rhs_r_chart(y, r, p_slope, params)});
    }
};

// True when the assembled samples already show a curvature sign change that
// clears the evaluation resolution floor on both sides.
bool curvature_flip_resolved(const std::vector<Sample>& ss, const Params& params, double rtol) {
    int prev = 0;
    for (const auto& s : ss) {
        const double fl = curvature_resolution_floor(s.y, s.r, s.r_y, params, rtol);
        const int sg = s.r_yy > fl ? 1 : (s.r_yy < -fl ? -1 : 0);
        if (sg == 0) continue;
        if (prev != 0 && sg != prev) return true;
        prev = sg;
    }
    return false;
}

struct LegCursor {
    double y = 0.0;
    std::array<double, 2> v{};  // (r, r_y)
    bool floored = false;       // terminated at the radius floor
};

// r-chart continuation shared by all pipelines: explicit legs (step-capped)
// up to tail_start, doubling the horizon until the inflection is resolved in
// the samples or the cap is reached, then the implicit leg to y_max.  Stops
// early when r falls to r_floor.
void run_rchart_legs(Assembly& A, const Params& params, const Resolved& R, ProfileMeta& meta,
                     LegCursor st) {
    auto rhs = [&params](double y, const std::array<double, 2>& v) {
        return std::array<double, 2>{v[1], rhs_r_chart(y, v[0], v[1], params)};
    };
    auto stop_floor = [&R](double, const std::array<double, 2>& v) {
        return v[0] <= R.r_floor || v[1] <= kClosingSlope;
    };
    const double flip_rtol = std::fmax(R.tols.rel, 1e-14);
    const double cap = std::fmin(kExtensionCap * R.scale, R.y_max);
    double target = R.tail_start > st.y ? R.tail_start : 2.0 * std::fmax(st.y, R.scale);
    target = std::fmin(target, R.y_max);

    Tolerances tolsx = R.tols;
    tolsx.max_step = std::fmin(tolsx.max_step, R.struct_step);

    std::vector<std::pair<long, double>> leg_medians;
    double wall_hint = std::numeric_limits<double>::infinity();
    int wall_retries = 0;
    while (!st.floored && st.y < R.y_max && target > st.y) {
        Trajectory<2> traj;
        try {
            traj = integrate_adaptive<2>(rhs, st.y, st.v, target, tolsx, stop_floor);
        } catch (const Error& e) {
            // A step-size collapse inside the leg marks a closing profile:
            // the radius plunges to the axis with unbounded slope, which no
            // r-chart step can traverse.  Creep up on the breakdown point by
            // shortening the horizon; once the remaining gap is below chart
            // resolution and the radius is already near the floor, the cap
            // is complete.  Anything else is a genuine failure.
            if (e.code() != ErrorCode::STEP_UNDERFLOW || ++wall_retries > 512) throw;
            const double gap_floor = 1024.0 * std::numeric_limits<double>::epsilon() *
                                     std::fmax(R.scale, std::fabs(st.y));
            wall_hint = target;
            if (target - st.y > gap_floor) {
                target = st.y + 0.5 * (target - st.y);
                continue;
            }
            if (st.v[0] <= 1e3 * R.r_floor) {
                st.floored = true;
                break;
            }
            throw;
        }
        for (std::size_t i = 1; i < traj.nodes.size(); ++i)
            A.push(traj.nodes[i].t, traj.nodes[i].u[0], traj.nodes[i].u[1]);
        st.y = traj.nodes.back().t;
        st.v = traj.nodes.back().u;
        st.floored = traj.stopped;
        meta.steps_struct += traj.stats.accepted;
        meta.rejected += traj.stats.rejected;
        leg_medians.emplace_back(traj.stats.accepted, traj.stats.h_median);
        if (st.floored || st.y >= R.y_max || target >= cap) break;
        if (curvature_flip_resolved(A.samples, params, flip_rtol)) break;
        // Extend the horizon (never backward: target may sit below the scale
        // after wall-shortened legs), but not past a known breakdown point.
        target = std::fmin(std::fmin(2.0 * std::fmax(target, R.scale), R.y_max), wall_hint);
    }
    if (!leg_medians.empty()) {
        auto longest = std::max_element(leg_medians.begin(), leg_medians.end());
        if (meta.h_median_struct == 0.0 || longest->first > meta.steps_start)
            meta.h_median_struct = longest->second;
    }

    if (!st.floored && st.y < R.y_max) {
        auto tail = integrate_tail_sdirk(params, st.y, st.v, R.y_max, R.tols, R.r_floor,
                                         10.0 * R.struct_step);
        for (std::size_t i = 1; i < tail.nodes.size(); ++i)
            A.push(tail.nodes[i].t, tail.nodes[i].u[0], tail.nodes[i].u[1]);
        meta.steps_tail += tail.stats.accepted;
        meta.rejected += tail.stats.rejected;
    }
}

Profile finish(Assembly&& A, const Params& params, Method method,
               std::optional<double> switch_y, ProfileMeta meta) {
    if (A.samples.size() < 4)
        throw Error(ErrorCode::PROFILE_TOO_SHORT,
                    "pipeline produced only " + std::to_string(A.samples.size()) + " samples");
    Profile prof;
    prof.params = params;
    prof.samples = std::move(A.samples);
    prof.method = method;
    prof.switch_y = switch_y;
    prof.y_max = prof.samples.back().y;
    prof.meta = meta;
    return prof;
}

}  // namespace

Profile solve_profile(const Params& params, const SolveOptions& opts) {
    const double geom = std::fabs(params.mu);
    Resolved R = resolve_options(opts, geom);
    if (R.h0 > h0_max(params))
        throw Error(ErrorCode::H0_OUT_OF_RANGE,
                    "h0 = " + std::to_string(R.h0) + " above cap " +
                        std::to_string(h0_max(params)));
    ProfileMeta meta;
    seed_meta(meta, R);

    // Phase A: y as a graph over r from the series start until the slope
    // reaches the switch threshold (it blows up at r1, so the stop always
    // fires below that for slope_switch <= 2).
    ChartState s0 = series_start(params, R.h0);
    auto rhs_a = [&params](double r, const std::array<double, 2>& u) {
        return std::array<double, 2>{u[1], rhs_y_chart(r, u[0], u[1], params)};
    };
    Tolerances tols_a = R.tols;
    tols_a.max_step = std::fmin(tols_a.max_step, R.struct_step);
    const double sw = R.slope_switch;
    auto traj_a = integrate_adaptive<2>(
        rhs_a, s0.t, {s0.u, s0.du}, 100.0 * R.scale, tols_a,
        [sw](double, const std::array<double, 2>& u) { return u[1] >= sw; });
    if (!traj_a.stopped)
        throw Error(ErrorCode::EVENT_NOT_FOUND,
                    "slope never reached the switch threshold " + std::to_string(sw) +
                        " by r = " + std::to_string(traj_a.t_back()));

    Assembly A(params);
    for (const auto& nd : traj_a.nodes) A.push(nd.u[0], nd.t, 1.0 / nd.u[1]);
    meta.steps_start = traj_a.stats.accepted;
    meta.rejected += traj_a.stats.rejected;
    meta.h_median_struct = traj_a.stats.h_median;

    const double y_sw = traj_a.nodes.back().u[0];
    const double r_sw = traj_a.nodes.back().t;
    if (y_sw >= R.y_max)
        throw Error(ErrorCode::EVENT_NOT_FOUND,
                    "y_max = " + std::to_string(R.y_max) + " lies below the chart switch at y = " +
                        std::to_string(y_sw));

    // Phase B onward: r as a graph over y.
    LegCursor st{y_sw, {r_sw, 1.0 / traj_a.nodes.back().u[1]}, false};
    run_rchart_legs(A, params, R, meta, st);
    return finish(std::move(A), params, Method::CHART_SWITCH, y_sw, meta);
}

Profile solve_arclength(const Params& params, const SolveOptions& opts) {
    const double geom = std::fabs(params.mu);
    Resolved R = resolve_options(opts, geom);
    ProfileMeta meta;
    seed_meta(meta, R);

    auto rhs = [&params](double s, const std::array<double, 3>& w) {
        ArcState st{s, w[0], w[1], w[2]};
        ArcRhs d = rhs_arclength(st, params);
        return std::array<double, 3>{d.dr, d.dy, d.dtheta};
    };
    // Past theta = pi/2 the curve is descending; touching the axis there is
    // a closing cap (sphere-like), not the singular start.
    auto stop = [&R](double, const std::array<double, 3>& w) {
        return w[1] >= R.tail_start || (w[0] <= R.r_floor && w[2] > 1.6);
    };
    Tolerances tols_s = R.tols;
    tols_s.max_step = std::fmin(tols_s.max_step, R.struct_step);
    const double goal_y = std::fmin(R.tail_start, R.y_max);
    // Generous arc budget: the curve from the axis to height goal_y is
    // monotone in y with bounded turning, so its length is a small multiple
    // of the vertical travel plus the horizontal excursion.
    const double s_budget = 4.0 * (goal_y - params.mu) + 20.0 * R.scale;
    auto traj = integrate_adaptive<3>(rhs, 0.0, {0.0, params.mu, 0.0}, s_budget, tols_s, stop);
    if (!traj.stopped)
        throw Error(ErrorCode::EVENT_NOT_FOUND,
                    "arc-length leg exhausted its span s <= " + std::to_string(s_budget));

    Assembly A(params);
    for (const auto& nd : traj.nodes) {
        if (nd.t == 0.0) continue;  // exact singular point carries no graph data
        const double sth = std::sin(nd.u[2]);
        if (!(sth > 0.0)) continue;
        A.push(nd.u[1], nd.u[0], std::cos(nd.u[2]) / sth);
    }
    meta.steps_start = traj.stats.accepted;
    meta.rejected += traj.stats.rejected;
    meta.h_median_struct = traj.stats.h_median;

    const bool floored = traj.nodes.back().u[0] <= R.r_floor * 1.0000001;
    if (!floored && traj.nodes.back().u[1] < R.y_max) {
        LegCursor st;
        st.y = A.samples.back().y;
        st.v = {A.samples.back().r, A.samples.back().r_y};
        run_rchart_legs(A, params, R, meta, st);
    }
    return finish(std::move(A), params, Method::ARC_LENGTH, std::nullopt, meta);
}

Profile solve_even(const Params& params, double r1, const SolveOptions& opts) {
    check_finite(r1, "r1");
    if (!(r1 > 0.0))
        throw Error(ErrorCode::H0_OUT_OF_RANGE, "even start radius r1 must be positive");
    if (!params.in_theorem_window())
        throw Error(ErrorCode::LAMBDA_OUT_OF_RANGE,
                    "even pipeline requires lambda strictly inside (" +
                        std::to_string(params.window_lo()) + ", " +
                        std::to_string(params.window_hi()) + ")");
    Resolved R = resolve_options(opts, r1);
    ProfileMeta meta;
    seed_meta(meta, R);
    meta.even = true;
    meta.even_r1 = r1;

    Assembly A(params);
    A.push(0.0, r1, 0.0);
    LegCursor st{0.0, {r1, 0.0}, false};
    run_rchart_legs(A, params, R, meta, st);
    return finish(std::move(A), params, Method::CHART_SWITCH, std::nullopt, meta);
}

Profile solve(const Params& params, const SolveOptions& opts) {
    if (opts.method == Method::ARC_LENGTH) return solve_arclength(params, opts);
    return solve_profile(params, opts);
}

Events extract_events(const Profile& profile, const Params& params) {
    const auto& ss = profile.samples;
    if (ss.size() < 4)
        throw Error(ErrorCode::PROFILE_TOO_SHORT, "too few samples for event extraction");
    const double event_tol = profile.meta.event_tol > 0.0 ? profile.meta.event_tol : 1e-10;

    // y1: roots of r_y on the samples, refined on the value interpolant.
    std::vector<double> roots;
    bool prev_zero = ss.front().r_y == 0.0;
    if (prev_zero) roots.push_back(ss.front().y);
    for (std::size_t i = 1; i < ss.size(); ++i) {
        const double a = ss[i - 1].r_y, b = ss[i].r_y;
        if (b == 0.0) {
            if (!prev_zero) roots.push_back(ss[i].y);
            prev_zero = true;
            continue;
        }
        if (!prev_zero && (a < 0.0) != (b < 0.0)) {
            double lo = ss[i - 1].y, hi = ss[i].y;
            const bool lo_neg = a < 0.0;
            while (hi - lo > event_tol) {
                const double mid = 0.5 * (lo + hi);
                if ((profile.r_y_at(mid) < 0.0) == lo_neg)
                    lo = mid;
                else
                    hi = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_zero = false;
    }
    if (roots.empty())
        throw Error(ErrorCode::EVENT_NOT_FOUND,
                    "r_y never changes sign; profile may stop short of the maximum radius");
    if (roots.size() > 1)
        throw Error(ErrorCode::MULTIPLE_EVENTS,
                    std::to_string(roots.size()) + " sign changes of r_y (tolerances too loose)");

    Events ev;
    ev.y1 = roots.front();
    ev.r1 = profile.r_at(ev.y1);
    ev.kappa0 = params.kappa0();

    // y2: resolved sign change of the analytic curvature formula beyond y1.
    // Sample values below the resolution floor are skipped as indeterminate;
    // the crossing is then refined on y -> rhs_r_chart(y, r(y), r_y(y)).
    const double rtol = std::fmax(profile.meta.rel, 1e-14);
    int prev = 0;
    double prev_y = 0.0;
    int crossings = 0;
    double lo_best = 0.0, hi_best = 0.0;
    for (const auto& s : ss) {
        if (s.y <= ev.y1) continue;
        const double fl = curvature_resolution_floor(s.y, s.r, s.r_y, params, rtol);
        const int sg = s.r_yy > fl ? 1 : (s.r_yy < -fl ? -1 : 0);
        if (sg == 0) continue;
        if (prev != 0 && sg != prev) {
            ++crossings;
            lo_best = prev_y;
            hi_best = s.y;
        }
        prev = sg;
        prev_y = s.y;
    }
    if (crossings > 1)
        throw Error(ErrorCode::MULTIPLE_EVENTS,
                    std::to_string(crossings) + " resolved sign changes of r_yy");
    if (crossings == 0) {
        if (params.in_theorem_window())
            throw Error(ErrorCode::EVENT_NOT_FOUND,
                        "no resolved inflection beyond y1 (profile truncated early?)");
        return ev;  // outside the window (sphere-like fixtures) y2 is genuinely absent
    }
    double lo = lo_best, hi = hi_best;
    const bool lo_neg = prev == 1;  // the walk ended on the post-crossing sign
    while (hi - lo > event_tol) {
        const double mid = 0.5 * (lo + hi);
        const double g = rhs_r_chart(mid, profile.r_at(mid), profile.r_y_at(mid), params);
        if ((g < 0.0) == lo_neg)
            lo = mid;
        else
            hi = mid;
    }
    ev.y2 = 0.5 * (lo + hi);
    return ev;
}

int resolved_inflection_count(const Profile& profile, const Params& params) {
    const double rtol = std::fmax(profile.meta.rel, 1e-14);
    int prev = 0, count = 0;
    for (const auto& s : profile.samples) {
        const double fl = curvature_resolution_floor(s.y, s.r, s.r_y, params, rtol);
        const int sg = s.r_yy > fl ? 1 : (s.r_yy < -fl ? -1 : 0);
        if (sg == 0) continue;
        if (prev != 0 && sg != prev) ++count;
        prev = sg;
    }
    return count;
}

TailFit tail_fit(const Profile& profile, const Params& params) {
    TailFit out;
    out.alpha_pred = tail_alpha_pred(params);

    double y2_ref = 1.0;
    try {
        Events ev = extract_events(profile, params);
        if (ev.y2) y2_ref = *ev.y2;
    } catch (const Error&) {
        // fall through: the reach test below fails with the default reference
    }
    const double y_end = profile.y_back();
    if (y_end < 100.0 * std::fmax(1.0, y2_ref))
        throw Error(ErrorCode::TAIL_TOO_SHORT,
                    "profile reaches y = " + std::to_string(y_end) + ", need 100*max(1, y2) = " +
                        std::to_string(100.0 * std::fmax(1.0, y2_ref)));

    // Least-squares line through (log y, log r) over the last decade.
    const double y_lo = y_end / 10.0;
    double sx = 0, sz = 0, sxx = 0, sxz = 0;
    long m = 0;
    for (const auto& s : profile.samples) {
        if (s.y < y_lo || !(s.r > 0.0)) continue;
        const double x = std::log(s.y), z = std::log(s.r);
        sx += x;
        sz += z;
        sxx += x * x;
        sxz += x * z;
        ++m;
    }
    if (m < 8)
        throw Error(ErrorCode::TAIL_TOO_SHORT,
                    "only " + std::to_string(m) + " samples in the last decade");
    const double det = m * sxx - sx * sx;
    const double slope = (m * sxz - sx * sz) / det;
    const double icept = (sz - slope * sx) / m;
    out.alpha_fit = -slope;
    double acc = 0.0;
    for (const auto& s : profile.samples) {
        if (s.y < y_lo || !(s.r > 0.0)) continue;
        const double d = std::log(s.r) - (icept + slope * std::log(s.y));
        acc += d * d;
    }
    out.rms = std::sqrt(acc / m);
    return out;
}

namespace {

SweepRow sweep_one(const std::array<double, 3>& pt, const SolveOptions& opts) {
    SweepRow row;
    row.n = static_cast<int>(pt[0]);
    row.lambda = pt[1];
    row.mu = pt[2];
    row.y1 = row.y2 = row.r1 = row.alpha_fit = row.residual_max =
        std::numeric_limits<double>::quiet_NaN();
    try {
        Params params = validate_params(row.n, row.lambda, row.mu);
        Profile prof = solve(params, opts);
        Events ev = extract_events(prof, params);
        row.y1 = ev.y1;
        row.r1 = ev.r1;
        if (ev.y2) row.y2 = *ev.y2;
        TailFit tf = tail_fit(prof, params);
        row.alpha_fit = tf.alpha_fit;
        ResidualSummary rs = residual_check(prof, params, 1000);
        row.residual_max = std::fmax(rs.max_ode_residual, rs.max_soliton_residual);
        row.status = "OK";
    } catch (const Error& e) {
        row.status = to_string(e.code());
    } catch (const std::exception&) {
        row.status = "EXCEPTION";
    }
    return row;
}

}  // namespace

SweepTable sweep_serial(const std::vector<std::array<double, 3>>& grid,
                        const SolveOptions& opts) {
    SweepTable table;
    table.rows.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) table.rows[i] = sweep_one(grid[i], opts);
    return table;
}

SweepTable sweep(const std::vector<std::array<double, 3>>& grid, const SolveOptions& opts) {
    SweepTable table;
    table.rows.resize(grid.size());
    const long count = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) table.rows[i] = sweep_one(grid[i], opts);
    return table;
}

std::vector<std::array<double, 3>> lattice_grid(const std::vector<int>& ns,
                                                const std::vector<double>& lambdas,
                                                const std::vector<double>& mus) {
    std::vector<std::array<double, 3>> grid;
    for (int n : ns) {
        std::vector<double> ls = lambdas;
        if (ls.empty()) {
            const double lo = 1.0 / n, hi = 1.0 / (n - 1);
            for (int k = 1; k <= 3; ++k) ls.push_back(lo + k * (hi - lo) / 4.0);
        }
        for (double l : ls)
            for (double m : mus) grid.push_back({static_cast<double>(n), l, m});
    }
    return grid;
}

std::vector<std::array<double, 3>> default_lattice() {
    return lattice_grid({2, 3, 4}, {}, {-0.5, -1.0, -2.0});
}

}  // namespace imcf
