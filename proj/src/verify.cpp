#include "imcf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "imcf/dynamics.hpp"
#include "imcf/error.hpp"

namespace imcf {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Window {
    double lo = 0.0, hi = 0.0;
};

// Longest contiguous run of samples on which the profile is a tame graph
// (|r_y| <= 1), clipped to 4 geometric scales so far-tail stretches do not
// dilute the grid.
Window resample_window(const Profile& prof) {
    const auto& ss = prof.samples;
    const double slope_cap = 1.0 + 1e-9;
    std::size_t best_lo = 0, best_len = 0, run_lo = 0, run_len = 0;
    for (std::size_t i = 0; i < ss.size(); ++i) {
        if (std::fabs(ss[i].r_y) <= slope_cap) {
            if (run_len == 0) run_lo = i;
            ++run_len;
            if (run_len > best_len) {
                best_len = run_len;
                best_lo = run_lo;
            }
        } else {
            run_len = 0;
        }
    }
    if (best_len < 8)
        throw Error(ErrorCode::PROFILE_TOO_SHORT,
                    "no usable graph-regular window (|r_y| <= 1 on " +
                        std::to_string(best_len) + " samples)");
    Window w;
    w.lo = ss[best_lo].y;
    w.hi = ss[best_lo + best_len - 1].y;
    const double scale =
        prof.meta.even ? std::fmax(0.5, prof.meta.even_r1) : std::fmax(0.5, std::fabs(prof.params.mu));
    w.hi = std::fmin(w.hi, w.lo + 4.0 * scale);
    if (!(w.hi > w.lo))
        throw Error(ErrorCode::PROFILE_TOO_SHORT, "degenerate resample window");
    return w;
}

template <bool Parallel>
ResidualSummary residual_impl(const Profile& prof, const Params& params, int grid_size) {
    if (grid_size < 16)
        throw Error(ErrorCode::PROFILE_TOO_SHORT, "resample grid below 16 points");
    if (prof.samples.size() < static_cast<std::size_t>(grid_size))
        throw Error(ErrorCode::PROFILE_TOO_SHORT,
                    "profile has " + std::to_string(prof.samples.size()) +
                        " samples, need >= " + std::to_string(grid_size));
    const Window w = resample_window(prof);
    const double h = (w.hi - w.lo) / (grid_size - 1);

    std::vector<double> r(grid_size);
    std::vector<double> ode(grid_size, 0.0), sol(grid_size, 0.0);
    // value-only resample; everything downstream sees these r values only
    // (clamp: accumulated round-off must not push the last node past hi)
    for (int j = 0; j < grid_size; ++j) r[j] = prof.r_at(std::fmin(w.lo + j * h, w.hi));

    auto eval_point = [&](int j) {
        const double y = w.lo + j * h;
        const double ry = (-r[j + 2] + 8.0 * r[j + 1] - 8.0 * r[j - 1] + r[j - 2]) / (12.0 * h);
        const double ryy =
            (-r[j + 2] + 16.0 * r[j + 1] - 30.0 * r[j] + 16.0 * r[j - 1] - r[j - 2]) /
            (12.0 * h * h);
        ode[j] = std::fabs(ryy - rhs_r_chart(y, r[j], ry, params));
        sol[j] = std::fabs(geometry_at(y, r[j], ry, ryy, params).residual);
    };

    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
        for (int j = 2; j <= grid_size - 3; ++j) eval_point(j);
    } else {
        for (int j = 2; j <= grid_size - 3; ++j) eval_point(j);
    }

    ResidualSummary out;
    out.grid_size = grid_size;
    out.window_lo = w.lo;
    out.window_hi = w.hi;
    for (int j = 2; j <= grid_size - 3; ++j) {
        out.max_ode_residual = std::fmax(out.max_ode_residual, ode[j]);
        out.max_soliton_residual = std::fmax(out.max_soliton_residual, sol[j]);
    }
    return out;
}

// Rebuild the options a profile was solved with (verify re-solves must vary
// exactly one knob at a time).
SolveOptions options_from_meta(const Profile& prof) {
    SolveOptions o;
    o.h0 = prof.meta.h0;
    o.slope_switch = prof.meta.slope_switch;
    o.y_max = prof.y_max;
    o.r_floor = prof.meta.r_floor;
    o.struct_step = prof.meta.struct_step;
    o.tail_start = prof.meta.tail_start;
    o.tols.rel = prof.meta.rel;
    o.tols.abs = prof.meta.abs;
    o.tols.event_tol = prof.meta.event_tol;
    return o;
}

Check make(const std::string& name, CheckStatus st, double measured, double threshold,
           const std::string& detail) {
    return Check{name, st, measured, threshold, detail};
}

Check na(const std::string& name, const std::string& why) {
    return make(name, CheckStatus::NA, 0.0, 0.0, why);
}

}  // namespace

ResidualSummary residual_check(const Profile& profile, const Params& params, int grid_size) {
    return residual_impl<true>(profile, params, grid_size);
}

ResidualSummary residual_check_serial(const Profile& profile, const Params& params,
                                      int grid_size) {
    return residual_impl<false>(profile, params, grid_size);
}

VerificationReport property_suite(const Profile& profile, const std::optional<Events>& events,
                                  const Params& params) {
    VerificationReport rep;
    const auto& ss = profile.samples;
    const double event_tol = profile.meta.event_tol > 0.0 ? profile.meta.event_tol : 1e-10;
    const double rtol = std::fmax(profile.meta.rel, 1e-14);
    const double y_end = profile.y_back();

    // -- positivity of the radius
    {
        double mn = ss.front().r;
        for (const auto& s : ss) mn = std::fmin(mn, s.r);
        rep.add(make("radius_positive", mn > 0.0 ? CheckStatus::PASS : CheckStatus::FAIL, mn,
                     0.0, "min r over all samples"));
    }
    // -- support function positivity everywhere
    {
        double mn = ss.front().r - ss.front().y * ss.front().r_y;
        for (const auto& s : ss) mn = std::fmin(mn, s.r - s.y * s.r_y);
        rep.add(make("support_positive", mn > 0.0 ? CheckStatus::PASS : CheckStatus::FAIL, mn,
                     0.0, "min r - y*r_y over all samples"));
    }
    // -- compact-window support margin
    {
        double hi = y_end;
        if (events && events->y2) hi = std::fmin(hi, 10.0 * *events->y2);
        if (profile.y_front() <= 0.0 && y_end > 0.0) {
            double mn = HUGE_VAL;
            for (const auto& s : ss)
                if (s.y >= 0.0 && s.y <= hi) mn = std::fmin(mn, s.r - s.y * s.r_y);
            rep.add(make("support_margin_window",
                         mn > 0.0 ? CheckStatus::PASS : CheckStatus::FAIL, mn, 0.0,
                         "min r - y*r_y on [0, " + num(hi) + "]"));
        } else {
            rep.add(na("support_margin_window", "profile does not cover y = 0"));
        }
    }
    // -- slope sign pattern around y1
    if (!events) {
        rep.add(make("sign_r_y", CheckStatus::FAIL, 0.0, 0.0,
                     "EVENT_NOT_FOUND: no extracted events"));
    } else {
        const double y1 = events->y1;
        double worst = 0.0;
        double worst_y = 0.0;
        for (const auto& s : ss) {
            double v = 0.0;
            if (s.y < y1 - event_tol)
                v = std::fmax(0.0, -s.r_y);  // should be rising
            else if (s.y > y1 + event_tol)
                v = std::fmax(0.0, s.r_y);  // should be falling
            if (v > worst) {
                worst = v;
                worst_y = s.y;
            }
        }
        rep.add(make("sign_r_y", worst == 0.0 ? CheckStatus::PASS : CheckStatus::FAIL, worst,
                     0.0,
                     worst == 0.0 ? "r_y > 0 before y1, < 0 after, at every sample"
                                  : "sign violation near y = " + num(worst_y)));
    }
    // -- curvature sign pattern around y2, resolution-floor aware
    if (!events) {
        rep.add(make("sign_r_yy", CheckStatus::FAIL, 0.0, 0.0,
                     "EVENT_NOT_FOUND: no extracted events"));
    } else if (!events->y2) {
        if (params.in_theorem_window())
            rep.add(make("sign_r_yy", CheckStatus::FAIL, 0.0, 0.0,
                         "EVENT_NOT_FOUND: y2 absent inside the theorem window"));
        else
            rep.add(na("sign_r_yy", "y2 absent: lambda outside the existence window"));
    } else {
        const double y2 = *events->y2;
        double worst = 0.0, worst_y = 0.0;
        for (const auto& s : ss) {
            const double fl = curvature_resolution_floor(s.y, s.r, s.r_y, params, rtol);
            double v = 0.0;
            if (s.y < y2 - event_tol && s.r_yy > fl) v = s.r_yy;
            if (s.y > y2 + event_tol && s.r_yy < -fl) v = -s.r_yy;
            if (v > worst) {
                worst = v;
                worst_y = s.y;
            }
        }
        rep.add(make("sign_r_yy", worst == 0.0 ? CheckStatus::PASS : CheckStatus::FAIL, worst,
                     0.0,
                     worst == 0.0
                         ? "r_yy < 0 before y2, > 0 after (sub-floor values indeterminate)"
                         : "resolved sign violation near y = " + num(worst_y)));
    }
    // -- support monotone and bounded on (0, y1)
    if (!events) {
        rep.add(make("support_monotone", CheckStatus::FAIL, 0.0, 0.0,
                     "EVENT_NOT_FOUND: no extracted events"));
    } else if (!(events->y1 > 0.0) || profile.y_front() > 0.0) {
        rep.add(na("support_monotone", "window (0, y1) is empty or uncovered"));
    } else {
        const double y1 = events->y1;
        const double r0 = profile.r_at(0.0);
        const double slack = 1e-10 * std::fmax(1.0, events->r1);
        double min_step = HUGE_VAL;
        double lo_viol = 0.0, hi_viol = 0.0;
        double prev_s = r0;
        bool first = true;
        for (const auto& s : ss) {
            if (s.y < 0.0 || s.y > y1) continue;
            const double sv = s.r - s.y * s.r_y;
            if (!first) min_step = std::fmin(min_step, sv - prev_s);
            prev_s = sv;
            first = false;
            lo_viol = std::fmax(lo_viol, r0 - sv);
            hi_viol = std::fmax(hi_viol, sv - events->r1);
        }
        const bool ok = min_step >= -slack && lo_viol <= 1e-8 && hi_viol <= 1e-8;
        rep.add(make("support_monotone", ok ? CheckStatus::PASS : CheckStatus::FAIL,
                     min_step == HUGE_VAL ? 0.0 : min_step, -slack,
                     "min forward difference of r - y*r_y on (0, y1); bounds r(0) <= S <= r1 "
                     "off by at most (" +
                         num(lo_viol) + ", " + num(hi_viol) + ")"));
    }
    // -- weakened arctan bound y1 <= (pi/2) r1 / c4
    if (!events) {
        rep.add(make("y1_arctan_bound", CheckStatus::FAIL, 0.0, 0.0,
                     "EVENT_NOT_FOUND: no extracted events"));
    } else {
        const double c4 = 1.0 / params.lambda - (params.n - 1);
        if (c4 <= 0.0) {
            rep.add(na("y1_arctan_bound", "c4 = 1/lambda - (n-1) <= 0 outside the window"));
        } else {
            const double bound = 1.5707963267948966 * events->r1 / c4;
            rep.add(make("y1_arctan_bound",
                         events->y1 <= bound ? CheckStatus::PASS : CheckStatus::FAIL,
                         events->y1, bound, "y1 against (pi/2) r1 / c4, c4 = " + num(c4)));
        }
    }

    // -- tail checks need a long tail to be meaningful
    double y2_ref = 1.0;
    if (events && events->y2) y2_ref = std::fmax(1.0, *events->y2);
    const bool tail_long = y_end >= 100.0 * y2_ref;

    if (!tail_long) {
        rep.add(na("tail_flat_yry", "tail too short (y_end = " + num(y_end) + ")"));
        rep.add(na("tail_radius_decay", "tail too short"));
        rep.add(na("tail_exponent", "tail too short"));
    } else {
        const double at_end = std::fabs(y_end * ss.back().r_y);
        const double at_half = std::fabs(0.5 * y_end * profile.r_y_at(0.5 * y_end));
        const bool flat = at_end <= 1e-2 && at_end < at_half;
        rep.add(make("tail_flat_yry", flat ? CheckStatus::PASS : CheckStatus::FAIL, at_end,
                     1e-2,
                     "|y r_y| at y_end; halfway value " + num(at_half) +
                         (at_end < at_half ? " (decreasing)" : " (NOT decreasing)")));

        if (events && events->y2) {
            const double r_end = ss.back().r;
            const double r_at_y2 = profile.r_at(*events->y2);
            rep.add(make("tail_radius_decay",
                         r_end < r_at_y2 / 10.0 ? CheckStatus::PASS : CheckStatus::FAIL, r_end,
                         r_at_y2 / 10.0, "r(y_end) against r(y2)/10"));
        } else {
            rep.add(na("tail_radius_decay", "y2 absent"));
        }

        try {
            TailFit tf = tail_fit(profile, params);
            const double dev = std::fabs(tf.alpha_fit - tf.alpha_pred);
            rep.add(make("tail_exponent",
                         dev <= 0.1 * std::fabs(tf.alpha_pred) ? CheckStatus::PASS
                                                               : CheckStatus::FAIL,
                         tf.alpha_fit, tf.alpha_pred,
                         "fitted decay exponent vs predicted, rms " + num(tf.rms)));
        } catch (const Error& e) {
            rep.add(na("tail_exponent", e.what()));
        }
    }

    // -- continuous-dependence proxy: halve h0, compare r(0)
    if (profile.meta.even || profile.method != Method::CHART_SWITCH) {
        rep.add(na("h0_robustness", "chart pipeline only"));
    } else if (profile.y_front() > 0.0 || y_end < 0.0) {
        rep.add(na("h0_robustness", "profile does not cover y = 0"));
    } else {
        try {
            SolveOptions o = options_from_meta(profile);
            o.h0 = 0.5 * profile.meta.h0;
            o.y_max = std::fmin(profile.y_max, profile.meta.tail_start);
            Profile other = solve_profile(params, o);
            const double d = std::fabs(profile.r_at(0.0) - other.r_at(0.0));
            rep.add(make("h0_robustness", d <= 1e-7 ? CheckStatus::PASS : CheckStatus::FAIL, d,
                         1e-7, "|r(0) change| under h0 -> h0/2"));
        } catch (const Error& e) {
            rep.add(make("h0_robustness", CheckStatus::FAIL, 0.0, 1e-7,
                         std::string("re-solve failed: ") + e.what()));
        }
    }
    // -- cross-method agreement over the shared range
    if (profile.meta.even) {
        rep.add(na("cross_method", "even pipeline has a single method"));
    } else {
        try {
            SolveOptions o = options_from_meta(profile);
            Profile other = profile.method == Method::CHART_SWITCH ? solve_arclength(params, o)
                                                                   : solve_profile(params, o);
            CrossCheck cc = cross_validate(profile, other);
            rep.add(make("cross_method",
                         cc.sup_distance <= 1e-6 ? CheckStatus::PASS : CheckStatus::FAIL,
                         cc.sup_distance, 1e-6,
                         "sup |r_a - r_b| on [" + num(cc.lo) + ", " + num(cc.hi) + "]"));
        } catch (const Error& e) {
            rep.add(make("cross_method", CheckStatus::FAIL, 0.0, 1e-6,
                         std::string("re-solve failed: ") + e.what()));
        }
    }

    // -- even-pipeline identities
    if (!profile.meta.even) {
        rep.add(na("even_start_slope", "even pipeline only"));
        rep.add(na("even_single_inflection", "even pipeline only"));
    } else {
        const double r1 = profile.meta.even_r1;
        const double slope0 = std::fabs(ss.front().r_y);
        const double curv0 = ss.front().r_yy;
        const double curv_ref = (params.n - 1 - 1.0 / params.lambda) / r1;
        const double dev = std::fabs(curv0 - curv_ref);
        const bool ok = slope0 <= 1e-10 && dev <= 1e-8;
        rep.add(make("even_start_slope", ok ? CheckStatus::PASS : CheckStatus::FAIL, slope0,
                     1e-10,
                     "|r_y(0)|; r_yy(0) off (n-1-1/lambda)/r1 by " + num(dev)));
        const int flips = resolved_inflection_count(profile, params);
        rep.add(make("even_single_inflection",
                     flips == 1 ? CheckStatus::PASS : CheckStatus::FAIL,
                     static_cast<double>(flips), 1.0,
                     "resolved r_yy sign changes over the profile"));
    }

    return rep;
}

ConvergenceResult convergence_study(const Params& params, const SolveOptions& opts,
                                    const std::vector<Tolerances>& ladder,
                                    std::function<double(double)> exact) {
    if (ladder.size() < 3)
        throw Error(ErrorCode::BAD_LADDER,
                    "need >= 3 rungs, got " + std::to_string(ladder.size()));
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i].rel < ladder[i - 1].rel))
            throw Error(ErrorCode::BAD_LADDER, "ladder must tighten strictly");

    std::vector<Profile> rungs;
    rungs.reserve(ladder.size());
    for (const auto& t : ladder) {
        SolveOptions o = opts;
        o.tols = t;
        o.struct_step = 1e9;  // release the cap: step size must track tolerance
        rungs.push_back(solve_profile(params, o));
    }
    const Profile& ref = rungs.back();

    // probe window: graph-regular span of the reference, edges shaved 10%
    double wlo = HUGE_VAL, whi = -HUGE_VAL;
    for (const auto& s : ref.samples)
        if (std::fabs(s.r_y) <= 1.0) {
            wlo = std::fmin(wlo, s.y);
            whi = std::fmax(whi, s.y);
        }
    const double width = whi - wlo;
    wlo += 0.1 * width;
    whi -= 0.1 * width;

    ConvergenceResult out;
    for (std::size_t i = 0; i < rungs.size(); ++i) {
        const Profile& p = rungs[i];
        const bool self_ref = !exact && i + 1 == rungs.size();
        double err = 0.0;
        if (!self_ref) {
            for (const auto& s : p.samples) {
                if (s.y < wlo || s.y > whi) continue;
                const double rv = exact ? exact(s.y) : ref.r_at(s.y);
                err = std::fmax(err, std::fabs(s.r - rv));
            }
        }
        out.errors.push_back(err);
        const long steps = p.meta.steps_start + p.meta.steps_struct;
        out.h_effective.push_back((p.y_back() - p.y_front()) / std::fmax(1.0, double(steps)));
    }

    // log-log slope over rungs with a measurable error
    double sx = 0, sz = 0, sxx = 0, sxz = 0;
    long m = 0;
    for (std::size_t i = 0; i < out.errors.size(); ++i) {
        if (!(out.errors[i] > 1e-14)) continue;
        const double x = std::log(out.h_effective[i]);
        const double z = std::log(out.errors[i]);
        sx += x;
        sz += z;
        sxx += x * x;
        sxz += x * z;
        ++m;
    }
    if (m >= 2) {
        const double det = m * sxx - sx * sx;
        if (std::fabs(det) > 0.0) out.observed_order = (m * sxz - sx * sz) / det;
    }
    return out;
}

CrossCheck cross_validate(const Profile& a, const Profile& b) {
    CrossCheck cc;
    cc.lo = std::fmax(a.y_front(), b.y_front());
    cc.hi = std::fmin(a.y_back(), b.y_back());
    if (!(cc.hi > cc.lo))
        throw Error(ErrorCode::NO_OVERLAP,
                    "profiles share no y-range ([" + num(a.y_front()) + ", " + num(a.y_back()) +
                        "] vs [" + num(b.y_front()) + ", " + num(b.y_back()) + "])");
    const int grid = 1000;
    const double h = (cc.hi - cc.lo) / (grid - 1);
    for (int j = 0; j < grid; ++j) {
        // clamp: accumulated round-off must not push the last node past hi
        const double y = std::fmin(cc.lo + j * h, cc.hi);
        cc.sup_distance = std::fmax(cc.sup_distance, std::fabs(a.r_at(y) - b.r_at(y)));
    }
    return cc;
}

}  // namespace imcf
