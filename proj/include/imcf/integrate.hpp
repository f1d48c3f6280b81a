#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "imcf/dynamics.hpp"
#include "imcf/error.hpp"

namespace imcf {

struct Tolerances {
    double rel = 1e-10;
    double abs = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 0.0;  // 0: derived floor 32*eps*|t| per step
    double event_tol = 1e-10;
};

// Trajectory of accepted steps with node derivatives.  Dense output matches
// node values and slopes exactly; on intervals produced by the explicit pair
// the stored stage combination q upgrades it to the method's own 4th-order
// continuous extension (interpolation error then sits below the node error
// instead of dominating it).  Intervals with q = 0 degrade gracefully to the
// cubic Hermite through the same endpoint data.
template <int N>
struct Trajectory {
    struct Node {
        double t;
        std::array<double, N> u;
        std::array<double, N> f;
        std::array<double, N> q{};  // continuous-extension vector of [t_i, t_i+1]
    };

    std::vector<Node> nodes;

    struct Stats {
        long accepted = 0;
        long rejected = 0;
        long rhs_evals = 0;
        double h_median = 0.0;
    } stats;

    bool stopped = false;  // terminated by the stop predicate (not by t_end)

    double t_front() const { return nodes.front().t; }
    double t_back() const { return nodes.back().t; }

    std::size_t locate(double t) const {
        if (nodes.size() < 2)
            throw Error(ErrorCode::INTERPOLANT_GAP, "trajectory has no interval coverage");
        const double slack = 1e-13 * (std::fabs(t_front()) + std::fabs(t_back()) + 1.0);
        if (t < t_front() - slack || t > t_back() + slack)
            throw Error(ErrorCode::INTERPOLANT_GAP,
                        "t outside trajectory span [" + std::to_string(t_front()) + ", " +
                            std::to_string(t_back()) + "]");
        std::size_t lo = 0, hi = nodes.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (nodes[mid].t <= t)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    // Value at t via C1 + x(C2 + (1-x)(C3 + x(C4 + (1-x)C5))): a quartic in
    // x = (t - t_i)/h whose value and slope agree with both interval
    // endpoints for any C5; C5 = q carries the order-raising correction.
    std::array<double, N> eval(double t) const {
        std::size_t i = locate(t);
        const Node& a = nodes[i];
        const Node& b = nodes[i + 1];
        const double h = b.t - a.t;
        const double x = (t - a.t) / h;
        std::array<double, N> out{};
        for (int c = 0; c < N; ++c) {
            const double d = b.u[c] - a.u[c];
            const double c3 = h * a.f[c] - d;
            const double c4 = d - h * b.f[c] - c3;
            out[c] = a.u[c] + x * (d + (1.0 - x) * (c3 + x * (c4 + (1.0 - x) * a.q[c])));
        }
        return out;
    }

    // First derivative d(u_comp)/dt of the interpolant at t.
    double eval1(double t, int comp) const {
        std::size_t i = locate(t);
        const Node& a = nodes[i];
        const Node& b = nodes[i + 1];
        const double h = b.t - a.t;
        const double x = (t - a.t) / h;
        const double d = b.u[comp] - a.u[comp];
        const double c3 = h * a.f[comp] - d;
        const double c4 = d - h * b.f[comp] - c3;
        const double c5 = a.q[comp];
        const double dp = d + (1.0 - 2.0 * x) * c3 + x * (2.0 - 3.0 * x) * c4 +
                          2.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * c5;
        return dp / h;
    }
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

template <int N>
double scaled_err_norm(const std::array<double, N>& e, const std::array<double, N>& u0,
                       const std::array<double, N>& u1, double rel, double abs) {
    double acc = 0.0;
    for (int c = 0; c < N; ++c) {
        double sc = abs + rel * std::fmax(std::fabs(u0[c]), std::fabs(u1[c]));
        double q = e[c] / sc;
        acc += q * q;
    }
    return std::sqrt(acc / N);
}

inline bool recoverable(const Error& e) {
    return e.code() == ErrorCode::SINGULAR_DENOMINATOR ||
           e.code() == ErrorCode::NONPOSITIVE_RADIUS;
}

inline double median_of(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace detail

// Embedded Dormand-Prince 4(5) pair with FSAL, PI step-size control and the
// pair's 4th-order continuous extension for dense output.  stop_predicate
// (t, u) -> bool, when supplied,
// terminates the integration at the first accepted step whose endpoint
// satisfies it; the boundary is then refined by bisection on the interpolant
// to event_tol and becomes the final node.  RHS failures on trial states
// (singular denominator, nonpositive radius) are treated as step rejections.
template <int N, class RHS, class Stop>
Trajectory<N> integrate_adaptive(RHS&& rhs, double t0, std::array<double, N> u0, double t_end,
                                 const Tolerances& tols, Stop&& stop_predicate) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    // continuous-extension weights of the pair (4th-order interpolant)
    static const double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    if (!(t_end > t0))
        throw Error(ErrorCode::STEP_UNDERFLOW, "integration span is empty (t_end <= t0)");

    Trajectory<N> traj;
    std::vector<double> step_sizes;

    std::array<double, N> u = u0;
    double t = t0;
    std::array<double, N> f0 = rhs(t, u);
    traj.stats.rhs_evals++;
    traj.nodes.push_back({t, u, f0});

    constexpr bool has_stop = !std::is_same_v<std::decay_t<Stop>, std::nullptr_t>;
    if constexpr (has_stop) {
        if (stop_predicate(t, u)) {
            traj.stopped = true;
            return traj;
        }
    }

    // initial step: standard two-probe selection against the scaled norm
    double h;
    {
        double nu = 0.0, nf = 0.0;
        for (int c = 0; c < N; ++c) {
            double sc = tols.abs + tols.rel * std::fabs(u[c]);
            nu += (u[c] / sc) * (u[c] / sc);
            nf += (f0[c] / sc) * (f0[c] / sc);
        }
        nu = std::sqrt(nu / N);
        nf = std::sqrt(nf / N);
        double h_a = (nu > 1e-10 && nf > 1e-10) ? 0.01 * nu / nf : 1e-6 * (t_end - t0);
        h_a = std::fmin(h_a, t_end - t0);
        std::array<double, N> u_probe;
        for (int c = 0; c < N; ++c) u_probe[c] = u[c] + h_a * f0[c];
        double d2 = 0.0;
        bool probe_ok = true;
        try {
            std::array<double, N> f_probe = rhs(t + h_a, u_probe);
            traj.stats.rhs_evals++;
            for (int c = 0; c < N; ++c) {
                double sc = tols.abs + tols.rel * std::fabs(u[c]);
                double q = (f_probe[c] - f0[c]) / sc;
                d2 += q * q;
            }
            d2 = std::sqrt(d2 / N) / h_a;
        } catch (const Error& e) {
            if (!detail::recoverable(e)) throw;
            probe_ok = false;
        }
        double h_b;
        if (!probe_ok || std::fmax(nf, d2) <= 1e-15)
            h_b = std::fmax(1e-6 * (t_end - t0), h_a * 1e-3);
        else
            h_b = std::pow(0.01 / std::fmax(nf, d2), 0.2);
        h = std::fmin(std::fmin(100.0 * h_a, h_b), tols.max_step);
        h = std::fmin(h, t_end - t0);
    }

    double err_prev = 1.0;  // PI memory
    std::array<double, N> k1 = f0, k2, k3, k4, k5, k6, k7, unew, uerr, stage;

    while (t < t_end) {
        const double min_step =
            std::fmax(tols.min_step, 32.0 * std::numeric_limits<double>::epsilon() *
                                         std::fmax(std::fabs(t), std::fabs(t_end)));
        if (h < min_step)
            throw Error(ErrorCode::STEP_UNDERFLOW,
                        "required step " + detail::fmt_g(h) + " below minimum " +
                            detail::fmt_g(min_step) + " at t = " + detail::fmt_g(t));
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }

        bool stage_failed = false;
        try {
            for (int c = 0; c < N; ++c) stage[c] = u[c] + h * a21 * k1[c];
            k2 = rhs(t + c2 * h, stage);
            for (int c = 0; c < N; ++c) stage[c] = u[c] + h * (a31 * k1[c] + a32 * k2[c]);
            k3 = rhs(t + c3 * h, stage);
            for (int c = 0; c < N; ++c)
                stage[c] = u[c] + h * (a41 * k1[c] + a42 * k2[c] + a43 * k3[c]);
            k4 = rhs(t + c4 * h, stage);
            for (int c = 0; c < N; ++c)
                stage[c] = u[c] + h * (a51 * k1[c] + a52 * k2[c] + a53 * k3[c] + a54 * k4[c]);
            k5 = rhs(t + c5 * h, stage);
            for (int c = 0; c < N; ++c)
                stage[c] = u[c] + h * (a61 * k1[c] + a62 * k2[c] + a63 * k3[c] + a64 * k4[c] +
                                       a65 * k5[c]);
            k6 = rhs(t + h, stage);
            for (int c = 0; c < N; ++c)
                unew[c] = u[c] + h * (b1 * k1[c] + b3 * k3[c] + b4 * k4[c] + b5 * k5[c] +
                                      b6 * k6[c]);
            k7 = rhs(t + h, unew);
            traj.stats.rhs_evals += 6;
        } catch (const Error& e) {
            if (!detail::recoverable(e)) throw;
            stage_failed = true;
        }

        if (stage_failed) {
            traj.stats.rejected++;
            h *= 0.5;
            continue;
        }

        for (int c = 0; c < N; ++c)
            uerr[c] = h * (e1 * k1[c] + e3 * k3[c] + e4 * k4[c] + e5 * k5[c] + e6 * k6[c] +
                           e7 * k7[c]);
        double err = detail::scaled_err_norm<N>(uerr, u, unew, tols.rel, tols.abs);

        if (err <= 1.0) {
            for (int c = 0; c < N; ++c)
                traj.nodes.back().q[c] = h * (d1 * k1[c] + d3 * k3[c] + d4 * k4[c] +
                                              d5 * k5[c] + d6 * k6[c] + d7 * k7[c]);
            t += h;
            u = unew;
            k1 = k7;  // FSAL
            traj.nodes.push_back({t, u, k1});
            traj.stats.accepted++;
            step_sizes.push_back(h);

            if constexpr (has_stop) {
                if (stop_predicate(t, u)) {
                    // refine the boundary on the last interval's interpolant
                    double lo = traj.nodes[traj.nodes.size() - 2].t;
                    double hi = t;
                    while (hi - lo > tols.event_tol) {
                        double mid = 0.5 * (lo + hi);
                        if (stop_predicate(mid, traj.eval(mid)))
                            hi = mid;
                        else
                            lo = mid;
                    }
                    std::array<double, N> ub = traj.eval(hi);
                    std::array<double, N> fb = rhs(hi, ub);
                    traj.stats.rhs_evals++;
                    traj.nodes.back() = {hi, ub, fb};
                    // the shortened final interval keeps endpoint matching
                    // only; its extension vector no longer applies
                    traj.nodes[traj.nodes.size() - 2].q = {};
                    traj.stopped = true;
                    break;
                }
            }
            if (last) break;

            double fac = 0.9 * std::pow(std::fmax(err, 1e-10), -0.17) * std::pow(err_prev, 0.04);
            fac = std::clamp(fac, 0.2, 6.0);
            err_prev = std::fmax(err, 1e-10);
            h = std::fmin(h * fac, tols.max_step);
        } else {
            traj.stats.rejected++;
            double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            h *= fac;
        }
    }

    traj.stats.h_median = detail::median_of(step_sizes);
    return traj;
}

template <int N, class RHS>
Trajectory<N> integrate_adaptive(RHS&& rhs, double t0, std::array<double, N> u0, double t_end,
                                 const Tolerances& tols) {
    return integrate_adaptive<N>(static_cast<RHS&&>(rhs), t0, u0, t_end, tols, nullptr);
}

// All abscissae where event_fn(t, u(t)) changes sign along the trajectory:
// node-value sign scan, each bracket refined by bisection on the dense
// interpolant to width <= event_tol.  An exact zero at a node counts as a
// root at that node.  Returns ascending; empty when no sign change.
template <int N, class Fn>
std::vector<double> locate_event(const Trajectory<N>& traj, Fn&& event_fn,
                                 const Tolerances& tols) {
    if (traj.nodes.size() < 2)
        throw Error(ErrorCode::INTERPOLANT_GAP, "trajectory has no interval coverage");
    std::vector<double> roots;
    double g_prev = event_fn(traj.nodes[0].t, traj.nodes[0].u);
    bool prev_was_zero = (g_prev == 0.0);
    if (prev_was_zero) roots.push_back(traj.nodes[0].t);
    for (std::size_t i = 1; i < traj.nodes.size(); ++i) {
        double g = event_fn(traj.nodes[i].t, traj.nodes[i].u);
        if (g == 0.0) {
            roots.push_back(traj.nodes[i].t);
            g_prev = g;
            prev_was_zero = true;
            continue;
        }
        if (!prev_was_zero && ((g_prev < 0.0) != (g < 0.0))) {
            double lo = traj.nodes[i - 1].t, hi = traj.nodes[i].t;
            bool lo_neg = g_prev < 0.0;
            while (hi - lo > tols.event_tol) {
                double mid = 0.5 * (lo + hi);
                double gm = event_fn(mid, traj.eval(mid));
                if (gm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((gm < 0.0) == lo_neg)
                    lo = mid;
                else
                    hi = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        g_prev = g;
        prev_was_zero = false;
    }
    return roots;
}

// L-stable two-stage SDIRK (gamma = 1 - 1/sqrt(2), order 2) for the r-chart
// system v = (r, r_y), v' = (r_y, F(y, r, r_y)).  The algebraic tail of the
// profile is stiff: linearizing F about the decaying solution gives a fast
// mode with rate ~ y/(lambda r^2) ~ y^(1+2*alpha), which forces explicit
// methods to billions of steps by y ~ 10^3 while the solution itself is
// glacially smooth.  Stage equations are solved by Newton iteration with the
// closed-form 2x2 Jacobian; the error estimate is step doubling (the
// half-step pair is kept, uncorrected, to preserve L-stability).  Terminates
// at y_end or where r falls to r_floor (boundary refined on the interpolant).
Trajectory<2> integrate_tail_sdirk(const Params& params, double y0, std::array<double, 2> v0,
                                   double y_end, const Tolerances& tols, double r_floor,
                                   double h_start);

}  // namespace imcf
