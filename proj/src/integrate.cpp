#include "imcf/integrate.hpp"

#include <cmath>

namespace imcf {

namespace {

struct StepFail {};  // internal: stage unsolvable at this h, halve and retry

// One SDIRK step of size h from (y, v); returns the end state.
// gamma = 1 - 1/sqrt(2); stages
//   z1 = gamma*h * f(y + gamma*h,     v + z1)
//   z2 = gamma*h * f(y + h,           v + ((1-gamma)/gamma)*z1 + z2)
//   v+ = v + ((1-gamma)/gamma)*z1 + z2 + ... (equivalently b1 k1 + b2 k2 with
//        b = (1-gamma, gamma)), which coincides with the second stage's base
//        plus z2, so v+ = stage-2 state.
std::array<double, 2> sdirk_step(const Params& params, double y, const std::array<double, 2>& v,
                                 double h, const Tolerances& tols, long& rhs_evals) {
    const double gamma = 1.0 - 1.0 / std::sqrt(2.0);

    auto f = [&](double yy, const std::array<double, 2>& vv) -> std::array<double, 2> {
        ++rhs_evals;
        return {vv[1], rhs_r_chart(yy, vv[0], vv[1], params)};
    };

    auto solve_stage = [&](double y_stage, const std::array<double, 2>& base)
        -> std::array<double, 2> {
        // Solve z = gamma*h*f(y_stage, base + z) by Newton with the analytic
        // Jacobian; returns the stage state base + z.
        std::array<double, 2> z;
        try {
            std::array<double, 2> fb = f(y_stage, base);
            z = {gamma * h * fb[0], gamma * h * fb[1]};
        } catch (const Error& e) {
            if (!detail::recoverable(e)) throw;
            throw StepFail{};
        }
        const double gh = gamma * h;
        for (int it = 0; it < 25; ++it) {
            std::array<double, 2> x = {base[0] + z[0], base[1] + z[1]};
            std::array<double, 2> fx;
            RChartJac jac;
            try {
                fx = f(y_stage, x);
                jac = rhs_r_chart_jacobian(y_stage, x[0], x[1], params);
            } catch (const Error& e) {
                if (!detail::recoverable(e)) throw;
                throw StepFail{};
            }
            // G(z) = z - gh*f(base+z);  J = I - gh*Jf,  Jf = [[0,1],[Fr,Fp]]
            const double g0 = z[0] - gh * fx[0];
            const double g1 = z[1] - gh * fx[1];
            const double j00 = 1.0, j01 = -gh;
            const double j10 = -gh * jac.dF_dr, j11 = 1.0 - gh * jac.dF_dp;
            const double det = j00 * j11 - j01 * j10;
            if (det == 0.0 || !std::isfinite(det)) throw StepFail{};
            const double dz0 = (-g0 * j11 + g1 * j01) / det;
            const double dz1 = (-g1 * j00 + g0 * j10) / det;
            z[0] += dz0;
            z[1] += dz1;
            const double sc0 = tols.abs + tols.rel * std::fabs(x[0]);
            const double sc1 = tols.abs + tols.rel * std::fabs(x[1]);
            if (std::fabs(dz0) < 1e-3 * sc0 && std::fabs(dz1) < 1e-3 * sc1)
                return {base[0] + z[0], base[1] + z[1]};
        }
        throw StepFail{};  // Newton stalled; caller halves h
    };

    std::array<double, 2> s1 = solve_stage(y + gamma * h, v);
    // second-stage base: v + (1-gamma)*h*k1 with k1 = (s1 - v)/(gamma*h)
    const double w = (1.0 - gamma) / gamma;
    std::array<double, 2> base2 = {v[0] + w * (s1[0] - v[0]), v[1] + w * (s1[1] - v[1])};
    std::array<double, 2> s2 = solve_stage(y + h, base2);
    // b = (1-gamma, gamma) matches the last stage: v+ coincides with s2
    return s2;
}

}  // namespace

Trajectory<2> integrate_tail_sdirk(const Params& params, double y0, std::array<double, 2> v0,
                                   double y_end, const Tolerances& tols, double r_floor,
                                   double h_start) {
    if (!(y_end > y0))
        throw Error(ErrorCode::STEP_UNDERFLOW, "tail span is empty (y_end <= y0)");

    Trajectory<2> traj;
    std::vector<double> step_sizes;

    double y = y0;
    std::array<double, 2> v = v0;
    auto node_f = [&](double yy, const std::array<double, 2>& vv) -> std::array<double, 2> {
        traj.stats.rhs_evals++;
        return {vv[1], rhs_r_chart(yy, vv[0], vv[1], params)};
    };
    traj.nodes.push_back({y, v, node_f(y, v)});

    double h = std::fmin(h_start, y_end - y0);

    while (y < y_end) {
        const double min_step = std::fmax(
            tols.min_step,
            32.0 * std::numeric_limits<double>::epsilon() * std::fmax(std::fabs(y), std::fabs(y_end)));
        if (h < min_step)
            throw Error(ErrorCode::STEP_UNDERFLOW,
                        "tail step " + detail::fmt_g(h) + " below minimum at y = " +
                            detail::fmt_g(y));
        if (y + h >= y_end) h = y_end - y;

        std::array<double, 2> full, half, half2;
        try {
            full = sdirk_step(params, y, v, h, tols, traj.stats.rhs_evals);
            half = sdirk_step(params, y, v, 0.5 * h, tols, traj.stats.rhs_evals);
            half2 = sdirk_step(params, y + 0.5 * h, half, 0.5 * h, tols, traj.stats.rhs_evals);
        } catch (const StepFail&) {
            traj.stats.rejected++;
            h *= 0.5;
            continue;
        }

        // step-doubling estimate for an order-2 method: err ~ |fine - coarse|/3
        std::array<double, 2> diff = {(half2[0] - full[0]) / 3.0, (half2[1] - full[1]) / 3.0};
        double err = detail::scaled_err_norm<2>(diff, v, half2, tols.rel, tols.abs);

        if (err <= 1.0) {
            y += h;
            v = half2;  // keep the un-extrapolated fine solution (L-stable)
            traj.nodes.push_back({y, v, node_f(y, v)});
            traj.stats.accepted++;
            step_sizes.push_back(h);

            if (v[0] <= r_floor) {
                // refine the r = r_floor crossing on the interpolant
                double lo = traj.nodes[traj.nodes.size() - 2].t, hi = y;
                while (hi - lo > tols.event_tol) {
                    double mid = 0.5 * (lo + hi);
                    if (traj.eval(mid)[0] <= r_floor)
                        hi = mid;
                    else
                        lo = mid;
                }
                std::array<double, 2> ub = traj.eval(hi);
                traj.nodes.back() = {hi, ub, node_f(hi, ub)};
                traj.stopped = true;
                break;
            }

            double fac = std::clamp(0.9 * std::pow(std::fmax(err, 1e-10), -1.0 / 3.0), 0.2, 5.0);
            h = std::fmin(h * fac, tols.max_step);
        } else {
            traj.stats.rejected++;
            h *= std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.1, 0.9);
        }
    }

    traj.stats.h_median = detail::median_of(step_sizes);
    return traj;
}

}  // namespace imcf
