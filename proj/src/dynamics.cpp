#include "imcf/dynamics.hpp"

#include <cfloat>
#include <cmath>
#include <string>

namespace imcf {

namespace {

[[noreturn]] void throw_singular(const char* where, double den, double eps) {
    throw Error(ErrorCode::SINGULAR_DENOMINATOR,
                std::string(where) + ": |denominator| = " + std::to_string(std::fabs(den)) +
                    " < eps = " + std::to_string(eps));
}

[[noreturn]] void throw_radius(const char* where, double r) {
    throw Error(ErrorCode::NONPOSITIVE_RADIUS,
                std::string(where) + ": r = " + std::to_string(r) + " <= 0");
}

}  // namespace

double rhs_r_chart(double y, double r, double r_y, const Params& p) {
    if (!(r > 0.0)) throw_radius("rhs_r_chart", r);
    const double one = 1.0 + r_y * r_y;
    const double den = r - y * r_y;  // support function; positive on solutions
    const double eps = singular_eps(y, r);
    if (std::fabs(den) < eps) throw_singular("rhs_r_chart", den, eps);
    return one * ((p.n - 1) / r - one / (p.lambda * den));
}

double rhs_y_chart(double r, double y, double y_r, const Params& p) {
    if (!(r > 0.0)) throw_radius("rhs_y_chart", r);
    const double one = 1.0 + y_r * y_r;
    const double den = r * y_r - y;  // = (r - y*r_y)*y_r in chart terms, positive here
    const double eps = singular_eps(y, r);
    if (std::fabs(den) < eps) throw_singular("rhs_y_chart", den, eps);
    return -((p.n - 1) / r) * one * y_r + one * one / (p.lambda * den);
}

double arc_limit_threshold(const Params& p) {
    return 1e-4 * std::fmax(1.0, std::fabs(p.mu));
}

ArcRhs rhs_arclength(const ArcState& state, const Params& p, bool use_limit_branch) {
    const double st = std::sin(state.theta);
    const double ct = std::cos(state.theta);
    double bend;  // (n-1) * sin(theta)/r, the rotational curvature term
    if (use_limit_branch) {
        if (state.r >= arc_limit_threshold(p))
            throw Error(ErrorCode::LIMIT_BRANCH_MISUSE,
                        "limit branch requested at r = " + std::to_string(state.r) +
                            " >= threshold " + std::to_string(arc_limit_threshold(p)));
        // Near the axis sin(theta)/r -> kappa0; relative deviation is
        // O((kappa0*r)^2), far below integration tolerance at the threshold.
        bend = (p.n - 1) * p.kappa0();
    } else {
        if (!(state.r > 0.0)) throw_radius("rhs_arclength", state.r);
        bend = (p.n - 1) * st / state.r;
    }
    const double den = state.r * st - state.y * ct;  // support function along the curve
    const double eps = singular_eps(state.y, state.r);
    if (std::fabs(den) < eps) throw_singular("rhs_arclength", den, eps);
    ArcRhs out;
    out.dr = ct;
    out.dy = st;
    out.dtheta = -bend + 1.0 / (p.lambda * den);
    return out;
}

ArcRhs rhs_arclength(const ArcState& state, const Params& p) {
    // The ascending start (theta small) is the only place the curve meets the
    // axis with the kappa0 limit; a descending pole crossing (theta past
    // pi/2, e.g. the sphere fixture closing up) keeps sin(theta)/r finite and
    // uses the literal formula all the way down.
    const bool near_start = state.r < arc_limit_threshold(p) && state.theta < 0.78539816339744831;
    return rhs_arclength(state, p, near_start);
}

ChartState series_start(const Params& p, double h0) {
    if (!(h0 > 0.0) || h0 > h0_max(p))
        throw Error(ErrorCode::H0_OUT_OF_RANGE,
                    "h0 = " + std::to_string(h0) + " outside (0, " +
                        std::to_string(h0_max(p)) + "]");
    const double k0 = p.kappa0();
    ChartState s;
    s.chart = Chart::Y_OF_R;
    s.t = h0;
    s.u = p.mu + 0.5 * h0 * h0 * k0;
    s.du = h0 * k0;
    return s;
}

GeometryAtPoint geometry_at(double y, double r, double r_y, double r_yy, const Params& p) {
    if (!(r > 0.0)) throw_radius("geometry_at", r);
    const double one = 1.0 + r_y * r_y;
    const double root = std::sqrt(one);
    GeometryAtPoint g;
    g.H = ((p.n - 1) / r - r_yy / one) / root;
    g.X_dot_nu = -(r - y * r_y) / root;
    g.residual = p.lambda * g.H * g.X_dot_nu + 1.0;
    return g;
}

RChartJac rhs_r_chart_jacobian(double y, double r, double p_slope, const Params& params) {
    if (!(r > 0.0)) throw_radius("rhs_r_chart_jacobian", r);
    const double one = 1.0 + p_slope * p_slope;
    const double S = r - y * p_slope;
    const double eps = singular_eps(y, r);
    if (std::fabs(S) < eps) throw_singular("rhs_r_chart_jacobian", S, eps);
    const double lamS = params.lambda * S;
    RChartJac j;
    // F = (1+p^2) * [ (n-1)/r - (1+p^2)/(lambda*S) ],  S = r - y*p
    j.dF_dr = one * (-(params.n - 1) / (r * r) + one / (params.lambda * S * S));
    j.dF_dp = 2.0 * p_slope * ((params.n - 1) / r - one / lamS) +
              one * (-2.0 * p_slope / lamS - one * y / (params.lambda * S * S));
    return j;
}

double curvature_resolution_floor(double y, double r, double p_slope, const Params& params,
                                  double state_rtol) {
    const double one = 1.0 + p_slope * p_slope;
    const double S = r - y * p_slope;
    const double eps = singular_eps(y, r);
    if (!(r > 0.0) || std::fabs(S) < eps) return HUGE_VAL;  // sign unresolvable here anyway
    // Round-off of the formula itself: the bracket subtracts two terms of
    // magnitude up to M.
    const double M = one * ((params.n - 1) / r + one / (params.lambda * std::fabs(S)));
    double floor_val = 32.0 * DBL_EPSILON * M;
    // Uncertainty inherited from the integrated state, amplified through the
    // formula's partial derivatives.  The factor 10 is a cushion for global
    // error growth beyond the per-step tolerance.
    RChartJac j = rhs_r_chart_jacobian(y, r, p_slope, params);
    const double dr = 10.0 * state_rtol * r;
    const double dp = 10.0 * state_rtol * std::fmax(std::fabs(p_slope), 1e-6);
    floor_val += std::fabs(j.dF_dr) * dr + std::fabs(j.dF_dp) * dp;
    return floor_val;
}

}  // namespace imcf
