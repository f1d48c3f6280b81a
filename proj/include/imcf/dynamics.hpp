#pragma once

#include "imcf/model.hpp"

namespace imcf {

// Geometric quantities of the revolution surface at one profile point, used
// for the independent soliton-identity check lambda*H*<X,nu> + 1 = 0.
// Normal convention: nu points so that the sphere fixture has H > 0 and
// <X,nu> < 0 (interior normal on a convex cap).
struct GeometryAtPoint {
    double H = 0.0;         // mean curvature (sum of principal curvatures)
    double X_dot_nu = 0.0;  // pairing of position with the unit normal
    double residual = 0.0;  // lambda*H*<X,nu> + 1, zero on exact solitons
};

// Guard scale for the soliton denominator r - y*r_y (theory keeps it
// positive; we abort on near-vanishing rather than integrate through a flip).
inline double singular_eps(double y, double r) {
    double m = 1.0;
    if (std::fabs(y) > m) m = std::fabs(y);
    if (r > m) m = r;
    return 1e-12 * m;
}

// r-chart equation: r_yy = (1+r_y^2) * [ (n-1)/r - (1+r_y^2)/(lambda*(r - y*r_y)) ].
double rhs_r_chart(double y, double r, double r_y, const Params& p);

// y-chart equation: y_rr = -[(n-1)/r]*(1+y_r^2)*y_r + (1+y_r^2)^2/(lambda*(r*y_r - y)).
double rhs_y_chart(double r, double y, double y_r, const Params& p);

// Arc-length system (dr/ds, dy/ds, dtheta/ds) = (cos theta, sin theta, kappa),
// kappa = -(n-1) sin(theta)/r + 1/(lambda*(r sin(theta) - y cos(theta))).
// Below r_limit_threshold the ill-conditioned sin(theta)/r is replaced by its
// start limit kappa0 (sin(theta)/r -> kappa0 as s -> 0), making the start
// point r=0, theta=0 a regular evaluation with kappa(0) = kappa0.
struct ArcRhs {
    double dr = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;
};

double arc_limit_threshold(const Params& p);

// Auto-selecting form: takes the limit branch only near the singular start
// (r below threshold while still ascending).
ArcRhs rhs_arclength(const ArcState& state, const Params& p);

// Explicit-request form; throws LIMIT_BRANCH_MISUSE when the limit branch is
// requested at r >= arc_limit_threshold.
ArcRhs rhs_arclength(const ArcState& state, const Params& p, bool use_limit_branch);

// Second-order series start for the singular initial condition y(0) = mu,
// y_r(0) = 0: returns the Y_OF_R state at r = h0 with
// y = mu + h0^2/(2 n lambda |mu|), y_r = h0/(n lambda |mu|); truncation O(h0^4).
ChartState series_start(const Params& p, double h0);

// Largest admissible series offset; beyond this the quadratic truncation is
// no longer negligible against integration tolerances.
inline double h0_max(const Params& p) { return 1e-2 * std::fmax(1.0, std::fabs(p.mu)); }

GeometryAtPoint geometry_at(double y, double r, double r_y, double r_yy, const Params& p);

// Partial derivatives of F(y, r, p) = rhs_r_chart with respect to r and p,
// needed by the implicit tail integrator's Newton solves and by the
// curvature resolution floor.
struct RChartJac {
    double dF_dr = 0.0;
    double dF_dp = 0.0;
};

RChartJac rhs_r_chart_jacobian(double y, double r, double p, const Params& params);

// Smallest |r_yy| that the formula can resolve at a state (r, p) known to
// relative accuracy state_rtol.  In the far tail the bracket
// (n-1)/r - (1+p^2)/(lambda*S) is a difference of two nearly equal large
// terms while its value decays like y^(-alpha-2); below this floor the sign
// of an evaluated r_yy is round-off, not geometry.  Sign-structure checks and
// inflection counting treat sub-floor values as indeterminate.
double curvature_resolution_floor(double y, double r, double p, const Params& params,
                                  double state_rtol);

}  // namespace imcf
