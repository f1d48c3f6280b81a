#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imcf/error.hpp"

namespace imcf {

// Problem instance: the rotational soliton profile in R^n x R is determined by
// the dimension n of the rotating factor, the soliton speed lambda and the
// axis intercept mu < 0.  The classical existence window is
// 1/n < lambda < 1/(n-1); allow_any_lambda opens the upper end only
// (lambda <= 1/n is always rejected, the tail balance degenerates there).
struct Params {
    int n = 2;
    double lambda = 0.0;
    double mu = -1.0;
    bool allow_any_lambda = false;

    // Limiting second derivative y_rr(0) = 1/(n*lambda*|mu|) at the singular
    // start; also the curvature of the profile curve at the axis.
    double kappa0() const { return 1.0 / (n * lambda * std::fabs(mu)); }

    double window_lo() const { return 1.0 / n; }
    double window_hi() const { return 1.0 / (n - 1); }

    // True when lambda lies strictly inside the existence window, i.e. the
    // structural results (y1, y2, tail decay) are guaranteed to apply.
    bool in_theorem_window() const {
        return lambda > window_lo() && lambda < window_hi();
    }

    // Test-fixture constructor that skips validation.  The sphere
    // (lambda = 1/n) and cylinder (lambda = 1/(n-1)) sit exactly on the window
    // endpoints and serve as closed-form oracles for the integrator; they are
    // not valid solver targets and must never be constructible through
    // validate_params.
    static Params unchecked(int n, double lambda, double mu);
};

Params validate_params(int n, double lambda, double mu, bool allow_any_lambda = false);

// Chart used for a first-order state: y as a graph over r near the singular
// start (slope y_r grows from 0), r as a graph over y after the slope blow-up.
enum class Chart { Y_OF_R, R_OF_Y };

struct ChartState {
    Chart chart = Chart::Y_OF_R;
    double t = 0.0;   // independent variable: r in Y_OF_R, y in R_OF_Y
    double u = 0.0;   // dependent variable
    double du = 0.0;  // first derivative du/dt
};

// State of the arc-length formulation dr/ds = cos(theta), dy/ds = sin(theta),
// dtheta/ds = kappa; regular at the singular start (s=0: r=0, y=mu, theta=0).
struct ArcState {
    double s = 0.0;
    double r = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

enum class Method { CHART_SWITCH, ARC_LENGTH, BOTH };

const char* to_string(Method m);

// One accepted sample of the solved curve, always expressed in the r-chart.
struct Sample {
    double y = 0.0;
    double r = 0.0;
    double r_y = 0.0;
    double r_yy = 0.0;
};

struct ProfileMeta {
    double h0 = 0.0;           // series-start offset actually used
    double rel = 0.0, abs = 0.0;
    double event_tol = 0.0;
    double slope_switch = 0.0;
    double r_floor = 0.0;
    double struct_step = 0.0;  // explicit-leg step cap actually used
    double tail_start = 0.0;   // hand-over height to the implicit tail leg
    long steps_start = 0;      // accepted steps, singular-start leg
    long steps_struct = 0;     // accepted steps, structural explicit leg
    long steps_tail = 0;       // accepted steps, implicit tail leg
    long rejected = 0;
    double h_median_struct = 0.0;  // median accepted step of the explicit legs
    bool even = false;         // even-solution pipeline (starts at y=0, r=r1)
    double even_r1 = 0.0;
};

// Dense, strictly y-ordered sampling of the solved curve with derivatives.
// Stored r_yy always equals the right side of the r-chart equation evaluated
// at the sample's (y, r, r_y), so it inherits that formula's round-off.
struct Profile {
    Params params;
    std::vector<Sample> samples;
    Method method = Method::CHART_SWITCH;
    std::optional<double> switch_y;  // y at the chart switch (chart pipeline only)
    double y_max = 0.0;              // last height reached
    ProfileMeta meta;

    double y_front() const { return samples.front().y; }
    double y_back() const { return samples.back().y; }

    // Value-only interpolation of r(y) by a local cubic through four
    // neighbouring samples.  Deliberately ignores the stored derivatives so
    // that verification paths reading r through this function stay
    // independent of the solver's r_y / r_yy values.
    double r_at(double y) const;

    // Same local cubic applied to the stored slopes; used for event
    // refinement, not by the independent residual checks.
    double r_y_at(double y) const;

    // Index i with samples[i].y <= y <= samples[i+1].y (throws
    // INTERPOLANT_GAP outside the span).
    std::size_t locate(double y) const;
};

// Structural events of the profile: y1 = unique height of maximum radius,
// y2 = unique inflection height beyond y1 (absent outside the existence
// window, e.g. the sphere is concave throughout), r1 = r(y1), kappa0 = start
// curvature limit.
struct Events {
    double y1 = 0.0;
    std::optional<double> y2;
    double r1 = 0.0;
    double kappa0 = 0.0;
};

enum class CheckStatus { PASS, FAIL, NA };

const char* to_string(CheckStatus s);

struct Check {
    std::string name;
    CheckStatus status = CheckStatus::NA;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

// Named verification outcomes; overall is the conjunction over applicable
// (non-NA) checks.
struct VerificationReport {
    std::vector<Check> checks;
    bool overall = true;

    void add(const Check& c) {
        checks.push_back(c);
        if (c.status == CheckStatus::FAIL) overall = false;
    }
    const Check* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

}  // namespace imcf
