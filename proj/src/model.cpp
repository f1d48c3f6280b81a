#include "imcf/model.hpp"

#include <algorithm>
#include <cmath>

namespace imcf {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DIMENSION_TOO_SMALL: return "DIMENSION_TOO_SMALL";
        case ErrorCode::LAMBDA_OUT_OF_RANGE: return "LAMBDA_OUT_OF_RANGE";
        case ErrorCode::MU_NONNEGATIVE: return "MU_NONNEGATIVE";
        case ErrorCode::NONFINITE_INPUT: return "NONFINITE_INPUT";
        case ErrorCode::H0_OUT_OF_RANGE: return "H0_OUT_OF_RANGE";
        case ErrorCode::SINGULAR_DENOMINATOR: return "SINGULAR_DENOMINATOR";
        case ErrorCode::NONPOSITIVE_RADIUS: return "NONPOSITIVE_RADIUS";
        case ErrorCode::LIMIT_BRANCH_MISUSE: return "LIMIT_BRANCH_MISUSE";
        case ErrorCode::STEP_UNDERFLOW: return "STEP_UNDERFLOW";
        case ErrorCode::INTERPOLANT_GAP: return "INTERPOLANT_GAP";
        case ErrorCode::SUPPORT_FUNCTION_VIOLATION: return "SUPPORT_FUNCTION_VIOLATION";
        case ErrorCode::EVENT_NOT_FOUND: return "EVENT_NOT_FOUND";
        case ErrorCode::MULTIPLE_EVENTS: return "MULTIPLE_EVENTS";
        case ErrorCode::TAIL_TOO_SHORT: return "TAIL_TOO_SHORT";
        case ErrorCode::PROFILE_TOO_SHORT: return "PROFILE_TOO_SHORT";
        case ErrorCode::NO_OVERLAP: return "NO_OVERLAP";
        case ErrorCode::BAD_LADDER: return "BAD_LADDER";
        case ErrorCode::UNKNOWN_KEY: return "UNKNOWN_KEY";
        case ErrorCode::TYPE_MISMATCH: return "TYPE_MISMATCH";
        case ErrorCode::MISSING_REQUIRED: return "MISSING_REQUIRED";
        case ErrorCode::IO_FAILURE: return "IO_FAILURE";
    }
    return "UNKNOWN_ERROR";
}

const char* to_string(Method m) {
    switch (m) {
        case Method::CHART_SWITCH: return "chart";
        case Method::ARC_LENGTH: return "arc";
        case Method::BOTH: return "both";
    }
    return "?";
}

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::PASS: return "PASS";
        case CheckStatus::FAIL: return "FAIL";
        case CheckStatus::NA: return "NA";
    }
    return "?";
}

Params Params::unchecked(int n, double lambda, double mu) {
    Params p;
    p.n = n;
    p.lambda = lambda;
    p.mu = mu;
    p.allow_any_lambda = true;
    return p;
}

Params validate_params(int n, double lambda, double mu, bool allow_any_lambda) {
    if (!std::isfinite(lambda) || !std::isfinite(mu))
        throw Error(ErrorCode::NONFINITE_INPUT,
                    "lambda and mu must be finite numbers");
    if (n < 2)
        throw Error(ErrorCode::DIMENSION_TOO_SMALL,
                    "n = " + std::to_string(n) + ", need n >= 2");
    const double lo = 1.0 / n;
    const double hi = 1.0 / (n - 1);
    // The lower endpoint is rejected unconditionally: at lambda <= 1/n the
    // tail exponent (1 - lambda(n-1))/(lambda(n-1)) >= 1 regime changes and
    // the pipeline's event logic is no longer backed by the existence result.
    if (lambda <= lo)
        throw Error(ErrorCode::LAMBDA_OUT_OF_RANGE,
                    "lambda = " + std::to_string(lambda) + " <= 1/n = " + std::to_string(lo));
    if (!allow_any_lambda && lambda >= hi)
        throw Error(ErrorCode::LAMBDA_OUT_OF_RANGE,
                    "lambda = " + std::to_string(lambda) + " >= 1/(n-1) = " +
                        std::to_string(hi) + " (pass allow_any_lambda to open the upper end)");
    if (!(mu < 0.0))
        throw Error(ErrorCode::MU_NONNEGATIVE, "mu = " + std::to_string(mu) + ", need mu < 0");

    Params p;
    p.n = n;
    p.lambda = lambda;
    p.mu = mu;
    p.allow_any_lambda = allow_any_lambda;
    return p;
}

std::size_t Profile::locate(double y) const {
    if (samples.size() < 2)
        throw Error(ErrorCode::INTERPOLANT_GAP, "profile has fewer than 2 samples");
    if (y < samples.front().y || y > samples.back().y)
        throw Error(ErrorCode::INTERPOLANT_GAP,
                    "y = " + std::to_string(y) + " outside profile span [" +
                        std::to_string(samples.front().y) + ", " +
                        std::to_string(samples.back().y) + "]");
    // binary search for the last sample with sample.y <= y
    std::size_t lo = 0, hi = samples.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (samples[mid].y <= y)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

namespace {

// Cubic Lagrange through four nodes.
double lagrange4(const double x[4], const double v[4], double x0) {
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double term = v[a];
        for (int b = 0; b < 4; ++b) {
            if (a == b) continue;
            term *= (x0 - x[b]) / (x[a] - x[b]);
        }
        acc += term;
    }
    return acc;
}

// Stencil of four consecutive samples around interval i, clamped at the ends.
std::size_t stencil_start(std::size_t i, std::size_t size) {
    std::size_t first = (i == 0) ? 0 : i - 1;
    if (first + 3 >= size) first = size - 4;
    return first;
}

// Where the profile is steep (secant slope above 1 in magnitude) the curve is
// a tame graph of y over r instead; detect that from the sample values alone
// so the interpolant never depends on stored derivatives.
bool steep_interval(const Sample& a, const Sample& b) {
    return std::fabs(b.r - a.r) > std::fabs(b.y - a.y);
}

bool monotone_r(const std::vector<Sample>& s, std::size_t first) {
    const double dir = s[first + 1].r - s[first].r;
    for (std::size_t k = 1; k < 3; ++k)
        if ((s[first + k + 1].r - s[first + k].r) * dir <= 0.0) return false;
    return true;
}

// Solve y(r) = y on the bracketing interval, where y(r) is the cubic through
// the stencil's (r, y) pairs.  The bracket endpoints are interpolation nodes,
// so the root is always bracketed; plain bisection is enough.
double invert_steep(const std::vector<Sample>& s, std::size_t i, std::size_t first,
                    double y) {
    double xr[4], xy[4];
    for (int k = 0; k < 4; ++k) {
        xr[k] = s[first + k].r;
        xy[k] = s[first + k].y;
    }
    double lo = s[i].r, hi = s[i + 1].r;
    double flo = s[i].y - y;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fmid = lagrange4(xr, xy, mid) - y;
        if ((fmid <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double Profile::r_at(double y) const {
    std::size_t i = locate(y);
    if (samples.size() < 4) {
        // linear fallback for degenerate tiny profiles
        const Sample& a = samples[i];
        const Sample& b = samples[i + 1];
        double w = (y - a.y) / (b.y - a.y);
        return a.r + w * (b.r - a.r);
    }
    const std::size_t first = stencil_start(i, samples.size());
    if (steep_interval(samples[i], samples[i + 1]) && monotone_r(samples, first))
        return invert_steep(samples, i, first, y);
    double xy[4], xr[4];
    for (int k = 0; k < 4; ++k) {
        xy[k] = samples[first + k].y;
        xr[k] = samples[first + k].r;
    }
    return lagrange4(xy, xr, y);
}

double Profile::r_y_at(double y) const {
    std::size_t i = locate(y);
    if (samples.size() < 4) {
        const Sample& a = samples[i];
        const Sample& b = samples[i + 1];
        double w = (y - a.y) / (b.y - a.y);
        return a.r_y + w * (b.r_y - a.r_y);
    }
    const std::size_t first = stencil_start(i, samples.size());
    double xv[4], vv[4];
    if (steep_interval(samples[i], samples[i + 1]) && monotone_r(samples, first)) {
        // interpolate the slope over r, which stays smooth through the
        // vertical-tangent stretch
        const double r = invert_steep(samples, i, first, y);
        for (int k = 0; k < 4; ++k) {
            xv[k] = samples[first + k].r;
            vv[k] = samples[first + k].r_y;
        }
        return lagrange4(xv, vv, r);
    }
    for (int k = 0; k < 4; ++k) {
        xv[k] = samples[first + k].y;
        vv[k] = samples[first + k].r_y;
    }
    return lagrange4(xv, vv, y);
}

}  // namespace imcf
