#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imcf/model.hpp"
#include "imcf/solver.hpp"
#include "imcf/verify.hpp"

namespace imcf {

// Shortest decimal that round-trips a double (up to 17 significant digits).
std::string format_g17(double v);

// Profile CSV: header "y,r,r_y,r_yy,support,residual", one sample per line,
// 17-significant-digit values.  support = r - y*r_y and residual is the
// soliton identity from the stored derivatives; both are derived columns and
// are not read back into samples.
void write_profile_csv(const std::string& path, const Profile& profile);

struct ProfileCsvRow {
    double y = 0, r = 0, r_y = 0, r_yy = 0, support = 0, residual = 0;
};

std::vector<ProfileCsvRow> read_profile_csv(const std::string& path);

// Sweep CSV: header n,lambda,mu,y1,y2,r1,alpha_fit,residual_max,status.
void write_sweep_csv(const std::string& path, const SweepTable& table);

// Structured JSON report with stable key order: run parameters, events,
// independent residuals and the named checks with measured margins.
std::string render_report_json(const Params& params, const Profile& profile,
                               const std::optional<Events>& events,
                               const ResidualSummary& residuals,
                               const VerificationReport& report);

void write_text_file(const std::string& path, const std::string& content);

// Gnuplot script plotting r(y) from a previously written profile CSV; the
// script is a side artifact and never feeds back into any computation.
void write_gnuplot_script(const std::string& path, const std::string& csv_path,
                          const std::string& title);

// Standalone SVG of the profile curve (structural region; the far tail hugs
// the axis and is cut off at 20 geometric scales).
void write_profile_svg(const std::string& path, const Profile& profile);

}  // namespace imcf
