#include "imcf/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "imcf/dynamics.hpp"
#include "imcf/error.hpp"

namespace imcf {

namespace {

constexpr const char* kProfileHeader = "y,r,r_y,r_yy,support,residual";
constexpr const char* kSweepHeader = "n,lambda,mu,y1,y2,r1,alpha_fit,residual_max,status";

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IO_FAILURE, "cannot open '" + path + "' for writing");
    return out;
}

double parse_double(const std::string& field, const std::string& path, long line) {
    const char* s = field.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw Error(ErrorCode::IO_FAILURE, path + ":" + std::to_string(line) +
                                               ": not a number: '" + field + "'");
    return v;
}

}  // namespace

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_profile_csv(const std::string& path, const Profile& profile) {
    auto out = open_out(path);
    out << kProfileHeader << "\n";
    for (const auto& s : profile.samples) {
        const double support = s.r - s.y * s.r_y;
        const double residual = geometry_at(s.y, s.r, s.r_y, s.r_yy, profile.params).residual;
        out << format_g17(s.y) << ',' << format_g17(s.r) << ',' << format_g17(s.r_y) << ','
            << format_g17(s.r_yy) << ',' << format_g17(support) << ',' << format_g17(residual)
            << '\n';
    }
    if (!out) throw Error(ErrorCode::IO_FAILURE, "write failed: '" + path + "'");
}

std::vector<ProfileCsvRow> read_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_FAILURE, "cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::IO_FAILURE, path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kProfileHeader)
        throw Error(ErrorCode::IO_FAILURE,
                    path + ": unexpected header '" + line + "' (want '" + kProfileHeader + "')");
    std::vector<ProfileCsvRow> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        double vals[6];
        for (int k = 0; k < 6; ++k) {
            if (!std::getline(ss, field, ','))
                throw Error(ErrorCode::IO_FAILURE,
                            path + ":" + std::to_string(lineno) + ": expected 6 fields");
            vals[k] = parse_double(field, path, lineno);
        }
        rows.push_back({vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]});
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const SweepTable& table) {
    auto out = open_out(path);
    out << kSweepHeader << "\n";
    for (const auto& r : table.rows) {
        out << r.n << ',' << format_g17(r.lambda) << ',' << format_g17(r.mu) << ','
            << format_g17(r.y1) << ',' << format_g17(r.y2) << ',' << format_g17(r.r1) << ','
            << format_g17(r.alpha_fit) << ',' << format_g17(r.residual_max) << ',' << r.status
            << '\n';
    }
    if (!out) throw Error(ErrorCode::IO_FAILURE, "write failed: '" + path + "'");
}

std::string render_report_json(const Params& params, const Profile& profile,
                               const std::optional<Events>& events,
                               const ResidualSummary& residuals,
                               const VerificationReport& report) {
    using json = nlohmann::ordered_json;
    json root;
    root["params"] = {{"n", params.n},
                      {"lambda", params.lambda},
                      {"mu", params.mu},
                      {"allow_any_lambda", params.allow_any_lambda}};
    json prof;
    prof["method"] = to_string(profile.method);
    prof["samples"] = profile.samples.size();
    prof["y_front"] = profile.y_front();
    prof["y_back"] = profile.y_back();
    if (profile.switch_y) prof["switch_y"] = *profile.switch_y;
    prof["meta"] = {{"h0", profile.meta.h0},
                    {"rel", profile.meta.rel},
                    {"abs", profile.meta.abs},
                    {"steps_start", profile.meta.steps_start},
                    {"steps_struct", profile.meta.steps_struct},
                    {"steps_tail", profile.meta.steps_tail},
                    {"rejected", profile.meta.rejected}};
    if (profile.meta.even) prof["even_r1"] = profile.meta.even_r1;
    root["profile"] = prof;
    if (events) {
        json ev;
        ev["y1"] = events->y1;
        ev["y2"] = events->y2 ? json(*events->y2) : json(nullptr);
        ev["r1"] = events->r1;
        ev["kappa0"] = events->kappa0;
        root["events"] = ev;
    } else {
        root["events"] = nullptr;
    }
    root["residuals"] = {{"max_ode_residual", residuals.max_ode_residual},
                         {"max_soliton_residual", residuals.max_soliton_residual},
                         {"grid_size", residuals.grid_size},
                         {"window", {residuals.window_lo, residuals.window_hi}}};
    json checks = json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"check", c.name},
                          {"status", to_string(c.status)},
                          {"measured", c.measured},
                          {"threshold", c.threshold},
                          {"detail", c.detail}});
    }
    root["checks"] = checks;
    root["overall"] = report.overall ? "PASS" : "FAIL";
    return root.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
    if (!out) throw Error(ErrorCode::IO_FAILURE, "write failed: '" + path + "'");
}

void write_gnuplot_script(const std::string& path, const std::string& csv_path,
                          const std::string& title) {
    std::ostringstream s;
    s << "# profile plot; run: gnuplot " << path << "\n"
      << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set title '" << title << "'\n"
      << "set xlabel 'y'\n"
      << "set ylabel 'r'\n"
      << "set grid\n"
      << "set terminal svg size 800,500\n"
      << "set output '" << path << ".svg'\n"
      << "plot '" << csv_path << "' using 1:2 with lines lw 2 title 'r(y)'\n";
    write_text_file(path, s.str());
}

void write_profile_svg(const std::string& path, const Profile& profile) {
    const double scale = profile.meta.even ? std::fmax(0.5, profile.meta.even_r1)
                                           : std::fmax(0.5, std::fabs(profile.params.mu));
    const double y_cut = profile.y_front() + 20.0 * scale;
    double y_lo = profile.y_front(), y_hi = profile.y_front(), r_hi = 0.0;
    for (const auto& s : profile.samples) {
        if (s.y > y_cut) break;
        y_hi = s.y;
        r_hi = std::fmax(r_hi, s.r);
    }
    if (!(y_hi > y_lo) || !(r_hi > 0.0))
        throw Error(ErrorCode::PROFILE_TOO_SHORT, "profile too short to draw");

    const double W = 800, H = 500, m = 50;
    auto X = [&](double y) { return m + (y - y_lo) / (y_hi - y_lo) * (W - 2 * m); };
    auto Y = [&](double r) { return H - m - r / r_hi * (H - 2 * m); };

    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "' viewBox='0 0 " << W << " " << H << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<line x1='" << m << "' y1='" << H - m << "' x2='" << W - m << "' y2='" << H - m
      << "' stroke='black'/>\n"
      << "<line x1='" << m << "' y1='" << m << "' x2='" << m << "' y2='" << H - m
      << "' stroke='black'/>\n";
    if (y_lo < 0.0 && y_hi > 0.0)
        s << "<line x1='" << X(0.0) << "' y1='" << m << "' x2='" << X(0.0) << "' y2='" << H - m
          << "' stroke='lightgray' stroke-dasharray='4'/>\n";
    s << "<polyline fill='none' stroke='navy' stroke-width='1.5' points='";
    for (const auto& smp : profile.samples) {
        if (smp.y > y_cut) break;
        s << X(smp.y) << ',' << Y(smp.r) << ' ';
    }
    s << "'/>\n"
      << "<text x='" << W - m << "' y='" << H - m + 30 << "' text-anchor='end' font-size='12'>y = "
      << format_g17(y_hi).substr(0, 8) << "</text>\n"
      << "<text x='" << m - 8 << "' y='" << m << "' text-anchor='end' font-size='12'>r = "
      << format_g17(r_hi).substr(0, 8) << "</text>\n"
      << "<text x='" << m - 8 << "' y='" << H - m << "' text-anchor='end' font-size='12'>"
      << format_g17(y_lo).substr(0, 8) << "</text>\n"
      << "</svg>\n";
    write_text_file(path, s.str());
}

}  // namespace imcf
