#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "imcf/io.hpp"
#include "imcf/model.hpp"
#include "imcf/solver.hpp"
#include "imcf/verify.hpp"

using namespace imcf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IO_FAILURE;  // sentinel: "did not throw"
}

std::string temp_path(const char* name) {
    return std::string("io_test_") + name;
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

Profile short_reference() {
    SolveOptions o;
    o.y_max = 50.0;  // plenty of samples, quick solve
    return solve_profile(validate_params(2, 0.7, -1.0), o);
}

}  // namespace

TEST_CASE("profile CSV round trip is bit-exact") {
    Profile prof = short_reference();
    const std::string path = temp_path("roundtrip.csv");
    write_profile_csv(path, prof);
    auto rows = read_profile_csv(path);
    REQUIRE(rows.size() == prof.samples.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Sample& s = prof.samples[i];
        // shortest-round-trip formatting: equality must be exact, not approx
        CHECK(rows[i].y == s.y);
        CHECK(rows[i].r == s.r);
        CHECK(rows[i].r_y == s.r_y);
        CHECK(rows[i].r_yy == s.r_yy);
        CHECK(rows[i].support == s.r - s.y * s.r_y);
    }
    std::remove(path.c_str());
}

TEST_CASE("profile CSV header and derived columns") {
    Profile prof = short_reference();
    const std::string path = temp_path("header.csv");
    write_profile_csv(path, prof);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,r,r_y,r_yy,support,residual");
    std::string first;
    std::getline(in, first);
    CHECK(std::count(first.begin(), first.end(), ',') == 5);
    std::remove(path.c_str());
}

TEST_CASE("profile CSV reader rejects malformed input") {
    const std::string path = temp_path("bad.csv");
    spill(path, "nope,this,is,wrong\n1,2,3,4,5,6\n");
    CHECK(code_of([&] { read_profile_csv(path); }) == ErrorCode::IO_FAILURE);
    spill(path, "y,r,r_y,r_yy,support,residual\n1,2,3\n");
    CHECK(code_of([&] { read_profile_csv(path); }) == ErrorCode::IO_FAILURE);
    spill(path, "y,r,r_y,r_yy,support,residual\n1,2,three,4,5,6\n");
    CHECK(code_of([&] { read_profile_csv(path); }) == ErrorCode::IO_FAILURE);
    CHECK(code_of([&] { read_profile_csv("does_not_exist.csv"); }) ==
          ErrorCode::IO_FAILURE);
    std::remove(path.c_str());
}

TEST_CASE("write failures surface as IO errors") {
    Profile prof = short_reference();
    CHECK(code_of([&] { write_profile_csv("/nonexistent_dir/x.csv", prof); }) ==
          ErrorCode::IO_FAILURE);
    CHECK(code_of([&] { write_text_file("/nonexistent_dir/x.txt", "hi"); }) ==
          ErrorCode::IO_FAILURE);
}

TEST_CASE("sweep CSV carries error rows verbatim") {
    SweepTable table;
    SweepRow ok;
    ok.n = 2;
    ok.lambda = 0.7;
    ok.mu = -1.0;
    ok.y1 = 1.25;
    ok.y2 = 3.5;
    ok.r1 = 1.5;
    ok.alpha_fit = 0.42857142857142855;
    ok.residual_max = 1.3e-9;
    ok.status = "OK";
    SweepRow bad;
    bad.n = 2;
    bad.lambda = 0.4;
    bad.mu = -1.0;
    bad.y1 = bad.y2 = bad.r1 = bad.alpha_fit = bad.residual_max =
        std::nan("");
    bad.status = "LAMBDA_OUT_OF_RANGE";
    table.rows = {ok, bad};

    const std::string path = temp_path("sweep.csv");
    write_sweep_csv(path, table);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "n,lambda,mu,y1,y2,r1,alpha_fit,residual_max,status");
    std::getline(in, line);
    CHECK(line.find("0.42857142857142855") != std::string::npos);
    CHECK(line.find(",OK") != std::string::npos);
    std::getline(in, line);
    CHECK(line.find("nan") != std::string::npos);
    CHECK(line.find("LAMBDA_OUT_OF_RANGE") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("report JSON structure and fidelity") {
    Params params = validate_params(2, 0.7, -1.0);
    Profile prof = solve_profile(params, SolveOptions{});
    std::optional<Events> events = extract_events(prof, params);
    ResidualSummary rs = residual_check(prof, params, 200);
    VerificationReport rep = property_suite(prof, events, params);

    std::string text = render_report_json(params, prof, events, rs, rep);
    auto j = nlohmann::json::parse(text);

    CHECK(j["params"]["n"] == 2);
    CHECK(j["params"]["lambda"].get<double>() == 0.7);
    CHECK(j["profile"]["method"] == "chart");
    CHECK(j["profile"]["samples"].get<std::size_t>() == prof.samples.size());
    CHECK(j["events"]["y1"].get<double>() == events->y1);
    CHECK(j["events"]["y2"].get<double>() == *events->y2);
    CHECK(j["residuals"]["grid_size"] == 200);
    CHECK(j["residuals"]["max_ode_residual"].get<double>() == rs.max_ode_residual);
    REQUIRE(j["checks"].is_array());
    REQUIRE(j["checks"].size() == rep.checks.size());
    bool saw_fail = false;
    for (std::size_t i = 0; i < rep.checks.size(); ++i) {
        CHECK(j["checks"][i]["check"] == rep.checks[i].name);
        CHECK(j["checks"][i]["measured"].get<double>() == rep.checks[i].measured);
        saw_fail |= (j["checks"][i]["status"] == "FAIL");
    }
    CHECK(saw_fail);                 // the honest tail-flatness failure
    CHECK(j["overall"] == "FAIL");

    // a profile truncated before events renders with a null events object
    SolveOptions o;
    o.y_max = 0.5;
    Profile stub = solve_profile(params, o);
    ResidualSummary rs2 = residual_check(stub, params, 100);
    VerificationReport rep2 = property_suite(stub, std::nullopt, params);
    auto j2 = nlohmann::json::parse(
        render_report_json(params, stub, std::nullopt, rs2, rep2));
    CHECK(j2["events"].is_null());
}

TEST_CASE("plot artifacts are written and self-contained") {
    Profile prof = short_reference();
    const std::string csv = temp_path("plot.csv");
    const std::string script = temp_path("plot.gp");
    const std::string svg = temp_path("plot.svg");
    write_profile_csv(csv, prof);
    write_gnuplot_script(script, csv, "test plot");
    write_profile_svg(svg, prof);

    std::ifstream s(script);
    std::stringstream ss;
    ss << s.rdbuf();
    CHECK(ss.str().find("set terminal svg") != std::string::npos);
    CHECK(ss.str().find(csv) != std::string::npos);

    std::ifstream v(svg);
    std::stringstream vs;
    vs << v.rdbuf();
    CHECK(vs.str().find("<svg") != std::string::npos);
    CHECK(vs.str().find("polyline") != std::string::npos);
    std::remove(csv.c_str());
    std::remove(script.c_str());
    std::remove(svg.c_str());
}

TEST_CASE("g17 formatting round-trips doubles through text") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0,
                     0.42857142857142855}) {
        std::string s = format_g17(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}
