// End-to-end tests of the soliton binary: exit-status contract, config-file
// handling, and artifact presence.  The binary path comes from SOLITON_BIN
// (set by ctest); default is the sibling "soliton" in the working directory.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "sys/wait.h"

namespace {

std::string binary() {
    const char* env = std::getenv("SOLITON_BIN");
    return env ? env : "./soliton";
}

int run(const std::string& args, std::string* out = nullptr) {
    const std::string cmd =
        binary() + " " + args + " > cli_test_stdout.txt 2> cli_test_stderr.txt";
    int rc = std::system(cmd.c_str());
    if (out) {
        std::ifstream in("cli_test_stdout.txt");
        std::stringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
    }
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp_err() {
    std::ifstream in("cli_test_stderr.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return in.good();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("solve writes the profile and reports events") {
    std::string out;
    int rc = run("solve --n 2 --lambda 0.7 --mu -1 --ymax 50 --out cli_prof.csv", &out);
    CHECK(rc == 0);
    CHECK(file_exists("cli_prof.csv"));
    CHECK(out.find("y1 = 1.17034") != std::string::npos);
    CHECK(out.find("y2 = 2.99059") != std::string::npos);
    std::ifstream in("cli_prof.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,r,r_y,r_yy,support,residual");
    std::remove("cli_prof.csv");
}

TEST_CASE("exit 0: verify with not-applicable tail checks") {
    int rc = run(
        "verify --n 2 --lambda 0.7 --mu -1 --ymax 50 --report cli_rep.json --quiet");
    CHECK(rc == 0);
    CHECK(file_exists("cli_rep.json"));
    std::remove("cli_rep.json");
}

TEST_CASE("exit 1: verify with a failing applicable check") {
    std::string out;
    int rc = run("verify --n 2 --lambda 0.7 --mu -1 --report cli_rep.json", &out);
    CHECK(rc == 1);
    CHECK(out.find("[FAIL] tail_flat_yry") != std::string::npos);
    CHECK(out.find("overall: FAIL") != std::string::npos);
    std::remove("cli_rep.json");
}

TEST_CASE("exit 2: runtime failure inside the solve") {
    std::remove("cli_x.csv");
    int rc = run(
        "solve --n 2 --lambda 0.7 --mu -1 --rel 1e-30 --abs 1e-300 --out cli_x.csv");
    CHECK(rc == 2);
    CHECK(slurp_err().find("STEP_UNDERFLOW") != std::string::npos);
    CHECK_FALSE(file_exists("cli_x.csv"));  // failed before any artifact
}

TEST_CASE("exit 3: validation and usage errors") {
    CHECK(run("solve --n 1 --lambda 0.7 --mu -1 --out cli_x.csv") == 3);
    CHECK(slurp_err().find("DIMENSION_TOO_SMALL") != std::string::npos);
    CHECK(run("solve --n 2 --lambda 0.4 --mu -1 --out cli_x.csv") == 3);
    CHECK(run("solve --n 2 --lambda 0.7 --mu 1 --out cli_x.csv") == 3);
    CHECK(run("solve --n 2 --lambda 0.7 --mu -1") == 3);  // --out missing
    CHECK(run("solve --n 2 --lambda abc --mu -1 --out cli_x.csv") == 3);
    CHECK(run("solve --n 2 --lambda 0.7 --mu -1 --bogus 1 --out cli_x.csv") == 3);
    CHECK(run("frobnicate --n 2") == 3);
    CHECK(run("") == 3);
    CHECK(run("solve --n 2 --lambda 0.7 --mu -1 --method nope --out cli_x.csv") == 3);
}

TEST_CASE("help is not an error") {
    CHECK(run("--help") == 0);
    std::string out;
    CHECK(run("solve --help", &out) == 0);
    CHECK(out.find("--lambda") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags override") {
    write_file("cli_cfg.txt",
               "# reference case\n"
               "n = 2\n"
               "lambda = 0.4   # outside the window; must be overridden\n"
               "mu = -1\n"
               "ymax = 50\n"
               "quiet = yes\n");
    // config alone: lambda 0.4 rejected
    CHECK(run("solve --config cli_cfg.txt --out cli_x.csv") == 3);
    // explicit flag wins over the config value
    CHECK(run("solve --config cli_cfg.txt --lambda 0.7 --out cli_x.csv") == 0);
    CHECK(file_exists("cli_x.csv"));
    std::remove("cli_x.csv");

    write_file("cli_cfg.txt", "n = 2\nwibble = 3\n");
    CHECK(run("solve --config cli_cfg.txt --lambda 0.7 --mu -1 --out cli_x.csv") == 3);
    CHECK(slurp_err().find("UNKNOWN_KEY") != std::string::npos);

    write_file("cli_cfg.txt", "n: 2\n");
    CHECK(run("solve --config cli_cfg.txt --lambda 0.7 --mu -1 --out cli_x.csv") == 3);

    write_file("cli_cfg.txt", "quiet = maybe\n");
    CHECK(run("solve --config cli_cfg.txt --n 2 --lambda 0.7 --mu -1 --out cli_x.csv") ==
          3);
    CHECK(slurp_err().find("TYPE_MISMATCH") != std::string::npos);

    CHECK(run("solve --config missing_config.txt --n 2 --lambda 0.7 --mu -1 "
              "--out cli_x.csv") == 2);  // unreadable config is an IO failure
    std::remove("cli_cfg.txt");
}

TEST_CASE("sweep subcommand writes one row per grid point") {
    std::string out;
    int rc = run("sweep --n 2 --lambda 0.7,0.75 --mu -1 --out cli_sweep.csv", &out);
    CHECK(rc == 0);
    CHECK(out.find("rows: 2") != std::string::npos);
    std::ifstream in("cli_sweep.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);  // header + 2 rows
    std::remove("cli_sweep.csv");

    CHECK(run("sweep --serial --n 2 --lambda 0.7 --mu -1 --out cli_sweep.csv") == 0);
    std::remove("cli_sweep.csv");
}

TEST_CASE("even subcommand solves from the reflected start") {
    std::string out;
    int rc = run("even --n 2 --lambda 0.7 --r1 1 --ymax 100 --out cli_even.csv", &out);
    CHECK(rc == 0);
    CHECK(out.find("y2 = 1.22138") != std::string::npos);
    std::remove("cli_even.csv");
    // lambda outside the window is rejected regardless of the bypass flag
    CHECK(run("even --n 2 --lambda 1.5 --r1 1 --allow-any-lambda --out cli_even.csv") ==
          3);
}

TEST_CASE("plot flag requires and references the CSV artifact") {
    CHECK(run("solve --n 2 --lambda 0.7 --mu -1 --ymax 20 --plot cli_p.gp") == 3);
    CHECK(run("solve --n 2 --lambda 0.7 --mu -1 --ymax 20 --out cli_p.csv "
              "--plot cli_p.gp") == 0);
    CHECK(file_exists("cli_p.gp"));
    CHECK(file_exists("cli_p.gp.svg"));
    std::remove("cli_p.csv");
    std::remove("cli_p.gp");
    std::remove("cli_p.gp.svg");
}
