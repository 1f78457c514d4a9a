#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "prodspec/cli.hpp"

using namespace prodspec;
using namespace prodspec::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("prodspec_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::vector<const char*> argv{"prodspec"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("complex literal grammar") {
    CHECK(parse_complex("1.5") == cplx{1.5, 0.0});
    CHECK(parse_complex("1.5+0i") == cplx{1.5, 0.0});
    CHECK(parse_complex("0.05+0.2i") == cplx{0.05, 0.2});
    CHECK(parse_complex("0.05-0.2i") == cplx{0.05, -0.2});
    CHECK(parse_complex("-1-1i") == cplx{-1.0, -1.0});
    CHECK(parse_complex("2i") == cplx{0.0, 2.0});
    CHECK(parse_complex("i") == cplx{0.0, 1.0});
    CHECK(parse_complex("-i") == cplx{0.0, -1.0});
    CHECK(parse_complex("1e-3+2e1i") == cplx{1e-3, 20.0});
    CHECK(parse_complex(" 3 ") == cplx{3.0, 0.0});
    for (const char* bad : {"", "abc", "1+", "1+2", "1++2i", "1+2j", "i2"})
        CHECK_THROWS_AS(parse_complex(bad), config_error);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 6.75, -2.5e-17, 1e300})
        CHECK(std::stod(format_double(v)) == v);
    CHECK(format_complex(cplx{0.05, -0.2}) == "0.05-0.2i");
    CHECK(parse_complex(format_complex(cplx{1.0 / 3.0, 2.0 / 7.0})) == cplx{1.0 / 3.0, 2.0 / 7.0});
}

TEST_CASE("csv emission") {
    SweepResult empty;
    CHECK(to_csv(empty) == "seed,n,N,z_re,z_im,w_re,w_im,metric,value\n");

    SweepResult one;
    one.records.push_back({7, 64, 2, "spectral_radius", 0.5, std::nullopt, std::nullopt});
    CHECK(to_csv(one) == "seed,n,N,z_re,z_im,w_re,w_im,metric,value\n7,2,64,,,,,spectral_radius,0.5\n");

    SweepResult full;
    full.records.push_back({1, 8, 3, "m", -1.25, cplx{1.5, 0.0}, cplx{0.05, 0.2}});
    const auto text = to_csv(full);
    const auto row = text.substr(text.find('\n') + 1);
    CHECK(row == "1,3,8,1.5,0,0.05,0.2,m,-1.25\n");
    CHECK(std::count(row.begin(), row.end(), ',') == 8);
}

TEST_CASE("json mirrors the records") {
    SweepResult r;
    r.sweep = "radius";
    r.records.push_back({3, 16, 2, "spectral_radius", 0.9, cplx{1.5, 0.0}, std::nullopt});
    const auto j = to_json(r);
    REQUIRE(j["records"].size() == 1);
    const auto& rec = j["records"][0];
    CHECK(rec["seed"] == 3);
    CHECK(rec["N"] == 16);
    CHECK(rec["n"] == 2);
    CHECK(rec["metric_name"] == "spectral_radius");
    CHECK(rec["value"] == 0.9);
    CHECK(rec["z"]["re"] == 1.5);
    CHECK(rec["w"].is_null());
}

TEST_CASE("plot data for a radius sweep") {
    ExperimentConfig cfg;
    cfg.spec = EnsembleSpec::make(2, 1, EntryLaw::complex_gaussian, 1);
    cfg.trials = 3;
    cfg.N_ladder = {64, 128};
    const auto files = to_plotdata(radius_sweep(cfg));
    REQUIRE(files.count("spectral_radius") == 1);
    const auto& text = files.at("spectral_radius");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("64 ", 0) == 0);
    CHECK(text.find("\n128 ") != std::string::npos);
}

TEST_CASE("plot data keyed by E for the density") {
    SweepResult r;
    for (double E : {0.5, 0.1, 0.3}) r.records.push_back({0, 0, 0, "density", E * 2, cplx{1.5, 0.0}, cplx{E, 1e-6}});
    const auto text = to_plotdata(r).at("density");
    CHECK(text == "0.1 0.2\n0.3 0.6\n0.5 1\n");
}

TEST_CASE("config parsing") {
    const char* argv[] = {"prodspec", "radius", "--N", "1", "--n", "3", "--law", "rademacher", "--trials", "2",
                          "--z", "1.5+0i,2", "--w", "0.05+0.2i"};
    const auto c = parse_config(14, argv);
    CHECK(c.command == "radius");
    const auto e = experiment_config(c.settings);
    CHECK(e.spec.n == 3);
    CHECK(e.spec.entry_law == EntryLaw::rademacher);
    CHECK(e.trials == 2);
    CHECK(e.N_ladder == std::vector<int>{1});
    CHECK(e.z_values == std::vector<cplx>{cplx{1.5, 0.0}, cplx{2.0, 0.0}});
    CHECK(e.w_values == std::vector<cplx>{cplx{0.05, 0.2}});

    const char* ladder[] = {"prodspec", "radius", "--N", "64,128"};
    CHECK(experiment_config(parse_config(4, ladder).settings).N_ladder == std::vector<int>{64, 128});

    const char* bad_n[] = {"prodspec", "radius", "--N", "6x"};
    CHECK_THROWS_AS(parse_config(4, bad_n), config_error);
    const char* bad_cmd[] = {"prodspec", "frobnicate"};
    CHECK_THROWS_AS(parse_config(2, bad_cmd), config_error);
}

TEST_CASE("config file layering") {
    const auto dir = scratch("layer");
    {
        std::ofstream f(dir / "cfg.json");
        f << R"({"trials": 4, "N": [16, 32], "seed": 11})";
    }
    const std::string path = (dir / "cfg.json").string();
    const char* argv[] = {"prodspec", "radius", "--config", path.c_str(), "--trials", "2"};
    const auto e = experiment_config(parse_config(6, argv).settings);
    CHECK(e.trials == 2);  // command line beats the file
    CHECK(e.N_ladder == std::vector<int>{16, 32});
    CHECK(e.spec.master_seed == 11);

    const char* set[] = {"prodspec", "radius", "--set", "delta=0.25"};
    CHECK(experiment_config(parse_config(4, set).settings).delta == 0.25);
}

TEST_CASE("configuration errors exit with 2 and name the culprit") {
    const auto dir = scratch("errors");
    const auto missing = (dir / "nope.json").string();
    auto r = invoke({"radius", "--config", missing});
    CHECK(r.code == 2);
    CHECK(r.err.find(missing) != std::string::npos);

    {
        std::ofstream f(dir / "unknown.json");
        f << R"({"trials": 1, "colour": "blue"})";
    }
    r = invoke({"radius", "--config", (dir / "unknown.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("colour") != std::string::npos);

    {
        std::ofstream f(dir / "broken.json");
        f << R"({"trials": )";
    }
    r = invoke({"radius", "--config", (dir / "broken.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("broken.json") != std::string::npos);

    r = invoke({"radius", "--trials", "0"});
    CHECK(r.code == 2);
    CHECK(r.err.find("trials") != std::string::npos);

    r = invoke({"radius", "--set", "speed=3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("speed") != std::string::npos);

    r = invoke({"mc-solve", "--w", "0.1-0.2i", "-o", dir.string()});
    CHECK(r.code == 2);

    r = invoke({"outliers", "--z", "1.01", "--set", "delta=0.5", "--N", "8", "--trials", "1", "-o", dir.string()});
    CHECK(r.code == 2);
}

TEST_CASE("I/O failure exits with 3") {
    const auto dir = scratch("io");
    {
        std::ofstream f(dir / "blocker");
        f << "x";
    }
    const auto r = invoke({"support", "-o", (dir / "blocker" / "sub").string()});
    CHECK(r.code == 3);
}

TEST_CASE("mc-solve prints m_c and residual") {
    const auto dir = scratch("mc");
    const auto r = invoke({"mc-solve", "--z", "1.5+0i", "--w", "0.05+0.2i", "-o", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("m_c_re") != std::string::npos);
    CHECK(r.out.find("m_c_im") != std::string::npos);
    CHECK(r.out.find("residual") != std::string::npos);
    const auto m = solve_mc(1.5, cplx{0.05, 0.2}).m_c;
    const auto csv = slurp(dir / "mc-solve.csv");
    CHECK(csv.find("m_c_re," + format_double(m.real())) != std::string::npos);
}

TEST_CASE("radius of the scalar rademacher case prints 1") {
    const auto dir = scratch("radius1");
    const auto r = invoke({"radius", "--N", "1", "--n", "2", "--law", "rademacher", "--trials", "1", "-o", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("spectral_radius") != std::string::npos);
    CHECK(r.out.find("N=1  1\n") != std::string::npos);
}

TEST_CASE("all formats are written") {
    const auto dir = scratch("formats");
    const auto r = invoke({"radius", "--N", "8,16", "--trials", "2", "--format", "csv", "--format", "json",
                           "--format", "plotdata", "-o", dir.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "radius.csv"));
    CHECK(fs::exists(dir / "radius.json"));
    CHECK(fs::exists(dir / "radius.spectral_radius.dat"));
    const auto j = json::parse(slurp(dir / "radius.json"));
    CHECK(j["records"].size() == 4);
}

TEST_CASE("violations exit with 1") {
    const auto dir = scratch("violation");
    // no grid point has |w| <= 1e-12, so no tau can be certified
    const auto r = invoke({"gamma-sweep", "--z", "1.5", "--set", "tau=[1e-12]", "-o", dir.string()});
    CHECK(r.code == 1);
}

TEST_CASE("the binary gives byte-identical reruns") {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    const std::string bin = PRODSPEC_CLI_PATH;
    const std::string args = " concentration --N 16,32 --trials 4 --seed 5 --format csv --format json > /dev/null -o ";
    REQUIRE(shell("PRODSPEC_THREADS=1 '" + bin + "'" + args + a.string()) == 0);
    REQUIRE(shell("PRODSPEC_THREADS=2 '" + bin + "'" + args + b.string()) == 0);
    CHECK(slurp(a / "concentration.csv") == slurp(b / "concentration.csv"));
    CHECK(slurp(a / "concentration.json") == slurp(b / "concentration.json"));
    CHECK(slurp(a / "concentration.csv").size() > 100);
}

TEST_CASE("the binary reports exit codes") {
    const std::string bin = PRODSPEC_CLI_PATH;
    CHECK(shell("'" + bin + "' radius --config /nonexistent/x.json 2> /dev/null") == 2);
    CHECK(shell("'" + bin + "' --help > /dev/null") == 0);
}
