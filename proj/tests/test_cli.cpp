#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / ("tb4_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

struct ScratchCleanup {
    ~ScratchCleanup() {
        std::error_code ec;
        fs::remove_all(fs::temp_directory_path() / ("tb4_cli_test_" + std::to_string(::getpid())), ec);
    }
} scratch_cleanup;

RunResult run(const std::string& args) {
    static int counter = 0;
    const fs::path err_path = scratch_dir() / ("stderr_" + std::to_string(counter++) + ".txt");
    const std::string cmd = std::string(TB4_CLI_PATH) + " " + args + " 2>" + err_path.string();
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string field; std::getline(in, field, sep);) out.push_back(field);
    return out;
}

}  // namespace

TEST_CASE("verify passes every suite by default") {
    const auto r = run("verify --points 20");
    CHECK(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "check,max_error,tolerance,points,passed");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(split(rows[i]).back() == "true");
}

TEST_CASE("verify rejects equal momenta") {
    const auto r = run("verify --mu1 1 --mu2 1");
    CHECK(r.code == 2);
    CHECK(r.err.find("DegenerateMomenta") != std::string::npos);
}

TEST_CASE("verify runs a single suite") {
    const auto r = run("verify --checks amatrix --points 10");
    CHECK(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(split(rows[1])[0] == "amatrix");
}

TEST_CASE("verify rejects an unknown suite") {
    CHECK(run("verify --checks nonsense").code == 2);
}

TEST_CASE("a failing tolerance gives exit code 1") {
    const auto r = run("verify --checks symplectic --points 5 --tol 1e-30");
    CHECK(r.code == 1);
}

TEST_CASE("isosceles equilibrium near the Kepler limit is a minimum") {
    const auto r = run("equilibrium --isosceles -n 1 -t 0.01 --format json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["classification"] == "minimum");
    CHECK(j["eigenvalues"].size() == 8);
}

TEST_CASE("isosceles equilibrium near the collinear end is not a minimum") {
    const auto r = run("equilibrium --isosceles -n 1 -t 0.9 --format json");
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["classification"] != "minimum");
}

TEST_CASE("general equilibrium reports Kepler frequencies") {
    const auto r = run("equilibrium --general -m 1,2,3 -u 0.01 --pair 2,3 --format json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["classification"] == "minimum");
    CHECK(std::abs(j["kepler1"].get<double>() - 1.0) < 1e-3);
    CHECK(std::abs(j["kepler2"].get<double>() - 1.0) < 1e-3);
    CHECK(j["gradient_residual"].get<double>() < 1e-12);
}

TEST_CASE("equilibrium csv is key,value") {
    const auto r = run("equilibrium --isosceles -n 2 -t 0.2");
    REQUIRE(r.code == 0);
    bool found = false;
    for (const auto& line : lines(r.out)) {
        CHECK(split(line).size() >= 2);
        if (line.rfind("classification,", 0) == 0) found = true;
    }
    CHECK(found);
}

TEST_CASE("invalid isosceles parameter is a configuration error") {
    CHECK(run("equilibrium --isosceles -n 1 -t 1.5").code == 2);
    CHECK(run("equilibrium --isosceles -n -1 -t 0.2").code == 2);
}

TEST_CASE("isosceles scan writes the documented header") {
    const auto r = run("scan --isosceles -n 1 --count 25");
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 26);
    CHECK(rows[0] == "param,mu1,mu2,h,b,neg_inv_h,class,eig1,eig2,eig3,eig4,eig5,eig6,eig7,eig8");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(split(rows[i]).size() == 15);
}

TEST_CASE("region scan finds all six regions") {
    const auto r = run("scan --regions --n-max 5 --grid 50");
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 2501);
    CHECK(rows[0] == "n,t,p1,p2,region,label");
    std::set<std::string> regions;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i]);
        REQUIRE(f.size() == 6);
        const int id = std::stoi(f[4]);
        if (id >= 1) regions.insert(f[4]);
    }
    CHECK(regions.size() == 6);
}

TEST_CASE("empty scan grid is a configuration error") {
    CHECK(run("scan --count 0").code == 2);
}

TEST_CASE("scan output does not depend on the worker count") {
    const auto a = run("scan --general -m 1,2,3 --count 12 --workers 1");
    const auto b = run("scan --general -m 1,2,3 --count 12 --workers 4");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("reduced and full flows agree near an equilibrium") {
    const auto r = run("integrate -n 1 -t 0.1 --perturb 1e-4 --t-end 1 --compare --format json");
    REQUIRE(r.code == 0);
    const auto c = nlohmann::json::parse(r.out)["comparison"];
    CHECK(c["max_q_deviation"].get<double>() < 1e-6);
    CHECK(c["max_p_deviation"].get<double>() < 1e-6);
}

TEST_CASE("integration from an equilibrium stays put") {
    const auto r = run("integrate --general -m 1,2,3 -u 0.05 --t-end 2 --format json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const auto& states = j["states"];
    REQUIRE(states.size() > 1);
    double dev = 0.0;
    for (const auto& s : states) {
        for (std::size_t k = 0; k < 8; ++k) {
            dev = std::max(dev, std::abs(s[k].get<double>() - states[0][k].get<double>()));
        }
    }
    CHECK(dev < 1e-8);
}

TEST_CASE("a collision ends the run with a partial trajectory") {
    const auto r = run("integrate --q 0.05,0,0,1 --p -1,0,0,0 --mu1 0.02 --mu2 0 -n 1 --t-end 1");
    CHECK(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() > 2);
    CHECK(rows.back().rfind("# domain_exit,collision", 0) == 0);
}

TEST_CASE("midpoint method is selectable") {
    const auto r = run("integrate -n 1 -t 0.1 --method midpoint --step 1e-2 --t-end 0.5 --format json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["t"].back().get<double>() == doctest::Approx(0.5));
}

TEST_CASE("a midpoint step that cannot be solved is a solver failure") {
    const auto r = run("integrate --general -m 1,2,3 -u 0.05 --method midpoint --step 1e-3 --t-end 1");
    CHECK(r.code == 3);
    CHECK(r.err.find("reduce the step") != std::string::npos);
}

TEST_CASE("unknown method is a configuration error") {
    CHECK(run("integrate --method euler").code == 2);
}

TEST_CASE("same seed gives identical output") {
    const auto a = run("integrate -n 1 -t 0.2 --perturb 1e-3 --seed 7 --t-end 0.5");
    const auto b = run("integrate -n 1 -t 0.2 --perturb 1e-3 --seed 7 --t-end 0.5");
    const auto c = run("integrate -n 1 -t 0.2 --perturb 1e-3 --seed 8 --t-end 0.5");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
}

TEST_CASE("output file and config file") {
    const fs::path dir = scratch_dir();
    const fs::path out = dir / "eq.json";
    const fs::path cfg = dir / "run.toml";
    {
        std::ofstream f(cfg);
        f << "format = \"json\"\n[equilibrium]\nisosceles = true\nn = 2\nt = 0.3\n";
    }
    const auto r = run("--config " + cfg.string() + " --out " + out.string() + " equilibrium");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["masses"][0].get<double>() == doctest::Approx(2.0));

    const auto r2 = run("--config " + cfg.string() + " --out " + out.string() + " equilibrium -n 3");
    REQUIRE(r2.code == 0);
    CHECK(nlohmann::json::parse(slurp(out))["masses"][0].get<double>() == doctest::Approx(3.0));
}

TEST_CASE("unknown options are rejected") {
    CHECK(run("verify --bogus").code == 2);
    CHECK(run("").code == 2);
}
