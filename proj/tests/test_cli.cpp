#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& cmd) {
    const int status = std::system((cmd + " 2>/dev/null").c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    fs::path d = fs::temp_directory_path() / "nbspec_cli_tests";
    fs::create_directories(d);
    return d;
}

std::string bin() { return NBSPEC_BIN; }

std::string corpus(const std::string& name) { return testsupport::corpus_path(name); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("cli: spectrum row counts and classes") {
    fs::path dir = scratch_dir();

    fs::path c3csv = dir / "c3.csv";
    REQUIRE(run(bin() + " spectrum --input " + corpus("c3") + " --output " + c3csv.string()) ==
            0);
    auto c3 = read_csv(c3csv);
    REQUIRE(c3.size() == 7);  // header + 6 eigenvalues
    CHECK(c3[0] == std::vector<std::string>{"re", "im", "class", "am", "gm"});
    for (size_t i = 1; i < c3.size(); ++i) CHECK(c3[i][2] == "unit");

    fs::path k4csv = dir / "k4.csv";
    REQUIRE(run(bin() + " spectrum --input " + corpus("k4") + " --output " + k4csv.string()) ==
            0);
    auto k4 = read_csv(k4csv);
    REQUIRE(k4.size() == 13);
    bool found_leading = false;
    for (size_t i = 1; i < k4.size(); ++i) {
        if (k4[i][2] != "leading") continue;
        found_leading = true;
        CHECK(std::abs(std::stod(k4[i][0]) - 2.0) <= 1e-8);
        CHECK(std::abs(std::stod(k4[i][1])) <= 1e-8);
        CHECK(k4[i][3] == "1");
        CHECK(k4[i][4] == "1");
    }
    CHECK(found_leading);

    fs::path p3csv = dir / "p3.csv";
    REQUIRE(run(bin() + " spectrum --input " + corpus("p3") + " --output " + p3csv.string()) ==
            0);
    auto p3 = read_csv(p3csv);
    REQUIRE(p3.size() == 5);
    for (size_t i = 1; i < p3.size(); ++i) {
        CHECK(p3[i][0] == "0");
        CHECK(p3[i][1] == "0");
        CHECK(p3[i][2] == "inner");
    }
}

TEST_CASE("cli: analyze reports the frozen karate multiplicities") {
    fs::path dir = scratch_dir();
    fs::path out = dir / "karate.json";
    REQUIRE(run(bin() + " analyze --input " + corpus("karate") + " --output " + out.string()) ==
            0);
    json d = json::parse(slurp(out));
    CHECK(d["schema_version"] == 1);
    CHECK(d["am0"] == 2);
    CHECK(d["gm0"] == 1);
    CHECK(d["gm_plus1"] == 45);
    CHECK(d["gm_minus1"] == 44);
    CHECK(d["graph"]["nodes"] == 34);
    CHECK(d["graph"]["edges"] == 78);
    CHECK(d["shell"]["s1"] == 1);
    CHECK(d["diagonalizable"] == false);
    CHECK(d["companion"]["consistent"] == true);
    for (const auto& row : d["ledger"])
        if (row["label"] != "GM(outer) conjecture") CHECK(row["match"] == true);

    fs::path c5out = dir / "c5.json";
    REQUIRE(run(bin() + " analyze --input " + corpus("c5") + " --output " + c5out.string()) ==
            0);
    json c5 = json::parse(slurp(c5out));
    for (const auto& cl : c5["clusters"]) {
        CHECK(cl["class"] == "unit");
        CHECK(cl["am"] == 2);
        CHECK(cl["gm"] == 2);
    }
    CHECK(c5["clusters"].size() == 5);
}

TEST_CASE("cli: validation failures exit with code 2") {
    fs::path dir = scratch_dir();
    fs::path bad = dir / "bad.edges";
    std::ofstream(bad) << "0 0\n0 1\n";
    CHECK(run(bin() + " analyze --input " + bad.string()) == 2);

    fs::path loose = dir / "loose.edges";
    std::ofstream(loose) << "0 1\n2 3\n";  // disconnected
    CHECK(run(bin() + " analyze --input " + loose.string()) == 2);

    CHECK(run(bin() + " analyze --input " + (dir / "missing.edges").string()) == 2);
    CHECK(run(bin() + " analyze") == 2);                     // --input required
    CHECK(run(bin() + " verify --input " + corpus("c3"))  == 2);  // --which required
    CHECK(run(bin() + " verify --which nonsense --input " + corpus("c3")) == 2);
    CHECK(run(bin() + " frobnicate") == 2);
    CHECK(run(bin() + " analyze --input " + corpus("c3") + " --tol-rank -1") == 2);
    CHECK(run(bin() + " --help >/dev/null") == 0);

    // walks is capped at n <= 8.
    CHECK(run(bin() + " verify --which walks --input " + corpus("karate")) == 2);
    // cycle-graph host cannot take a probe.
    CHECK(run(bin() + " perturb --input " + corpus("c5") + " --attach 0,2") == 2);
}

TEST_CASE("cli: verify suites pass on the bundled corpus") {
    fs::path dir = scratch_dir();
    for (const char* which : {"ihara-bass", "table1", "walks", "peel"}) {
        fs::path out = dir / (std::string("verify_") + which + ".json");
        CAPTURE(which);
        CHECK(run(bin() + " verify --which " + which + " --input " + corpus("bowtie") +
                  " --output " + out.string()) == 0);
        json d = json::parse(slurp(out));
        CHECK(d["pass"] == true);
        CHECK(d["which"] == which);
    }
    fs::path karate_ib = dir / "karate_ib.json";
    CHECK(run(bin() + " verify --which ihara-bass --input " + corpus("karate") + " --output " +
              karate_ib.string()) == 0);
    json d = json::parse(slurp(karate_ib));
    CHECK(d["pass"] == true);
    CHECK(double(d["max_residual"]) <= 1e-8);
}

TEST_CASE("cli: perturb emits the probe report and the disk trace") {
    fs::path dir = scratch_dir();
    fs::path out = dir / "k4_probe.json";
    REQUIRE(run(bin() + " perturb --input " + corpus("k4") + " --attach 0,1,2,3 --output " +
                out.string()) == 0);
    json d = json::parse(slurp(out));
    CHECK(std::abs(double(d["lambda"]) - 2.0) <= 1e-8);
    CHECK(std::abs(double(d["lambda_c"]) - 3.0) <= 1e-6);
    CHECK(double(d["alpha11"]) >= 0.0);
    CHECK(double(d["direct_gap"]) <= 1e-6);
    CHECK(double(d["det_identity_max_rel"]) <= 1e-8);
    CHECK(d["trivial"] == false);

    fs::path disks = dir / "k4_probe.disks.csv";
    REQUIRE(d["disks_csv"] == disks.string());
    auto rows = read_csv(disks);
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"t", "i", "center_re", "center_im", "radius"});

    fs::path triv = dir / "triv_probe.json";
    REQUIRE(run(bin() + " perturb --input " + corpus("bowtie") + " --attach 3 --output " +
                triv.string()) == 0);
    json t = json::parse(slurp(triv));
    CHECK(t["trivial"] == true);
    CHECK(double(t["eigen_drop"]) == 0.0);
}

TEST_CASE("cli: identical runs produce byte-identical reports") {
    fs::path dir = scratch_dir();
    for (const std::string cmdline :
         {std::string("analyze --input ") + corpus("bowtie"),
          std::string("spectrum --input ") + corpus("karate"),
          std::string("verify --which table1 --input ") + corpus("paw"),
          std::string("perturb --input ") + corpus("k4") + " --attach 0,1"}) {
        CAPTURE(cmdline);
        fs::path a = dir / "rerun.out";
        REQUIRE(run(bin() + " " + cmdline + " --output " + a.string()) == 0);
        const std::string first = slurp(a);
        fs::remove(a);
        REQUIRE(run(bin() + " " + cmdline + " --output " + a.string()) == 0);
        CHECK(first == slurp(a));
    }
}

TEST_CASE("cli: no partial report is left behind on failure") {
    fs::path target = scratch_dir() / "no_such_dir" / "report.json";
    fs::remove_all(target.parent_path());
    CHECK(run(bin() + " analyze --input " + corpus("c3") + " --output " + target.string()) ==
          2);
    CHECK_FALSE(fs::exists(target));
}
