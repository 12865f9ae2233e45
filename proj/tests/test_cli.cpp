#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef OPSIEVE_CLI_PATH
#define OPSIEVE_CLI_PATH "opsieve"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "opsieve_cli_test";

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(OPSIEVE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("bounds subcommand writes a deterministic table", "[cli]") {
    fs::create_directories(kWork);
    write_file(kWork / "bounds.json", R"({
        "omega": {"grid": {"L": 3.0, "h": 0.05},
                  "disks": [{"cx": 0.0, "cy": 0.0, "r": 0.4}, {"cx": 1.5, "cy": 1.0, "r": 0.4}]},
        "gamma": {"gaussian": true},
        "R": [0.5, 1.0]
    })");
    const std::string cfg = " --config " + (kWork / "bounds.json").string();
    REQUIRE(run("bounds" + cfg + " --out " + (kWork / "o1").string() + " --seed 7") == 0);
    REQUIRE(run("bounds" + cfg + " --out " + (kWork / "o2").string() + " --seed 7") == 0);
    const std::string a = read_file(kWork / "o1" / "bounds.csv");
    const std::string b = read_file(kWork / "o2" / "bounds.csv");
    CHECK(a == b);
    CHECK(a.rfind("method,value,certificate,params\n", 0) == 0);
    const auto j = json::parse(read_file(kWork / "o1" / "bounds.json"));
    CHECK(j.is_array());
    CHECK(j.size() >= 5);
    for (const auto& row : j) {
        CHECK(row.contains("method"));
        CHECK(row.contains("value"));
        CHECK(row.contains("certificate"));
        CHECK(row.contains("params"));
    }
}

TEST_CASE("locop subcommand reproduces the disk eigenvalue", "[cli]") {
    write_file(kWork / "loc.json", R"({
        "omega": {"grid": {"L": 5.0, "h": 0.02},
                  "disks": [{"cx": 0.0, "cy": 0.0, "r": 0.5641895835477563}]},
        "gamma": {"gaussian": true},
        "truncation": 10
    })");
    REQUIRE(run("locop --config " + (kWork / "loc.json").string() + " --out " +
                (kWork / "oloc").string()) == 0);
    const auto j = json::parse(read_file(kWork / "oloc" / "locop.json"));
    CHECK(std::abs(j["lambda1"].get<double>() - (1.0 - std::exp(-1.0))) < 1e-10);
    const std::string csv = read_file(kWork / "oloc" / "spectrum.csv");
    CHECK(csv.rfind("index,eigenvalue\n", 0) == 0);
}

TEST_CASE("recover strict mode trips on an uncertified region", "[cli]") {
    // a fat centered disk is uncertified; strict mode must exit 4
    write_file(kWork / "fh.json", R"({
        "kind": "hsnorm", "L": 4.0, "h": 0.1,
        "gamma": {"lambda": [0.7071067811865476, 0.7071067811865476]},
        "rho": {"random": "rank", "rank": 2, "truncation": 4, "seed": 5}
    })");
    REQUIRE(run("fields --config " + (kWork / "fh.json").string() + " --out " +
                (kWork / "ofield").string()) == 0);
    write_file(kWork / "rec_bad.json", std::string(R"({
        "variant": "logan",
        "gamma": {"lambda": [0.7071067811865476, 0.7071067811865476]},
        "omega": {"grid": {"L": 4.0, "h": 0.1}, "disks": [{"cx": 0.0, "cy": 0.0, "r": 2.0}]},
        "epsilon": 0.0,
        "observed": ")") + (kWork / "ofield" / "field.bin").string() + "\"}");
    CHECK(run("recover --strict --config " + (kWork / "rec_bad.json").string() + " --out " +
              (kWork / "orec").string()) == 4);

    // without strict the solve still runs and reports the failed certificate
    REQUIRE(run("recover --config " + (kWork / "rec_bad.json").string() + " --out " +
                (kWork / "orec2").string()) == 0);
    const auto j = json::parse(read_file(kWork / "orec2" / "report.json"));
    CHECK_FALSE(j["certificate"]["certified"].get<bool>());
}

TEST_CASE("bounds table on the sparse disk chain", "[cli]") {
    // ten disks of radius 0.05 spaced 0.2 apart: the sieve certificate holds
    // while the area bound is far below it
    std::string disks;
    for (int k = 0; k < 10; ++k) {
        if (k) disks += ", ";
        disks += "{\"cx\": " + std::to_string(0.2 * k) + ", \"cy\": 0.0, \"r\": 0.05}";
    }
    write_file(kWork / "chain.json",
               std::string("{\"omega\": {\"grid\": {\"L\": 2.5, \"h\": 0.01}, \"disks\": [") +
                   disks + "]}, \"gamma\": {\"gaussian\": true}, \"R\": [0.1]}");
    REQUIRE(run("bounds --config " + (kWork / "chain.json").string() + " --out " +
                (kWork / "ochain").string()) == 0);
    const auto rows = json::parse(read_file(kWork / "ochain" / "bounds.json"));
    double rfk = -1.0, fk = -1.0;
    for (const auto& row : rows) {
        if (row["method"] == "RFK") rfk = row["value"].get<double>();
        if (row["method"] == "FaberKrahn") fk = row["value"].get<double>();
    }
    REQUIRE(rfk >= 0.0);
    REQUIRE(fk >= 0.0);
    // closed forms: RFK = 2(1-e^{-pi R^2/8})/(1-e^{-pi R^2}) ~ 0.25345 at the
    // raster's nu, and the area bound 1-e^{-10 pi R^2/8} ~ 0.03851
    CHECK(std::abs(rfk - 0.253449579360075) < 0.02);
    CHECK(std::abs(fk - 0.038509) < 0.005);
    CHECK(rfk < 0.5);
}

TEST_CASE("cohen field dump", "[cli]") {
    write_file(kWork / "cohen.json", R"({
        "kind": "cohen", "L": 3.0, "h": 0.1,
        "gamma": {"lambda": [0.7071067811865476, 0.7071067811865476]},
        "f": [1.0, 0.0, 0.0]
    })");
    REQUIRE(run("fields --config " + (kWork / "cohen.json").string() + " --out " +
                (kWork / "ocohen").string()) == 0);
    const std::string csv = read_file(kWork / "ocohen" / "cohen.csv");
    CHECK(csv.rfind("x,y,value\n", 0) == 0);
}

TEST_CASE("invalid configs exit with code 2", "[cli]") {
    CHECK(run("bounds --config /nonexistent.json --out " + (kWork / "x").string()) == 2);
    write_file(kWork / "bad.json", R"({"omega": {"grid": {"L": 2.0, "h": 0.1}}})");
    CHECK(run("bounds --config " + (kWork / "bad.json").string() + " --out " +
              (kWork / "x").string()) == 2);
}
