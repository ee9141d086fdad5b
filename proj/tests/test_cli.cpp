#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraglab/cli.hpp"
#include "fraglab/error.hpp"
#include "oracles.hpp"

using namespace fraglab;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fraglab_test_" + name);
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell.empty() ? NAN : std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("unknown flags and commands exit 2 with usage") {
    const Run a = cli({"gap", "--frobnicate", "3"});
    CHECK(a.code == kExitInvalidConfig);
    CHECK(a.err.find("Usage") != std::string::npos);
    CHECK(a.out.empty());
    CHECK(cli({"explode"}).code == kExitInvalidConfig);
    CHECK(cli({}).code == kExitInvalidConfig);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("invalid configurations exit 2") {
    CHECK(cli({"steady", "--gamma", "-1"}).code == kExitInvalidConfig);
    CHECK(cli({"steady", "--n", "7"}).code == kExitInvalidConfig);
    CHECK(cli({"steady", "--x-max", "0"}).code == kExitInvalidConfig);
    CHECK(cli({"simulate", "--scheme", "euler"}).code == kExitInvalidConfig);
    CHECK(cli({"simulate", "--initial", "gaussian"}).code == kExitInvalidConfig);
    CHECK(cli({"simulate", "--dt", "soon"}).code == kExitInvalidConfig);
    CHECK(cli({"simulate", "--n", "64", "--dt", "10"}).code == kExitInvalidConfig);
    CHECK(cli({"simulate", "--n", "64", "--initial", "custom_csv"}).code == kExitInvalidConfig);
    CHECK(cli({"selfcheck", "--only", "Z9"}).code == kExitInvalidConfig);
    CHECK(cli({"steady", "--config", "/nonexistent/fraglab.json"}).code == kExitInvalidConfig);
}

TEST_CASE("numerical failures exit 3") {
    // 20^400 overflows the loss diagonal.
    const Run r = cli({"gap", "--gamma", "400", "--x-max", "20", "--n", "16"});
    CHECK(r.code == kExitNumerical);
    CHECK(r.err.find("numerical-failure") != std::string::npos);
}

TEST_CASE("steady reports G(1) for gamma 3") {
    const Run r = cli({"steady", "--gamma", "3", "--n", "8", "--x-max", "6"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["normalization"]["discrete_first_moment"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
    bool found = false;
    for (const auto& p : j["probes"]) {
        if (p["x"].get<double>() == 1.0) {
            found = true;
            CHECK(p["formula"].get<double>() == doctest::Approx(oracle::kG3At1).epsilon(1e-12));
            CHECK(p.contains("interpolated"));
        }
    }
    CHECK(found);
    CHECK(j["samples"]["x"].size() == 8);
    CHECK(j["samples"]["G"].size() == 8);
}

TEST_CASE("gap command") {
    const Run r = cli({"gap", "--gamma", "2", "--n", "201", "--x-max", "6"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["sym_gap"].get<double>() <= -0.98);
    CHECK(j["zero_mode_alignment"].get<double>() >= 0.999);
    CHECK(j["spectrum_real_parts"].size() == 201);
}

TEST_CASE("simulate command") {
    const Run r = cli({"simulate", "--gamma", "2", "--n", "301", "--initial", "perturbed_steady", "--t-end", "3"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("# gamma=2,N=301,x_max=6,", 0) == 0);
    CHECK(r.out.find("time,mass,number,distance\n") != std::string::npos);
    CHECK(r.out.find("# fitted_rate=") != std::string::npos);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 61);
    for (const auto& row : rows) REQUIRE(row[3] <= 1.02 * rows[0][3] * std::exp(-row[0]));

    const Run frag = cli({"simulate", "--equation", "frag", "--n", "101", "--t-end", "0.5", "--initial", "exponential"});
    REQUIRE(frag.code == kExitOk);
    CHECK(frag.out.find("fitted_rate") == std::string::npos);
}

TEST_CASE("quadform command is seeded") {
    const std::vector<std::string> args{"quadform", "--gamma", "3", "--n", "201", "--count", "7", "--seed", "11"};
    const Run a = cli(args);
    const Run b = cli(args);
    REQUIRE(a.code == kExitOk);
    CHECK(a.out == b.out);
    CHECK(a.out.find("index,direct_L,direct_F,identity_F,ratio,transport_term,norm_sq") != std::string::npos);
    const auto rows = csv_rows(a.out);
    REQUIRE(rows.size() == 7);
    for (const auto& row : rows) {
        CHECK(row[4] <= -0.98);
        CHECK(row[4] == doctest::Approx(row[1] / row[6]));
    }
    auto other = args;
    other.back() = "12";
    CHECK(cli(other).out != a.out);
}

TEST_CASE("config file with flag overrides") {
    const auto path = temp_file("config.json");
    {
        std::ofstream f(path);
        f << R"({"gamma": 3, "n": 101, "x_max": 5, "seed": 4, "count": 3})";
    }
    const Run r = cli({"steady", "--config", path.string(), "--n", "51"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["gamma"].get<double>() == 3.0);
    CHECK(j["n"].get<int>() == 51);
    CHECK(j["x_max"].get<double>() == 5.0);

    {
        std::ofstream f(path);
        f << R"({"gamma": 3, "colour": "blue"})";
    }
    CHECK(cli({"steady", "--config", path.string()}).code == kExitInvalidConfig);
    {
        std::ofstream f(path);
        f << "{not json";
    }
    CHECK(cli({"steady", "--config", path.string()}).code == kExitInvalidConfig);
    std::filesystem::remove(path);
}

TEST_CASE("apply_json mirrors the flags") {
    RunConfig c;
    apply_json(c, nlohmann::json::parse(R"({"command": "simulate", "t_end": 1.5, "dt": "auto",
        "scheme": "exp_diag_split", "initial": "exponential", "perturbation_amplitude": 0.25,
        "equation": "frag", "only": ["A1", "A2"], "out": "x.csv", "output_interval": 0.1})"));
    CHECK(c.command == Command::Simulate);
    CHECK(c.t_end == 1.5);
    CHECK_FALSE(c.dt.has_value());
    CHECK(c.scheme == Scheme::ExpDiagSplit);
    CHECK(c.initial == InitialCondition::Exponential);
    CHECK(c.equation == Equation::Frag);
    CHECK(c.only == std::vector<std::string>{"A1", "A2"});
    CHECK_THROWS_AS(apply_json(c, nlohmann::json::parse(R"({"n": -3})")), Error);
    CHECK_THROWS_AS(apply_json(c, nlohmann::json::parse(R"({"gamma": "two"})")), Error);
}

TEST_CASE("output file and custom initial data") {
    const auto csv = temp_file("initial.csv");
    {
        std::ofstream f(csv);
        f << "x,value\n";
        for (int i = 0; i <= 120; ++i) {
            const double x = 0.05 * i;
            f << x << ',' << 2.0 * std::exp(-x * x) << '\n';
        }
    }
    const auto out = temp_file("run.csv");
    const Run r = cli({"simulate", "--n", "101", "--t-end", "0.5", "--initial", "custom_csv",
                       "--initial-csv", csv.string(), "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    std::ifstream in(out);
    std::stringstream text;
    text << in.rdbuf();
    const auto rows = csv_rows(text.str());
    REQUIRE(rows.size() == 11);
    CHECK(rows.back()[1] == doctest::Approx(rows.front()[1]).epsilon(1e-8));
    CHECK(rows.front()[3] < 1e-3);  // the file holds G itself

    {
        std::ofstream f(csv);
        f << "1,2\n3\n";
    }
    CHECK(cli({"simulate", "--n", "64", "--initial", "custom_csv", "--initial-csv", csv.string()}).code ==
          kExitInvalidConfig);
    std::filesystem::remove(csv);
    std::filesystem::remove(out);
}

TEST_CASE("selfcheck subset") {
    const Run r = cli({"selfcheck", "--only", "I1,I4"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("PASS I1 ") != std::string::npos);
    CHECK(r.out.find("PASS I4 ") != std::string::npos);
    CHECK(r.out.find("I2") == std::string::npos);
}
