#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/commands.hpp"
#include "wedge_xva/errors.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace wxva;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("wxva_cli_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

CommandOptions quiet_options(const std::filesystem::path& dir)
{
    CommandOptions o;
    o.cache_dir = dir / "cache";
    o.header = false;
    return o;
}

ScenarioFile small_table1(const CorrelationTriplet& rho, const std::filesystem::path& dir)
{
    auto s = table1_scenario(rho, "t1");
    s.run.mesh.n_points = 1500;
    s.run.mc.n_paths = 20000;
    s.run.mc.steps_per_year = 50;
    s.run.maturities = {1, 5};
    s.run.engines = {Engine::Analytic, Engine::Semi2d, Engine::Semi3d, Engine::Mc};
    s.run.outputs = (dir / "out").string();
    return s;
}

int run_cli(const std::string& args)
{
    const int status = std::system((std::string(WXVA_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("scenario files", "[cli]")
{
    const auto s = table1_scenario(CorrelationTriplet(0.8, 0.5, 0.3), "fig4");
    const auto back = parse_scenario(scenario_to_json(s));
    CHECK(back.id == "fig4");
    CHECK(back.market.rho == s.market.rho);
    CHECK(back.market.issuers.size() == 3);
    CHECK(back.market.parties().seller.x0() == Catch::Approx(0.0359 / 0.0244));
    CHECK(back.run.engines == s.run.engines);
    CHECK(back.run.maturities == s.run.maturities);

    CHECK_THROWS_AS(parse_scenario("{"), DomainError);
    CHECK_THROWS_AS(parse_scenario(R"({"issuers": []})"), DomainError);
    CHECK_THROWS_AS(parse_scenario(R"({"issuers": [{"role": "PS"}]})"), DomainError);
    auto j = nlohmann::json::parse(scenario_to_json(s));
    j["correlations"]["xy"] = 0.99;
    j["correlations"]["xz"] = -0.99;
    CHECK_THROWS_AS(parse_scenario(j.dump()), CorrelationError);
    j = nlohmann::json::parse(scenario_to_json(s));
    j["run"]["engines"] = {"tree"};
    CHECK_THROWS_AS(parse_scenario(j.dump()), DomainError);
    j = nlohmann::json::parse(scenario_to_json(s));
    j["rate"] = "one percent";
    CHECK_THROWS_AS(parse_scenario(j.dump()), DomainError);

    for (const char* name : {"table1_fig4.json", "table1_fig5.json", "fig3_eigen.json"}) {
        CHECK_NOTHROW(load_scenario(std::filesystem::path(WXVA_SCENARIO_DIR) / name));
    }
}

TEST_CASE("exit code mapping", "[cli]")
{
    std::ostringstream err;
    CHECK(run_guarded([] { return 0; }, err) == kExitOk);
    CHECK(run_guarded([]() -> int { throw DomainError("bad"); }, err) == kExitUsage);
    CHECK(run_guarded([]() -> int { throw CalibrationError("no root", 0.0, 1.0); }, err) == kExitNumerical);
    CHECK(run_guarded([]() -> int { throw CacheIntegrityError("bad file"); }, err) == kExitIo);
    CHECK(err.str().find("no root") != std::string::npos);
}

TEST_CASE("calibrate command", "[cli]")
{
    const auto dir = scratch("calibrate");
    auto s = small_table1(CorrelationTriplet(0.8, 0.5, 0.3), dir);
    std::ostringstream out, err;
    REQUIRE(cmd_calibrate(s, quiet_options(dir), out) == kExitOk);
    const auto rows = read_csv(dir / "out" / "t1_calibration.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"issuer", "role", "sigma", "target_spread", "achieved_spread"});
    const double sigmas[3] = {0.0244, 0.1045, 0.063};
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(std::stod(rows[k + 1][2]) - sigmas[k]) < 1e-6);
        CHECK(std::stod(rows[k + 1][3]) == Catch::Approx(std::stod(rows[k + 1][4])).epsilon(1e-9));
    }

    s.market.issuers[0].spread = 1e6;  // beyond any volatility in the calibration bracket
    const int code = run_guarded([&] { return cmd_calibrate(s, quiet_options(dir), out); }, err);
    CHECK(code == kExitNumerical);
    CHECK_FALSE(err.str().empty());

    s.market.issuers.clear();
    CHECK(run_guarded([&] { return cmd_calibrate(s, quiet_options(dir), out); }, err) == kExitUsage);
    std::filesystem::remove_all(dir);
}

TEST_CASE("eigen and mesh commands", "[cli]")
{
    const auto dir = scratch("eigen");
    auto s = small_table1(CorrelationTriplet(0.8, 0.2, 0.5), dir);
    std::ostringstream out;
    REQUIRE(cmd_eigen(s, quiet_options(dir), out) == kExitOk);
    CHECK(out.str().find("solved") != std::string::npos);
    const auto rows = read_csv(dir / "out" / "t1_spectrum.csv");
    REQUIRE(rows.size() == 101);
    const std::array<std::pair<int, double>, 4> fig3{{{1, 5.2}, {3, 16.3}, {4, 21.3}, {30, 140.0}}};
    for (auto [n, v] : fig3) CHECK(std::stod(rows[n][1]) == Catch::Approx(v).epsilon(0.03));
    CHECK(std::filesystem::exists(dir / "out" / "t1_mesh_nodes.csv"));

    std::ostringstream again;
    REQUIRE(cmd_eigen(s, quiet_options(dir), again) == kExitOk);
    CHECK(again.str().find("cache hit") != std::string::npos);

    s.market.rho = CorrelationTriplet(0, 0, 0);
    REQUIRE(cmd_eigen(s, quiet_options(dir), out) == kExitOk);
    CHECK(std::stod(read_csv(dir / "out" / "t1_spectrum.csv")[1][1]) == Catch::Approx(12.0).epsilon(0.01));

    REQUIRE(cmd_mesh(s, quiet_options(dir), out) == kExitOk);
    const auto boundary = read_csv(dir / "out" / "t1_boundary.csv");
    CHECK(boundary.size() > 100);
    std::filesystem::remove_all(dir);
}

TEST_CASE("price and survival commands", "[cli]")
{
    const auto dir = scratch("price");
    const auto s = small_table1(CorrelationTriplet(0.8, 0.5, 0.3), dir);
    const auto o = quiet_options(dir);
    std::ostringstream out;
    REQUIRE(cmd_price(s, o, out) == kExitOk);
    const auto coupons = read_csv(dir / "out" / "t1_coupons.csv");
    REQUIRE(coupons.size() == 3);
    const double standard = std::stod(coupons[2][1]), cva_only = std::stod(coupons[2][2]);
    const double dva_only = std::stod(coupons[2][3]), bilateral = std::stod(coupons[2][4]);
    CHECK(cva_only <= standard);
    CHECK(standard <= dva_only);
    CHECK(bilateral >= cva_only);
    CHECK(bilateral <= dva_only);
    CHECK(standard - cva_only > dva_only - standard);

    const auto result = nlohmann::json::parse(slurp(dir / "out" / "t1_result.json"));
    CHECK(result["id"] == "t1");
    CHECK(result["coupons"]["bilateral"].get<double>() == Catch::Approx(bilateral).epsilon(1e-10));
    CHECK(result["cva"].get<double>() > 0.0);
    CHECK(result["dva"].get<double>() > 0.0);
    CHECK(result["survival"]["joint"].size() == 2);
    CHECK_FALSE(result.contains("generated"));
    const auto comparison = read_csv(dir / "out" / "t1_comparison.csv");
    REQUIRE(comparison.size() == 8);
    for (std::size_t i = 1; i < comparison.size(); ++i) {
        INFO(comparison[i][0]);
        CHECK(std::abs(std::stod(comparison[i][4])) < 3.0);
    }

    // Byte-identical reruns without headers, including across thread counts.
    const auto first = slurp(dir / "out" / "t1_comparison.csv");
    auto threaded = o;
    threaded.threads = 2;
    REQUIRE(cmd_price(s, threaded, out) == kExitOk);
    CHECK(slurp(dir / "out" / "t1_comparison.csv") == first);

    REQUIRE(cmd_survival(s, o, out) == kExitOk);
    const auto surv = read_csv(dir / "out" / "t1_survival.csv");
    REQUIRE(surv.size() == 3);
    CHECK(surv[0].back() == "joint_mc_se");
    CHECK(std::stod(surv[2][7]) < std::stod(surv[1][7]));
    std::filesystem::remove_all(dir);
}

TEST_CASE("validate is deterministic and fails on tampered tolerances", "[cli]")
{
    const auto dir = scratch("validate");
    const auto o = quiet_options(dir);
    std::ostringstream a, b;
    CHECK(cmd_validate(o, a) == kExitOk);
    CHECK(cmd_validate(o, b) == kExitOk);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("FAIL") == std::string::npos);

    auto tampered = o;
    tampered.tolerance_scale = 1e-30;
    std::ostringstream c;
    CHECK(cmd_validate(tampered, c) == kExitNumerical);
    CHECK(c.str().find("FAIL") != std::string::npos);

    auto timed = o;
    timed.header = true;
    std::ostringstream d;
    CHECK(cmd_validate(timed, d) == kExitOk);
    CHECK(d.str().find(" s\n") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("command line exit codes", "[cli]")
{
    const auto dir = scratch("exe");
    CHECK(run_cli("") == kExitUsage);
    CHECK(run_cli("frobnicate") == kExitUsage);
    CHECK(run_cli("price") == kExitUsage);
    CHECK(run_cli("price --scenario " + (dir / "missing.json").string()) == kExitIo);
    {
        std::ofstream bad(dir / "bad.json");
        bad << R"({"issuers": []})";
    }
    CHECK(run_cli("calibrate --scenario " + (dir / "bad.json").string()) == kExitUsage);
    CHECK(run_cli("--help") == kExitOk);
    std::filesystem::remove_all(dir);
}
