#include "wedge_xva/commands.hpp"
#include "wedge_xva/eigen_cache.hpp"
#include "wedge_xva/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace wxva;

int main(int argc, char** argv)
{
    CLI::App app{"Counterparty adjustments for CDS under a correlated structural model"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::string> cache_flag;
    std::optional<std::uint64_t> seed;
    CommandOptions opts;
    bool no_header = false;

    app.add_option("--cache-dir", cache_flag, "eigenbasis cache directory (default: $WEDGE_XVA_CACHE, then the user cache)");
    app.add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Monte Carlo seed, overriding the scenario");
    app.add_flag("--strict", opts.strict, "treat warnings as failures");
    app.add_flag("--no-header", no_header, "omit timestamped header lines and timings");

    auto with_scenario = [&](CLI::App* sub) { sub->add_option("--scenario", scenario_path, "scenario JSON")->required(); };
    auto* calibrate = app.add_subcommand("calibrate", "calibrate issuer volatilities to 5Y spreads");
    auto* eigen = app.add_subcommand("eigen", "build or load the angular eigenbasis and write its spectrum");
    auto* mesh = app.add_subcommand("mesh", "mesh the angular domain and write nodes, triangles and boundary");
    auto* price = app.add_subcommand("price", "breakeven coupons, CVA and DVA");
    auto* survival = app.add_subcommand("survival", "survival term structures");
    auto* validate = app.add_subcommand("validate", "run the oracle suite");
    for (auto* sub : {calibrate, eigen, mesh, price, survival}) with_scenario(sub);
    validate->add_option("--tolerance-scale", opts.tolerance_scale, "multiply every tolerance (testing hook)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    return run_guarded(
        [&] {
            opts.header = !no_header;
            opts.seed = seed;
            opts.cache_dir = resolve_cache_dir(cache_flag);
            if (*validate) return cmd_validate(opts, std::cout);
            const auto scenario = load_scenario(scenario_path);
            if (*calibrate) return cmd_calibrate(scenario, opts, std::cout);
            if (*eigen) return cmd_eigen(scenario, opts, std::cout);
            if (*mesh) return cmd_mesh(scenario, opts, std::cout);
            if (*price) return cmd_price(scenario, opts, std::cout);
            return cmd_survival(scenario, opts, std::cout);
        },
        std::cerr);
}
