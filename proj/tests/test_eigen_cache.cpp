#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/eigen_cache.hpp"
#include "wedge_xva/errors.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace wxva;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("wxva_cache_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

CacheKey small_key()
{
    CacheKey key;
    key.rho = CorrelationTriplet(0.8, 0.2, 0.5);
    key.mesh.n_points = 400;
    key.modes = 20;
    return key;
}

} // namespace

TEST_CASE("canonical keys", "[cache]")
{
    CacheKey a = small_key(), b = small_key();
    CHECK(a.canonical() == b.canonical());
    b.rho = CorrelationTriplet(0.8 + 1e-17, 0.2, 0.5);
    CHECK(a.file_name() == b.file_name());
    b.rho = CorrelationTriplet(0.8 + 1e-6, 0.2, 0.5);
    CHECK(a.file_name() != b.file_name());
    b = small_key();
    b.modes = 21;
    CHECK(a.file_name() != b.file_name());
    b = small_key();
    b.mesh.refinement = 2.5;
    CHECK(a.file_name() != b.file_name());
    CHECK(a.file_name().rfind("basis-", 0) == 0);
    CHECK(a.file_name().size() == 6 + 16 + 4);
}

TEST_CASE("store and load round trip", "[cache]")
{
    const auto dir = scratch("roundtrip");
    const auto key = small_key();
    bool hit = true;
    const auto solved = load_or_solve(dir, key, 1, &hit);
    CHECK_FALSE(hit);
    const auto loaded = load_or_solve(dir, key, 1, &hit);
    CHECK(hit);
    CHECK(loaded.eigenvalues() == solved.eigenvalues());
    CHECK(loaded.vectors() == solved.vectors());
    CHECK(loaded.mesh().nodes == solved.mesh().nodes);
    CHECK(loaded.mesh().triangles == solved.mesh().triangles);
    CHECK(loaded.mesh().flags == solved.mesh().flags);
    CHECK(loaded.mass_vectors() == solved.mass_vectors());
    CHECK(loaded.boundary_flux() == solved.boundary_flux());
    CHECK(loaded.rayleigh_residual() == solved.rayleigh_residual());
    CHECK(loaded.eval(3, 0.4, 1.0) == solved.eval(3, 0.4, 1.0));

    auto other = key;
    other.rho = CorrelationTriplet(0.8 + 1e-6, 0.2, 0.5);
    CHECK_FALSE(cache_load(dir, other).has_value());

    // A file stored under the wrong name is a key mismatch, not corruption.
    std::filesystem::copy_file(dir / key.file_name(), dir / other.file_name());
    CHECK_FALSE(cache_load(dir, other).has_value());
    std::filesystem::remove_all(dir);
}

TEST_CASE("damaged cache files", "[cache]")
{
    const auto key = small_key();
    const AngularDomain domain(key.rho);
    MeshSpec spec = key.mesh;
    const auto basis = solve_lowest(std::make_shared<const TriMesh>(generate_mesh(domain, spec)), key.modes);
    std::ostringstream out;
    write_basis(out, key, basis);
    const std::string good = out.str();

    {
        std::istringstream in(good);
        CHECK(read_basis(in, key).has_value());
    }
    {
        std::string bad = good;
        bad[good.size() / 2] ^= 0x10;
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_basis(in, key), CacheIntegrityError);
    }
    {
        std::istringstream in(good.substr(0, good.size() - 100));
        CHECK_THROWS_AS(read_basis(in, key), CacheIntegrityError);
    }
    {
        std::string bad = good;
        bad[0] = 'Z';
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_basis(in, key), CacheIntegrityError);
    }
    {
        std::string old = good;
        old[8] = static_cast<char>(kCacheFormatVersion + 1);
        std::istringstream in(old);
        CHECK_FALSE(read_basis(in, key).has_value());
    }
}

TEST_CASE("cache hit is much cheaper than a solve", "[cache]")
{
    const auto dir = scratch("timing");
    CacheKey key;
    key.rho = CorrelationTriplet(0.8, 0.2, 0.5);
    key.mesh.n_points = 1500;
    key.modes = 100;
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    load_or_solve(dir, key);
    const double solve = std::chrono::duration<double>(clock::now() - t0).count();
    double load = 1e9;
    for (int k = 0; k < 3; ++k) {
        const auto t1 = clock::now();
        bool hit = false;
        load_or_solve(dir, key, 1, &hit);
        CHECK(hit);
        load = std::min(load, std::chrono::duration<double>(clock::now() - t1).count());
    }
    INFO("solve " << solve << " s, load " << load << " s");
    CHECK(load < 0.01 * solve);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cache directory precedence", "[cache]")
{
    ::setenv("WEDGE_XVA_CACHE", "/tmp/from_env", 1);
    CHECK(resolve_cache_dir(std::string("/tmp/from_flag")) == "/tmp/from_flag");
    CHECK(resolve_cache_dir(std::nullopt) == "/tmp/from_env");
    ::unsetenv("WEDGE_XVA_CACHE");
    ::setenv("XDG_CACHE_HOME", "/tmp/xdg", 1);
    CHECK(resolve_cache_dir(std::nullopt) == std::filesystem::path("/tmp/xdg/wedge_xva"));
    ::unsetenv("XDG_CACHE_HOME");
    CHECK(resolve_cache_dir(std::nullopt).filename() == "wedge_xva");
}

TEST_CASE("spectrum CSV", "[cache]")
{
    const auto key = small_key();
    const auto basis = solve_lowest(std::make_shared<const TriMesh>(generate_mesh(AngularDomain(key.rho), key.mesh)), 5);
    std::ostringstream out;
    write_spectrum_csv(basis, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "n,lambda2");
    std::getline(in, line);
    CHECK(line.rfind("1,5.", 0) == 0);
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
}
