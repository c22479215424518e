#include "wedge_xva/commands.hpp"

#include "wedge_xva/eigen_cache.hpp"
#include "wedge_xva/errors.hpp"
#include "wedge_xva/greens2d.hpp"
#include "wedge_xva/quadrature.hpp"
#include "wedge_xva/special.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>

namespace wxva {

namespace {

using nlohmann::json;

std::string timestamp()
{
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

std::filesystem::path output_dir(const ScenarioFile& s)
{
    const std::filesystem::path dir(s.run.outputs);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void header_line(std::ostream& out, const CommandOptions& o, const std::string& what)
{
    if (o.header) out << "# wedge_xva " << what << ' ' << timestamp() << '\n';
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

CacheKey key_for(const ScenarioFile& s, const CorrelationTriplet& rho)
{
    CacheKey key;
    key.rho = rho;
    key.mesh = s.run.mesh;
    key.modes = s.run.modes;
    return key;
}

SimConfig mc_config(const ScenarioFile& s, const CommandOptions& o)
{
    SimConfig c = s.run.mc;
    if (o.seed) c.seed = *o.seed;
    c.threads = o.threads;
    c.validate();
    return c;
}

ConeQuadrature cone_quadrature(const CommandOptions& o)
{
    ConeQuadrature q;
    q.threads = o.threads;
    return q;
}

double par_coupon(const MarketInput& m, double maturity)
{
    const auto& rn = m.issuer(Role::ReferenceName);
    return breakeven_coupon(m.contract(maturity), distance_from_inputs(rn.initial_value, rn.sigma), rn.recovery);
}

} // namespace

std::string csv_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

int run_guarded(const std::function<int()>& body, std::ostream& err)
{
    try {
        return body();
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
}

int cmd_calibrate(const ScenarioFile& s, const CommandOptions& o, std::ostream& out)
{
    if (s.market.issuers.empty()) throw DomainError("calibrate needs at least one issuer");
    const auto dir = output_dir(s);
    const auto path = dir / (s.id + "_calibration.csv");
    auto csv = open_output(path);
    header_line(csv, o, "calibrate " + s.id);
    csv << "issuer,role,sigma,target_spread,achieved_spread\n";
    const auto contract = s.market.contract();
    for (const auto& i : s.market.issuers) {
        const double target = i.spread ? *i.spread : breakeven_coupon(contract, distance_from_inputs(i.initial_value, i.sigma), i.recovery);
        const double sigma = calibrate_sigma(i.initial_value, target, i.recovery, contract);
        const double achieved = breakeven_coupon(contract, distance_from_inputs(i.initial_value, sigma), i.recovery);
        csv << i.name << ',' << to_string(i.role) << ',' << csv_number(sigma) << ',' << csv_number(target) << ','
            << csv_number(achieved) << '\n';
        out << i.name << ": sigma " << csv_number(sigma) << " for spread " << csv_number(target) << '\n';
    }
    finish(csv, path);
    return kExitOk;
}

int cmd_mesh(const ScenarioFile& s, const CommandOptions& o, std::ostream& out)
{
    const auto dir = output_dir(s);
    const AngularDomain domain(s.market.rho);
    const auto mesh = generate_mesh(domain, s.run.mesh);
    const auto nodes_path = dir / (s.id + "_mesh_nodes.csv"), tri_path = dir / (s.id + "_mesh_triangles.csv");
    const auto boundary_path = dir / (s.id + "_boundary.csv");
    auto nodes = open_output(nodes_path);
    auto tris = open_output(tri_path);
    auto boundary = open_output(boundary_path);
    write_mesh_csv(mesh, nodes, tris);
    header_line(boundary, o, "mesh " + s.id);
    domain.write_boundary_csv(boundary, 200);
    finish(nodes, nodes_path);
    finish(tris, tri_path);
    finish(boundary, boundary_path);
    out << mesh.size() << " nodes, " << mesh.triangles.size() << " triangles, min quality " << mesh.min_quality << '\n';
    if (o.strict && mesh.min_quality < s.run.mesh.quality_floor) throw MeshQualityError("mesh quality below the floor");
    return kExitOk;
}

int cmd_eigen(const ScenarioFile& s, const CommandOptions& o, std::ostream& out)
{
    const auto dir = output_dir(s);
    bool hit = false;
    const auto basis = load_or_solve(o.cache_dir, key_for(s, s.market.rho), o.threads, &hit);
    const auto spectrum_path = dir / (s.id + "_spectrum.csv");
    auto spectrum = open_output(spectrum_path);
    header_line(spectrum, o, "eigen " + s.id);
    write_spectrum_csv(basis, spectrum);
    finish(spectrum, spectrum_path);
    const auto nodes_path = dir / (s.id + "_mesh_nodes.csv"), tri_path = dir / (s.id + "_mesh_triangles.csv");
    auto nodes = open_output(nodes_path);
    auto tris = open_output(tri_path);
    write_mesh_csv(basis.mesh(), nodes, tris);
    finish(nodes, nodes_path);
    finish(tris, tri_path);
    out << (hit ? "cache hit" : "solved and cached") << ": " << basis.mode_count() << " modes on " << basis.mesh().size()
        << " nodes, lambda2[1] = " << csv_number(basis.eigenvalues()(0)) << '\n';
    if (o.strict && basis.max_eigen_residual() > 1e-8) throw NumericalError("eigen residual above 1e-8");
    return kExitOk;
}

int cmd_survival(const ScenarioFile& s, const CommandOptions& o, std::ostream& out)
{
    const auto dir = output_dir(s);
    const auto p = s.market.parties();
    const auto st = p.state();
    const auto& rho = s.market.rho;
    std::optional<EigenBasis> basis;
    std::optional<AngularDomain> domain;
    if (s.run.runs(Engine::Semi3d)) {
        basis.emplace(load_or_solve(o.cache_dir, key_for(s, rho), o.threads));
        domain.emplace(rho);
    }
    std::optional<PathSet> paths;
    const double horizon = *std::max_element(s.run.maturities.begin(), s.run.maturities.end());
    if (s.run.runs(Engine::Mc)) paths = simulate_default_times(st, rho, horizon, mc_config(s, o));

    const auto path = dir / (s.id + "_survival.csv");
    auto csv = open_output(path);
    header_line(csv, o, "survival " + s.id);
    csv << "t,seller,reference,buyer,seller_reference,seller_buyer,reference_buyer";
    if (basis) csv << ",joint_semi3d";
    if (paths) csv << ",joint_mc,joint_mc_se";
    csv << '\n';
    for (double T : s.run.maturities) {
        csv << csv_number(T) << ',' << csv_number(survival_1d(st.x0, T)) << ',' << csv_number(survival_1d(st.y0, T)) << ','
            << csv_number(survival_1d(st.z0, T)) << ',' << csv_number(survival_2d(0, st.x0, st.y0, rho.xy(), T)) << ','
            << csv_number(survival_2d(0, st.x0, st.z0, rho.xz(), T)) << ',' << csv_number(survival_2d(0, st.y0, st.z0, rho.yz(), T));
        if (basis) csv << ',' << csv_number(survival_3d(0, st, *domain, T, *basis, cone_quadrature(o)));
        if (paths) {
            const auto e = estimate_survival(*paths, SurvivalSet::Joint, T);
            csv << ',' << csv_number(e.value) << ',' << csv_number(e.standard_error);
        }
        csv << '\n';
    }
    finish(csv, path);
    out << "wrote " << path.string() << '\n';
    return kExitOk;
}

int cmd_price(const ScenarioFile& s, const CommandOptions& o, std::ostream& out)
{
    const auto dir = output_dir(s);
    const auto p = s.market.parties();
    const auto st = p.state();
    const auto& rho = s.market.rho;
    const double T = s.market.maturity;
    const double par = par_coupon(s.market, T);
    const CdsValueGrid grid(s.market.contract().with_coupon(par), p.reference.recovery);

    json result;
    result["id"] = s.id;
    result["correlations"] = {{"xy", rho.xy()}, {"xz", rho.xz()}, {"yz", rho.yz()}};
    result["maturity"] = T;
    result["par_coupon"] = par;
    if (o.header) result["generated"] = timestamp();

    const std::array modes{AdjustmentMode::Standard, AdjustmentMode::CvaOnly, AdjustmentMode::DvaOnly, AdjustmentMode::Bilateral};
    std::optional<EigenBasis> basis;
    std::optional<AngularDomain> domain;
    std::array<double, 4> semi_coupons{};
    double semi_cva = 0.0, semi_dva = 0.0, semi_q = 0.0;
    if (s.run.runs(Engine::Semi3d)) {
        basis.emplace(load_or_solve(o.cache_dir, key_for(s, rho), o.threads));
        domain.emplace(rho);
        const auto quad = cone_quadrature(o);
        const auto path = dir / (s.id + "_coupons.csv");
        auto csv = open_output(path);
        header_line(csv, o, "price " + s.id);
        csv << "maturity,standard,cva_only,dva_only,bilateral\n";
        for (double m : s.run.maturities) {
            const AdjustmentEngine engine(s.market.contract(m), p, *domain, *basis, quad);
            csv << csv_number(m);
            for (std::size_t k = 0; k < modes.size(); ++k) {
                const double c = engine.breakeven(modes[k]);
                csv << ',' << csv_number(c);
                if (m == T) semi_coupons[k] = c;
            }
            csv << '\n';
        }
        finish(csv, path);
        if (std::find(s.run.maturities.begin(), s.run.maturities.end(), T) == s.run.maturities.end()) {
            const AdjustmentEngine engine(s.market.contract(), p, *domain, *basis, quad);
            for (std::size_t k = 0; k < modes.size(); ++k) semi_coupons[k] = engine.breakeven(modes[k]);
        }
        semi_cva = cva_3d(0, p, *domain, *basis, grid, quad);
        semi_dva = dva_3d(0, p, *domain, *basis, grid, quad);
        semi_q = survival_3d(0, st, *domain, T, *basis, quad);
        result["semi3d"] = {{"coupons", {{"standard", semi_coupons[0]}, {"cva_only", semi_coupons[1]}, {"dva_only", semi_coupons[2]},
                                         {"bilateral", semi_coupons[3]}}},
                            {"cva", semi_cva},
                            {"dva", semi_dva},
                            {"survival_joint", semi_q}};
        result["coupons"] = result["semi3d"]["coupons"];
        result["cva"] = semi_cva;
        result["dva"] = semi_dva;
        out << "semi3d " << T << "Y coupons: standard " << csv_number(semi_coupons[0]) << ", cva_only " << csv_number(semi_coupons[1])
            << ", dva_only " << csv_number(semi_coupons[2]) << ", bilateral " << csv_number(semi_coupons[3]) << '\n';
    }
    if (s.run.runs(Engine::Analytic)) {
        json curve = json::array();
        for (double m : s.run.maturities) curve.push_back({{"maturity", m}, {"standard", par_coupon(s.market, m)}});
        result["analytic"] = {{"standard_coupons", curve}};
    }
    if (s.run.runs(Engine::Semi2d)) {
        result["semi2d"] = {{"cva", cva_2d(0, p.seller, p.reference, rho.xy(), grid)},
                            {"dva", dva_2d(0, p.buyer, p.reference, rho.yz(), grid)}};
    }

    json survival;
    survival["t"] = s.run.maturities;
    for (auto [name, x] : {std::pair{"seller", st.x0}, {"reference", st.y0}, {"buyer", st.z0}}) {
        json v = json::array();
        for (double m : s.run.maturities) v.push_back(survival_1d(x, m));
        survival[name] = v;
    }
    if (basis) {
        json v = json::array();
        for (double m : s.run.maturities) v.push_back(survival_3d(0, st, *domain, m, *basis, cone_quadrature(o)));
        survival["joint"] = v;
    }
    result["survival"] = survival;

    bool agree = true;
    if (s.run.runs(Engine::Mc)) {
        const auto paths = simulate_default_times(st, rho, T, mc_config(s, o));
        const auto adj = estimate_cva_dva(paths, grid, p.seller.recovery, p.buyer.recovery, McMode::Bilateral);
        const auto q = estimate_survival(paths, SurvivalSet::Joint, T);
        const std::array mc_modes{McBreakevenMode::Standard, McBreakevenMode::CvaOnly, McBreakevenMode::DvaOnly, McBreakevenMode::Bilateral};
        std::array<EstimateWithError, 4> coupons;
        for (std::size_t k = 0; k < 4; ++k)
            coupons[k] = estimate_breakeven(paths, s.market.contract(), p.reference.recovery, p.seller.recovery, p.buyer.recovery, mc_modes[k]);
        auto with_se = [](const EstimateWithError& e) { return json{{"value", e.value}, {"standard_error", e.standard_error}}; };
        result["mc"] = {{"cva", with_se(adj.cva)},
                        {"dva", with_se(adj.dva)},
                        {"survival_joint", with_se(q)},
                        {"coupons", {{"standard", with_se(coupons[0])}, {"cva_only", with_se(coupons[1])}, {"dva_only", with_se(coupons[2])},
                                     {"bilateral", with_se(coupons[3])}}},
                        {"n_paths", paths.size()},
                        {"seed", mc_config(s, o).seed}};
        if (basis) {
            const auto path = dir / (s.id + "_comparison.csv");
            auto csv = open_output(path);
            header_line(csv, o, "price " + s.id);
            csv << "quantity,semi_analytic,monte_carlo,standard_error,z\n";
            auto row = [&](const char* name, double semi, const EstimateWithError& mc) {
                const double z = (semi - mc.value) / mc.standard_error;
                if (!(std::abs(z) <= 3.0)) agree = false;
                csv << name << ',' << csv_number(semi) << ',' << csv_number(mc.value) << ',' << csv_number(mc.standard_error) << ','
                    << csv_number(z) << '\n';
            };
            row("survival_joint", semi_q, q);
            row("cva", semi_cva, adj.cva);
            row("dva", semi_dva, adj.dva);
            row("coupon_standard", semi_coupons[0], coupons[0]);
            row("coupon_cva_only", semi_coupons[1], coupons[1]);
            row("coupon_dva_only", semi_coupons[2], coupons[2]);
            row("coupon_bilateral", semi_coupons[3], coupons[3]);
            finish(csv, path);
            out << "semi3d vs mc: " << (agree ? "all rows within 3 SE" : "some rows outside 3 SE") << '\n';
        }
    }

    const auto path = dir / (s.id + "_result.json");
    auto js = open_output(path);
    js << result.dump(2) << '\n';
    finish(js, path);
    out << "wrote " << path.string() << '\n';
    if (o.strict && !agree) throw NumericalError("semi-analytic and Monte Carlo values differ by more than 3 SE");
    return kExitOk;
}

} // namespace wxva
