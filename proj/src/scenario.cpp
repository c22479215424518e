#include "wedge_xva/scenario.hpp"

#include "wedge_xva/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace wxva {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* name)
{
    if (!j.is_object() || !j.contains(name)) throw DomainError(std::string("scenario is missing field '") + name + "'");
    return j.at(name);
}

double number(const json& j, const char* name)
{
    const auto& v = field(j, name);
    if (!v.is_number()) throw DomainError(std::string("scenario field '") + name + "' must be a number");
    return v.get<double>();
}

template <class T>
T number_or(const json& j, const char* name, T fallback)
{
    if (!j.contains(name)) return fallback;
    const auto& v = j.at(name);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw DomainError(std::string("scenario field '") + name + "' must be a boolean");
    } else if (!v.is_number()) {
        throw DomainError(std::string("scenario field '") + name + "' must be a number");
    }
    return v.get<T>();
}

} // namespace

static ScenarioFile parse_scenario_json(const nlohmann::json& j);

const IssuerInput& MarketInput::issuer(Role role) const
{
    for (const auto& i : issuers) {
        if (i.role == role) return i;
    }
    throw DomainError("scenario has no " + std::string(to_string(role)));
}

TradeParties MarketInput::parties() const
{
    auto make = [&](Role r) {
        const auto& i = issuer(r);
        return make_issuer(r, i.initial_value, i.sigma, i.recovery, i.name);
    };
    return {make(Role::ProtectionSeller), make(Role::ReferenceName), make(Role::ProtectionBuyer)};
}

CdsContract MarketInput::contract() const { return contract(maturity); }

CdsContract MarketInput::contract(double T) const { return CdsContract::with_frequency(T, coupon, frequency, rate); }

std::string_view to_string(Engine e)
{
    switch (e) {
    case Engine::Analytic: return "analytic";
    case Engine::Semi2d: return "semi2d";
    case Engine::Semi3d: return "semi3d";
    case Engine::Mc: return "mc";
    }
    return "?";
}

Engine engine_from_string(std::string_view name)
{
    for (auto e : {Engine::Analytic, Engine::Semi2d, Engine::Semi3d, Engine::Mc}) {
        if (to_string(e) == name) return e;
    }
    throw DomainError("unknown engine '" + std::string(name) + "'");
}

bool RunBlock::runs(Engine e) const { return std::find(engines.begin(), engines.end(), e) != engines.end(); }

ScenarioFile parse_scenario(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        return parse_scenario_json(j);
    } catch (const json::exception& e) {
        throw DomainError(std::string("scenario field has the wrong type: ") + e.what());
    }
}

static ScenarioFile parse_scenario_json(const nlohmann::json& j)
{
    ScenarioFile s;
    if (j.contains("id")) s.id = j.at("id").get<std::string>();

    const auto& issuers = field(j, "issuers");
    if (!issuers.is_array() || issuers.empty()) throw DomainError("scenario needs a non-empty issuer list");
    for (const auto& e : issuers) {
        IssuerInput i;
        i.role = role_from_string(field(e, "role").get<std::string>());
        i.name = e.value("name", std::string(to_string(i.role)));
        i.initial_value = number(e, "initial_value");
        i.sigma = number(e, "sigma");
        i.recovery = number(e, "recovery");
        if (e.contains("spread")) i.spread = number(e, "spread");
        s.market.issuers.push_back(i);
    }
    const auto& c = field(j, "correlations");
    s.market.rho = validate_correlations(number(c, "xy"), number(c, "xz"), number(c, "yz"));
    s.market.rate = number(j, "rate");
    const auto& k = field(j, "contract");
    s.market.maturity = number(k, "maturity");
    s.market.coupon = number(k, "coupon");
    s.market.frequency = static_cast<int>(number(k, "frequency"));
    if (!(s.market.maturity > 0.0) || s.market.frequency < 1) throw DomainError("contract needs maturity > 0 and frequency >= 1");

    if (j.contains("run")) {
        const auto& r = j.at("run");
        if (r.contains("engines")) {
            s.run.engines.clear();
            for (const auto& e : r.at("engines")) s.run.engines.push_back(engine_from_string(e.get<std::string>()));
        }
        if (r.contains("mesh")) {
            const auto& m = r.at("mesh");
            s.run.mesh.n_points = number_or(m, "n_points", s.run.mesh.n_points);
            s.run.mesh.n_iters = number_or(m, "n_iters", s.run.mesh.n_iters);
            s.run.mesh.refinement = number_or(m, "refinement", s.run.mesh.refinement);
        }
        s.run.modes = number_or(r, "modes", s.run.modes);
        if (r.contains("mc")) {
            const auto& m = r.at("mc");
            s.run.mc.n_paths = number_or<std::int64_t>(m, "n_paths", s.run.mc.n_paths);
            s.run.mc.steps_per_year = number_or(m, "steps_per_year", s.run.mc.steps_per_year);
            s.run.mc.seed = number_or<std::uint64_t>(m, "seed", s.run.mc.seed);
            s.run.mc.bridge_correction = number_or(m, "bridge_correction", s.run.mc.bridge_correction);
            s.run.mc.antithetic = number_or(m, "antithetic", s.run.mc.antithetic);
            s.run.mc.validate();
        }
        if (r.contains("outputs")) s.run.outputs = r.at("outputs").get<std::string>();
        if (r.contains("maturities")) s.run.maturities = r.at("maturities").get<std::vector<double>>();
    }
    if (s.run.modes < 1) throw DomainError("run.modes must be positive");
    return s;
}

ScenarioFile load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    auto s = parse_scenario(text.str());
    // Relative output paths are taken from the scenario's own directory.
    if (std::filesystem::path(s.run.outputs).is_relative()) s.run.outputs = (path.parent_path() / s.run.outputs).lexically_normal().string();
    return s;
}

std::string scenario_to_json(const ScenarioFile& s)
{
    json j;
    j["id"] = s.id;
    for (const auto& i : s.market.issuers) {
        json e{{"role", to_string(i.role)}, {"name", i.name}, {"initial_value", i.initial_value}, {"sigma", i.sigma}, {"recovery", i.recovery}};
        if (i.spread) e["spread"] = *i.spread;
        j["issuers"].push_back(e);
    }
    j["correlations"] = {{"xy", s.market.rho.xy()}, {"xz", s.market.rho.xz()}, {"yz", s.market.rho.yz()}};
    j["rate"] = s.market.rate;
    j["contract"] = {{"maturity", s.market.maturity}, {"coupon", s.market.coupon}, {"frequency", s.market.frequency}};
    json engines = json::array();
    for (auto e : s.run.engines) engines.push_back(to_string(e));
    j["run"] = {{"engines", engines},
                {"mesh", {{"n_points", s.run.mesh.n_points}, {"n_iters", s.run.mesh.n_iters}, {"refinement", s.run.mesh.refinement}}},
                {"modes", s.run.modes},
                {"mc", {{"n_paths", s.run.mc.n_paths}, {"steps_per_year", s.run.mc.steps_per_year}, {"seed", s.run.mc.seed},
                        {"bridge_correction", s.run.mc.bridge_correction}, {"antithetic", s.run.mc.antithetic}}},
                {"outputs", s.run.outputs},
                {"maturities", s.run.maturities}};
    return j.dump(2);
}

ScenarioFile table1_scenario(const CorrelationTriplet& rho, std::string id)
{
    ScenarioFile s;
    s.id = std::move(id);
    s.market.issuers = {{Role::ProtectionSeller, "AIG", 0.0359, 0.0244, 0.5, std::nullopt},
                        {Role::ReferenceName, "GE", 0.3035, 0.1045, 0.4, std::nullopt},
                        {Role::ProtectionBuyer, "UNICREDIT", 0.1199, 0.063, 0.4, std::nullopt}};
    s.market.rho = rho;
    s.market.rate = 0.01;
    s.market.maturity = 5.0;
    s.market.frequency = 4;
    return s;
}

} // namespace wxva
