#pragma once

#include "wedge_xva/greens3d.hpp"
#include "wedge_xva/mesh.hpp"
#include "wedge_xva/model.hpp"
#include "wedge_xva/montecarlo.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wxva {

struct IssuerInput {
    Role role = Role::ReferenceName;
    std::string name;
    double initial_value = 0.0;  // ln(a0 / l0)
    double sigma = 0.0;
    double recovery = 0.0;
    std::optional<double> spread;  // calibration target; absent means the spread implied by sigma
};

struct MarketInput {
    std::vector<IssuerInput> issuers;
    CorrelationTriplet rho;
    double rate = 0.0;
    double maturity = 5.0;
    double coupon = 0.0;
    int frequency = 4;

    const IssuerInput& issuer(Role role) const;
    TradeParties parties() const;
    CdsContract contract() const;
    CdsContract contract(double maturity) const;
};

enum class Engine { Analytic, Semi2d, Semi3d, Mc };

std::string_view to_string(Engine e);
Engine engine_from_string(std::string_view name);

struct RunBlock {
    std::vector<Engine> engines{Engine::Analytic, Engine::Semi3d};
    MeshSpec mesh;
    int modes = 100;
    SimConfig mc;
    std::string outputs = ".";
    std::vector<double> maturities{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    bool runs(Engine e) const;
};

struct ScenarioFile {
    std::string id = "scenario";
    MarketInput market;
    RunBlock run;
};

/// Throws DomainError on missing or ill-typed fields.
ScenarioFile parse_scenario(std::string_view json_text);
ScenarioFile load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioFile& s);

/// The three Dec-2011 issuers (seller AIG, reference GE, buyer UNICREDIT), 5Y quarterly, rate 1%.
ScenarioFile table1_scenario(const CorrelationTriplet& rho, std::string id);

} // namespace wxva
