#include "wedge_xva/montecarlo.hpp"

#include "wedge_xva/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

namespace wxva {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    constexpr std::uint64_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = m0 * ctr[0], p1 = m1 * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
    }
    return ctr;
}

void SimConfig::validate() const
{
    if (n_paths < 1000) throw DomainError("Monte Carlo needs at least 1000 paths");
    if (steps_per_year < 50) throw DomainError("Monte Carlo needs at least 50 steps per year");
    if (threads < 1) throw DomainError("Monte Carlo needs at least one thread");
    if (antithetic && n_paths % 2 != 0) throw DomainError("antithetic sampling needs an even path count");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::int64_t kBlock = 4096;

double to_uniform(std::uint32_t u) { return (static_cast<double>(u) + 0.5) * 0x1p-32; }

// Mean and standard error of per-path values; antithetic pairs count as one draw.
EstimateWithError summarize(const std::vector<double>& v, bool antithetic)
{
    EstimateWithError e;
    const std::size_t n = v.size();
    if (n == 0) return e;
    const std::size_t stride = antithetic ? 2 : 1;
    const std::size_t m = n / stride;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < stride; ++j) s += v[i * stride + j];
        sum += s / static_cast<double>(stride);
    }
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < stride; ++j) s += v[i * stride + j];
        const double d = s / static_cast<double>(stride) - mean;
        ss += d * d;
    }
    e.value = mean;
    e.standard_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
    e.n_effective = static_cast<std::int64_t>(m);
    return e;
}

} // namespace

PathSet simulate_default_times(const InitialState& state, const CorrelationTriplet& rho, double T, const SimConfig& config)
{
    config.validate();
    if (!(T > 0.0)) throw DomainError("simulation horizon must be positive");
    if (!(state.x0 > 0.0) || !(state.y0 > 0.0) || !(state.z0 > 0.0)) throw DomainError("state must lie inside the octant");

    const double l10 = rho.xy(), l11 = std::sqrt(1.0 - rho.xy() * rho.xy());
    const double l20 = rho.xz(), l21 = (rho.yz() - rho.xy() * rho.xz()) / l11;
    const double l22 = std::sqrt(std::max(0.0, 1.0 - l20 * l20 - l21 * l21));
    const int steps = std::max(1, static_cast<int>(std::ceil(T * config.steps_per_year - 1e-9)));
    const double dt = T / steps, sdt = std::sqrt(dt);
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32)};

    PathSet out;
    out.horizon = T;
    out.antithetic = config.antithetic;
    const auto n = static_cast<std::size_t>(config.n_paths);
    out.tau.assign(n, {T, T, T});
    out.defaulted.assign(n, {false, false, false});
    out.y_at_seller.assign(n, 0.0);
    out.y_at_buyer.assign(n, 0.0);

    auto run_path = [&](std::int64_t p) {
        const std::uint64_t draw = config.antithetic ? static_cast<std::uint64_t>(p / 2) : static_cast<std::uint64_t>(p);
        const double sign = (config.antithetic && (p % 2)) ? -1.0 : 1.0;
        std::array<double, 3> cur{state.x0, state.y0, state.z0};
        std::array<bool, 3> alive{true, true, true};
        const auto i = static_cast<std::size_t>(p);
        for (int k = 0; k < steps && (alive[0] || alive[1] || alive[2]); ++k) {
            std::array<std::uint32_t, 12> u32;
            for (std::uint32_t j = 0; j < 3; ++j) {
                const auto block = philox4x32({static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32),
                                               static_cast<std::uint32_t>(k), j},
                                              key);
                std::copy(block.begin(), block.end(), u32.begin() + 4 * j);
            }
            const double r1 = std::sqrt(-2.0 * std::log(to_uniform(u32[0]))), a1 = kTwoPi * to_uniform(u32[1]);
            const double r2 = std::sqrt(-2.0 * std::log(to_uniform(u32[2]))), a2 = kTwoPi * to_uniform(u32[3]);
            const double n0 = sign * r1 * std::cos(a1), n1 = sign * r1 * std::sin(a1), n2 = sign * r2 * std::cos(a2);
            const std::array<double, 3> next{cur[0] + sdt * n0, cur[1] + sdt * (l10 * n0 + l11 * n1),
                                             cur[2] + sdt * (l20 * n0 + l21 * n1 + l22 * n2)};
            const double t0 = k * dt;
            for (int c = 0; c < 3; ++c) {
                if (!alive[c]) continue;
                bool crossed = next[c] <= 0.0;
                if (!crossed && config.bridge_correction) {
                    crossed = to_uniform(u32[4 + c]) < std::exp(-2.0 * cur[c] * next[c] / dt);
                }
                if (!crossed) continue;
                alive[c] = false;
                out.defaulted[i][c] = true;
                const double frac = to_uniform(u32[8 + c]);
                out.tau[i][c] = t0 + frac * dt;
                if (c != 1) {
                    // y = beta x_c + residual with the residual independent of x_c, so at the
                    // crossing y is the residual's bridge value: x_c is exactly zero there.
                    const double beta = c == 0 ? rho.xy() : rho.yz();
                    const double r0 = cur[1] - beta * cur[c], r1 = next[1] - beta * next[c];
                    const auto extra = philox4x32({static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32),
                                                   static_cast<std::uint32_t>(k), 3u + static_cast<std::uint32_t>(c)},
                                                  key);
                    const double z = sign * std::sqrt(-2.0 * std::log(to_uniform(extra[0]))) * std::cos(kTwoPi * to_uniform(extra[1]));
                    const double sd = std::sqrt(std::max(0.0, (1.0 - beta * beta) * frac * (1.0 - frac) * dt));
                    const double y = std::max(0.0, r0 + frac * (r1 - r0) + sd * z);
                    (c == 0 ? out.y_at_seller : out.y_at_buyer)[i] = y;
                }
            }
            cur = next;
        }
    };

    const std::int64_t blocks = (config.n_paths + kBlock - 1) / kBlock;
    const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(blocks)));
    std::exception_ptr error;
    std::mutex guard;
    auto worker = [&](int w) {
        try {
            for (std::int64_t b = w; b < blocks; b += threads) {
                const std::int64_t end = std::min(config.n_paths, (b + 1) * kBlock);
                for (std::int64_t p = b * kBlock; p < end; ++p) run_path(p);
            }
        } catch (...) {
            std::lock_guard lock(guard);
            if (!error) error = std::current_exception();
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

EstimateWithError estimate_survival(const PathSet& paths, SurvivalSet set, double horizon)
{
    if (horizon > paths.horizon + 1e-12) throw DomainError("survival horizon beyond the simulated horizon");
    std::array<bool, 3> members{};
    switch (set) {
    case SurvivalSet::Joint: members = {true, true, true}; break;
    case SurvivalSet::SellerReference: members = {true, true, false}; break;
    case SurvivalSet::SellerBuyer: members = {true, false, true}; break;
    case SurvivalSet::ReferenceBuyer: members = {false, true, true}; break;
    case SurvivalSet::Seller: members = {true, false, false}; break;
    case SurvivalSet::Reference: members = {false, true, false}; break;
    case SurvivalSet::Buyer: members = {false, false, true}; break;
    }
    std::vector<double> v(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        bool alive = true;
        for (int c = 0; c < 3; ++c) {
            if (members[c] && paths.defaulted[i][c] && paths.tau[i][c] <= horizon) alive = false;
        }
        v[i] = alive ? 1.0 : 0.0;
    }
    return summarize(v, paths.antithetic);
}

namespace {

bool first_before(const PathSet& paths, std::size_t i, int who, int other, bool with_other)
{
    if (!paths.defaulted[i][who]) return false;
    const double t = paths.tau[i][who];
    if (paths.defaulted[i][1] && paths.tau[i][1] <= t) return false;
    if (with_other && paths.defaulted[i][other] && paths.tau[i][other] <= t) return false;
    return true;
}

// Per-path CVA and DVA payoffs for one grid.
void adjustment_payoffs(const PathSet& paths, const CdsValueGrid& grid, double rs, double rb, McMode mode,
                        std::vector<double>& cva, std::vector<double>& dva)
{
    const double T = grid.maturity();
    if (paths.horizon + 1e-12 < T) throw DomainError("paths do not cover the contract maturity");
    cva.assign(paths.size(), 0.0);
    dva.assign(paths.size(), 0.0);
    const bool bilateral = mode == McMode::Bilateral;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (mode != McMode::UnilateralDva && first_before(paths, i, 0, 2, bilateral) && paths.tau[i][0] < T) {
            const double t = paths.tau[i][0];
            cva[i] = (1.0 - rs) * std::exp(-grid.rate() * t) * grid.positive_part(t, paths.y_at_seller[i]);
        }
        if (mode != McMode::UnilateralCva && first_before(paths, i, 2, 0, bilateral) && paths.tau[i][2] < T) {
            const double t = paths.tau[i][2];
            dva[i] = (1.0 - rb) * std::exp(-grid.rate() * t) * grid.negative_part(t, paths.y_at_buyer[i]);
        }
    }
}

} // namespace

AdjustmentEstimate estimate_cva_dva(const PathSet& paths, const CdsValueGrid& grid, double seller_recovery,
                                    double buyer_recovery, McMode mode)
{
    std::vector<double> cva, dva;
    adjustment_payoffs(paths, grid, seller_recovery, buyer_recovery, mode, cva, dva);
    return {summarize(cva, paths.antithetic), summarize(dva, paths.antithetic)};
}

EstimateWithError estimate_breakeven(const PathSet& paths, const CdsContract& contract,
                                     double reference_recovery, double seller_recovery, double buyer_recovery,
                                     McBreakevenMode mode)
{
    const double T = contract.maturity();
    if (paths.horizon + 1e-12 < T) throw DomainError("paths do not cover the contract maturity");
    const std::size_t n = paths.size();
    // Pathwise legs of the risk-free CDS on the reference name.
    std::vector<double> dl(n, 0.0), ann(n, 0.0);
    const auto dates = contract.payment_dates();
    for (std::size_t i = 0; i < n; ++i) {
        const bool dead = paths.defaulted[i][1] && paths.tau[i][1] <= T;
        if (dead) dl[i] = (1.0 - reference_recovery) * std::exp(-contract.rate() * paths.tau[i][1]);
        for (std::size_t k = 0; k < dates.size(); ++k) {
            if (!dead || paths.tau[i][1] > dates[k]) ann[i] += std::exp(-contract.rate() * dates[k]) * contract.accrual(k);
        }
    }
    const bool with_cva = mode == McBreakevenMode::CvaOnly || mode == McBreakevenMode::Bilateral;
    const bool with_dva = mode == McBreakevenMode::DvaOnly || mode == McBreakevenMode::Bilateral;
    const McMode adj = mode == McBreakevenMode::Bilateral ? McMode::Bilateral
                       : mode == McBreakevenMode::CvaOnly ? McMode::UnilateralCva
                                                          : McMode::UnilateralDva;
    const CdsValueGrid base(contract.with_coupon(0.0), reference_recovery);
    std::vector<double> cva, dva, f(n);
    auto evaluate = [&](double c) {
        if (with_cva || with_dva) adjustment_payoffs(paths, base.with_coupon(c), seller_recovery, buyer_recovery, adj, cva, dva);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = dl[i] - c * ann[i];
            if (with_cva) f[i] -= cva[i];
            if (with_dva) f[i] += dva[i];
        }
        return summarize(f, paths.antithetic);
    };
    const EstimateWithError a = summarize(ann, paths.antithetic), d = summarize(dl, paths.antithetic);
    double c0 = d.value / a.value;
    if (mode == McBreakevenMode::Standard) {
        // Ratio estimator: delta-method error of mean(dl) / mean(ann).
        for (std::size_t i = 0; i < n; ++i) f[i] = dl[i] - c0 * ann[i];
        const auto r = summarize(f, paths.antithetic);
        return {c0, r.standard_error / a.value, r.n_effective};
    }
    double f0 = evaluate(c0).value;
    double c1 = c0 * (with_cva && !with_dva ? 0.95 : 1.05), f1 = evaluate(c1).value;
    for (int it = 0; it < 60; ++it) {
        if (f1 == f0) break;
        const double c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
        const double slope = (f1 - f0) / (c1 - c0);
        c0 = c1;
        f0 = f1;
        c1 = c2;
        const auto est = evaluate(c1);
        f1 = est.value;
        if (std::abs(c1 - c0) < 1e-10) return {c1, est.standard_error / std::abs(slope), est.n_effective};
    }
    throw NumericalError("Monte Carlo breakeven did not converge near c = " + std::to_string(c1));
}

} // namespace wxva
