#pragma once

#include "wedge_xva/fem.hpp"
#include "wedge_xva/mesh.hpp"
#include "wedge_xva/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace wxva {

inline constexpr std::uint32_t kCacheFormatVersion = 1;

/// Everything that determines a basis. Doubles enter the canonical form at 15 significant digits,
/// so 0.8 and 0.8000000000000001 share an entry while a 1e-6 perturbation does not.
struct CacheKey {
    CorrelationTriplet rho;
    MeshSpec mesh;
    int modes = 100;

    std::string canonical() const;
    std::string file_name() const;  // "basis-<16 hex digits>.wxb"
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull);

void write_basis(std::ostream& out, const CacheKey& key, const EigenBasis& basis);

/// nullopt on a version or key mismatch; CacheIntegrityError on a truncated or corrupt stream.
std::optional<EigenBasis> read_basis(std::istream& in, const CacheKey& key);
std::optional<EigenBasis> read_basis(std::string_view raw, const CacheKey& key);

void cache_store(const std::filesystem::path& dir, const CacheKey& key, const EigenBasis& basis);
std::optional<EigenBasis> cache_load(const std::filesystem::path& dir, const CacheKey& key);

/// Loads the entry or meshes, solves and stores it. `hit` reports which happened.
EigenBasis load_or_solve(const std::filesystem::path& dir, const CacheKey& key, int threads = 1, bool* hit = nullptr);

/// Flag, then WEDGE_XVA_CACHE, then $XDG_CACHE_HOME/wedge_xva, ~/.cache/wedge_xva, or the temp directory.
std::filesystem::path resolve_cache_dir(const std::optional<std::string>& flag);

/// "n,lambda2" rows, n from 1.
void write_spectrum_csv(const EigenBasis& basis, std::ostream& out);

} // namespace wxva
