#include "wedge_xva/eigen_cache.hpp"

#include "wedge_xva/errors.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace wxva {

namespace {

constexpr char kMagic[8] = {'W', 'X', 'V', 'A', 'E', 'I', 'G', '\0'};

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v == 0.0 ? 0.0 : v);  // folds -0
    return buf;
}

// Little-endian encoder into a memory buffer.
class Writer {
public:
    void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v)
    {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(std::uint64_t v)
    {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void f64(double v)
    {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        u64(u);
    }
    void column_major(const Eigen::MatrixXd& m)
    {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
            return;
        }
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) f64(m(i, j));
        }
    }
    const std::string& buffer() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}

    void bytes(void* out, std::size_t n)
    {
        if (static_cast<std::size_t>(end_ - p_) < n) throw CacheIntegrityError("cache file is truncated");
        std::memcpy(out, p_, n);
        p_ += n;
    }
    std::uint8_t u8()
    {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32()
    {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t u64()
    {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    double f64()
    {
        const std::uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
    void column_major(Eigen::MatrixXd& m)
    {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
            return;
        }
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = f64();
        }
    }
    std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

private:
    const char* p_;
    const char* end_;
};

// FNV-1a over little-endian 64-bit words, zero padded; cheap enough for multi-megabyte payloads.
std::uint64_t checksum(const char* data, std::size_t size)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::size_t i = 0;
    if constexpr (std::endian::native == std::endian::little) {
        for (; i + 8 <= size; i += 8) {
            std::uint64_t w;
            std::memcpy(&w, data + i, 8);
            h ^= w;
            h *= 0x100000001b3ull;
        }
    }
    for (; i < size; i += 8) {
        std::uint64_t w = 0;
        for (std::size_t k = 0; k < 8 && i + k < size; ++k) w |= std::uint64_t(static_cast<unsigned char>(data[i + k])) << (8 * k);
        h ^= w;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Guards allocations against garbage counts in a damaged header.
std::uint64_t bounded(std::uint64_t n, std::uint64_t limit, const char* what)
{
    if (n > limit) throw CacheIntegrityError(std::string("implausible ") + what + " in cache file");
    return n;
}

} // namespace

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h)
{
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string CacheKey::canonical() const
{
    std::ostringstream s;
    s << "rho=" << num(rho.xy()) << ',' << num(rho.xz()) << ',' << num(rho.yz()) << ";n_points=" << mesh.n_points
      << ";n_iters=" << mesh.n_iters << ";refinement=" << num(mesh.refinement) << ";theta_min=" << num(mesh.theta_min)
      << ";mesh_seed=" << mesh.seed << ";modes=" << modes;
    return s.str();
}

std::string CacheKey::file_name() const
{
    const std::string c = canonical();
    char buf[32];
    std::snprintf(buf, sizeof buf, "basis-%016llx.wxb", static_cast<unsigned long long>(fnv1a(c.data(), c.size())));
    return buf;
}

void write_basis(std::ostream& out, const CacheKey& key, const EigenBasis& basis)
{
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCacheFormatVersion);
    const std::string c = key.canonical();
    w.u32(static_cast<std::uint32_t>(c.size()));
    w.bytes(c.data(), c.size());

    const auto& mesh = basis.mesh();
    w.f64(mesh.theta_min);
    w.f64(mesh.min_quality);
    w.f64(mesh.mean_quality);
    w.u64(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        w.f64(mesh.nodes[i][0]);
        w.f64(mesh.nodes[i][1]);
        w.u8(mesh.flags[i]);
    }
    w.u64(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        for (int v : t) w.u32(static_cast<std::uint32_t>(v));
    }
    const auto& lambda = basis.eigenvalues();
    w.u32(static_cast<std::uint32_t>(lambda.size()));
    for (Eigen::Index n = 0; n < lambda.size(); ++n) w.f64(lambda(n));
    w.column_major(basis.vectors());

    const auto art = basis.artifacts();
    w.f64(art.ortho_residual);
    w.f64(art.rayleigh_residual);
    w.f64(art.eigen_residual);
    w.column_major(art.mass_vectors);
    // Flux rows vanish off the boundary; only Dirichlet rows are stored.
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (!mesh.is_dirichlet(i)) continue;
        for (Eigen::Index n = 0; n < art.flux.cols(); ++n) w.f64(art.flux(static_cast<Eigen::Index>(i), n));
    }
    const auto& buf = w.buffer();
    const std::uint64_t h = checksum(buf.data(), buf.size());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    Writer tail;
    tail.u64(h);
    out.write(tail.buffer().data(), 8);
    if (!out) throw IoError("failed to write the basis cache");
}

std::optional<EigenBasis> read_basis(std::istream& in, const CacheKey& key)
{
    std::ostringstream all;
    all << in.rdbuf();
    return read_basis(std::move(all).str(), key);
}

std::optional<EigenBasis> read_basis(std::string_view raw, const CacheKey& key)
{
    Reader r(raw.data(), raw.size());
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CacheIntegrityError("not a basis cache file");
    if (r.u32() != kCacheFormatVersion) return std::nullopt;
    std::string c(bounded(r.u32(), 4096, "key length"), '\0');
    r.bytes(c.data(), c.size());
    if (c != key.canonical()) return std::nullopt;
    if (raw.size() < 8 + 8) throw CacheIntegrityError("cache file is truncated");
    Reader tail(raw.data() + raw.size() - 8, 8);
    if (tail.u64() != checksum(raw.data(), raw.size() - 8)) throw CacheIntegrityError("basis cache checksum mismatch");
    r = Reader(raw.data() + 8 + 4 + 4 + c.size(), raw.size() - 8 - (8 + 4 + 4 + c.size()));

    auto mesh = std::make_shared<TriMesh>();
    mesh->theta_min = r.f64();
    mesh->min_quality = r.f64();
    mesh->mean_quality = r.f64();
    const auto n_nodes = bounded(r.u64(), r.remaining() / 17, "node count");
    mesh->nodes.resize(n_nodes);
    mesh->flags.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        mesh->nodes[i][0] = r.f64();
        mesh->nodes[i][1] = r.f64();
        mesh->flags[i] = r.u8();
    }
    const auto n_tri = bounded(r.u64(), r.remaining() / 12, "triangle count");
    mesh->triangles.resize(n_tri);
    for (auto& t : mesh->triangles) {
        for (int& v : t) {
            const auto u = r.u32();
            if (u >= n_nodes) throw CacheIntegrityError("triangle index out of range in cache file");
            v = static_cast<int>(u);
        }
    }
    const auto n_modes = bounded(r.u32(), n_nodes, "mode count");
    const auto rows = static_cast<Eigen::Index>(n_nodes), cols = static_cast<Eigen::Index>(n_modes);
    if (r.remaining() < 8 * (n_modes + 3 + 2 * n_nodes * n_modes)) throw CacheIntegrityError("cache file is truncated");
    Eigen::VectorXd lambda(cols);
    for (Eigen::Index n = 0; n < cols; ++n) lambda(n) = r.f64();
    Eigen::MatrixXd psi(rows, cols);
    r.column_major(psi);

    BasisArtifacts art;
    art.ortho_residual = r.f64();
    art.rayleigh_residual = r.f64();
    art.eigen_residual = r.f64();
    art.mass_vectors.resize(rows, cols);
    r.column_major(art.mass_vectors);
    art.flux = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!mesh->is_dirichlet(static_cast<std::size_t>(i))) continue;
        for (Eigen::Index n = 0; n < cols; ++n) art.flux(i, n) = r.f64();
    }
    if (r.remaining() != 0) throw CacheIntegrityError("trailing bytes in cache file");
    return EigenBasis(std::move(mesh), std::move(lambda), std::move(psi), std::move(art));
}

void cache_store(const std::filesystem::path& dir, const CacheKey& key, const EigenBasis& basis)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create cache directory " + dir.string() + ": " + ec.message());
    // Write beside the target and rename, so readers never see a partial file.
    const auto target = dir / key.file_name();
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        write_basis(out, key, basis);
    }
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move cache entry into place: " + ec.message());
}

std::optional<EigenBasis> cache_load(const std::filesystem::path& dir, const CacheKey& key)
{
    const auto path = dir / key.file_name();
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) return std::nullopt;
    std::string raw(static_cast<std::size_t>(in.tellg()), '\0');
    in.seekg(0);
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw IoError("cannot read " + path.string());
    try {
        return read_basis(raw, key);
    } catch (const CacheIntegrityError& e) {
        throw CacheIntegrityError(path.string() + ": " + e.what());
    }
}

EigenBasis load_or_solve(const std::filesystem::path& dir, const CacheKey& key, int threads, bool* hit)
{
    if (auto cached = cache_load(dir, key)) {
        if (hit) *hit = true;
        return std::move(*cached);
    }
    if (hit) *hit = false;
    const AngularDomain domain(key.rho);
    auto mesh = std::make_shared<const TriMesh>(generate_mesh(domain, key.mesh));
    EigenSolveOptions options;
    options.threads = threads;
    auto basis = solve_lowest(std::move(mesh), key.modes, options);
    cache_store(dir, key, basis);
    return basis;
}

std::filesystem::path resolve_cache_dir(const std::optional<std::string>& flag)
{
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("WEDGE_XVA_CACHE"); env && *env) return env;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return std::filesystem::path(xdg) / "wedge_xva";
    if (const char* home = std::getenv("HOME"); home && *home) return std::filesystem::path(home) / ".cache" / "wedge_xva";
    return std::filesystem::temp_directory_path() / "wedge_xva";
}

void write_spectrum_csv(const EigenBasis& basis, std::ostream& out)
{
    out << "n,lambda2\n";
    char buf[64];
    for (Eigen::Index n = 0; n < basis.eigenvalues().size(); ++n) {
        std::snprintf(buf, sizeof buf, "%lld,%.11e\n", static_cast<long long>(n + 1), basis.eigenvalues()(n));
        out << buf;
    }
}

} // namespace wxva
