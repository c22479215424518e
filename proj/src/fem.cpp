#include "wedge_xva/fem.hpp"

#include "wedge_xva/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace wxva {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Order-2 interior rule: barycentric points (2/3, 1/6, 1/6) and permutations, equal weights.
constexpr double kQuadBary[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};

struct ElementGeometry {
    double area;
    double dphi[3];    // dN_i/dphi
    double dtheta[3];  // dN_i/dtheta
};

ElementGeometry element_geometry(const TriMesh& mesh, const Triangle& t)
{
    const auto& a = mesh.nodes[t[0]];
    const auto& b = mesh.nodes[t[1]];
    const auto& c = mesh.nodes[t[2]];
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if (!(det > 0.0)) throw DomainError("degenerate or clockwise mesh triangle");
    ElementGeometry g;
    g.area = 0.5 * det;
    g.dphi[0] = (b[1] - c[1]) / det;
    g.dphi[1] = (c[1] - a[1]) / det;
    g.dphi[2] = (a[1] - b[1]) / det;
    g.dtheta[0] = (c[0] - b[0]) / det;
    g.dtheta[1] = (a[0] - c[0]) / det;
    g.dtheta[2] = (b[0] - a[0]) / det;
    return g;
}

void assemble_range(const TriMesh& mesh, std::size_t lo, std::size_t hi, Triplets& k_out, Triplets& m_out)
{
    for (std::size_t e = lo; e < hi; ++e) {
        const auto& t = mesh.triangles[e];
        const auto g = element_geometry(mesh, t);
        double w_sin = 0.0, w_inv = 0.0;
        double mass[3][3] = {};
        for (const auto& q : kQuadBary) {
            const double theta = q[0] * mesh.nodes[t[0]][1] + q[1] * mesh.nodes[t[1]][1] + q[2] * mesh.nodes[t[2]][1];
            const double s = std::sin(theta);
            if (s < 1e-9) throw DomainError("quadrature point at the pole; the mesh must exclude the pole cap");
            const double w = g.area / 3.0;
            w_sin += w * s;
            w_inv += w / s;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) mass[i][j] += w * s * q[i] * q[j];
            }
        }
        // Each value is computed once and mirrored so the assembled matrices are exactly symmetric.
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                const double kij = w_inv * g.dphi[i] * g.dphi[j] + w_sin * g.dtheta[i] * g.dtheta[j];
                k_out.emplace_back(t[i], t[j], kij);
                m_out.emplace_back(t[i], t[j], mass[i][j]);
                if (i == j) continue;
                k_out.emplace_back(t[j], t[i], kij);
                m_out.emplace_back(t[j], t[i], mass[i][j]);
            }
        }
    }
}

double relative_residual(const SparseMatrix& K, const SparseMatrix& M, const Eigen::VectorXd& v, double lambda)
{
    const Eigen::VectorXd kv = K * v;
    return (kv - lambda * (M * v)).norm() / std::max(kv.norm(), 1e-300);
}

void fix_signs(Eigen::MatrixXd& v)
{
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const double scale = v.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            if (std::abs(v(r, c)) > 1e-8 * scale) {
                if (v(r, c) < 0.0) v.col(c) = -v.col(c);
                break;
            }
        }
    }
}

struct InteriorSystem {
    std::vector<int> interior;  // interior node ids
    SparseMatrix K, M;          // restricted to interior nodes
    FemMatrices full;
};

InteriorSystem restrict_to_interior(const TriMesh& mesh, int threads)
{
    InteriorSystem sys;
    sys.full = assemble(mesh, threads);
    std::vector<int> index(mesh.size(), -1);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (mesh.is_dirichlet(i)) continue;
        index[i] = static_cast<int>(sys.interior.size());
        sys.interior.push_back(static_cast<int>(i));
    }
    auto restrict = [&](const SparseMatrix& A) {
        Triplets trip;
        for (int k = 0; k < A.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
                const int r = index[it.row()], c = index[it.col()];
                if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
            }
        }
        SparseMatrix out(static_cast<Eigen::Index>(sys.interior.size()), static_cast<Eigen::Index>(sys.interior.size()));
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    };
    sys.K = restrict(sys.full.K);
    sys.M = restrict(sys.full.M);
    return sys;
}

Eigen::MatrixXd expand(const TriMesh& mesh, const std::vector<int>& interior, const Eigen::MatrixXd& v)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mesh.size()), v.cols());
    for (std::size_t k = 0; k < interior.size(); ++k) out.row(interior[k]) = v.row(static_cast<Eigen::Index>(k));
    return out;
}

// Rayleigh-Ritz on span(V): returns (values, vectors) with vectors exactly M-orthonormal.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> rayleigh_ritz(const SparseMatrix& K, const SparseMatrix& M, const Eigen::MatrixXd& V)
{
    const Eigen::MatrixXd kr = V.transpose() * (K * V);
    const Eigen::MatrixXd mr = V.transpose() * (M * V);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (kr + kr.transpose()), 0.5 * (mr + mr.transpose()));
    if (ges.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz projection failed");
    return {ges.eigenvalues(), V * ges.eigenvectors()};
}

} // namespace

FemMatrices assemble(const TriMesh& mesh, int threads)
{
    const std::size_t ne = mesh.triangles.size();
    const std::size_t nt = static_cast<std::size_t>(std::clamp(threads, 1, 64));
    std::vector<Triplets> kt(nt), mt(nt);
    if (nt == 1 || ne < 1000) {
        assemble_range(mesh, 0, ne, kt[0], mt[0]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(nt);
        for (std::size_t w = 0; w < nt; ++w) {
            pool.emplace_back([&, w] {
                try {
                    assemble_range(mesh, ne * w / nt, ne * (w + 1) / nt, kt[w], mt[w]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    Triplets ka, ma;
    for (std::size_t w = 0; w < nt; ++w) {
        ka.insert(ka.end(), kt[w].begin(), kt[w].end());
        ma.insert(ma.end(), mt[w].begin(), mt[w].end());
    }
    const auto n = static_cast<Eigen::Index>(mesh.size());
    FemMatrices out{SparseMatrix(n, n), SparseMatrix(n, n)};
    out.K.setFromTriplets(ka.begin(), ka.end());
    out.M.setFromTriplets(ma.begin(), ma.end());
    return out;
}

// ---- point location -----------------------------------------------------------

TriangleLocator::TriangleLocator(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh))
{
    const auto& m = *mesh_;
    double hi[2] = {-1e300, -1e300};
    lo_[0] = lo_[1] = 1e300;
    for (const auto& p : m.nodes) {
        for (int k = 0; k < 2; ++k) {
            lo_[k] = std::min(lo_[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.triangles.size()) / 2.0)));
    nx_ = ny_ = side;
    for (int k = 0; k < 2; ++k) cell_[k] = std::max(hi[k] - lo_[k], 1e-12) / side * (1.0 + 1e-12);

    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t e = 0; e < m.triangles.size(); ++e) {
        double tlo[2] = {1e300, 1e300}, thi[2] = {-1e300, -1e300};
        for (int v : m.triangles[e]) {
            for (int k = 0; k < 2; ++k) {
                tlo[k] = std::min(tlo[k], m.nodes[v][k]);
                thi[k] = std::max(thi[k], m.nodes[v][k]);
            }
        }
        const int i0 = std::max(0, static_cast<int>((tlo[0] - lo_[0]) / cell_[0] - 1e-9));
        const int i1 = std::min(nx_ - 1, static_cast<int>((thi[0] - lo_[0]) / cell_[0] + 1e-9));
        const int j0 = std::max(0, static_cast<int>((tlo[1] - lo_[1]) / cell_[1] - 1e-9));
        const int j1 = std::min(ny_ - 1, static_cast<int>((thi[1] - lo_[1]) / cell_[1] + 1e-9));
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) buckets[static_cast<std::size_t>(i * ny_ + j)].push_back(static_cast<int>(e));
        }
    }
    start_.push_back(0);
    for (const auto& b : buckets) {
        items_.insert(items_.end(), b.begin(), b.end());
        start_.push_back(static_cast<int>(items_.size()));
    }
}

int TriangleLocator::locate(double phi, double theta, std::array<double, 3>& bary) const
{
    const auto& m = *mesh_;
    const int i = static_cast<int>(std::floor((phi - lo_[0]) / cell_[0]));
    const int j = static_cast<int>(std::floor((theta - lo_[1]) / cell_[1]));
    int best = -1;
    double best_min = -1e300;
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= nx_ || jj >= ny_) continue;
            const int b = ii * ny_ + jj;
            for (int k = start_[b]; k < start_[b + 1]; ++k) {
                const auto& t = m.triangles[items_[k]];
                const auto& p0 = m.nodes[t[0]];
                const auto& p1 = m.nodes[t[1]];
                const auto& p2 = m.nodes[t[2]];
                const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                const double l1 = ((phi - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (theta - p0[1])) / det;
                const double l2 = ((p1[0] - p0[0]) * (theta - p0[1]) - (phi - p0[0]) * (p1[1] - p0[1])) / det;
                const double l0 = 1.0 - l1 - l2;
                const double worst = std::min({l0, l1, l2});
                if (worst > best_min) {
                    best_min = worst;
                    best = items_[k];
                    bary = {l0, l1, l2};
                }
                if (worst >= 0.0) return best;
            }
        }
    }
    if (best >= 0 && best_min > -1e-9) {
        for (double& w : bary) w = std::max(w, 0.0);
        const double s = bary[0] + bary[1] + bary[2];
        for (double& w : bary) w /= s;
        return best;
    }
    return -1;
}

// ---- eigenbasis ---------------------------------------------------------------

EigenBasis::EigenBasis(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors)
    : mesh_(std::move(mesh)), eigenvalues_(std::move(eigenvalues)), vectors_(std::move(vectors)), locator_(mesh_)
{
    if (vectors_.rows() != static_cast<Eigen::Index>(mesh_->size()) || vectors_.cols() != eigenvalues_.size()) {
        throw DomainError("eigenbasis shape does not match the mesh");
    }
    const auto mats = assemble(*mesh_);
    mass_vectors_ = mats.M * vectors_;
    const Eigen::MatrixXd& mv = mass_vectors_;
    const Eigen::MatrixXd kv = mats.K * vectors_;
    const Eigen::MatrixXd gram = vectors_.transpose() * mv;
    ortho_residual_ = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    moments_ = mv.colwise().sum().transpose();
    flux_ = kv - mv * eigenvalues_.asDiagonal();
    for (Eigen::Index n = 0; n < eigenvalues_.size(); ++n) {
        rayleigh_residual_ = std::max(rayleigh_residual_, std::abs(vectors_.col(n).dot(kv.col(n)) - eigenvalues_(n)));
        double interior = 0.0;
        for (std::size_t i = 0; i < mesh_->size(); ++i) {
            if (!mesh_->is_dirichlet(i)) interior += flux_(static_cast<Eigen::Index>(i), n) * flux_(static_cast<Eigen::Index>(i), n);
        }
        eigen_residual_ = std::max(eigen_residual_, std::sqrt(interior) / std::max(kv.col(n).norm(), 1e-300));
    }
    for (std::size_t i = 0; i < mesh_->size(); ++i) {
        if (!mesh_->is_dirichlet(i)) flux_.row(static_cast<Eigen::Index>(i)).setZero();
    }
    build_boundary_edges();
}

EigenBasis::EigenBasis(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors,
                       BasisArtifacts artifacts)
    : mesh_(std::move(mesh)), eigenvalues_(std::move(eigenvalues)), vectors_(std::move(vectors)),
      mass_vectors_(std::move(artifacts.mass_vectors)), flux_(std::move(artifacts.flux)), locator_(mesh_),
      ortho_residual_(artifacts.ortho_residual), rayleigh_residual_(artifacts.rayleigh_residual),
      eigen_residual_(artifacts.eigen_residual)
{
    const auto rows = static_cast<Eigen::Index>(mesh_->size());
    if (vectors_.rows() != rows || vectors_.cols() != eigenvalues_.size() || mass_vectors_.rows() != rows ||
        mass_vectors_.cols() != vectors_.cols() || flux_.rows() != rows || flux_.cols() != vectors_.cols()) {
        throw DomainError("eigenbasis shape does not match the mesh");
    }
    moments_ = mass_vectors_.colwise().sum().transpose();
    build_boundary_edges();
}

BasisArtifacts EigenBasis::artifacts() const
{
    return {mass_vectors_, flux_, ortho_residual_, rayleigh_residual_, eigen_residual_};
}

double EigenBasis::eval(int n, double phi, double theta) const
{
    if (n < 0 || n >= mode_count()) throw DomainError("mode index out of range");
    std::array<double, 3> w{};
    const int e = locator_.locate(phi, theta, w);
    if (e < 0) throw DomainError("point outside the meshed angular domain");
    const auto& t = mesh_->triangles[static_cast<std::size_t>(e)];
    return w[0] * vectors_(t[0], n) + w[1] * vectors_(t[1], n) + w[2] * vectors_(t[2], n);
}

Eigen::VectorXd EigenBasis::eval_all(double phi, double theta) const
{
    std::array<double, 3> w{};
    const int e = locator_.locate(phi, theta, w);
    if (e < 0) throw DomainError("point outside the meshed angular domain");
    const auto& t = mesh_->triangles[static_cast<std::size_t>(e)];
    return (w[0] * vectors_.row(t[0]) + w[1] * vectors_.row(t[1]) + w[2] * vectors_.row(t[2])).transpose();
}

void EigenBasis::build_boundary_edges()
{
    const auto& m = *mesh_;
    // Hull edges: edges with a single adjacent triangle.
    std::vector<std::tuple<int, int, int>> edges;  // (min, max, triangle)
    for (std::size_t e = 0; e < m.triangles.size(); ++e) {
        const auto& t = m.triangles[e];
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            edges.emplace_back(std::min(a, b), std::max(a, b), static_cast<int>(e));
        }
    }
    std::sort(edges.begin(), edges.end());
    const std::uint8_t bits[3] = {kOnPhiZero, kOnPhiMax, kOnSouth};
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [a, b, tri] = edges[k];
        const bool shared = (k + 1 < edges.size() && std::get<0>(edges[k + 1]) == a && std::get<1>(edges[k + 1]) == b) ||
                            (k > 0 && std::get<0>(edges[k - 1]) == a && std::get<1>(edges[k - 1]) == b);
        if (shared) continue;
        for (int f = 0; f < 3; ++f) {
            if (!(m.flags[a] & bits[f]) || !(m.flags[b] & bits[f])) continue;
            const auto& t = m.triangles[static_cast<std::size_t>(tri)];
            const auto g = element_geometry(m, t);
            const double* d = (f == 2) ? g.dtheta : g.dphi;
            BoundaryEdge be;
            const int coord = (f == 2) ? 0 : 1;
            be.s0 = std::min(m.nodes[a][coord], m.nodes[b][coord]);
            be.s1 = std::max(m.nodes[a][coord], m.nodes[b][coord]);
            if (be.s1 - be.s0 < 1e-14) continue;
            be.grad = d[0] * vectors_.row(t[0]).transpose() + d[1] * vectors_.row(t[1]).transpose() + d[2] * vectors_.row(t[2]).transpose();
            facet_edges_[static_cast<std::size_t>(f)].push_back(std::move(be));
        }
    }
    for (auto& list : facet_edges_) {
        std::sort(list.begin(), list.end(), [](const BoundaryEdge& x, const BoundaryEdge& y) { return x.s0 < y.s0; });
    }
}

double EigenBasis::boundary_derivative(int n, Facet facet, double s) const
{
    if (n < 0 || n >= mode_count()) throw DomainError("mode index out of range");
    const auto& list = facet_edges_[static_cast<std::size_t>(facet)];
    if (list.empty()) throw DomainError("facet has no boundary edges");
    const double tol = 1e-9 * (list.back().s1 - list.front().s0);
    if (s < list.front().s0 - tol || s > list.back().s1 + tol) throw DomainError("facet coordinate out of range");
    // Gradients live at edge midpoints; interpolate linearly between the two nearest.
    std::size_t k = 0;
    while (k + 1 < list.size() && 0.5 * (list[k + 1].s0 + list[k + 1].s1) < s) ++k;
    const double m0 = 0.5 * (list[k].s0 + list[k].s1);
    if (k + 1 == list.size() || s <= m0) return list[k].grad(n);
    const double m1 = 0.5 * (list[k + 1].s0 + list[k + 1].s1);
    const double w = (s - m0) / (m1 - m0);
    return (1.0 - w) * list[k].grad(n) + w * list[k + 1].grad(n);
}

// ---- solvers ------------------------------------------------------------------

EigenBasis solve_lowest(std::shared_ptr<const TriMesh> mesh, int n_modes, const EigenSolveOptions& options)
{
    auto sys = restrict_to_interior(*mesh, options.threads);
    const Eigen::Index n = static_cast<Eigen::Index>(sys.interior.size());
    if (n_modes < 1 || n_modes > 0.2 * static_cast<double>(n)) {
        throw DomainError("mode count must be between 1 and 0.2 x interior node count (" + std::to_string(n) + ")");
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.K);
    if (ldlt.info() != Eigen::Success) throw NumericalError("stiffness factorization failed");

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Index steps = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * n_modes + 40, 3 * n_modes));
    double worst = 0.0;
    for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
        // Lanczos on K^{-1} M in the M inner product; Q and MQ are kept for reorthogonalization.
        Eigen::MatrixXd Q(n, steps), MQ(n, steps);
        Eigen::VectorXd alpha(steps), beta(steps);
        Eigen::VectorXd q(n);
        for (Eigen::Index i = 0; i < n; ++i) q(i) = gauss(rng);
        Eigen::Index m = 0;
        auto orthonormalize = [&](Eigen::VectorXd& w, Eigen::Index upto) {
            for (int pass = 0; pass < 2; ++pass) {
                if (upto == 0) break;
                const Eigen::VectorXd h = MQ.leftCols(upto).transpose() * w;
                w -= Q.leftCols(upto) * h;
            }
            return std::sqrt(std::max(w.dot(sys.M * w), 0.0));
        };
        double nq = orthonormalize(q, 0);
        q /= nq;
        for (; m < steps; ++m) {
            Q.col(m) = q;
            MQ.col(m) = sys.M * q;
            Eigen::VectorXd w = ldlt.solve(MQ.col(m));
            alpha(m) = MQ.col(m).dot(w);
            double b = orthonormalize(w, m + 1);
            if (m + 1 == steps) {
                beta(m) = b;
                break;
            }
            if (b < 1e-10 * std::abs(alpha(m))) {
                // Invariant subspace found: continue from a fresh random direction.
                for (Eigen::Index i = 0; i < n; ++i) w(i) = gauss(rng);
                b = orthonormalize(w, m + 1);
                beta(m) = 0.0;
            } else {
                beta(m) = b;
            }
            q = w / b;
        }
        const Eigen::Index used = std::min(m + 1, steps);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        Eigen::VectorXd diag = alpha.head(used), sub = beta.head(used - 1);
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        // Largest mu = 1 / Lambda^2 come last.
        const Eigen::MatrixXd S = tri.eigenvectors().rightCols(n_modes);
        const Eigen::MatrixXd ritz = Q.leftCols(used) * S;
        auto [values, vecs] = rayleigh_ritz(sys.K, sys.M, ritz);

        worst = 0.0;
        for (int k = 0; k < n_modes; ++k) worst = std::max(worst, relative_residual(sys.K, sys.M, vecs.col(k), values(k)));
        if (worst <= options.residual_tol || steps == n) {
            if (worst > options.residual_tol) break;
            Eigen::MatrixXd full = expand(*mesh, sys.interior, vecs);
            fix_signs(full);
            return EigenBasis(std::move(mesh), values, std::move(full));
        }
        steps = std::min(n, 2 * steps);
    }
    std::ostringstream msg;
    msg << "eigensolver did not converge: worst relative residual " << worst << " > " << options.residual_tol;
    throw NumericalError(msg.str());
}

EigenBasis solve_dense(std::shared_ptr<const TriMesh> mesh, int n_modes)
{
    auto sys = restrict_to_interior(*mesh, 1);
    const Eigen::Index n = static_cast<Eigen::Index>(sys.interior.size());
    if (n_modes < 1 || n_modes > n) throw DomainError("mode count out of range");
    const Eigen::MatrixXd K = Eigen::MatrixXd(sys.K), M = Eigen::MatrixXd(sys.M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(K, M);
    if (ges.info() != Eigen::Success) throw NumericalError("dense generalized eigensolver failed");
    Eigen::MatrixXd full = expand(*mesh, sys.interior, ges.eigenvectors().leftCols(n_modes));
    fix_signs(full);
    return EigenBasis(std::move(mesh), ges.eigenvalues().head(n_modes), std::move(full));
}

} // namespace wxva
