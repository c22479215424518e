#pragma once

#include "wedge_xva/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>

namespace wxva {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Weak-form matrices of the angular Laplacian on the (phi, theta) chart:
/// K = int (1/sin) dN_i/dphi dN_j/dphi + sin dN_i/dtheta dN_j/dtheta, M = int N_i N_j sin.
struct FemMatrices {
    SparseMatrix K;
    SparseMatrix M;
};

FemMatrices assemble(const TriMesh& mesh, int threads = 1);

/// Locates chart points in a triangulation through a uniform bucket grid.
class TriangleLocator {
public:
    explicit TriangleLocator(std::shared_ptr<const TriMesh> mesh);

    /// Triangle index and barycentric weights, or -1 if no triangle contains the point.
    int locate(double phi, double theta, std::array<double, 3>& bary) const;

private:
    std::shared_ptr<const TriMesh> mesh_;
    double lo_[2], cell_[2];
    int nx_, ny_;
    std::vector<int> start_, items_;
};

struct EigenSolveOptions {
    int threads = 1;
    double residual_tol = 1e-8;      // relative ||K psi - lambda M psi|| / ||K psi||
    int max_restarts = 4;
    std::uint64_t seed = 7;
};

/// Arrays derived from the eigenpairs through K and M. The cache stores them so a load skips assembly.
struct BasisArtifacts {
    Eigen::MatrixXd mass_vectors;
    Eigen::MatrixXd flux;
    double ortho_residual = 0.0;
    double rayleigh_residual = 0.0;
    double eigen_residual = 0.0;
};

/// Mass-orthonormal Dirichlet eigenpairs K psi = Lambda^2 M psi, lowest first.
class EigenBasis {
public:
    EigenBasis(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors);
    /// Trusts `artifacts` as computed by the first constructor for the same arrays.
    EigenBasis(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors,
               BasisArtifacts artifacts);

    BasisArtifacts artifacts() const;

    const TriMesh& mesh() const { return *mesh_; }
    std::shared_ptr<const TriMesh> mesh_ptr() const { return mesh_; }
    int mode_count() const { return static_cast<int>(eigenvalues_.size()); }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    /// Nodal values, one column per mode; rows of Dirichlet nodes are zero.
    const Eigen::MatrixXd& vectors() const { return vectors_; }

    double orthonormality_residual() const { return ortho_residual_; }
    double rayleigh_residual() const { return rayleigh_residual_; }
    double max_eigen_residual() const { return eigen_residual_; }

    /// P1 interpolant of mode n (zero-based).
    double eval(int n, double phi, double theta) const;
    /// All modes at one point.
    Eigen::VectorXd eval_all(double phi, double theta) const;

    /// One-sided derivative of mode n on a facet: d/dphi on PhiZero and PhiMax (s = theta),
    /// d/dtheta on South (s = phi). Recovered by blending the gradients of the two nearest
    /// boundary elements.
    double boundary_derivative(int n, Facet facet, double s) const;

    /// m_n = int Psi_n sin(theta) dphi dtheta, i.e. 1^T M Psi_n.
    const Eigen::VectorXd& mass_moments() const { return moments_; }
    /// M Psi, one column per mode: projections onto the basis are h^T (M Psi).
    const Eigen::MatrixXd& mass_vectors() const { return mass_vectors_; }

    /// Consistent boundary flux (K - Lambda^2 M) Psi at each node; equals int N_i dPsi/dn_out ds
    /// on the sphere at Dirichlet nodes and vanishes elsewhere up to rounding.
    const Eigen::MatrixXd& boundary_flux() const { return flux_; }

private:
    struct BoundaryEdge {
        double s0, s1;   // facet coordinate range
        Eigen::VectorXd grad;  // coordinate derivative per mode on the adjacent triangle
    };

    std::shared_ptr<const TriMesh> mesh_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd vectors_;
    Eigen::VectorXd moments_;
    Eigen::MatrixXd mass_vectors_;
    Eigen::MatrixXd flux_;
    TriangleLocator locator_;
    std::array<std::vector<BoundaryEdge>, 3> facet_edges_;
    double ortho_residual_ = 0.0;
    double rayleigh_residual_ = 0.0;
    double eigen_residual_ = 0.0;

    void build_boundary_edges();
};

/// Lowest N eigenpairs by shift-invert Lanczos with full reorthogonalization, finished by a
/// Rayleigh-Ritz step. Requires N <= 0.2 x interior node count.
EigenBasis solve_lowest(std::shared_ptr<const TriMesh> mesh, int n_modes, const EigenSolveOptions& options = {});

/// Same problem through a dense generalized solver; for small meshes and cross-checks.
EigenBasis solve_dense(std::shared_ptr<const TriMesh> mesh, int n_modes);

} // namespace wxva
