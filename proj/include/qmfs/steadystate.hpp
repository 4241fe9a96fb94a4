#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmfs/dynamics.hpp"
#include "qmfs/model.hpp"

namespace qmfs {

/// Symmetrized steady-state second moments <{x_i, x_j}>/2 over a LinearModel ordering.
struct CovarianceMatrix {
    Eigen::MatrixXd values;
    StateLayout layout;

    /// Block over (X1, P1, X2, P2).
    Eigen::Matrix4d mechanical() const;
};

/// Solves A V + V A^T + D = 0 by a Kronecker-vectorized dense LU solve with
/// iterative refinement. Throws InstabilityError for unstable or marginally
/// stable drift (max Re lambda > -1e-6 kappa) and NumericalError("ill-conditioned")
/// if the residual cannot be brought below 1e-10 ||D||_F.
CovarianceMatrix solve_lyapunov(const LinearModel& model);

/// ||A V + V A^T + D||_F / ||D||_F.
double lyapunov_residual(const LinearModel& model, const Eigen::MatrixXd& v);

/// q^T V q for the unit selector vector q.
double quadrature_variance(const CovarianceMatrix& v, const QuadratureSelector& q);

/// <q1 q2> symmetrized.
double cross_correlation(const CovarianceMatrix& v, const QuadratureSelector& q1,
                         const QuadratureSelector& q2);

/// <first^2> cos^2(a/2) + <second^2> sin^2(a/2) + <first second> sin(a).
double generalized_variance(const CovarianceMatrix& v, const GeneralizedQuadrature& g);

struct DuanResult {
    /// <X+^2> + <P-^2>; below 1 certifies entanglement.
    double value = 0.0;
    double margin_db = 0.0;
};
DuanResult duan_quantity(const CovarianceMatrix& v);

/// Smallest eigenvalue of V + i sigma/2 (Hermitian); >= 0 for a physical state.
double uncertainty_min_eigenvalue(const Eigen::MatrixXd& v);
/// Smallest symplectic eigenvalue; >= 1/2 for a physical state.
double min_symplectic_eigenvalue(const Eigen::MatrixXd& v);

struct SweepRow {
    std::vector<double> values;
    /// Empty when the row succeeded.
    std::string error;
    bool ok() const { return error.empty(); }
};

/// One row per config in input order; a failing config yields an error row
/// and the sweep continues. Rows run on up to `threads` workers (0 = auto).
std::vector<SweepRow> sweep(std::span<const SystemConfig> configs,
                            std::span<const QuadratureSelector> selectors, unsigned threads = 0);

} // namespace qmfs
