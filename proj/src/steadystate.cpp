#include "qmfs/steadystate.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qmfs/error.hpp"
#include "qmfs/parallel.hpp"

namespace qmfs {

Eigen::Matrix4d CovarianceMatrix::mechanical() const {
    const int m = layout.mech_begin();
    return values.block<4, 4>(m, m);
}

double lyapunov_residual(const LinearModel& model, const Eigen::MatrixXd& v) {
    const Eigen::MatrixXd r = model.drift * v + v * model.drift.transpose() + model.diffusion;
    return r.norm() / model.diffusion.norm();
}

CovarianceMatrix solve_lyapunov(const LinearModel& model) {
    const Eigen::MatrixXd& a = model.drift;
    const int n = static_cast<int>(a.rows());

    const double re = max_real_eigenvalue(a);
    if (re > 0.0) {
        throw InstabilityError(fmt::format("unstable model: drift eigenvalue with Re = {:.6g} rad/s", re));
    }
    if (re > -1e-6 * model.kappa_pump) {
        throw InstabilityError(
            fmt::format("marginally stable model: max Re lambda = {:.6g} rad/s is within 1e-6 kappa of 0", re));
    }

    // vec(A V + V A^T) = (I (x) A + A (x) I) vec(V), column-major.
    const int nn = n * n;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nn, nn);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int row = i + j * n;
            for (int p = 0; p < n; ++p) {
                k(row, p + j * n) += a(i, p);
                k(row, i + p * n) += a(j, p);
            }
        }
    }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(model.diffusion.data(), nn);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    Eigen::VectorXd x = lu.solve(rhs);
    for (int it = 0; it < 3; ++it) {
        const Eigen::VectorXd r = rhs - k * x;
        if (r.norm() <= 1e-14 * rhs.norm()) {
            break;
        }
        x += lu.solve(r);
    }

    CovarianceMatrix out;
    out.layout = model.layout;
    out.values = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
    out.values = 0.5 * (out.values + out.values.transpose()).eval();

    const double residual = lyapunov_residual(model, out.values);
    if (!(residual < 1e-10)) {
        throw NumericalError(fmt::format("ill-conditioned: Lyapunov residual {:.3g} exceeds 1e-10 ||D||", residual));
    }
    return out;
}

double quadrature_variance(const CovarianceMatrix& v, const QuadratureSelector& q) {
    const Eigen::Vector4d s = selector_vector(q);
    return s.dot(v.mechanical() * s);
}

double cross_correlation(const CovarianceMatrix& v, const QuadratureSelector& q1,
                         const QuadratureSelector& q2) {
    const Eigen::Matrix4d m = v.mechanical();
    const Eigen::Vector4d a = selector_vector(q1);
    const Eigen::Vector4d b = selector_vector(q2);
    return 0.5 * (a.dot(m * b) + b.dot(m * a));
}

double generalized_variance(const CovarianceMatrix& v, const GeneralizedQuadrature& g) {
    const double c = std::cos(g.angle / 2.0);
    const double s = std::sin(g.angle / 2.0);
    return quadrature_variance(v, g.first) * c * c + quadrature_variance(v, g.second) * s * s +
           cross_correlation(v, g.first, g.second) * std::sin(g.angle);
}

DuanResult duan_quantity(const CovarianceMatrix& v) {
    DuanResult d;
    d.value = quadrature_variance(v, x_plus) + quadrature_variance(v, p_minus);
    d.margin_db = 10.0 * std::log10(d.value);
    return d;
}

namespace {

Eigen::MatrixXd symplectic_form(int n) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; k += 2) {
        j(k, k + 1) = 1.0;
        j(k + 1, k) = -1.0;
    }
    return j;
}

} // namespace

double uncertainty_min_eigenvalue(const Eigen::MatrixXd& v) {
    const int n = static_cast<int>(v.rows());
    const Eigen::MatrixXcd h =
        v.cast<std::complex<double>>() + std::complex<double>(0.0, 0.5) * symplectic_form(n).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double min_symplectic_eigenvalue(const Eigen::MatrixXd& v) {
    const int n = static_cast<int>(v.rows());
    const Eigen::MatrixXd m = symplectic_form(n) * v;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().minCoeff();
}

std::vector<SweepRow> sweep(std::span<const SystemConfig> configs,
                            std::span<const QuadratureSelector> selectors, unsigned threads) {
    std::vector<SweepRow> rows(configs.size());
    parallel_for(configs.size(), threads, [&](std::size_t i) {
        try {
            const auto model = assemble_drift(validate(configs[i]));
            const auto v = solve_lyapunov(model);
            rows[i].values.reserve(selectors.size());
            for (const auto& q : selectors) {
                rows[i].values.push_back(quadrature_variance(v, q));
            }
        } catch (const std::exception& e) {
            rows[i].values.clear();
            rows[i].error = e.what();
        }
    });
    return rows;
}

} // namespace qmfs
