#include "qmfs/spectra.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "qmfs/error.hpp"
#include "qmfs/model.hpp"

namespace qmfs {

namespace {

using cd = std::complex<double>;

/// Output rows and noise columns flattened into (row, column) terms.
struct Terms {
    Eigen::MatrixXd rows;
    Eigen::MatrixXd direct;
    std::vector<std::pair<int, int>> index;
    std::vector<double> weight;
};

Terms collect_terms(const LinearModel& model, const Eigen::MatrixXd& rows, const Eigen::MatrixXd& direct,
                    const Eigen::VectorXd& row_weights) {
    Terms t{rows, direct, {}, {}};
    for (int r = 0; r < rows.rows(); ++r) {
        for (int k = 0; k < model.input.cols(); ++k) {
            const double w = row_weights[r] * model.input_noise[k];
            if (w == 0.0 || (model.input.col(k).isZero() && direct(r, k) == 0.0)) {
                continue;
            }
            t.index.emplace_back(r, k);
            t.weight.push_back(w);
        }
    }
    return t;
}

std::vector<double> evaluate_direct(const LinearModel& model, const Terms& t, std::span<const double> grid,
                                    double offset) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::MatrixXcd h = t.rows.cast<cd>() * susceptibility(model, grid[i]) * model.input.cast<cd>() +
                                   t.direct.cast<cd>();
        double acc = offset;
        for (std::size_t j = 0; j < t.index.size(); ++j) {
            acc += t.weight[j] * std::norm(h(t.index[j].first, t.index[j].second));
        }
        out[i] = acc;
    }
    return out;
}

/// Pole-residue form of the terms. Returns false if the eigenvector basis of A
/// is too ill-conditioned to trust.
bool build_rational(const LinearModel& model, const Terms& t, double offset, kernels::RationalPsd& out) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.drift, true);
    if (es.info() != Eigen::Success) {
        return false;
    }
    const Eigen::MatrixXcd w = es.eigenvectors();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(w);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] <= 1e-9 * sv[0]) {
        return false;
    }
    const Eigen::MatrixXcd winv = w.inverse();
    const Eigen::MatrixXcd left = t.rows.cast<cd>() * w;
    const Eigen::MatrixXcd right = winv * model.input.cast<cd>();
    const auto m = static_cast<std::size_t>(w.cols());

    out.poles.assign(es.eigenvalues().data(), es.eigenvalues().data() + m);
    out.offset = offset;
    out.weight = t.weight;
    out.direct.clear();
    out.residues.clear();
    for (const auto& [r, k] : t.index) {
        out.direct.push_back(t.direct(r, k));
        for (std::size_t p = 0; p < m; ++p) {
            const auto pi = static_cast<Eigen::Index>(p);
            out.residues.push_back(left(r, pi) * right(pi, k));
        }
    }
    return true;
}

std::vector<double> evaluate(const LinearModel& model, const Terms& t, std::span<const double> grid,
                             double offset) {
    kernels::RationalPsd rp;
    if (!build_rational(model, t, offset, rp)) {
        return evaluate_direct(model, t, grid, offset);
    }
    std::vector<double> out(grid.size());
    kernels::rational_psd(kernels::active_isa(), rp, grid, out);
    return out;
}

void check_grid(std::span<const double> grid) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("frequency grid must be strictly increasing");
        }
    }
}

} // namespace

std::vector<double> symmetric_grid(double half_span, std::size_t points) {
    if (points < 2 || !(half_span > 0.0)) {
        throw std::invalid_argument("grid needs >= 2 points and a positive span");
    }
    std::vector<double> g(points);
    const double step = 2.0 * half_span / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = -half_span + step * static_cast<double>(i);
    }
    if (points % 2 == 1) {
        g[points / 2] = 0.0;
    }
    return g;
}

std::vector<double> default_grid(const LinearModel& model, std::size_t points) {
    return symmetric_grid(model.detuning + 30.0 * model.mean_gamma, points);
}

Eigen::MatrixXcd susceptibility(const LinearModel& model, double omega) {
    const int n = model.layout.dim();
    const Eigen::MatrixXcd m = cd(0.0, -omega) * Eigen::MatrixXcd::Identity(n, n) - model.drift.cast<cd>();
    return m.partialPivLu().inverse();
}

SpectrumTrace output_spectrum(const LinearModel& model, const OutputMap& routing,
                              std::span<const double> grid, double n_amp) {
    check_grid(grid);
    const auto t = collect_terms(model, routing.rows, routing.feedthrough, routing.weights);
    SpectrumTrace trace;
    trace.omega.assign(grid.begin(), grid.end());
    trace.psd = evaluate(model, t, grid, n_amp);
    for (auto& v : trace.psd) {
        v = std::max(v, 0.0);
    }
    trace.cavity = routing.cavity;
    trace.lo_phase = routing.lo_phase;
    trace.detection = routing.detection;
    trace.n_amp = n_amp;
    return trace;
}

std::vector<double> output_spectrum_direct(const LinearModel& model, const OutputMap& routing,
                                           std::span<const double> grid, double n_amp) {
    const auto t = collect_terms(model, routing.rows, routing.feedthrough, routing.weights);
    return evaluate_direct(model, t, grid, n_amp);
}

std::vector<double> state_spectrum(const LinearModel& model, const Eigen::VectorXd& q,
                                   std::span<const double> grid) {
    check_grid(grid);
    const int n = model.layout.dim();
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, n);
    if (q.size() == 4) {
        row.block(0, model.layout.mech_begin(), 1, 4) = q.transpose();
    } else if (q.size() == n) {
        row.row(0) = q.transpose();
    } else {
        throw std::invalid_argument("state_spectrum: selector length must be 4 or the model dimension");
    }
    const Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(1, model.input.cols());
    const auto t = collect_terms(model, row, direct, Eigen::VectorXd::Ones(1));
    return evaluate(model, t, grid, 0.0);
}

double integrate_excess(std::span<const double> omega, std::span<const double> psd, double baseline,
                        std::span<const double> centers) {
    if (omega.size() != psd.size() || omega.size() < 2) {
        throw std::invalid_argument("integrate_excess: need matching spans of length >= 2");
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < omega.size(); ++i) {
        sum += 0.5 * (omega[i] - omega[i - 1]) * ((psd[i] - baseline) + (psd[i - 1] - baseline));
    }
    if (!centers.empty()) {
        auto tail = [&](double edge, double value) {
            double best = centers[0];
            for (double c : centers) {
                if (std::abs(edge - c) < std::abs(edge - best)) {
                    best = c;
                }
            }
            // int_{edge}^{inf} value (edge-c)^2/(w-c)^2 dw = value |edge - c|
            return value * std::abs(edge - best);
        };
        sum += tail(omega.front(), psd.front() - baseline);
        sum += tail(omega.back(), psd.back() - baseline);
    }
    return sum / two_pi;
}

TransductionGain calibrate_gain(const LinearModel& model, const OutputMap& routing) {
    const int nc = 2 * model.layout.cavity_count();
    const int mb = model.layout.mech_begin();
    const Eigen::MatrixXd acc = model.drift.topLeftCorner(nc, nc);
    const Eigen::MatrixXd acm = model.drift.block(0, mb, nc, 4);
    const Eigen::MatrixXd rows = routing.rows.leftCols(nc);

    const Eigen::MatrixXd t0 = rows * (-acc).inverse() * acm;
    Eigen::MatrixXd weighted = t0;
    for (int r = 0; r < weighted.rows(); ++r) {
        weighted.row(r) *= std::sqrt(routing.weights[r]);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeFullV);
    const double scale = std::sqrt(model.kappa_pump * std::max(model.kappa_pump, model.kappa_probe));
    if (svd.singularValues()[0] <= 1e-12 * scale) {
        throw std::invalid_argument("no transduction: the detected cavity is not coupled to the oscillators");
    }

    TransductionGain g;
    g.measured = svd.matrixV().col(0);
    // Fix the overall sign so the largest component is positive.
    Eigen::Index imax = 0;
    g.measured.cwiseAbs().maxCoeff(&imax);
    if (g.measured[imax] < 0.0) {
        g.measured = -g.measured;
    }
    g.omega = model.detuning;
    const Eigen::MatrixXcd chi_c =
        (cd(0.0, -g.omega) * Eigen::MatrixXcd::Identity(nc, nc) - acc.cast<cd>()).inverse();
    const Eigen::VectorXcd tq = rows.cast<cd>() * chi_c * (acm * g.measured).cast<cd>();
    for (int r = 0; r < tq.size(); ++r) {
        g.gain += routing.weights[r] * std::norm(tq[r]);
    }
    return g;
}

EffectiveOccupation effective_occupation(const TwoPeakFit& fit, double gamma, double gain) {
    if (!(gain > 0.0)) {
        throw std::invalid_argument("effective_occupation: gain must be positive");
    }
    EffectiveOccupation e;
    const double s_left = fit.model(fit.left.center) / gain;
    const double s_right = fit.model(fit.right.center) / gain;
    e.x2_eff = 0.5 * (gamma * s_left / 2.0 + gamma * s_right / 2.0);
    e.n_imp = gamma * fit.floor() / (2.0 * gain);
    return e;
}

EffectiveOccupation effective_occupation(const SpectrumTrace& trace, double gamma, double gain) {
    return effective_occupation(fit_two_lorentzians(trace), gamma, gain);
}

double integrated_variance(const TwoPeakFit& fit, double gain) {
    if (!(gain > 0.0)) {
        throw std::invalid_argument("integrated_variance: gain must be positive");
    }
    return (fit.left.area + fit.right.area) / gain;
}

std::string spectrum_csv(const SpectrumTrace& trace) {
    std::string out = "# omega_rel_hz, psd_quanta\n";
    for (std::size_t i = 0; i < trace.omega.size(); ++i) {
        out += fmt::format("{:.17g},{:.17g}\n", trace.omega[i] / two_pi, trace.psd[i]);
    }
    return out;
}

} // namespace qmfs
