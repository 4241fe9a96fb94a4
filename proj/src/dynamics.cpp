#include "qmfs/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "qmfs/error.hpp"

namespace qmfs {

namespace {

using cd = std::complex<double>;

cd coupling(const PumpTone& t) { return std::polar(t.amplitude.rad_s(), t.phase); }

void add_channel(std::vector<InputChannel>& out, const std::string& id, double rate, double occupation,
                 int state_index) {
    out.push_back({id, rate, occupation, state_index, 2 * static_cast<int>(out.size())});
}

} // namespace

int StateLayout::cavity(CavityId id) const {
    if (id == CavityId::pump) {
        return 0;
    }
    if (!has_probe) {
        throw std::invalid_argument("no probe cavity");
    }
    return 2;
}

const InputChannel& LinearModel::channel(const std::string& id) const {
    for (const auto& c : channels) {
        if (c.id == id) {
            return c;
        }
    }
    throw std::invalid_argument(fmt::format("no input channel '{}'", id));
}

CouplingCoefficients coupling_coefficients(const ToneSet& tones) {
    const cd g1m = std::conj(coupling(tones.tone(1, Sideband::red)));
    const cd g1p = std::conj(coupling(tones.tone(1, Sideband::blue)));
    const cd g2m = std::conj(coupling(tones.tone(2, Sideband::red)));
    const cd g2p = std::conj(coupling(tones.tone(2, Sideband::blue)));

    CouplingCoefficients c;
    for (const auto& t : tones.tones) {
        c.reference += 0.25 * t.amplitude.rad_s();
    }
    if (c.reference == 0.0) {
        return c;
    }
    const cd i(0.0, 1.0);
    c.a_plus = ((g1m + g1p) + (g2m + g2p)) / c.reference;
    c.a_minus = ((g1m + g1p) - (g2m + g2p)) / c.reference;
    c.b_plus = i * ((g1p - g1m) + (g2p - g2m)) / c.reference;
    c.b_minus = i * ((g1p - g1m) - (g2p - g2m)) / c.reference;
    return c;
}

Eigen::Matrix4d collective_basis() {
    const double s = std::numbers::sqrt2 / 2.0;
    Eigen::Matrix4d t;
    // rows: X+, P+, X-, P-; columns: X1, P1, X2, P2
    t << s, 0, s, 0,
         0, s, 0, s,
         s, 0, -s, 0,
         0, s, 0, -s;
    return t;
}

CavityCoupling cavity_coupling(const ToneSet& tones) {
    const auto c = coupling_coefficients(tones);
    // Sigma^dag = w . (X+, P+, X-, P-), H_c = a Sigma^dag + h.c.
    //           = sqrt2 [X_c Re(w) - P_c Im(w)] . x.
    Eigen::Vector4cd w;
    w << c.a_plus, c.b_plus, c.a_minus, c.b_minus;
    w *= 0.5 * c.reference;
    const Eigen::Matrix4d t = collective_basis();
    const Eigen::Vector4cd w_single = t.transpose() * w;
    return {std::numbers::sqrt2 * w_single.real(), -std::numbers::sqrt2 * w_single.imag()};
}

double max_real_eigenvalue(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

LinearModel assemble_drift(const CheckedConfig& checked, const DriftOptions& options) {
    const SystemConfig& cfg = checked.config();
    LinearModel m;
    m.layout.has_probe = cfg.probe_cavity.has_value();
    const int n = m.layout.dim();
    m.kappa_pump = checked.kappa_pump();
    m.kappa_ext_pump = cfg.pump_cavity.kappa_ext.rad_s();
    m.kappa_probe = checked.kappa_probe();
    m.kappa_ext_probe = cfg.probe_cavity ? cfg.probe_cavity->kappa_ext.rad_s() : 0.0;
    m.detuning = cfg.pump_tones.detuning.rad_s();
    m.mean_gamma = checked.mean_gamma();
    m.amplifier_noise = cfg.amplifier_noise;

    // Quadratic form H = x^T M x / 2, so dx/dt = J M x - damping.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    const double omega = options.mirror_detuning ? -m.detuning : m.detuning;
    const int m1 = m.layout.mech(1);
    const int m2 = m.layout.mech(2);
    h(m1, m1) = h(m1 + 1, m1 + 1) = omega;
    h(m2, m2) = h(m2 + 1, m2 + 1) = -omega;

    auto couple = [&](int c, const ToneSet& tones) {
        const auto cc = cavity_coupling(tones);
        for (int k = 0; k < 4; ++k) {
            h(c, m1 + k) = h(m1 + k, c) = cc.x_weights[k];
            h(c + 1, m1 + k) = h(m1 + k, c + 1) = cc.p_weights[k];
        }
    };
    couple(m.layout.cavity(CavityId::pump), cfg.pump_tones);
    if (cfg.probe_tones) {
        couple(m.layout.cavity(CavityId::probe), *cfg.probe_tones);
    }

    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; k += 2) {
        j(k, k + 1) = 1.0;
        j(k + 1, k) = -1.0;
    }
    m.drift = j * h;

    auto damp = [&](int idx, double rate) {
        m.drift(idx, idx) -= 0.5 * rate;
        m.drift(idx + 1, idx + 1) -= 0.5 * rate;
    };

    std::vector<InputChannel> ch;
    const int pc = m.layout.cavity(CavityId::pump);
    damp(pc, m.kappa_pump);
    add_channel(ch, "pump_ext", m.kappa_ext_pump, cfg.pump_cavity.n_thermal, pc);
    add_channel(ch, "pump_int", cfg.pump_cavity.kappa_int.rad_s(), cfg.pump_cavity.n_thermal, pc);
    if (cfg.probe_cavity) {
        const int dc = m.layout.cavity(CavityId::probe);
        damp(dc, m.kappa_probe);
        add_channel(ch, "probe_ext", m.kappa_ext_probe, cfg.probe_cavity->n_thermal, dc);
        add_channel(ch, "probe_int", cfg.probe_cavity->kappa_int.rad_s(), cfg.probe_cavity->n_thermal,
                    dc);
    }
    for (int osc = 1; osc <= 2; ++osc) {
        const auto& mode = cfg.mech[static_cast<std::size_t>(osc - 1)];
        const int idx = m.layout.mech(osc);
        damp(idx, mode.gamma_effective.rad_s());
        add_channel(ch, fmt::format("mech{}", osc), mode.gamma_effective.rad_s(), mode.n_thermal, idx);
    }
    m.channels = std::move(ch);

    const int cols = 2 * static_cast<int>(m.channels.size());
    m.input = Eigen::MatrixXd::Zero(n, cols);
    m.input_noise = Eigen::VectorXd::Zero(cols);
    for (const auto& c : m.channels) {
        const double s = std::sqrt(c.rate);
        m.input(c.state_index, c.column) = s;
        m.input(c.state_index + 1, c.column + 1) = s;
        m.input_noise[c.column] = m.input_noise[c.column + 1] = c.occupation + 0.5;
    }
    m.diffusion = m.input * m.input_noise.asDiagonal() * m.input.transpose();

    if (options.check_stability) {
        const double re = max_real_eigenvalue(m.drift);
        if (re > 0.0) {
            throw InstabilityError(
                fmt::format("unstable model: drift eigenvalue with Re = {:.6g} rad/s > 0", re));
        }
    }
    return m;
}

OutputMap output_routing(const LinearModel& model, CavityId cavity, double lo_phase,
                         Detection detection) {
    if (cavity == CavityId::probe && !model.layout.has_probe) {
        throw std::invalid_argument("no probe cavity");
    }
    const int c = model.layout.cavity(cavity);
    const double kappa_ext = cavity == CavityId::pump ? model.kappa_ext_pump : model.kappa_ext_probe;
    const auto& ext = model.channel(cavity == CavityId::pump ? "pump_ext" : "probe_ext");

    OutputMap out;
    out.cavity = cavity;
    out.lo_phase = lo_phase;
    out.detection = detection;
    const int k = detection == Detection::homodyne ? 1 : 2;
    out.rows = Eigen::MatrixXd::Zero(k, model.layout.dim());
    out.feedthrough = Eigen::MatrixXd::Zero(k, model.input.cols());
    out.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    for (int r = 0; r < k; ++r) {
        const double psi = lo_phase + r * std::numbers::pi / 2.0;
        const double wx = -std::sin(psi);
        const double wp = std::cos(psi);
        out.rows(r, c) = -std::sqrt(kappa_ext) * wx;
        out.rows(r, c + 1) = -std::sqrt(kappa_ext) * wp;
        out.feedthrough(r, ext.column) = wx;
        out.feedthrough(r, ext.column + 1) = wp;
    }
    return out;
}

namespace {

struct OscillatorAngles {
    double delta1;
    double delta2;
};

OscillatorAngles measured_angles(const QuadratureSelector& measured) {
    const Eigen::Vector4d q = selector_vector(measured);
    const double n1 = std::hypot(q[0], q[1]);
    const double n2 = std::hypot(q[2], q[3]);
    if (std::abs(n1 - n2) > 1e-12) {
        throw std::invalid_argument(fmt::format(
            "quadrature {} does not weigh both oscillators equally; no four-tone BAE set measures it",
            selector_label(measured)));
    }
    return {std::atan2(q[1], q[0]), std::atan2(q[3], q[2])};
}

} // namespace

TonePhases bae_phases(const QuadratureSelector& measured) {
    // Oscillator j enters as sqrt2 G e^{i sigma_j} (cos d_j X_j + sin d_j P_j) with
    // sigma = mean and d = half difference of its two tone phases.
    const auto [d1, d2] = measured_angles(measured);
    return {0.0, 2.0 * d1, d1 - d2, d1 + d2};
}

double bae_lo_phase(const QuadratureSelector& measured) {
    return fold_phase(measured_angles(measured).delta1);
}

} // namespace qmfs
