#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bits.hpp"
#include "channels.hpp"
#include "polar_core.hpp"
#include "rng.hpp"

namespace polarforge::qprobe {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-9;

// ---- pure states on labelled registers ------------------------------------

/// Amplitudes over registers with the given dimensions; register 0 is the most
/// significant digit of the flat index.
struct PureState {
    Vec amp;
    std::vector<std::size_t> dims;

    std::size_t size() const { return static_cast<std::size_t>(amp.size()); }
    std::size_t registers() const { return dims.size(); }
    double norm() const { return amp.norm(); }
};

namespace detail {

inline std::vector<std::size_t> strides(const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> s(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) s[i - 1] = s[i] * dims[i];
    return s;
}

inline double xlog2x(double v) { return v > 1e-300 ? v * std::log2(v) : 0.0; }

}  // namespace detail

/// Entropy -sum l log2 l of a positive operator (trace need not be 1).
inline double entropy_of_operator(const Mat& rho) {
    if (rho.rows() == 0) return 0.0;
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) throw std::logic_error("qprobe: non-Hermitian intermediate");
    Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
    double h = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) h -= detail::xlog2x(std::max(0.0, es.eigenvalues()[i]));
    return h;
}

/// Rows indexed by the kept registers (in the order listed, first is most
/// significant), columns by the rest.
inline Mat split_matrix(const PureState& s, const std::vector<std::size_t>& keep) {
    std::vector<std::int32_t> slot(s.registers(), -1);
    for (std::size_t k = 0; k < keep.size(); ++k) {
        if (keep[k] >= s.registers()) throw std::out_of_range("qprobe: register out of range");
        if (slot[keep[k]] >= 0) throw std::invalid_argument("qprobe: register listed twice");
        slot[keep[k]] = static_cast<std::int32_t>(k);
    }
    std::vector<std::size_t> kd, rd;
    for (auto k : keep) kd.push_back(s.dims[k]);
    for (std::size_t r = 0; r < s.registers(); ++r)
        if (slot[r] < 0) rd.push_back(s.dims[r]);
    std::size_t dk = 1, dr = 1;
    for (auto d : kd) dk *= d;
    for (auto d : rd) dr *= d;
    auto ks = detail::strides(kd), rs = detail::strides(rd);
    // per-register weight in the row or column index
    std::vector<std::size_t> wrow(s.registers(), 0), wcol(s.registers(), 0);
    for (std::size_t r = 0, b = 0; r < s.registers(); ++r) {
        if (slot[r] >= 0) wrow[r] = ks[static_cast<std::size_t>(slot[r])];
        else wcol[r] = rs[b++];
    }
    Mat m = Mat::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dr));
    std::vector<std::size_t> digit(s.registers(), 0);
    std::size_t ki = 0, ri = 0;
    for (std::size_t idx = 0; idx < s.size(); ++idx) {
        if (idx > 0) {
            // odometer increment over register digits, last register fastest
            for (std::size_t r = s.registers(); r-- > 0;) {
                ki += wrow[r];
                ri += wcol[r];
                if (++digit[r] < s.dims[r]) break;
                ki -= wrow[r] * s.dims[r];
                ri -= wcol[r] * s.dims[r];
                digit[r] = 0;
            }
        }
        const cd a = s.amp[static_cast<Eigen::Index>(idx)];
        if (a != cd(0)) m(static_cast<Eigen::Index>(ki), static_cast<Eigen::Index>(ri)) = a;
    }
    return m;
}

namespace detail {

inline double block_entropy(const Mat& m) {
    return m.rows() <= m.cols() ? entropy_of_operator(m * m.adjoint()) : entropy_of_operator(m.adjoint() * m);
}

}  // namespace detail

/// Reduced density operator on `keep`.
inline Mat reduced(const PureState& s, const std::vector<std::size_t>& keep) {
    Mat m = split_matrix(s, keep);
    return m * m.adjoint();
}

/// von Neumann entropy (bits) of the marginal on `keep`, via whichever side of
/// the bipartition is smaller.
inline double entropy(const PureState& s, const std::vector<std::size_t>& keep) {
    if (keep.empty()) return 0.0;
    return detail::block_entropy(split_matrix(s, keep));
}

enum class Basis { Z, X };

/// Applies a Hadamard to each listed qubit register.
inline PureState hadamard(const PureState& s, const std::vector<std::size_t>& regs) {
    PureState out = s;
    auto fs = detail::strides(s.dims);
    const double h = 1.0 / std::sqrt(2.0);
    for (auto r : regs) {
        if (s.dims.at(r) != 2) throw std::invalid_argument("qprobe: Hadamard needs a qubit register");
        for (std::size_t idx = 0; idx < out.size(); ++idx) {
            if ((idx / fs[r]) % 2 != 0) continue;
            auto i0 = static_cast<Eigen::Index>(idx), i1 = static_cast<Eigen::Index>(idx + fs[r]);
            cd a = out.amp[i0], b = out.amp[i1];
            out.amp[i0] = h * (a + b);
            out.amp[i1] = h * (a - b);
        }
    }
    return out;
}

/// H(M Y) where M is the outcome of measuring `measured` in `basis`.
inline double entropy_measured(const PureState& s0, const std::vector<std::size_t>& measured, Basis basis, const std::vector<std::size_t>& keep) {
    const PureState s = basis == Basis::X ? hadamard(s0, measured) : s0;
    std::vector<std::size_t> order = measured;
    order.insert(order.end(), keep.begin(), keep.end());
    const Mat m = split_matrix(s, order);
    std::size_t dk = 1;
    for (auto k : keep) dk *= s.dims[k];
    const auto dki = static_cast<Eigen::Index>(dk);
    double h = 0;
    // each outcome is a row block; its unnormalized marginal contributes -sum l log l
    for (Eigen::Index o = 0; o < m.rows() / dki; ++o) {
        auto blk = m.middleRows(o * dki, dki);
        if (blk.squaredNorm() == 0) continue;
        h += keep.empty() ? -detail::xlog2x(blk.squaredNorm()) : detail::block_entropy(blk);
    }
    return h;
}

inline std::vector<std::size_t> concat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

/// H(A|B) = H(AB) - H(B).
inline double cond_entropy(const PureState& s, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return entropy(s, concat(a, b)) - entropy(s, b);
}

/// H(M|B) for M the outcome of measuring `a` in `basis`.
inline double cond_entropy_measured(const PureState& s, const std::vector<std::size_t>& a, Basis basis, const std::vector<std::size_t>& b) {
    return entropy_measured(s, a, basis, b) - entropy(s, b);
}

// ---- the single-use channel dilation --------------------------------------

/// |phi_z>^{BE} for z in {0,1}, flattened with B as the leading digit.
struct Dilation {
    std::size_t dB = 2, dE = 4;
    std::array<Vec, 2> phi;
};

/// Bell input through a Pauli channel: phi_z = sum_k sqrt(p_k) sigma_k|z> |k>.
/// Erasure: phi_z = sqrt(1-p)|z>|e> + sqrt(p)|e>|z> with a three-level B and E.
inline Dilation dilation(const ChannelModel& ch) {
    validate(ch);
    Dilation d;
    if (auto* q = std::get_if<PauliParams>(&ch)) {
        d.dB = 2;
        d.dE = 4;
        const double pk[4] = {q->p_i, q->p_x, q->p_y, q->p_z};
        for (int z = 0; z < 2; ++z) {
            d.phi[z] = Vec::Zero(8);
            for (int k = 0; k < 4; ++k) {
                int b = z;
                cd ph = 1;
                if (k == 1) b = z ^ 1;
                if (k == 2) {
                    b = z ^ 1;
                    ph = z == 0 ? cd(0, 1) : cd(0, -1);
                }
                if (k == 3) ph = z == 0 ? 1.0 : -1.0;
                d.phi[z][b * 4 + k] += std::sqrt(pk[k]) * ph;
            }
        }
    } else if (auto* e = std::get_if<ErasureParams>(&ch)) {
        d.dB = 3;
        d.dE = 3;
        for (int z = 0; z < 2; ++z) {
            d.phi[z] = Vec::Zero(9);
            d.phi[z][z * 3 + 2] += std::sqrt(1 - e->p);
            d.phi[z][2 * 3 + z] += std::sqrt(e->p);
        }
    } else {
        throw std::invalid_argument("qprobe: only Pauli and erasure channels have a dilation here");
    }
    return d;
}

// ---- states ----------------------------------------------------------------

struct StateBundle {
    std::size_t L = 1;
    FrozenSpec frozen;        ///< positions of A-bar complement
    PureState psi;            ///< registers A, B, E
    PureState psi_prime;      ///< registers A, B, C, E
    PureState Psi3;           ///< registers A_0..A_{L-1}, B_*, C_*, E_*

    std::vector<std::size_t> A() const { return range(0); }
    std::vector<std::size_t> B() const { return range(L); }
    std::vector<std::size_t> C() const { return range(2 * L); }
    std::vector<std::size_t> E() const { return range(3 * L); }
    std::vector<std::size_t> A_bar() const {
        std::vector<std::size_t> r;
        for (std::uint32_t i = 0; i < L; ++i)
            if (!frozen.contains(i)) r.push_back(i);
        return r;
    }
    std::vector<std::size_t> A_bar_c() const { return {frozen.indices.begin(), frozen.indices.end()}; }

private:
    std::vector<std::size_t> range(std::size_t base) const {
        std::vector<std::size_t> r(L);
        for (std::size_t i = 0; i < L; ++i) r[i] = base + i;
        return r;
    }
};

/// psi^{ABE}, psi'^{ABCE} with C a copy of the amplitude value, and the
/// L-fold state with A transformed, C holding the untransformed values.
inline StateBundle build_states(const ChannelModel& ch, std::size_t L, const FrozenSpec& frozen) {
    if (L < 1 || L > 4 || !is_pow2(L)) {
        throw std::invalid_argument("build_states: L must be 1, 2 or 4");
    }
    frozen.validate(L);
    Dilation d = dilation(ch);
    const std::size_t dBE = d.dB * d.dE;
    const double r2 = 1.0 / std::sqrt(2.0);
    StateBundle s;
    s.L = L;
    s.frozen = frozen;

    s.psi.dims = {2, d.dB, d.dE};
    s.psi.amp = Vec::Zero(static_cast<Eigen::Index>(2 * dBE));
    s.psi_prime.dims = {2, d.dB, 2, d.dE};
    s.psi_prime.amp = Vec::Zero(static_cast<Eigen::Index>(4 * dBE));
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t b = 0; b < d.dB; ++b)
            for (std::size_t e = 0; e < d.dE; ++e) {
                cd a = r2 * d.phi[z][static_cast<Eigen::Index>(b * d.dE + e)];
                s.psi.amp[static_cast<Eigen::Index>((z * d.dB + b) * d.dE + e)] = a;
                s.psi_prime.amp[static_cast<Eigen::Index>(((z * d.dB + b) * 2 + z) * d.dE + e)] = a;
            }

    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < L; ++i) dims.push_back(2);
    for (std::size_t i = 0; i < L; ++i) dims.push_back(d.dB);
    for (std::size_t i = 0; i < L; ++i) dims.push_back(2);
    for (std::size_t i = 0; i < L; ++i) dims.push_back(d.dE);
    std::size_t total = 1;
    for (auto v : dims) total *= v;
    if (total > (std::size_t{1} << 22)) throw std::invalid_argument("build_states: state too large");
    s.Psi3.dims = dims;
    s.Psi3.amp = Vec::Zero(static_cast<Eigen::Index>(total));
    auto fs = detail::strides(dims);
    const double amp0 = std::pow(2.0, -static_cast<double>(L) / 2);
    std::size_t combos = 1;
    for (std::size_t i = 0; i < L; ++i) combos *= dBE;
    for (std::size_t zi = 0; zi < (std::size_t{1} << L); ++zi) {
        BitBlock z(L);
        for (std::size_t i = 0; i < L; ++i) z[i] = (zi >> i) & 1u;
        BitBlock u = transform(z);
        std::size_t base = 0;
        for (std::size_t i = 0; i < L; ++i) base += u[i] * fs[i] + z[i] * fs[2 * L + i];
        for (std::size_t c = 0; c < combos; ++c) {
            std::size_t rem = c, idx = base;
            cd a = amp0;
            for (std::size_t i = 0; i < L && a != cd(0); ++i) {
                std::size_t be = rem % dBE;
                rem /= dBE;
                a *= d.phi[z[i]][static_cast<Eigen::Index>(be)];
                idx += (be / d.dE) * fs[L + i] + (be % d.dE) * fs[3 * L + i];
            }
            if (a != cd(0)) s.Psi3.amp[static_cast<Eigen::Index>(idx)] = a;
        }
    }
    return s;
}

// ---- entropies --------------------------------------------------------------

struct EntropyReport {
    double H_AB = 0;        ///< H(A|B) of psi
    double H_ZA_B = 0;      ///< H(Z^A|B) of psi
    double H_XA_BC = 0;     ///< H(X^A|BC) of psi'
    double H_Zbarc_E = 0;   ///< H(Z^{frozen}|E^L) of the L-fold state
    double coh_inf_block = 0;  ///< -H(A-bar | B^L C^L) of the L-fold state
};

inline EntropyReport entropy_report(const StateBundle& s) {
    EntropyReport r;
    r.H_AB = cond_entropy(s.psi, {0}, {1});
    r.H_ZA_B = cond_entropy_measured(s.psi, {0}, Basis::Z, {1});
    r.H_XA_BC = cond_entropy_measured(s.psi_prime, {0}, Basis::X, {1, 2});
    const auto BC = concat(s.B(), s.C());
    r.H_Zbarc_E = s.frozen.size() ? cond_entropy_measured(s.Psi3, s.A_bar_c(), Basis::Z, s.E()) : 0.0;
    r.coh_inf_block = -cond_entropy(s.Psi3, s.A_bar(), BC);
    return r;
}

inline nlohmann::json to_json(const EntropyReport& r) {
    return {{"H_AB", r.H_AB}, {"H_ZA_B", r.H_ZA_B}, {"H_XA_BC", r.H_XA_BC}, {"H_Zbarc_E", r.H_Zbarc_E}, {"coh_inf_block", r.coh_inf_block}};
}

struct CheckResult {
    std::string check;
    double residual = 0;
    double tolerance = 0;
    bool pass = false;
};

inline CheckResult make_check(std::string name, double residual, double tol) { return {std::move(name), residual, tol, std::fabs(residual) <= tol}; }

inline nlohmann::json ledger_json(const std::vector<CheckResult>& v) {
    nlohmann::json j = nlohmann::json::array();
    for (auto& c : v) j.push_back({{"check", c.check}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    return j;
}

inline bool all_pass(const std::vector<CheckResult>& v) {
    return std::all_of(v.begin(), v.end(), [](const CheckResult& c) { return c.pass; });
}

/// Classical reduction of H(X^{A-bar} | B^L C^L): uniform X-basis values x seen
/// through the phase flips, with the amplitude pattern (or erasure flags) as side
/// information, and W the transposed transform of x.
inline double classical_phase_entropy(const ChannelModel& ch, std::size_t L, const FrozenSpec& frozen) {
    require_pow2(L, "classical_phase_entropy");
    frozen.validate(L);
    // per-position outcomes: probability, side symbol, effect (0 clean, 1 flip, 2 erased)
    struct Outcome {
        double p;
        int side, effect;
    };
    std::vector<Outcome> outs;
    if (auto* q = std::get_if<PauliParams>(&ch)) {
        const double c = amplitude_view(*q).crossover;
        const ConditionalPhaseView v = phase_view(*q);
        outs = {{(1 - c) * (1 - v.crossover_given_ex0), 0, 0},
                {(1 - c) * v.crossover_given_ex0, 0, 1},
                {c * (1 - v.crossover_given_ex1), 1, 0},
                {c * v.crossover_given_ex1, 1, 1}};
    } else if (auto* e = std::get_if<ErasureParams>(&ch)) {
        outs = {{1 - e->p, 0, 0}, {e->p, 1, 2}};
    } else {
        throw std::invalid_argument("classical_phase_entropy: quantum channel required");
    }
    auto free = complement(frozen.indices, L);
    std::map<std::vector<int>, double> joint, cond;
    const std::size_t nout = outs.size();
    std::size_t patterns = 1;
    for (std::size_t i = 0; i < L; ++i) patterns *= nout;
    BitBlock x(L), w(L);
    for (std::size_t xi = 0; xi < (std::size_t{1} << L); ++xi) {
        for (std::size_t i = 0; i < L; ++i) x[i] = (xi >> i) & 1u;
        // phase layer runs on reversed labels
        std::reverse_copy(x.begin(), x.end(), w.begin());
        transform_inplace(w.data(), L);
        std::vector<int> wbar;
        for (auto l : free) wbar.push_back(w[L - 1 - l]);
        for (std::size_t pi = 0; pi < patterns; ++pi) {
            std::size_t rem = pi;
            double p = std::pow(0.5, static_cast<double>(L));
            std::vector<int> obs;
            for (std::size_t i = 0; i < L; ++i) {
                const Outcome& o = outs[rem % nout];
                rem /= nout;
                p *= o.p;
                obs.push_back(o.side);
                obs.push_back(o.effect == 2 ? 2 : (x[i] ^ o.effect));
            }
            if (p == 0) continue;
            cond[obs] += p;
            std::vector<int> key = obs;
            key.insert(key.end(), wbar.begin(), wbar.end());
            joint[key] += p;
        }
    }
    double h = 0;
    for (auto& [k, p] : joint) h -= detail::xlog2x(p);
    for (auto& [k, p] : cond) h += detail::xlog2x(p);
    return h;
}

/// The uncertainty-relation and rate identities, each as a named residual.
inline std::vector<CheckResult> identity_checks(const StateBundle& s, const ChannelModel& ch, double tol = 1e-9) {
    std::vector<CheckResult> out;
    const PureState& pp = s.psi_prime;  // registers A=0, B=1, C=2, E=3
    const double hx_bc = cond_entropy_measured(pp, {0}, Basis::X, {1, 2});
    const double hz_bc = cond_entropy_measured(pp, {0}, Basis::Z, {1, 2});
    const double ha_bc = cond_entropy(pp, {0}, {1, 2});
    out.push_back(make_check("psi_prime.copy_register_determines_Z", hz_bc, tol));
    out.push_back(make_check("uncertainty.two_party", hx_bc - (1.0 + ha_bc), tol));
    const double hz_e = cond_entropy_measured(pp, {0}, Basis::Z, {3});
    out.push_back(make_check("uncertainty.tripartite", hz_e + hx_bc - 1.0, tol));
    EntropyReport r = entropy_report(s);
    out.push_back(make_check("rate_chain.one_minus_HZ_minus_HX_equals_minus_HAB", 1.0 - r.H_ZA_B - r.H_XA_BC + r.H_AB, tol));
    const double L = static_cast<double>(s.L);
    out.push_back(make_check("rate_identity.block_coherent_info", r.coh_inf_block - (-L * r.H_AB + L * r.H_ZA_B - r.H_Zbarc_E), tol));
    // classical reduction of the phase layer
    const auto BC = concat(s.B(), s.C());
    const double hq = cond_entropy_measured(s.Psi3, s.A_bar(), Basis::X, BC);
    out.push_back(make_check("classical_reduction.phase_entropy", hq - classical_phase_entropy(ch, s.L, s.frozen), tol));
    return out;
}

// ---- classical-quantum pairs ----------------------------------------------

struct CqPair {
    double p0 = 0.5, p1 = 0.5;
    Mat rho0, rho1;
};

inline Mat psd_sqrt(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.adjoint()));
    // eigenvalues at roundoff level are zero; their square roots would not be
    const double cut = 1e-13 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::VectorXd l = es.eigenvalues().unaryExpr([cut](double v) { return v > cut ? std::sqrt(v) : 0.0; });
    return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().adjoint();
}

inline double trace_norm(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues().sum();
}

/// ||sqrt(a) sqrt(b)||_1 for positive (possibly unnormalized) a, b.
inline double overlap(const Mat& a, const Mat& b) { return trace_norm(psd_sqrt(a) * psd_sqrt(b)); }

inline Mat kron(const Mat& a, const Mat& b) {
    Mat k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

struct CqMetrics {
    double Z = 0, Pe = 0, H = 0;
    double Z_plus = 0, Z_minus = 0;
    double fidelity01 = 0, fidelity10 = 0;
};

inline CqMetrics cq_metrics(const CqPair& c) {
    CqMetrics m;
    const Mat a0 = c.p0 * c.rho0, a1 = c.p1 * c.rho1;
    m.Z = 2 * overlap(a0, a1);
    m.fidelity01 = overlap(c.rho0, c.rho1);
    m.fidelity10 = overlap(c.rho1, c.rho0);
    m.Pe = 0.5 - 0.5 * trace_norm(a0 - a1);
    m.H = binary_entropy(c.p0) + c.p0 * entropy_of_operator(c.rho0) + c.p1 * entropy_of_operator(c.rho1) - entropy_of_operator(a0 + a1);
    const Mat* rho[2] = {&c.rho0, &c.rho1};
    const double p[2] = {c.p0, c.p1};
    // U1 = X1 ^ X2, U2 = X2; the pair (B1, B2) holds rho_{u1^u2} (x) rho_{u2}
    Mat A0 = Mat::Zero(4, 4), A1 = Mat::Zero(4, 4);
    for (int u2 = 0; u2 < 2; ++u2) {
        A0 += p[u2] * p[u2] * kron(*rho[u2], *rho[u2]);
        A1 += p[u2 ^ 1] * p[u2] * kron(*rho[u2 ^ 1], *rho[u2]);
    }
    m.Z_minus = 2 * overlap(A0, A1);
    // given U1 = u1 the two hypotheses for U2 are block diagonal in u1
    double zp = 0;
    for (int u1 = 0; u1 < 2; ++u1)
        zp += overlap(p[u1] * p[0] * kron(*rho[u1], *rho[0]), p[u1 ^ 1] * p[1] * kron(*rho[u1 ^ 1], *rho[1]));
    m.Z_plus = 2 * zp;
    return m;
}

/// Random qubit density matrix: pure with probability 1/4, otherwise Ginibre.
inline Mat random_qubit_state(Rng& rng) {
    auto normal = [&] {
        double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
        return std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2);
    };
    const int cols = rng.below(4) == 0 ? 1 : 2;
    Mat g(2, cols);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = cd(normal(), normal());
    Mat r = g * g.adjoint();
    return r / r.trace().real();
}

inline CqPair random_cq_pair(Rng& rng) {
    CqPair c;
    c.p0 = 0.02 + 0.96 * rng.uniform();
    c.p1 = 1 - c.p0;
    c.rho0 = random_qubit_state(rng);
    c.rho1 = random_qubit_state(rng);
    return c;
}

/// One polarization step and the error-probability / entropy sandwiches on
/// n random pairs; each check reports its worst violation.
inline std::vector<CheckResult> cq_polarization_check(std::size_t n, std::uint64_t seed, double tol = 1e-9) {
    if (n < 1) throw std::invalid_argument("cq_polarization_check: need at least one pair");
    Rng rng(seed);
    const char* names[] = {"z_plus_equals_z_squared",
                           "z_minus_at_most_2z_minus_z2",
                           "two_pe_at_most_z",
                           "z_at_most_sqrt_1_minus_(1-2pe)^2",
                           "entropy_lower_bound_in_z",
                           "entropy_upper_bound_in_z",
                           "entropy_lower_bound_in_pe",
                           "entropy_upper_bound_in_pe",
                           "fidelity_symmetry"};
    std::vector<double> worst(9, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        CqPair c = random_cq_pair(rng);
        CqMetrics m = cq_metrics(c);
        // violation amounts: positive means the inequality fails
        double v[9] = {std::fabs(m.Z_plus - m.Z * m.Z),
                       m.Z_minus - (2 * m.Z - m.Z * m.Z),
                       2 * m.Pe - m.Z,
                       m.Z - std::sqrt(std::max(0.0, 1 - (1 - 2 * m.Pe) * (1 - 2 * m.Pe))),
                       (1 - std::log2(1 + std::sqrt(std::max(0.0, 1 - m.Z * m.Z)))) - m.H,
                       m.H - binary_entropy(std::min(0.5, m.Z / 2)),
                       -std::log2(1 - m.Pe) - m.H,
                       m.H - binary_entropy(m.Pe),
                       std::fabs(m.fidelity01 - m.fidelity10)};
        for (int k = 0; k < 9; ++k) worst[k] = std::max(worst[k], v[k]);
    }
    std::vector<CheckResult> out;
    for (int k = 0; k < 9; ++k) out.push_back({names[k], worst[k], k == 8 ? 1e-10 : tol, worst[k] <= (k == 8 ? 1e-10 : tol)});
    return out;
}

}  // namespace polarforge::qprobe
