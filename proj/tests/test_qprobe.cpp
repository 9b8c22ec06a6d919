#include <gtest/gtest.h>

#include <cmath>

#include <polarforge/qprobe.hpp>

using namespace polarforge;
using namespace polarforge::qprobe;

namespace {

PureState bell() {
    PureState s;
    s.dims = {2, 2};
    s.amp = Vec::Zero(4);
    s.amp[0] = s.amp[3] = 1 / std::sqrt(2.0);
    return s;
}

PureState product00() {
    PureState s;
    s.dims = {2, 2};
    s.amp = Vec::Zero(4);
    s.amp[0] = 1;
    return s;
}

FrozenSpec frozen_of(std::vector<std::uint32_t> idx) {
    FrozenSpec f;
    f.indices = std::move(idx);
    f.values.assign(f.indices.size(), 0);
    return f;
}

PauliParams random_pauli(Rng& rng) {
    double a = rng.uniform() + 0.5, b = rng.uniform() * 0.3, c = rng.uniform() * 0.3, d = rng.uniform() * 0.3, s = a + b + c + d;
    return PauliParams{a / s, b / s, c / s, 1.0 - (a + b + c) / s};
}

}  // namespace

TEST(Entropy, TrivialStates) {
    EXPECT_NEAR(entropy(product00(), {0}), 0.0, 1e-12);
    EXPECT_NEAR(entropy(bell(), {0}), 1.0, 1e-12);
    EXPECT_NEAR(cond_entropy(bell(), {0}, {1}), -1.0, 1e-12);
    EXPECT_NEAR(cond_entropy(product00(), {0}, {1}), 0.0, 1e-12);
    EXPECT_NEAR(cond_entropy_measured(bell(), {0}, Basis::Z, {1}), 0.0, 1e-12);
    EXPECT_NEAR(cond_entropy_measured(bell(), {0}, Basis::X, {1}), 0.0, 1e-12);
    EXPECT_NEAR(cond_entropy_measured(product00(), {0}, Basis::X, {1}), 1.0, 1e-12);
}

TEST(Entropy, OperatorEntropy) {
    Mat m = Mat::Identity(2, 2) / 2.0;
    EXPECT_NEAR(entropy_of_operator(m), 1.0, 1e-12);
    Mat bad(2, 2);
    bad << 0.5, 0.3, 0.0, 0.5;
    EXPECT_THROW(entropy_of_operator(bad), std::logic_error);
}

TEST(Entropy, ReducedStatesArePsdWithUnitTrace) {
    auto s = build_states(PauliParams::depolarizing(0.2), 2, frozen_of({0}));
    for (std::vector<std::size_t> keep : {std::vector<std::size_t>{0}, {1, 2}, {0, 3, 5}, {7}}) {
        Mat r = reduced(s.Psi3, keep);
        EXPECT_NEAR(r.trace().real(), 1.0, 1e-12);
        EXPECT_LE((r - r.adjoint()).norm(), 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat> es(r);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
    EXPECT_THROW(split_matrix(s.Psi3, {1, 1}), std::invalid_argument);
}

TEST(BuildStates, NormalizedAndSized) {
    for (const ChannelModel& ch : {ChannelModel{PauliParams::depolarizing(0.1)}, ChannelModel{ErasureParams{0.2}}}) {
        auto s = build_states(ch, 2, frozen_of({1}));
        EXPECT_NEAR(s.psi.norm(), 1.0, 1e-12);
        EXPECT_NEAR(s.psi_prime.norm(), 1.0, 1e-12);
        EXPECT_NEAR(s.Psi3.norm(), 1.0, 1e-12);
        EXPECT_EQ(s.Psi3.registers(), 8u);
        EXPECT_EQ(s.A_bar(), (std::vector<std::size_t>{0}));
        EXPECT_EQ(s.A_bar_c(), (std::vector<std::size_t>{1}));
    }
}

TEST(BuildStates, RejectsUnsupportedLengths) {
    EXPECT_THROW(build_states(PauliParams{}, 3, FrozenSpec{}), std::invalid_argument);
    EXPECT_THROW(build_states(PauliParams{}, 8, FrozenSpec{}), std::invalid_argument);
    EXPECT_THROW(build_states(PauliParams{}, 2, frozen_of({2})), std::out_of_range);
}

TEST(EntropyReport, IdentityChannel) {
    for (std::size_t L : {1u, 2u, 4u})
        for (std::size_t f = 0; f <= L; ++f) {
            std::vector<std::uint32_t> idx;
            for (std::uint32_t i = 0; i < f; ++i) idx.push_back(i);
            auto r = entropy_report(build_states(PauliParams{}, L, frozen_of(idx)));
            EXPECT_NEAR(r.H_AB, -1.0, 1e-9);
            EXPECT_NEAR(r.H_ZA_B, 0.0, 1e-9);
            EXPECT_NEAR(r.H_XA_BC, 0.0, 1e-9);
            EXPECT_NEAR(r.coh_inf_block, static_cast<double>(L - f), 1e-9) << "L=" << L << " frozen=" << f;
            EXPECT_NEAR(r.H_Zbarc_E, static_cast<double>(f), 1e-9);
        }
}

TEST(EntropyReport, DephasingKeepsAmplitudeCertain) {
    auto r = entropy_report(build_states(PauliParams::dephasing(0.2), 1, FrozenSpec{}));
    EXPECT_NEAR(r.H_ZA_B, 0.0, 1e-9);
}

TEST(EntropyReport, PauliSingleUseMatchesClosedForm) {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        PauliParams p = t == 0 ? PauliParams::depolarizing(0.1) : random_pauli(rng);
        auto m = closed_form_metrics(p);
        auto r = entropy_report(build_states(p, 1, FrozenSpec{}));
        EXPECT_NEAR(r.H_AB, -m.coherent_info, 1e-9);
        EXPECT_NEAR(r.H_ZA_B, m.h_amp, 1e-9);
        EXPECT_NEAR(r.H_XA_BC, m.h_phase_given_amp, 1e-9);
    }
}

TEST(EntropyReport, ErasureSingleUse) {
    for (double p : {0.0, 0.1, 0.3, 0.5}) {
        auto r = entropy_report(build_states(ErasureParams{p}, 1, FrozenSpec{}));
        EXPECT_NEAR(r.H_AB, -(1 - 2 * p), 1e-9);
        EXPECT_NEAR(r.H_AB, -closed_form_metrics(ErasureParams{p}).coherent_info, 1e-9);
        EXPECT_NEAR(r.H_ZA_B, p, 1e-9);
    }
}

TEST(IdentityChecks, PassOnFixedCases) {
    for (const ChannelModel& ch : {ChannelModel{PauliParams::depolarizing(0.1)}, ChannelModel{ErasureParams{0.25}}})
        for (auto fr : {std::vector<std::uint32_t>{}, {0}, {0, 1}}) {
            auto checks = identity_checks(build_states(ch, 2, frozen_of(fr)), ch);
            ASSERT_EQ(checks.size(), 6u);
            for (auto& c : checks) EXPECT_TRUE(c.pass) << c.check << " residual " << c.residual;
        }
}

TEST(IdentityChecks, PassOnRandomTwoUseCases) {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        ChannelModel ch = rng.bit() ? ChannelModel{random_pauli(rng)} : ChannelModel{ErasureParams{rng.uniform()}};
        std::vector<std::uint32_t> fr;
        for (std::uint32_t i = 0; i < 2; ++i)
            if (rng.bit()) fr.push_back(i);
        auto s = build_states(ch, 2, frozen_of(fr));
        for (auto& c : identity_checks(s, ch)) EXPECT_TRUE(c.pass) << c.check << " residual " << c.residual;
        double h = entropy_report(s).H_AB;
        EXPECT_LE(std::fabs(h), 1.0 + 1e-9);
    }
}

TEST(IdentityChecks, PassAtFourUses) {
    const ChannelModel ch = PauliParams::depolarizing(0.05);
    auto checks = identity_checks(build_states(ch, 4, frozen_of({0, 2})), ch);
    EXPECT_TRUE(all_pass(checks));
    auto j = ledger_json(checks);
    EXPECT_EQ(j.size(), 6u);
}

TEST(CqMetrics, IdenticalStates) {
    CqPair c;
    c.p0 = 0.3;
    c.p1 = 0.7;
    c.rho0 = c.rho1 = Mat::Identity(2, 2) / 2.0;
    auto m = cq_metrics(c);
    EXPECT_NEAR(m.Z, 2 * std::sqrt(0.21), 1e-9);
    EXPECT_NEAR(m.Pe, 0.3, 1e-9);
    EXPECT_NEAR(m.H, binary_entropy(0.3), 1e-9);
}

TEST(CqMetrics, OrthogonalPureStates) {
    CqPair c;
    c.p0 = c.p1 = 0.5;
    c.rho0 = Mat::Zero(2, 2);
    c.rho1 = Mat::Zero(2, 2);
    c.rho0(0, 0) = 1;
    c.rho1(1, 1) = 1;
    auto m = cq_metrics(c);
    EXPECT_NEAR(m.Z, 0.0, 1e-9);
    EXPECT_NEAR(m.Pe, 0.0, 1e-9);
    EXPECT_NEAR(m.H, 0.0, 1e-9);
    EXPECT_NEAR(m.Z_plus, 0.0, 1e-9);
    EXPECT_NEAR(m.Z_minus, 0.0, 1e-9);
}

TEST(CqPolarization, RandomPairsSatisfyAllRelations) {
    auto checks = cq_polarization_check(1000, 3);
    ASSERT_EQ(checks.size(), 9u);
    for (auto& c : checks) EXPECT_TRUE(c.pass) << c.check << " worst " << c.residual;
    EXPECT_THROW(cq_polarization_check(0, 1), std::invalid_argument);
}
