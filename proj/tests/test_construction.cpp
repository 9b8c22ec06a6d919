#include <gtest/gtest.h>

#include <cmath>

#include <polarforge/construction.hpp>

using namespace polarforge;

namespace {

/// Exact erasure probability of every synthetic BEC channel: enumerate erasure
/// patterns and ask the decoder whether position i is determined by y and u^{i-1}.
std::vector<double> bec_oracle(double p, std::size_t n) {
    std::vector<double> z(n, 0.0);
    ScDecoder dec(n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        EvidenceVector ev(n);
        double prob = 1;
        for (std::size_t j = 0; j < n; ++j) {
            bool erased = (mask >> j) & 1u;
            ev[j] = erased ? 0.0 : kLlrClamp;  // the all-zero codeword
            prob *= erased ? p : 1 - p;
        }
        dec.reset(ev);
        for (std::size_t i = 0; i < n; ++i) {
            if (dec.step_llr() == 0.0) z[i] += prob;
            dec.commit(0);
        }
    }
    return z;
}

double unpolarized_fraction(const ReliabilityProfile& p, double delta) {
    std::size_t c = 0;
    for (double v : p.value) c += v > delta && v < 1 - delta;
    return static_cast<double>(c) / static_cast<double>(p.size());
}

}  // namespace

// ---- exact erasure profile -------------------------------------------------

TEST(BecProfile, Examples) {
    auto a = bec_profile(0.3, 2).value;
    EXPECT_NEAR(a[0], 0.51, 1e-15);
    EXPECT_NEAR(a[1], 0.09, 1e-15);
    auto b = bec_profile(0.3, 4).value;
    const double want[] = {0.7599, 0.2601, 0.1719, 0.0081};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(b[i], want[i], 1e-12);
    EXPECT_EQ(bec_profile(0.0, 16).value, std::vector<double>(16, 0.0));
    EXPECT_EQ(bec_profile(1.0, 16).value, std::vector<double>(16, 1.0));
    EXPECT_EQ(bec_profile(0.3, 1).value, std::vector<double>{0.3});
}

TEST(BecProfile, MatchesErasureEnumeration) {
    for (double p : {0.1, 0.3, 0.5, 0.8})
        for (std::size_t n : {1u, 2u, 4u, 8u}) {
            auto z = bec_profile(p, n).value;
            auto o = bec_oracle(p, n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(z[i], o[i], 1e-12) << "p=" << p << " n=" << n << " i=" << i;
        }
}

TEST(BecProfile, MeanIsPreserved) {
    for (double p : {0.2, 0.5, 0.7})
        for (std::size_t n = 2; n <= 4096; n *= 2) {
            auto z = bec_profile(p, n).value;
            double s = 0;
            for (double v : z) s += v;
            EXPECT_NEAR(s / static_cast<double>(n), p, 1e-12);
        }
}

TEST(BecProfile, ChildrenOfEachParent) {
    auto parent = bec_profile(0.4, 64).value, child = bec_profile(0.4, 128).value;
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_NEAR(child[2 * i], 2 * parent[i] - parent[i] * parent[i], 1e-15);
        EXPECT_NEAR(child[2 * i + 1], parent[i] * parent[i], 1e-15);
    }
}

TEST(BecProfile, PolarizesWithLength) {
    double prev = 2;
    for (std::size_t n = 256; n <= 16384; n *= 2) {
        double f = unpolarized_fraction(bec_profile(0.5, n), 1e-3);
        EXPECT_LT(f, prev) << "n=" << n;
        prev = f;
    }
}

TEST(BecProfile, RejectsBadInput) {
    EXPECT_THROW(bec_profile(1.2, 8), std::invalid_argument);
    EXPECT_THROW(bec_profile(0.3, 12), std::invalid_argument);
}

// ---- Monte Carlo profile ---------------------------------------------------

TEST(McProfile, NoiselessChannelIsPerfect) {
    auto p = mc_profile(BinarySymmetricView{0.0, 0.5}, 64, 1000, 1);
    for (double v : p.value) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(p.trials, 1000u);
}

TEST(McProfile, ErasureAgreesWithExactProfile) {
    const std::size_t n = 64, trials = 20000;
    auto mc = mc_profile(BinaryErasureView{0.3}, n, trials, 2);
    auto ex = bec_profile(0.3, n);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(mc.value[i], ex.value[i], 4 * std::sqrt(ex.value[i] * (1 - ex.value[i]) / trials) + 1e-12) << "i=" << i;
}

TEST(McProfile, SeedsAgreeWithinError) {
    const std::size_t n = 256, trials = 10000;
    auto a = mc_profile(BinarySymmetricView{0.11, 0.5}, n, trials, 3);
    auto b = mc_profile(BinarySymmetricView{0.11, 0.5}, n, trials, 4);
    std::size_t outside = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = std::hypot(a.std_err[i], b.std_err[i]);
        outside += std::fabs(a.value[i] - b.value[i]) > 3 * s + 1e-12;
    }
    EXPECT_LE(outside, 6u);  // about 0.3% of 256 positions expected
}

TEST(McProfile, RequiresEnoughTrials) { EXPECT_THROW(mc_profile(BinaryErasureView{0.3}, 8, 10, 1), std::invalid_argument); }

// ---- selection -------------------------------------------------------------

TEST(SelectFrozen, Examples) {
    ReliabilityProfile p{{0.5, 0.1, 0.001, 0.0}, {0, 0, 0, 0}, "x", 0};
    EXPECT_EQ(select_frozen(p, SelectCriterion::epsilon(0.01)).indices, (std::vector<std::uint32_t>{0, 1}));
    EXPECT_EQ(select_frozen(p, SelectCriterion::rate(0.5)).indices, (std::vector<std::uint32_t>{0, 1}));
    EXPECT_EQ(select_frozen(p, SelectCriterion::count(3)).indices, (std::vector<std::uint32_t>{0, 1, 2}));
    EXPECT_EQ(select_frozen(p, SelectCriterion::epsilon(1.0)).indices.size(), 0u);
    EXPECT_EQ(select_frozen(p, SelectCriterion::rate(0.0)).indices.size(), 4u);
    EXPECT_EQ(select_frozen(p, SelectCriterion::count(3)).values, BitBlock(3, 0));
}

TEST(SelectFrozen, TiesGoToLowerIndex) {
    ReliabilityProfile p{{0.2, 0.3, 0.2, 0.2}, {0, 0, 0, 0}, "x", 0};
    EXPECT_EQ(select_frozen(p, SelectCriterion::count(2)).indices, (std::vector<std::uint32_t>{0, 1}));
    EXPECT_EQ(select_frozen(p, SelectCriterion::count(3)).indices, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(SelectFrozen, DeterministicAndValidated) {
    auto prof = bec_profile(0.5, 1024);
    EXPECT_EQ(select_frozen(prof, SelectCriterion::rate(0.3)).indices, select_frozen(prof, SelectCriterion::rate(0.3)).indices);
    EXPECT_EQ(select_frozen(prof, SelectCriterion::rate(0.3)).size(), 717u);
    ReliabilityProfile bad{{0.5, 1.5}, {0, 0}, "x", 0};
    EXPECT_THROW(select_frozen(bad, SelectCriterion::epsilon(0.1)), std::invalid_argument);
    EXPECT_THROW(select_frozen(prof, SelectCriterion::rate(1.5)), std::invalid_argument);
    EXPECT_THROW(select_frozen(prof, SelectCriterion::count(2000)), std::invalid_argument);
}

TEST(SelectFrozenPooled, CountSpansProfiles) {
    std::vector<ReliabilityProfile> ps{{{0.4, 0.01}, {0, 0}, "x", 0}, {{0.2, 0.3}, {0, 0}, "x", 0}};
    auto f = select_frozen_pooled(ps, SelectCriterion::count(3));
    EXPECT_EQ(f[0].indices, (std::vector<std::uint32_t>{0}));
    EXPECT_EQ(f[1].indices, (std::vector<std::uint32_t>{0, 1}));
}

// ---- multilevel profiles ---------------------------------------------------

TEST(MultilevelProfile, NoiselessChannelIsPerfect) {
    ConcatCode c;
    c.L = 8;
    c.M = 16;
    c.channel = PauliParams{};
    c.level_order = default_level_order({}, 8, true);
    MultilevelOptions o;
    o.trials = 500;
    auto pr = multilevel_profile(c.channel, plan_of(c), o);
    ASSERT_EQ(pr.size(), 8u);
    for (auto& p : pr)
        for (double v : p.value) EXPECT_EQ(v, 0.0);
}

TEST(MultilevelProfile, DephasingMatchesFlatProfile) {
    // with no amplitude noise the two layers behave as one length-L*M code on BSC(p_z)
    const std::size_t L = 4, M = 64, trials = 20000;
    ConcatCode c;
    c.L = L;
    c.M = M;
    c.channel = PauliParams::dephasing(0.1);
    c.level_order = default_level_order({}, L, true);
    MultilevelOptions o;
    o.trials = trials;
    o.seed = 3;
    o.mode = PhaseMode::Decide;
    auto pr = multilevel_profile(c.channel, plan_of(c), o);
    auto flat = mc_profile(BinarySymmetricView{0.1, 0.5}, L * M, trials, 5);
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t i = 0; i < M; ++i) {
            double a = pr[j].value[i], b = flat.value[j * M + i];
            double s = std::hypot(pr[j].std_err[i], flat.std_err[j * M + i]);
            EXPECT_NEAR(a, b, 4 * s + 1e-12) << "level " << j << " index " << i;
        }
}

// ---- building codes --------------------------------------------------------

TEST(BuildConcatCode, NoiselessKeepsEverything) {
    BuildOptions o;
    o.trials = 200;
    auto c = build_concat_code(PauliParams{}, 16, 16, o);
    EXPECT_EQ(c.inner_frozen.size(), 0u);
    EXPECT_EQ(c.outer_frozen_total(), 0u);
    EXPECT_DOUBLE_EQ(c.rate(), 1.0);
}

TEST(BuildConcatCode, ErasureInnerFractionNearHalf) {
    BuildOptions o;
    o.inner = SelectCriterion::epsilon(0.1);
    o.trials = 200;
    auto c = build_concat_code(ErasureParams{0.5}, 1024, 2, o);
    double f = static_cast<double>(c.inner_frozen.size()) / 1024.0;
    EXPECT_GE(f, 0.4);
    EXPECT_LE(f, 0.6);
}

TEST(BuildConcatCode, JsonRoundTripAndRateAccounting) {
    BuildOptions o;
    o.inner = SelectCriterion::epsilon(1e-2);
    o.outer = SelectCriterion::epsilon(1e-2);
    o.trials = 200;
    o.seed = 9;
    o.profile_mode = PhaseMode::Decide;
    auto c = build_concat_code(PauliParams::depolarizing(0.05), 256, 256, o);
    auto back = code_from_json(code_to_json(c));
    EXPECT_EQ(code_to_json(back), code_to_json(c));
    EXPECT_EQ(back.inner_frozen.indices, c.inner_frozen.indices);
    EXPECT_EQ(back.level_order, c.level_order);
    EXPECT_EQ(c.message_length() + c.payload_length(), c.N());
    EXPECT_DOUBLE_EQ(c.rate(), static_cast<double>(c.message_length()) / static_cast<double>(c.N()));
    EXPECT_EQ(c.outer_frozen.size(), c.K());
}

TEST(BuildConcatCode, OverallRateHitsTarget) {
    BuildOptions o;
    o.inner = SelectCriterion::rate(0.75);
    o.overall_rate = 0.375;
    o.trials = 500;
    auto c = build_concat_code(BscParams{0.05}, 16, 16, o);
    EXPECT_EQ(c.K(), 12u);
    EXPECT_EQ(c.message_length(), 96u);
}

TEST(BuildConcatCode, DepolarizingRateBelowAmplitudeBound) {
    BuildOptions o;
    o.inner = SelectCriterion::epsilon(1e-2);
    o.outer = SelectCriterion::epsilon(1e-2);
    o.trials = 1000;
    o.seed = 4;
    o.profile_mode = PhaseMode::Decide;
    const PauliParams ch = PauliParams::depolarizing(0.05);
    auto c = build_concat_code(ch, 64, 256, o);
    EXPECT_LE(static_cast<double>(c.K()) / 64.0, 1 - closed_form_metrics(ch).h_amp + 0.05);
    EXPECT_LE(c.rate(), static_cast<double>(c.K()) / 64.0);
}

TEST(BuildConcatCode, RejectsBadInput) {
    BuildOptions o;
    o.trials = 200;
    EXPECT_THROW(build_concat_code(BscParams{0.1}, 12, 16, o), std::invalid_argument);
    EXPECT_THROW(build_concat_code(BscParams{1.5}, 16, 16, o), std::invalid_argument);
    nlohmann::json bad = code_to_json(build_concat_code(BscParams{0.1}, 8, 8, o));
    bad["L"] = 6;
    EXPECT_THROW(code_from_json(bad), std::invalid_argument);
}
