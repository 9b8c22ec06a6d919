#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <polarforge/concat.hpp>

using namespace polarforge;

namespace {

BitBlock random_bits(std::size_t n, Rng& rng) {
    BitBlock b(n);
    for (auto& v : b) v = rng.bit();
    return b;
}

EvidenceVector perfect_evidence(const BitBlock& x) {
    EvidenceVector ev(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) ev[j] = x[j] ? -kLlrClamp : kLlrClamp;
    return ev;
}

/// L=4, M=2 bsc code: inner labels {0,1} frozen, levels at labels 2 and 3,
/// outer index 0 frozen on level 0.
ConcatCode tiny_code() {
    ConcatCode c;
    c.L = 4;
    c.M = 2;
    c.channel = BscParams{0.1};
    c.inner_frozen = FrozenSpec{{0, 1}, {0, 0}};
    c.level_order = {2, 3};
    c.outer_frozen = {FrozenSpec{{0}, {0}}, FrozenSpec{}};
    c.validate();
    return c;
}

ConcatCode built(const ChannelModel& ch, std::size_t L, std::size_t M, double e1, double e2, std::uint64_t seed = 1) {
    BuildOptions o;
    o.inner = SelectCriterion::epsilon(e1);
    o.outer = SelectCriterion::epsilon(e2);
    o.trials = 2000;
    o.seed = seed;
    o.profile_mode = PhaseMode::Decide;
    return build_concat_code(ch, L, M, o);
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / ("pf_concat_" + name); }

}  // namespace

// ---- compression layout ----------------------------------------------------

TEST(ConcatCompress, ZeroSourceGivesZeroPayload) {
    auto c = built(BscParams{0.1}, 16, 16, 1e-2, 1e-2);
    auto p = concat_compress(BitBlock(c.N(), 0), c);
    EXPECT_EQ(p.total_bits(), c.payload_length());
    EXPECT_EQ(weight(flatten(p)), 0u);
}

TEST(ConcatCompress, NothingFrozenGivesEmptyPayload) {
    BuildOptions o;
    o.trials = 200;
    auto c = build_concat_code(PauliParams{}, 8, 8, o);
    Rng rng(1);
    EXPECT_EQ(concat_compress(random_bits(64, rng), c).total_bits(), 0u);
}

TEST(ConcatCompress, HandComputedLayout) {
    const ConcatCode c = tiny_code();
    for (std::size_t xv = 0; xv < 256; ++xv) {
        BitBlock x(8);
        for (std::size_t k = 0; k < 8; ++k) x[k] = (xv >> k) & 1u;
        // block m holds x[4m..4m+3]; u = G4 x with rows 1111, 0101, 0011, 0001
        auto u = [&](std::size_t m, int r) -> std::uint8_t {
            const std::uint8_t* b = x.data() + 4 * m;
            switch (r) {
                case 0: return b[0] ^ b[1] ^ b[2] ^ b[3];
                case 1: return b[1] ^ b[3];
                case 2: return b[2] ^ b[3];
                default: return b[3];
            }
        };
        auto p = concat_compress(x, c);
        ASSERT_EQ(p.inner_bits.size(), 2u);
        for (std::size_t m = 0; m < 2; ++m) EXPECT_EQ(p.inner_bits[m], (BitBlock{u(m, 0), u(m, 1)}));
        // level 0 is label 2; its outer transform has w0 = v0 ^ v1
        EXPECT_EQ(p.outer_bits[0], (BitBlock{static_cast<std::uint8_t>(u(0, 2) ^ u(1, 2))}));
        EXPECT_TRUE(p.outer_bits[1].empty());
    }
}

TEST(ConcatCompress, RejectsWrongLength) {
    EXPECT_THROW(concat_compress(BitBlock(7, 0), tiny_code()), std::invalid_argument);
}

// ---- decompression ---------------------------------------------------------

TEST(ConcatDecompress, PerfectEvidenceRoundTrip) {
    for (const ChannelModel& ch : {ChannelModel{BscParams{0.05}}, ChannelModel{PauliParams::depolarizing(0.05)}}) {
        auto c = built(ch, 32, 16, 1e-2, 1e-2);
        Rng rng(2);
        for (int t = 0; t < 1000; ++t) {
            BitBlock x = random_bits(c.N(), rng);
            auto r = concat_decompress(perfect_evidence(x), concat_compress(x, c), c);
            ASSERT_EQ(r.x_hat, x);
        }
    }
}

TEST(ConcatDecompress, TinyCodeNoisyRoundTripWithFullPayload) {
    // freezing every inner label makes the payload the whole source
    ConcatCode c;
    c.L = 4;
    c.M = 2;
    c.channel = BscParams{0.3};
    c.inner_frozen = FrozenSpec{{0, 1, 2, 3}, {0, 0, 0, 0}};
    c.validate();
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        BitBlock x = random_bits(8, rng);
        EvidenceVector ev(8);
        for (auto& e : ev) e = rng.uniform() * 8 - 4;
        EXPECT_EQ(concat_decompress(ev, concat_compress(x, c), c).x_hat, x);
    }
}

TEST(ConcatDecompress, ScheduleCommitsLevelsInOrder) {
    auto c = built(PauliParams::depolarizing(0.05), 16, 8, 1e-2, 1e-2);
    Rng rng(4);
    BitBlock x;
    EvidenceVector ev;
    draw_layer_source(c.channel, c.N(), 0.5, rng, x, ev);
    ScheduleLog log;
    DecodeOptions o;
    o.mode = PhaseMode::Decide;
    o.log = &log;
    concat_decompress(ev, concat_compress(x, c), c, o);
    ASSERT_EQ(log.events.size(), 2 * c.K() * c.M);
    std::map<std::uint32_t, std::size_t> commits_done;  // level -> commits seen
    for (auto& e : log.events) {
        if (e.kind == ScheduleLog::Event::Read) {
            for (std::uint32_t j = 0; j < e.level; ++j) EXPECT_EQ(commits_done[j], c.M) << "read of level " << e.level << " before level " << j << " finished";
            EXPECT_EQ(commits_done[e.level], 0u);
        } else {
            ++commits_done[e.level];
        }
    }
}

TEST(ConcatDecompress, OpsGrowAsNLogN) {
    std::vector<double> ratio;
    for (std::size_t n : {8u, 32u, 128u}) {
        auto c = built(BscParams{0.05}, n, n, 1e-2, 1e-2);
        Rng rng(5);
        BitBlock x = random_bits(c.N(), rng);
        OpCounts ops;
        DecodeOptions o;
        o.ops = &ops;
        concat_decompress(perfect_evidence(x), concat_compress(x, c), c, o);
        const double nn = static_cast<double>(c.N());
        ratio.push_back(static_cast<double>(ops.total()) / (nn * std::log2(nn)));
    }
    for (double r : ratio) {
        EXPECT_GT(r, ratio[0] / 2);
        EXPECT_LT(r, ratio[0] * 2);
    }
}

TEST(ConcatDecompress, RejectsMismatchedPayload) {
    const ConcatCode c = tiny_code();
    CompressedPayload p = concat_compress(BitBlock(8, 0), c);
    p.inner_bits[0].push_back(1);
    EXPECT_THROW(concat_decompress(EvidenceVector(8, 1.0), p, c), std::invalid_argument);
    EXPECT_THROW(concat_decompress(EvidenceVector(4, 1.0), concat_compress(BitBlock(8, 0), c), c), std::invalid_argument);
}

// ---- shaper ------------------------------------------------------------------

TEST(Shaper, ConditionalEntropiesFollowChainRule) {
    for (double p : {0.1, 0.25, 0.5})
        for (std::size_t L : {1u, 2u, 4u, 8u}) {
            auto h = exact_conditional_entropies(L, p);
            double s = 0;
            for (double v : h) {
                s += v;
                EXPECT_GE(v, -1e-12);
                EXPECT_LE(v, 1 + 1e-12);
            }
            EXPECT_NEAR(s, static_cast<double>(L) * shannon_entropy({p, 1 - p}), 1e-9);
        }
}

TEST(Shaper, ExtractInvertsShape) {
    auto spec = make_shaper_spec(16, 0.25, 0.1);
    ASSERT_GT(spec.K(), 0u);
    Rng rng(6);
    for (int t = 0; t < 500; ++t) {
        BitBlock b = random_bits(spec.K(), rng);
        EXPECT_EQ(extract(shape(b, spec, rng.next()), spec), b);
    }
}

TEST(Shaper, UniformSourceIsExact) {
    auto spec = make_shaper_spec(8, 0.5, 0.0);
    EXPECT_EQ(spec.K(), 8u);
    EXPECT_NEAR(exact_shaper_distance(spec), 0.0, 1e-12);
}

TEST(Shaper, HistogramMatchesExactDistance) {
    const std::size_t L = 4, draws = 400000;
    const double p = 0.25;
    auto spec = make_shaper_spec(L, p, 0.2);
    const double exact = exact_shaper_distance(spec);
    std::vector<double> hist(16, 0.0);
    Rng rng(7);
    for (std::size_t t = 0; t < draws; ++t) {
        BitBlock x = shape(random_bits(spec.K(), rng), spec, rng);
        std::size_t v = 0;
        for (std::size_t k = 0; k < L; ++k) v |= static_cast<std::size_t>(x[k]) << k;
        hist[v] += 1.0 / draws;
    }
    double tv = 0;
    for (std::size_t v = 0; v < 16; ++v) {
        double px = 1;
        for (std::size_t k = 0; k < L; ++k) px *= (v >> k) & 1u ? p : 1 - p;
        tv += std::fabs(hist[v] - px);
    }
    EXPECT_NEAR(tv / 2, exact, 0.01);
}

TEST(Shaper, RejectsBadSpec) {
    ShaperSpec s;
    s.L = 4;
    s.extraction_set = {1, 1};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    EXPECT_THROW(extract(BitBlock(8, 0), make_shaper_spec(4, 0.3, 0.1)), std::invalid_argument);
}

// ---- channel encoding --------------------------------------------------------

TEST(ChannelEncode, DisclosuresMatchCompressionOfCodeword) {
    for (const ChannelModel& ch : {ChannelModel{BscParams{0.05}}, ChannelModel{PauliParams::depolarizing(0.05)}}) {
        auto c = built(ch, 16, 32, 1e-2, 1e-2);
        Rng rng(8);
        for (int t = 0; t < 200; ++t) {
            BitBlock msg = random_bits(c.message_length(), rng);
            auto e = concat_channel_encode(msg, c, rng.next());
            auto p = concat_compress(e.x, c);
            EXPECT_EQ(p.inner_bits, e.disclosed.inner_bits);
            EXPECT_EQ(p.outer_bits, e.disclosed.outer_bits);
        }
    }
}

TEST(ChannelEncode, NoiselessRoundTrip) {
    auto c = built(BscParams{0.05}, 16, 32, 1e-2, 1e-2);
    Rng rng(9);
    for (int t = 0; t < 300; ++t) {
        BitBlock msg = random_bits(c.message_length(), rng);
        auto e = concat_channel_encode(msg, c, rng.next());
        EXPECT_EQ(concat_channel_decode(perfect_evidence(e.x), e.disclosed, c), msg);
    }
}

TEST(ChannelEncode, NothingFrozenIsABijection) {
    BuildOptions o;
    o.trials = 200;
    auto c = build_concat_code(PauliParams{}, 4, 2, o);
    ASSERT_EQ(c.message_length(), 8u);
    std::map<BitBlock, std::size_t> seen;
    for (std::size_t v = 0; v < 256; ++v) {
        BitBlock msg(8);
        for (std::size_t k = 0; k < 8; ++k) msg[k] = (v >> k) & 1u;
        seen[concat_channel_encode(msg, c, 1).x]++;
    }
    EXPECT_EQ(seen.size(), 256u);
}

TEST(ChannelEncode, BiasedSourceIsShaped) {
    // noiseless channel, no outer freezing: the free inner positions are exactly the extraction set
    const double p = 0.25, eps = 0.1;
    BuildOptions o;
    o.inner = SelectCriterion::epsilon(0.5);
    o.outer = SelectCriterion::epsilon(1.0);
    o.trials = 200;
    o.source_prior = p;
    o.shape_eps = eps;
    auto c = build_concat_code(BscParams{0.0}, 8, 1, o);
    const ShaperSpec spec = make_shaper_spec(8, p, eps);
    std::vector<std::uint32_t> free_pos;
    auto table = c.inner_frozen.lookup(8);
    for (std::uint32_t i = 0; i < 8; ++i)
        if (table[i] < 0) free_pos.push_back(i);
    auto ext = spec.extraction_set;
    std::sort(ext.begin(), ext.end());
    ASSERT_EQ(free_pos, ext);
    ASSERT_EQ(c.message_length(), spec.K());

    Rng rng(10);
    std::vector<double> hist(256, 0.0);
    const int draws = 1000000;
    for (int t = 0; t < draws; ++t) {
        auto e = concat_channel_encode(random_bits(c.message_length(), rng), c, rng.next());
        std::size_t v = 0;
        for (std::size_t k = 0; k < 8; ++k) v |= static_cast<std::size_t>(e.x[k]) << k;
        hist[v] += 1.0 / draws;
    }
    double tv = 0;
    for (std::size_t v = 0; v < 256; ++v) {
        const int w = __builtin_popcount(static_cast<unsigned>(v));
        tv += std::fabs(hist[v] - std::pow(p, w) * std::pow(1 - p, 8 - w));
    }
    tv /= 2;
    EXPECT_NEAR(tv, exact_shaper_distance(spec), 0.012);
    EXPECT_LE(tv, static_cast<double>(spec.K()) * std::sqrt(std::log(2.0) * eps / 2) + 0.01);
    EXPECT_EQ(c.construction["shape_eps"], eps);
}

TEST(ChannelEncode, RejectsWrongMessageLength) {
    auto c = built(BscParams{0.05}, 8, 8, 1e-2, 1e-2);
    EXPECT_THROW(concat_channel_encode(BitBlock(c.message_length() + 1, 0), c, 1), std::invalid_argument);
}

TEST(ChannelDecode, LongerOuterCodeHelps) {
    // same inner code and outer design target, twice the outer length
    auto err = [](std::size_t M) {
        auto c = built(BscParams{0.04}, 16, M, 1e-3, 1e-3, 5);
        std::size_t fails = 0;
        const int trials = 400;
        for (int t = 0; t < trials; ++t) {
            Rng rng(substream(17, t));
            BitBlock msg = random_bits(c.message_length(), rng);
            auto e = concat_channel_encode(msg, c, rng.next());
            EvidenceVector ev(c.N());
            for (std::size_t j = 0; j < c.N(); ++j) {
                std::uint8_t y = e.x[j] ^ rng.bernoulli(0.04);
                ev[j] = y ? -crossover_llr(0.04) : crossover_llr(0.04);
            }
            fails += concat_channel_decode(ev, e.disclosed, c) != msg;
        }
        return std::pair{static_cast<double>(fails) / trials, c.rate()};
    };
    auto [e64, r64] = err(64);
    auto [e128, r128] = err(128);
    EXPECT_LE(e64, 0.1);
    EXPECT_LE(e128, 0.1);
    EXPECT_GE(r128, r64 - 0.02);
}

// ---- serialization -----------------------------------------------------------

TEST(BitFile, RoundTripVariousLengths) {
    Rng rng(11);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 1000u}) {
        auto path = temp_file("rt.bin");
        BitBlock b = random_bits(n, rng);
        write_bit_file(path.string(), b);
        EXPECT_EQ(std::filesystem::file_size(path), 8 + (n + 7) / 8);
        EXPECT_EQ(read_bit_file(path.string()), b);
        std::filesystem::remove(path);
    }
}

TEST(BitFile, DetectsCorruption) {
    auto path = temp_file("bad.bin");
    write_bit_file(path.string(), BitBlock(12, 1));
    {
        std::ofstream f(path, std::ios::binary | std::ios::app);
        f.put('\0');
    }
    EXPECT_THROW(read_bit_file(path.string()), BitFileError);
    {
        std::ofstream f(path, std::ios::binary);
        f.write("\x03\0\0", 3);
    }
    EXPECT_THROW(read_bit_file(path.string()), BitFileError);
    {
        std::ofstream f(path, std::ios::binary);
        const char data[9] = {3, 0, 0, 0, 0, 0, 0, 0, static_cast<char>(0xff)};
        f.write(data, 9);
    }
    EXPECT_THROW(read_bit_file(path.string()), BitFileError);
    std::filesystem::remove(path);
    EXPECT_THROW(read_bit_file(path.string()), std::runtime_error);
}

TEST(Payload, JsonAndFlattenRoundTrip) {
    auto c = built(PauliParams::depolarizing(0.05), 16, 16, 1e-2, 1e-2);
    Rng rng(12);
    BitBlock x = random_bits(c.N(), rng);
    auto p = concat_compress(x, c);
    auto back = payload_from_json(payload_to_json(p));
    EXPECT_EQ(back.inner_bits, p.inner_bits);
    EXPECT_EQ(back.outer_bits, p.outer_bits);
    BitBlock flat = flatten(p);
    EXPECT_EQ(flat.size(), c.payload_length());
    auto un = unflatten(flat, 0, c);
    EXPECT_EQ(un.inner_bits, p.inner_bits);
    EXPECT_EQ(un.outer_bits, p.outer_bits);
    EXPECT_EQ(c.payload_length() + c.message_length(), c.N());
    EXPECT_THROW(unflatten(BitBlock(c.payload_length() - 1), 0, c), std::invalid_argument);
}
