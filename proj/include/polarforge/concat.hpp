#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bits.hpp"
#include "construction.hpp"
#include "layer.hpp"
#include "polar_core.hpp"
#include "rng.hpp"

namespace polarforge {

struct CompressedPayload {
    std::vector<BitBlock> inner_bits;  ///< per block, inner frozen values in index order
    std::vector<BitBlock> outer_bits;  ///< per level, outer frozen values in index order

    std::size_t total_bits() const {
        std::size_t t = 0;
        for (auto& b : inner_bits) t += b.size();
        for (auto& b : outer_bits) t += b.size();
        return t;
    }
};

inline void check_payload(const CompressedPayload& p, const ConcatCode& c) {
    if (p.inner_bits.size() != c.M) throw std::invalid_argument("payload: expected one inner field per block");
    for (auto& b : p.inner_bits)
        if (b.size() != c.inner_frozen.size()) throw std::invalid_argument("payload: inner field has the wrong length");
    if (p.outer_bits.size() != c.K()) throw std::invalid_argument("payload: expected one outer field per level");
    for (std::size_t j = 0; j < c.K(); ++j)
        if (p.outer_bits[j].size() != c.outer_frozen[j].size()) throw std::invalid_argument("payload: outer field has the wrong length");
}

inline nlohmann::json payload_to_json(const CompressedPayload& p) {
    nlohmann::json in = nlohmann::json::array(), out = nlohmann::json::array();
    for (auto& b : p.inner_bits) in.push_back(bits_to_prefixed_hex(b));
    for (auto& b : p.outer_bits) out.push_back(bits_to_prefixed_hex(b));
    return {{"inner", in}, {"outer", out}};
}

inline CompressedPayload payload_from_json(const nlohmann::json& j) {
    CompressedPayload p;
    for (auto& s : j.at("inner")) p.inner_bits.push_back(prefixed_hex_to_bits(s.get<std::string>()));
    for (auto& s : j.at("outer")) p.outer_bits.push_back(prefixed_hex_to_bits(s.get<std::string>()));
    return p;
}

/// Concatenation of all payload fields, inner blocks first.
inline BitBlock flatten(const CompressedPayload& p) {
    BitBlock out;
    for (auto& b : p.inner_bits) out.insert(out.end(), b.begin(), b.end());
    for (auto& b : p.outer_bits) out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline CompressedPayload unflatten(const BitBlock& bits, std::size_t offset, const ConcatCode& c) {
    if (bits.size() < offset + c.payload_length()) throw std::invalid_argument("payload: not enough bits");
    CompressedPayload p;
    auto it = bits.begin() + static_cast<std::ptrdiff_t>(offset);
    for (std::size_t m = 0; m < c.M; ++m) {
        p.inner_bits.emplace_back(it, it + static_cast<std::ptrdiff_t>(c.inner_frozen.size()));
        it += static_cast<std::ptrdiff_t>(c.inner_frozen.size());
    }
    for (auto& f : c.outer_frozen) {
        p.outer_bits.emplace_back(it, it + static_cast<std::ptrdiff_t>(f.size()));
        it += static_cast<std::ptrdiff_t>(f.size());
    }
    return p;
}

// ---- compression ----------------------------------------------------------

/// Per-block inner transforms in step order, then per-level outer transforms.
struct LayerValues {
    BitBlock u;                    ///< M blocks of L inner values, step order
    std::vector<BitBlock> levels;  ///< level j: the M values at its step
    std::vector<BitBlock> outer;   ///< transform of each level
};

inline LayerValues layer_values(const BitBlock& x, const LayerPlan& plan, OpCounts* ops = nullptr) {
    if (x.size() != plan.N()) throw std::invalid_argument("source length " + std::to_string(x.size()) + " does not match N = " + std::to_string(plan.N()));
    LayerValues v;
    v.u.resize(plan.N());
    for (std::size_t m = 0; m < plan.M; ++m) {
        plan.gather(x.data(), m, v.u.data() + m * plan.L);
        transform_inplace(v.u.data() + m * plan.L, plan.L, ops);
    }
    v.levels.assign(plan.K(), BitBlock(plan.M));
    v.outer.resize(plan.K());
    for (std::size_t j = 0; j < plan.K(); ++j) {
        for (std::size_t m = 0; m < plan.M; ++m) v.levels[j][m] = v.u[m * plan.L + plan.level_steps[j]];
        v.outer[j] = v.levels[j];
        transform_inplace(v.outer[j].data(), plan.M, ops);
    }
    return v;
}

inline CompressedPayload concat_compress(const BitBlock& x, const ConcatCode& code, OpCounts* ops = nullptr) {
    LayerPlan plan = plan_of(code);
    LayerValues v = layer_values(x, plan, ops);
    CompressedPayload p;
    p.inner_bits.assign(code.M, BitBlock(code.inner_frozen.size()));
    for (std::size_t m = 0; m < code.M; ++m)
        for (std::size_t k = 0; k < plan.inner_steps.size(); ++k) p.inner_bits[m][plan.inner_slot[k]] = v.u[m * code.L + plan.inner_steps[k]];
    p.outer_bits.resize(code.K());
    for (std::size_t j = 0; j < code.K(); ++j)
        for (auto i : code.outer_frozen[j].indices) p.outer_bits[j].push_back(v.outer[j][i]);
    return p;
}

// ---- decompression --------------------------------------------------------

/// Records inner-block reads and level commits of the interleaved schedule.
struct ScheduleLog {
    struct Event {
        enum Kind { Read, Commit } kind;
        std::uint32_t level, block, step;
    };
    std::vector<Event> events;
};

struct DecodeOptions {
    PhaseMode mode = PhaseMode::Exact;
    std::size_t n_samples = kDefaultMarginalSamples;
    std::uint64_t seed = 0;  ///< randomness for unobserved inner positions
    OpCounts* ops = nullptr;
    ScheduleLog* log = nullptr;
};

struct DecompressResult {
    BitBlock x_hat;                ///< label order; empty when inner positions stayed unresolved
    std::vector<BitBlock> levels;  ///< decoded level values
    std::vector<BitBlock> outer;   ///< decoded outer inputs per level
};

/// Interleaved two-layer SC. Level j reads each inner block's step LLR at its
/// own step only after levels 0..j-1 have committed in every block.
inline DecompressResult concat_decompress(const EvidenceVector& ev, const CompressedPayload& payload, const ConcatCode& code, const DecodeOptions& o = {}) {
    if (ev.size() != code.N()) throw std::invalid_argument("evidence length does not match N");
    check_payload(payload, code);
    const LayerPlan plan = plan_of(code);
    const std::size_t L = plan.L, M = plan.M, K = plan.K();
    const PhaseMode mode = effective_mode(code.channel, o.mode);

    std::vector<InnerStepper> inner;
    inner.reserve(M);
    EvidenceVector evs(L);
    for (std::size_t m = 0; m < M; ++m) {
        inner.emplace_back(L, mode, o.n_samples);
        inner[m].set_ops(o.ops);
        plan.gather(ev.data(), m, evs.data());
        inner[m].reset(evs.data(), substream(o.seed, m, 0x5c));
    }
    std::size_t committed = 0;  // levels fully committed in every block
    auto advance = [&](std::size_t m, std::size_t upto) {
        InnerStepper& st = inner[m];
        while (st.step() < upto) {
            const std::size_t s = st.step();
            const std::int32_t r = plan.role[s];
            if (r >= 0) throw std::logic_error("schedule violation: block " + std::to_string(m) + " reached level " + std::to_string(r) + " before it was committed");
            const std::size_t slot = static_cast<std::size_t>(-1 - r);
            st.frozen(payload.inner_bits[m][slot]);
        }
    };

    DecompressResult res;
    res.levels.resize(K);
    res.outer.resize(K);
    ScDecoder outer(M);
    outer.ops = o.ops;
    EvidenceVector oev(M);
    for (std::size_t j = 0; j < K; ++j) {
        const std::size_t s = plan.level_steps[j];
        if (committed != j) throw std::logic_error("schedule violation: level " + std::to_string(j) + " started before level " + std::to_string(committed) + " finished");
        for (std::size_t m = 0; m < M; ++m) {
            advance(m, s);
            if (inner[m].step() != s) throw std::logic_error("schedule violation: block is past the level step");
            oev[m] = inner[m].step_llr();
            if (o.log) o.log->events.push_back({ScheduleLog::Event::Read, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(s)});
        }
        FrozenSpec of = code.outer_frozen[j];
        of.values = payload.outer_bits[j];
        DecodeOutcome d = sc_decode(outer, oev, of);
        res.outer[j] = std::move(d.u_hat);
        res.levels[j] = d.x_hat;
        for (std::size_t m = 0; m < M; ++m) {
            inner[m].commit(res.levels[j][m]);
            if (o.log) o.log->events.push_back({ScheduleLog::Event::Commit, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(s)});
        }
        ++committed;
    }
    for (std::size_t m = 0; m < M; ++m) advance(m, L);
    if (mode != PhaseMode::Marginalized) {
        res.x_hat.resize(code.N());
        for (std::size_t m = 0; m < M; ++m) plan.scatter(inner[m].x_hat().data(), m, res.x_hat.data());
    }
    return res;
}

// ---- shaper ---------------------------------------------------------------

struct ShaperSpec {
    std::size_t L = 1;
    std::vector<std::uint32_t> extraction_set;  ///< ordered by descending conditional entropy
    double source_prior = 0.5;

    std::size_t K() const { return extraction_set.size(); }
    void validate() const {
        require_pow2(L, "shaper length");
        if (!(source_prior > 0.0 && source_prior < 1.0)) throw std::invalid_argument("shaper: source prior must lie in (0,1)");
        std::vector<std::uint8_t> seen(L, 0);
        for (auto i : extraction_set) {
            if (i >= L) throw std::out_of_range("shaper: extraction index out of range");
            if (seen[i]++) throw std::invalid_argument("shaper: repeated extraction index");
        }
    }
};

/// Extraction set {i : H(U_i|U^{i-1}) >= 1 - eps}, highest entropy first (ties by index).
inline ShaperSpec make_shaper_spec(std::size_t L, double source_prior, double eps) {
    auto h = exact_conditional_entropies(L, source_prior);
    ShaperSpec s;
    s.L = L;
    s.source_prior = source_prior;
    for (std::uint32_t i = 0; i < L; ++i)
        if (h[i] >= 1.0 - eps) s.extraction_set.push_back(i);
    std::stable_sort(s.extraction_set.begin(), s.extraction_set.end(), [&](std::uint32_t a, std::uint32_t b) { return h[a] > h[b]; });
    s.validate();
    return s;
}

inline BitBlock extract(const BitBlock& x, const ShaperSpec& spec) {
    spec.validate();
    if (x.size() != spec.L) throw std::invalid_argument("extract: input length does not match L");
    BitBlock u = transform(x);
    BitBlock out;
    out.reserve(spec.K());
    for (auto i : spec.extraction_set) out.push_back(u[i]);
    return out;
}

/// Builds U in index order: extraction positions take the given bits, the rest
/// are drawn from the source's conditional law given the prefix.
inline BitBlock shape(const BitBlock& bits, const ShaperSpec& spec, Rng& rng) {
    spec.validate();
    if (bits.size() != spec.K()) throw std::invalid_argument("shape: need exactly K input bits");
    std::vector<std::int32_t> pos(spec.L, -1);
    for (std::size_t k = 0; k < spec.K(); ++k) pos[spec.extraction_set[k]] = static_cast<std::int32_t>(k);
    ScDecoder dec(spec.L);
    dec.reset(EvidenceVector(spec.L, crossover_llr(spec.source_prior)));
    for (std::size_t i = 0; i < spec.L; ++i) {
        if (pos[i] >= 0) dec.commit(bits[static_cast<std::size_t>(pos[i])]);
        else dec.commit(spec.source_prior == 0.5 ? rng.bit() : rng.bernoulli(prob_one(dec.step_llr())));
    }
    return dec.x_hat();
}

inline BitBlock shape(const BitBlock& bits, const ShaperSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    return shape(bits, spec, rng);
}

/// Exact variational distance between shaped outputs (uniform input bits) and
/// the i.i.d. source, by enumeration over all 2^L blocks.
inline double exact_shaper_distance(const ShaperSpec& spec) {
    spec.validate();
    if (spec.L > 12) throw std::invalid_argument("exact_shaper_distance: L must be at most 12");
    const std::size_t L = spec.L, n = std::size_t{1} << L;
    std::vector<std::uint8_t> extracted(L, 0);
    for (auto i : spec.extraction_set) extracted[i] = 1;
    double dist = 0;
    ScDecoder dec(L);
    const EvidenceVector prior(L, crossover_llr(spec.source_prior));
    for (std::size_t xi = 0; xi < n; ++xi) {
        BitBlock x(L);
        double px = 1;
        for (std::size_t k = 0; k < L; ++k) {
            x[k] = (xi >> k) & 1u;
            px *= x[k] ? spec.source_prior : 1 - spec.source_prior;
        }
        BitBlock u = transform(x);
        double q = 1;
        dec.reset(prior);
        for (std::size_t i = 0; i < L; ++i) {
            if (extracted[i]) {
                q *= 0.5;
            } else {
                double p1 = prob_one(dec.step_llr());
                q *= u[i] ? p1 : 1 - p1;
            }
            dec.commit(u[i]);
        }
        dist += std::fabs(q - px);
    }
    return dist / 2;
}

// ---- channel coding -------------------------------------------------------

/// Pseudorandom outer frozen values shared through the code's fill seed.
inline std::vector<BitBlock> outer_fill(const ConcatCode& code) {
    Rng rng(code.fill_seed);
    std::vector<BitBlock> out(code.K());
    for (std::size_t j = 0; j < code.K(); ++j)
        for (std::size_t k = 0; k < code.outer_frozen[j].size(); ++k) out[j].push_back(rng.bit());
    return out;
}

struct Encoded {
    BitBlock x;                   ///< channel input, label order
    CompressedPayload disclosed;  ///< inner values drawn by the encoder and the outer fill
};

inline Encoded concat_channel_encode(const BitBlock& message, const ConcatCode& code, std::uint64_t seed, OpCounts* ops = nullptr) {
    if (message.size() != code.message_length())
        throw std::invalid_argument("message length " + std::to_string(message.size()) + " does not match " + std::to_string(code.message_length()));
    const LayerPlan plan = plan_of(code);
    const std::size_t L = plan.L, M = plan.M, K = plan.K();
    Encoded e;
    e.disclosed.outer_bits = outer_fill(code);
    std::vector<BitBlock> levels(K);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < K; ++j) {
        auto table = code.outer_frozen[j].lookup(M);
        BitBlock w(M);
        std::size_t f = 0;
        for (std::size_t i = 0; i < M; ++i) w[i] = table[i] >= 0 ? e.disclosed.outer_bits[j][f++] : message[pos++];
        transform_inplace(w.data(), M, ops);
        levels[j] = std::move(w);
    }
    Rng rng(seed);
    e.x.resize(code.N());
    e.disclosed.inner_bits.assign(M, BitBlock(code.inner_frozen.size()));
    ScDecoder prior_dec(L);
    const EvidenceVector prior(L, crossover_llr(code.source_prior));
    const bool uniform = code.source_prior == 0.5;
    BitBlock u(L);
    for (std::size_t m = 0; m < M; ++m) {
        if (!uniform) prior_dec.reset(prior);
        for (std::size_t s = 0; s < L; ++s) {
            const std::int32_t r = plan.role[s];
            if (r >= 0) u[s] = levels[static_cast<std::size_t>(r)][m];
            else {
                u[s] = uniform ? rng.bit() : rng.bernoulli(prob_one(prior_dec.step_llr()));
                e.disclosed.inner_bits[m][static_cast<std::size_t>(-1 - r)] = u[s];
            }
            if (!uniform) prior_dec.commit(u[s]);
        }
        BitBlock xs = u;
        transform_inplace(xs.data(), L, ops);
        plan.scatter(xs.data(), m, e.x.data());
    }
    return e;
}

/// Message coordinates of decoded outer inputs.
inline BitBlock message_of(const std::vector<BitBlock>& outer, const ConcatCode& code) {
    BitBlock msg;
    msg.reserve(code.message_length());
    for (std::size_t j = 0; j < code.K(); ++j) {
        auto table = code.outer_frozen[j].lookup(code.M);
        for (std::size_t i = 0; i < code.M; ++i)
            if (table[i] < 0) msg.push_back(outer[j][i]);
    }
    return msg;
}

inline BitBlock concat_channel_decode(const EvidenceVector& ev, const CompressedPayload& disclosed, const ConcatCode& code, const DecodeOptions& o = {}) {
    return message_of(concat_decompress(ev, disclosed, code, o).outer, code);
}

// ---- raw bit files --------------------------------------------------------

/// 8-byte little-endian bit count followed by the bits packed LSB first.
inline void write_bit_file(const std::string& path, const BitBlock& bits) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    std::uint64_t n = bits.size();
    unsigned char hdr[8];
    for (int k = 0; k < 8; ++k) hdr[k] = static_cast<unsigned char>(n >> (8 * k));
    f.write(reinterpret_cast<const char*>(hdr), 8);
    auto bytes = pack_bits(bits);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

struct BitFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline BitBlock read_bit_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 8) throw BitFileError("'" + path + "': missing length header");
    std::uint64_t n = 0;
    for (int k = 0; k < 8; ++k) n |= static_cast<std::uint64_t>(data[k]) << (8 * k);
    if ((n + 7) / 8 != data.size() - 8) throw BitFileError("'" + path + "': length header does not match file size");
    BitBlock bits = unpack_bits(data.data() + 8, data.size() - 8, n);
    if (n % 8 != 0 && (data.back() >> (n % 8)) != 0) throw BitFileError("'" + path + "': nonzero padding bits");
    return bits;
}

}  // namespace polarforge
