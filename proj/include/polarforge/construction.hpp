#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bits.hpp"
#include "channels.hpp"
#include "layer.hpp"
#include "parallel.hpp"
#include "polar_core.hpp"
#include "rng.hpp"

namespace polarforge {

struct ReliabilityProfile {
    std::vector<double> value;    ///< Z parameter (exact mode) or failure probability (Monte Carlo)
    std::vector<double> std_err;  ///< zero in exact mode
    std::string mode;             ///< "bec-exact" or "monte-carlo"
    std::uint64_t trials = 0;

    std::size_t size() const { return value.size(); }
};

/// Exact Z values of the synthetic channels of a BEC(p), natural index order.
inline ReliabilityProfile bec_profile(double p, std::size_t n) {
    require_pow2(n, "bec_profile");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bec_profile: p must lie in [0,1]");
    std::vector<double> z{p};
    while (z.size() < n) {
        std::vector<double> next(2 * z.size());
        for (std::size_t k = 0; k < z.size(); ++k) {
            next[2 * k] = 2 * z[k] - z[k] * z[k];
            next[2 * k + 1] = z[k] * z[k];
        }
        z = std::move(next);
    }
    return {z, std::vector<double>(n, 0.0), "bec-exact", 0};
}

inline ReliabilityProfile profile_from_stats(const IndexStats& s) {
    ReliabilityProfile r;
    r.value = s.failure_freq();
    r.std_err = s.stderr_of(r.value);
    r.mode = "monte-carlo";
    r.trials = s.trials;
    return r;
}

/// Genie-aided Monte Carlo profile. A position counts as failed when the
/// decision is wrong or the step LLR is exactly zero.
inline ReliabilityProfile mc_profile(const BinaryView& view, std::size_t n, std::size_t trials, std::uint64_t seed, unsigned jobs = 1) {
    if (trials < 100) throw std::invalid_argument("mc_profile: at least 100 trials required");
    return profile_from_stats(genie_index_stats(view, n, trials, seed, jobs));
}

inline void write_profile_csv(std::ostream& os, const ReliabilityProfile& p) {
    os << "index,value,stderr\n";
    os.precision(17);
    for (std::size_t i = 0; i < p.size(); ++i) os << i << ',' << p.value[i] << ',' << p.std_err[i] << '\n';
}

// ---- frozen-set selection -------------------------------------------------

struct SelectCriterion {
    enum class Kind { Epsilon, Rate, Count };
    Kind kind = Kind::Epsilon;
    double value = 1e-3;

    static SelectCriterion epsilon(double e) { return {Kind::Epsilon, e}; }
    static SelectCriterion rate(double r) { return {Kind::Rate, r}; }
    static SelectCriterion count(std::size_t c) { return {Kind::Count, static_cast<double>(c)}; }
};

inline std::string to_string(const SelectCriterion& c) {
    switch (c.kind) {
        case SelectCriterion::Kind::Epsilon: return "epsilon";
        case SelectCriterion::Kind::Rate: return "rate";
        case SelectCriterion::Kind::Count: return "count";
    }
    return "?";
}

namespace detail {

/// Number of positions to freeze out of n under a rate or count criterion.
inline std::size_t frozen_count(const SelectCriterion& c, std::size_t n) {
    if (c.kind == SelectCriterion::Kind::Rate) {
        if (!(c.value >= 0.0 && c.value <= 1.0)) throw std::invalid_argument("select_frozen: rate must lie in [0,1]");
        // tolerate rounding noise in products like 0.75 * 256
        double f = static_cast<double>(n) * (1.0 - c.value);
        return static_cast<std::size_t>(std::ceil(f - 1e-9));
    }
    if (!(c.value >= 0.0) || c.value != std::floor(c.value) || c.value > static_cast<double>(n))
        throw std::invalid_argument("select_frozen: count must be an integer in [0, N]");
    return static_cast<std::size_t>(c.value);
}

/// Positions sorted worst first; ties go to the lower position.
inline std::vector<std::uint32_t> worst_first(const std::vector<const ReliabilityProfile*>& ps) {
    std::vector<std::uint32_t> order;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> where;
    for (std::uint32_t a = 0; a < ps.size(); ++a)
        for (std::uint32_t i = 0; i < ps[a]->size(); ++i) where.emplace_back(a, i);
    std::vector<std::uint32_t> idx(where.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t x, std::uint32_t y) {
        double vx = ps[where[x].first]->value[where[x].second], vy = ps[where[y].first]->value[where[y].second];
        if (vx != vy) return vx > vy;
        if (where[x].second != where[y].second) return where[x].second < where[y].second;
        return where[x].first < where[y].first;
    });
    return idx;
}

}  // namespace detail

inline FrozenSpec select_frozen(const ReliabilityProfile& profile, const SelectCriterion& c) {
    const std::size_t n = profile.size();
    for (double v : profile.value)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("select_frozen: profile values must lie in [0,1]");
    FrozenSpec f;
    if (c.kind == SelectCriterion::Kind::Epsilon) {
        for (std::uint32_t i = 0; i < n; ++i)
            if (profile.value[i] > c.value) f.indices.push_back(i);
    } else {
        std::size_t k = detail::frozen_count(c, n);
        auto order = detail::worst_first({&profile});
        f.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(f.indices.begin(), f.indices.end());
    }
    f.values.assign(f.indices.size(), 0);
    return f;
}

/// Joint selection over several equal-length profiles: epsilon acts per profile,
/// rate and count act on the pooled positions.
inline std::vector<FrozenSpec> select_frozen_pooled(const std::vector<ReliabilityProfile>& profiles, const SelectCriterion& c) {
    std::vector<FrozenSpec> out(profiles.size());
    if (c.kind == SelectCriterion::Kind::Epsilon) {
        for (std::size_t a = 0; a < profiles.size(); ++a) out[a] = select_frozen(profiles[a], c);
        return out;
    }
    std::vector<const ReliabilityProfile*> ps;
    std::size_t total = 0;
    for (auto& p : profiles) {
        ps.push_back(&p);
        total += p.size();
    }
    std::size_t k = detail::frozen_count(c, total);
    auto order = detail::worst_first(ps);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> where;
    for (std::uint32_t a = 0; a < ps.size(); ++a)
        for (std::uint32_t i = 0; i < ps[a]->size(); ++i) where.emplace_back(a, i);
    for (std::size_t r = 0; r < k; ++r) out[where[order[r]].first].indices.push_back(where[order[r]].second);
    for (auto& f : out) {
        std::sort(f.indices.begin(), f.indices.end());
        f.values.assign(f.indices.size(), 0);
    }
    return out;
}

// ---- the two-layer source -------------------------------------------------

/// Draws the N-position source the second layer decodes, in label order, with
/// its evidence. Classical channels: the source itself seen through the channel.
/// Pauli: X-basis values seen through the phase flips, conditioned on the true
/// amplitude pattern. Erasure: X-basis values with erased positions blanked.
inline void draw_layer_source(const ChannelModel& ch, std::size_t n, double source_prior, Rng& rng, BitBlock& x, EvidenceVector& ev) {
    if (auto* q = std::get_if<PauliParams>(&ch)) {
        BitBlock ex, ez;
        sample_pauli(*q, n, rng, ex, ez);
        x.resize(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = rng.bit();
        phase_evidence(*q, xor_of(x, ez), ex, ev);
    } else if (auto* e = std::get_if<ErasureParams>(&ch)) {
        BitBlock flags;
        sample_flags(e->p, n, rng, flags);
        x.resize(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = rng.bit();
        erasure_evidence(x, flags, ev);
    } else {
        BinaryView v = binary_view(ch);
        if (auto* s = std::get_if<BinarySymmetricView>(&v)) s->prior_one = source_prior;
        sample_view(v, n, rng, x, ev);
    }
}

/// The view the first (inner) layer is designed against.
inline BinaryView inner_view(const ChannelModel& ch, double source_prior) {
    BinaryView v = binary_view(ch);
    if (auto* s = std::get_if<BinarySymmetricView>(&v)) s->prior_one = source_prior;
    return v;
}

/// Orientation of the second layer: quantum channels decode X-basis values, on
/// which the inner transform acts transposed.
inline bool layer_reversed(const ChannelModel& ch) { return is_quantum(ch); }

/// Inner-frozen steps on the second layer carry unobserved values for quantum
/// channels and disclosed values for classical ones.
inline PhaseMode effective_mode(const ChannelModel& ch, PhaseMode requested) { return is_quantum(ch) ? requested : PhaseMode::Exact; }

struct MultilevelOptions {
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    PhaseMode mode = PhaseMode::Exact;
    std::size_t n_samples = kDefaultMarginalSamples;
    double source_prior = 0.5;
    unsigned jobs = 1;
};

/// Genie-aided profiles of the K outer levels: level j sees the true values of
/// every earlier level in each block, and its own M values are decoded by a
/// genie SC over the outer transform.
inline std::vector<ReliabilityProfile> multilevel_profile(const ChannelModel& ch, const LayerPlan& plan, const MultilevelOptions& o) {
    const std::size_t L = plan.L, M = plan.M, K = plan.K(), N = plan.N();
    if (o.trials == 0) throw std::invalid_argument("multilevel_profile: trials must be positive");
    const PhaseMode mode = effective_mode(ch, o.mode);
    struct Acc {
        std::vector<IndexStats> s;
        std::vector<InnerStepper> inner;
        ScDecoder outer;
        BitBlock x, xs, us, vals;
        EvidenceVector ev, evs, oev;
    };
    auto make = [&] {
        Acc a{std::vector<IndexStats>(K), {}, ScDecoder(M), {}, BitBlock(N), BitBlock(N), BitBlock(M), {}, EvidenceVector(N), EvidenceVector(M)};
        for (auto& s : a.s) {
            s.errors.assign(M, 0);
            s.failures.assign(M, 0);
        }
        a.inner.reserve(M);
        for (std::size_t m = 0; m < M; ++m) a.inner.emplace_back(L, mode, o.n_samples);
        return a;
    };
    auto body = [&](Acc& a, std::size_t t) {
        Rng rng(substream(o.seed, t));
        draw_layer_source(ch, N, o.source_prior, rng, a.x, a.ev);
        for (std::size_t m = 0; m < M; ++m) {
            plan.gather(a.x.data(), m, a.xs.data() + m * L);
            plan.gather(a.ev.data(), m, a.evs.data() + m * L);
            std::copy(a.xs.begin() + m * L, a.xs.begin() + (m + 1) * L, a.us.begin() + m * L);
            transform_inplace(a.us.data() + m * L, L);
            a.inner[m].reset(a.evs.data() + m * L, substream(o.seed, t, 1 + m));
        }
        auto advance = [&](std::size_t m, std::size_t upto) {
            InnerStepper& st = a.inner[m];
            while (st.step() < upto) {
                std::size_t s = st.step();
                if (plan.role[s] < 0) st.frozen(a.us[m * L + s]);
                else st.commit(a.us[m * L + s]);
            }
        };
        for (std::size_t j = 0; j < K; ++j) {
            const std::size_t s = plan.level_steps[j];
            for (std::size_t m = 0; m < M; ++m) {
                advance(m, s);
                a.oev[m] = a.inner[m].step_llr();
                a.vals[m] = a.us[m * L + s];
            }
            BitBlock ou = transform(a.vals);
            a.outer.reset(a.oev);
            for (std::size_t i = 0; i < M; ++i) {
                double l = a.outer.step_llr();
                bool wrong = hard_decision(l) != ou[i];
                a.s[j].errors[i] += wrong;
                a.s[j].failures[i] += wrong || l == 0.0;
                a.outer.commit(ou[i]);
            }
            ++a.s[j].trials;
            for (std::size_t m = 0; m < M; ++m) a.inner[m].commit(a.vals[m]);
        }
    };
    auto merge = [](Acc& a, Acc& b) {
        for (std::size_t j = 0; j < a.s.size(); ++j) merge_stats(a.s[j], b.s[j]);
    };
    Acc total = parallel_trials<Acc>(0, o.trials, o.jobs, make, body, merge);
    std::vector<ReliabilityProfile> out;
    for (auto& s : total.s) out.push_back(profile_from_stats(s));
    return out;
}

/// Exact H(U_i | U^{i-1}) in bits for an i.i.d. Bernoulli(p) block, by enumeration.
inline std::vector<double> exact_conditional_entropies(std::size_t L, double p) {
    require_pow2(L, "exact_conditional_entropies");
    if (L > 16) throw std::invalid_argument("exact_conditional_entropies: L too large to enumerate");
    const std::size_t n = std::size_t{1} << L;
    // pu[u] = P(U = u), bit k of u holds U_k
    std::vector<double> pu(n, 0.0);
    BitBlock x(L);
    for (std::size_t xi = 0; xi < n; ++xi) {
        for (std::size_t k = 0; k < L; ++k) x[k] = (xi >> k) & 1u;
        double px = 1;
        for (auto b : x) px *= b ? p : 1 - p;
        BitBlock u = transform(x);
        std::size_t ui = 0;
        for (std::size_t k = 0; k < L; ++k) ui |= static_cast<std::size_t>(u[k]) << k;
        pu[ui] += px;
    }
    // prefix marginals from longest to shortest
    std::vector<double> h_prefix(L + 1, 0.0);
    std::vector<double> marg = pu;
    for (std::size_t len = L;; --len) {
        double h = 0;
        for (double q : marg)
            if (q > 0) h -= q * std::log2(q);
        h_prefix[len] = h;
        if (len == 0) break;
        std::vector<double> shorter(marg.size() / 2, 0.0);
        for (std::size_t a = 0; a < marg.size(); ++a) shorter[a & (shorter.size() - 1)] += marg[a];
        marg = std::move(shorter);
    }
    std::vector<double> out(L);
    for (std::size_t i = 0; i < L; ++i) out[i] = h_prefix[i + 1] - h_prefix[i];
    return out;
}

/// H(U_i | U^{i-1}) in bits for an i.i.d. Bernoulli(p) block: exact up to
/// length 16, otherwise the sample mean of h(P(U_i=1 | prefix)) over `trials` blocks.
inline std::vector<double> source_entropy_profile(std::size_t n, double p, std::size_t trials, std::uint64_t seed) {
    require_pow2(n, "source_entropy_profile");
    if (n <= 16) return exact_conditional_entropies(n, p);
    if (trials == 0) throw std::invalid_argument("source_entropy_profile: trials must be positive");
    std::vector<double> h(n, 0.0);
    ScDecoder dec(n);
    const EvidenceVector prior(n, crossover_llr(p));
    BitBlock x(n);
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(substream(seed, t));
        for (auto& b : x) b = rng.bernoulli(p);
        const BitBlock u = transform(x);
        dec.reset(prior);
        for (std::size_t i = 0; i < n; ++i) {
            h[i] += binary_entropy(prob_one(dec.step_llr()));
            dec.commit(u[i]);
        }
    }
    for (auto& v : h) v /= static_cast<double>(trials);
    return h;
}

// ---- the concatenated code ------------------------------------------------

struct ConcatCode {
    std::size_t L = 1, M = 1;
    FrozenSpec inner_frozen;                  ///< labels in [0, L)
    std::vector<FrozenSpec> outer_frozen;     ///< one per level, indices in [0, M)
    std::vector<std::uint32_t> level_order;   ///< label of level j
    std::uint64_t fill_seed = 0;
    ChannelModel channel = PauliParams{};
    double source_prior = 0.5;
    nlohmann::json construction = nlohmann::json::object();  ///< how the code was built

    std::size_t K() const { return L - inner_frozen.size(); }
    std::size_t N() const { return L * M; }
    std::size_t outer_frozen_total() const {
        std::size_t t = 0;
        for (auto& f : outer_frozen) t += f.size();
        return t;
    }
    std::size_t message_length() const { return K() * M - outer_frozen_total(); }
    std::size_t payload_length() const { return M * inner_frozen.size() + outer_frozen_total(); }
    double rate() const { return static_cast<double>(message_length()) / static_cast<double>(N()); }

    void validate() const {
        require_pow2(L, "inner length");
        require_pow2(M, "outer length");
        polarforge::validate(channel);
        inner_frozen.validate(L);
        if (outer_frozen.size() != K()) throw std::invalid_argument("code: need one outer frozen set per level");
        for (auto& f : outer_frozen) f.validate(M);
        if (!(source_prior > 0.0 && source_prior < 1.0)) throw std::invalid_argument("code: source prior must lie in (0,1)");
        if (source_prior != 0.5 && !std::holds_alternative<BscParams>(channel))
            throw std::invalid_argument("code: a biased source is only supported on a bsc channel");
        make_plan(L, M, inner_frozen.indices, level_order, layer_reversed(channel));
    }
};

inline LayerPlan plan_of(const ConcatCode& c) {
    return make_plan(c.L, c.M, c.inner_frozen.indices, c.level_order, layer_reversed(c.channel));
}

/// Non-frozen labels in decoding order.
inline std::vector<std::uint32_t> default_level_order(const std::vector<std::uint32_t>& inner_frozen, std::size_t L, bool reversed) {
    auto free = complement(inner_frozen, L);
    if (reversed) std::reverse(free.begin(), free.end());
    return free;
}

inline nlohmann::json frozen_to_json(const FrozenSpec& f) {
    return {{"idx", f.indices}, {"val_hex", bits_to_hex(f.values)}};
}

inline FrozenSpec frozen_from_json(const nlohmann::json& j, std::size_t n) {
    FrozenSpec f;
    f.indices = j.at("idx").get<std::vector<std::uint32_t>>();
    f.values = hex_to_bits(j.at("val_hex").get<std::string>(), f.indices.size());
    f.validate(n);
    return f;
}

inline nlohmann::json code_to_json(const ConcatCode& c) {
    nlohmann::json outer = nlohmann::json::array();
    for (auto& f : c.outer_frozen) outer.push_back(frozen_to_json(f));
    return {{"schema", 1},
            {"L", c.L},
            {"M", c.M},
            {"inner_frozen", frozen_to_json(c.inner_frozen)},
            {"outer_frozen", outer},
            {"level_order", c.level_order},
            {"fill_seed", c.fill_seed},
            {"channel", channel_to_json(c.channel)},
            {"source_prior", c.source_prior},
            {"construction", c.construction}};
}

inline ConcatCode code_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("code file: expected an object");
    if (j.value("schema", 0) != 1) throw std::invalid_argument("code file: unsupported schema");
    ConcatCode c;
    c.L = j.at("L").get<std::size_t>();
    c.M = j.at("M").get<std::size_t>();
    require_pow2(c.L, "inner length");
    require_pow2(c.M, "outer length");
    c.inner_frozen = frozen_from_json(j.at("inner_frozen"), c.L);
    for (auto& f : j.at("outer_frozen")) c.outer_frozen.push_back(frozen_from_json(f, c.M));
    c.level_order = j.at("level_order").get<std::vector<std::uint32_t>>();
    c.fill_seed = j.at("fill_seed").get<std::uint64_t>();
    c.channel = channel_from_json(j.at("channel"));
    c.source_prior = j.value("source_prior", 0.5);
    if (j.contains("construction")) c.construction = j.at("construction");
    c.validate();
    return c;
}

struct BuildOptions {
    SelectCriterion inner = SelectCriterion::epsilon(1e-3);
    SelectCriterion outer = SelectCriterion::epsilon(1e-3);  ///< rate/count pool all levels
    std::optional<double> overall_rate;                      ///< replaces `outer` by the pooled count hitting this rate
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    PhaseMode profile_mode = PhaseMode::Exact;
    std::size_t n_samples = kDefaultMarginalSamples;
    double source_prior = 0.5;
    double shape_eps = 0.1;  ///< biased sources also freeze inner positions with H(U_i|U^{i-1}) below 1 - shape_eps
    unsigned jobs = 1;
};

inline nlohmann::json criterion_json(const SelectCriterion& c) { return {{"kind", to_string(c)}, {"value", c.value}}; }

/// Profile of the first layer: exact recursion for erasures, Monte Carlo otherwise.
inline ReliabilityProfile inner_profile(const ChannelModel& ch, std::size_t L, const BuildOptions& o) {
    BinaryView v = inner_view(ch, o.source_prior);
    if (auto* e = std::get_if<BinaryErasureView>(&v)) return bec_profile(e->erasure, L);
    return mc_profile(v, L, o.trials, substream(o.seed, 0, 0x1a), o.jobs);
}

inline ConcatCode build_concat_code(const ChannelModel& ch, std::size_t L, std::size_t M, const BuildOptions& o) {
    require_pow2(L, "inner length");
    require_pow2(M, "outer length");
    validate(ch);
    ConcatCode c;
    c.L = L;
    c.M = M;
    c.channel = ch;
    c.source_prior = o.source_prior;
    c.fill_seed = substream(o.seed, 0, 0xf1);
    c.inner_frozen = select_frozen(inner_profile(ch, L, o), o.inner);
    if (o.source_prior != 0.5) {
        if (!(o.shape_eps >= 0.0 && o.shape_eps <= 1.0)) throw std::invalid_argument("build: shape_eps must lie in [0,1]");
        const auto h = source_entropy_profile(L, o.source_prior, o.trials, substream(o.seed, 0, 0x5e));
        auto& idx = c.inner_frozen.indices;
        for (std::uint32_t i = 0; i < L; ++i)
            if (h[i] < 1.0 - o.shape_eps) idx.push_back(i);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        c.inner_frozen.values.assign(idx.size(), 0);
    }
    c.level_order = default_level_order(c.inner_frozen.indices, L, layer_reversed(ch));
    LayerPlan plan = plan_of(c);
    if (plan.K() > 0) {
        MultilevelOptions mo{o.trials, substream(o.seed, 0, 0x2b), o.profile_mode, o.n_samples, o.source_prior, o.jobs};
        SelectCriterion outer = o.outer;
        if (o.overall_rate) {
            const double r = *o.overall_rate;
            if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("build: overall rate must lie in [0,1]");
            const std::size_t keep = static_cast<std::size_t>(std::floor(r * static_cast<double>(c.N()) + 1e-9));
            if (keep > plan.K() * M) throw std::invalid_argument("build: overall rate exceeds what the inner layer leaves");
            outer = SelectCriterion::count(plan.K() * M - keep);
        }
        c.outer_frozen = select_frozen_pooled(multilevel_profile(ch, plan, mo), outer);
    }
    c.construction = {{"seed", o.seed},
                      {"trials", o.trials},
                      {"inner", criterion_json(o.inner)},
                      {"outer", o.overall_rate ? nlohmann::json{{"kind", "overall_rate"}, {"value", *o.overall_rate}} : criterion_json(o.outer)},
                      {"profile_mode", to_string(effective_mode(ch, o.profile_mode))}};
    if (o.source_prior != 0.5) c.construction["shape_eps"] = o.shape_eps;
    c.validate();
    return c;
}

}  // namespace polarforge
