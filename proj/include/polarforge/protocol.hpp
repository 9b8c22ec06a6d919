#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bits.hpp"
#include "channels.hpp"
#include "concat.hpp"
#include "construction.hpp"
#include "parallel.hpp"
#include "polar_core.hpp"
#include "rng.hpp"

namespace polarforge {

struct TrialOutcome {
    std::size_t amp_block_errors = 0;  ///< inner blocks whose amplitude values were wrong
    bool phase_ok = true;              ///< every level value (or message bit) recovered
    bool success = true;
};

struct TrialOptions {
    PhaseMode phase_mode = PhaseMode::Decide;
    std::size_t n_samples = kDefaultMarginalSamples;
};

namespace detail {

/// Amplitude stage for quantum channels: each inner block decodes Alice's
/// Z-basis values from Bob's, given the frozen values as syndrome. Returns the
/// amplitude error pattern Bob infers.
inline BitBlock amplitude_stage(const ConcatCode& code, const BitBlock& e_x, const BitBlock* flags, Rng& rng, std::size_t& block_errors) {
    const std::size_t L = code.L, M = code.M;
    BitBlock e_hat(code.N());
    ScDecoder dec(L);
    EvidenceVector ev(L);
    BitBlock za(L);
    double l = 0;
    if (auto* q = std::get_if<PauliParams>(&code.channel)) l = crossover_llr(q->p_x + q->p_y);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t j = 0; j < L; ++j) {
            za[j] = rng.bit();
            std::uint8_t zb = za[j] ^ e_x[m * L + j];
            ev[j] = flags ? ((*flags)[m * L + j] ? 0.0 : (zb ? -kLlrClamp : kLlrClamp)) : (zb ? -l : l);
        }
        FrozenSpec syn = FrozenSpec::with_values(code.inner_frozen.indices, transform(za));
        DecodeOutcome d = sc_decode(dec, ev, syn);
        bool wrong = d.x_hat != za;
        block_errors += wrong;
        for (std::size_t j = 0; j < L; ++j) e_hat[m * L + j] = d.x_hat[j] ^ za[j] ^ e_x[m * L + j];
    }
    return e_hat;
}

/// Noise on the second layer: evidence about x given the channel draw.
struct LayerNoise {
    BitBlock e_x, e_z, flags;
};

inline LayerNoise draw_noise(const ChannelModel& ch, std::size_t n, Rng& rng) {
    LayerNoise z;
    if (auto* q = std::get_if<PauliParams>(&ch)) sample_pauli(*q, n, rng, z.e_x, z.e_z);
    else if (auto* e = std::get_if<ErasureParams>(&ch)) sample_flags(e->p, n, rng, z.flags);
    else if (auto* b = std::get_if<BscParams>(&ch)) sample_flags(b->p, n, rng, z.e_z);
    else sample_flags(std::get<BecParams>(ch).p, n, rng, z.flags);
    return z;
}

/// Evidence on x for the second layer. `e_x_hat` is the amplitude pattern the
/// receiver settled on (Pauli only).
inline EvidenceVector layer_evidence(const ConcatCode& code, const BitBlock& x, const LayerNoise& z, const BitBlock& e_x_hat) {
    EvidenceVector ev;
    const ChannelModel& ch = code.channel;
    if (auto* q = std::get_if<PauliParams>(&ch)) {
        phase_evidence(*q, xor_of(x, z.e_z), e_x_hat, ev);
    } else if (std::holds_alternative<ErasureParams>(ch) || std::holds_alternative<BecParams>(ch)) {
        erasure_evidence(x, z.flags, ev);
    } else {
        const double prior = crossover_llr(code.source_prior), l = crossover_llr(std::get<BscParams>(ch).p);
        ev.resize(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) ev[j] = clamp_llr(prior + ((x[j] ^ z.e_z[j]) ? -l : l));
    }
    return ev;
}

}  // namespace detail

/// One run of the two-stage reconciliation. Quantum channels: amplitude stage
/// per inner block, then the interleaved phase stage on the K levels with the
/// inferred amplitude pattern as side information. Classical channels: the
/// source is the channel input and only the second stage runs.
inline TrialOutcome distill_trial(const ConcatCode& code, std::uint64_t seed, const TrialOptions& o = {}) {
    Rng rng(seed);
    const std::size_t N = code.N();
    detail::LayerNoise z = detail::draw_noise(code.channel, N, rng);
    TrialOutcome r;
    BitBlock e_x_hat;
    if (is_quantum(code.channel))
        e_x_hat = detail::amplitude_stage(code, std::holds_alternative<PauliParams>(code.channel) ? z.e_x : BitBlock(N, 0),
                                          z.flags.empty() ? nullptr : &z.flags, rng, r.amp_block_errors);
    BitBlock x(N);
    if (code.source_prior == 0.5)
        for (auto& b : x) b = rng.bit();
    else
        for (auto& b : x) b = rng.bernoulli(code.source_prior);
    EvidenceVector ev = detail::layer_evidence(code, x, z, e_x_hat);
    CompressedPayload payload = concat_compress(x, code);
    DecodeOptions d;
    d.mode = o.phase_mode;
    d.n_samples = o.n_samples;
    d.seed = rng.next();
    DecompressResult res = concat_decompress(ev, payload, code, d);
    LayerValues truth = layer_values(x, plan_of(code));
    r.phase_ok = res.levels == truth.levels;
    r.success = r.phase_ok && r.amp_block_errors == 0;
    return r;
}

/// Random message through the concatenated channel code. For quantum channels
/// the message rides on the X-basis values and the amplitude stage runs first.
inline TrialOutcome channel_coding_trial(const ConcatCode& code, std::uint64_t seed, const TrialOptions& o = {}) {
    Rng rng(seed);
    const std::size_t N = code.N();
    detail::LayerNoise z = detail::draw_noise(code.channel, N, rng);
    TrialOutcome r;
    BitBlock e_x_hat;
    if (is_quantum(code.channel))
        e_x_hat = detail::amplitude_stage(code, std::holds_alternative<PauliParams>(code.channel) ? z.e_x : BitBlock(N, 0),
                                          z.flags.empty() ? nullptr : &z.flags, rng, r.amp_block_errors);
    BitBlock msg(code.message_length());
    for (auto& b : msg) b = rng.bit();
    Encoded enc = concat_channel_encode(msg, code, rng.next());
    EvidenceVector ev = detail::layer_evidence(code, enc.x, z, e_x_hat);
    DecodeOptions d;
    d.mode = o.phase_mode;
    d.n_samples = o.n_samples;
    d.seed = rng.next();
    r.phase_ok = concat_channel_decode(ev, enc.disclosed, code, d) == msg;
    r.success = r.phase_ok && r.amp_block_errors == 0;
    return r;
}

// ---- campaigns ------------------------------------------------------------

inline double fidelity_bound(double eps1, double eps2, std::size_t M) {
    if (!(eps1 >= 0 && eps1 <= 1 && eps2 >= 0 && eps2 <= 1)) throw std::invalid_argument("fidelity_bound: eps must lie in [0,1]");
    if (M < 1) throw std::invalid_argument("fidelity_bound: M must be positive");
    return std::sqrt(2 * eps2) + std::sqrt(2 * static_cast<double>(M) * eps1);
}

inline double rate_report(const ConcatCode& code) { return code.rate(); }

enum class CampaignKind { Distill, ChannelCoding };

inline std::string to_string(CampaignKind k) { return k == CampaignKind::Distill ? "distill" : "channel"; }

struct CampaignConfig {
    CampaignKind kind = CampaignKind::Distill;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    TrialOptions trial;
    unsigned jobs = 1;
    std::string checkpoint;                    ///< sidecar path; empty disables checkpointing
    std::size_t checkpoint_every = 1000;
    bool record_timing = false;                ///< timing breaks byte-reproducibility, so it is opt-in
    std::function<void(std::size_t, std::size_t)> progress;  ///< (done, total)
};

struct CampaignCounts {
    std::uint64_t trials = 0, amp_block_errors = 0, phase_block_errors = 0, failures = 0;
    void add(const TrialOutcome& t) {
        ++trials;
        amp_block_errors += t.amp_block_errors;
        phase_block_errors += !t.phase_ok;
        failures += !t.success;
    }
    void merge(const CampaignCounts& o) {
        trials += o.trials;
        amp_block_errors += o.amp_block_errors;
        phase_block_errors += o.phase_block_errors;
        failures += o.failures;
    }
    nlohmann::json to_json() const {
        return {{"trials", trials}, {"amp_block_errors", amp_block_errors}, {"phase_block_errors", phase_block_errors}, {"failures", failures}};
    }
    static CampaignCounts from_json(const nlohmann::json& j) {
        CampaignCounts c;
        c.trials = j.at("trials").get<std::uint64_t>();
        c.amp_block_errors = j.at("amp_block_errors").get<std::uint64_t>();
        c.phase_block_errors = j.at("phase_block_errors").get<std::uint64_t>();
        c.failures = j.at("failures").get<std::uint64_t>();
        return c;
    }
};

struct TrialReport {
    CampaignCounts counts;
    std::size_t M = 1;
    double eps1_hat = 0, eps1_stderr = 0;
    double eps2_hat = 0, eps2_stderr = 0;
    double block_error = 0, block_error_stderr = 0;
    double rate = 0;
    double fidelity_bound = 0;
    double wall_time = 0;
    std::uint64_t seed = 0;
};

inline double binomial_stderr(double p, double n) { return n > 0 ? std::sqrt(p * (1 - p) / n) : 0.0; }

inline TrialReport make_report(const CampaignCounts& c, const ConcatCode& code, std::uint64_t seed) {
    TrialReport r;
    r.counts = c;
    r.M = code.M;
    r.seed = seed;
    r.rate = rate_report(code);
    if (c.trials > 0) {
        const double t = static_cast<double>(c.trials), blocks = t * static_cast<double>(code.M);
        r.eps1_hat = static_cast<double>(c.amp_block_errors) / blocks;
        r.eps1_stderr = binomial_stderr(r.eps1_hat, blocks);
        r.eps2_hat = static_cast<double>(c.phase_block_errors) / t;
        r.eps2_stderr = binomial_stderr(r.eps2_hat, t);
        r.block_error = static_cast<double>(c.failures) / t;
        r.block_error_stderr = binomial_stderr(r.block_error, t);
    }
    r.fidelity_bound = fidelity_bound(r.eps1_hat, r.eps2_hat, code.M);
    return r;
}

inline nlohmann::json campaign_config_json(const CampaignConfig& cfg, const ConcatCode& code) {
    return {{"kind", to_string(cfg.kind)},
            {"channel", channel_to_json(code.channel)},
            {"L", code.L},
            {"M", code.M},
            {"K", code.K()},
            {"inner_frozen", code.inner_frozen.size()},
            {"outer_frozen", code.outer_frozen_total()},
            {"trials", cfg.trials},
            {"phase_mode", to_string(effective_mode(code.channel, cfg.trial.phase_mode))},
            {"n_samples", cfg.trial.n_samples},
            {"construction", code.construction}};
}

inline nlohmann::json report_to_json(const TrialReport& r, const nlohmann::json& config) {
    nlohmann::json j = {{"schema", 1},
                        {"config", config},
                        {"seed", r.seed},
                        {"metrics",
                         {{"eps1", r.eps1_hat},
                          {"eps1_stderr", r.eps1_stderr},
                          {"eps2", r.eps2_hat},
                          {"eps2_stderr", r.eps2_stderr},
                          {"block_error", r.block_error},
                          {"block_error_stderr", r.block_error_stderr},
                          {"rate", r.rate},
                          {"fidelity_bound", r.fidelity_bound},
                          {"trials", r.counts.trials}}},
                        {"counts", r.counts.to_json()},
                        {"success_criterion", "exact recovery of every amplitude block and every level value; degenerate recoveries count as failures"},
                        {"timing_s", nullptr}};
    if (r.wall_time > 0) j["timing_s"] = r.wall_time;
    return j;
}

/// Runs cfg.trials trials; trial t draws from substream(seed, t). With a
/// checkpoint path, progress is saved every checkpoint_every trials and a
/// matching sidecar is resumed from.
inline TrialReport run_campaign(const ConcatCode& code, const CampaignConfig& cfg) {
    code.validate();
    const auto start = std::chrono::steady_clock::now();
    const nlohmann::json echo = {{"config", campaign_config_json(cfg, code)}, {"seed", cfg.seed}, {"code", code_to_json(code)}};
    CampaignCounts total;
    if (!cfg.checkpoint.empty() && std::filesystem::exists(cfg.checkpoint)) {
        std::ifstream f(cfg.checkpoint);
        nlohmann::json cp = nlohmann::json::parse(f, nullptr, false);
        if (!cp.is_discarded() && cp.contains("echo") && cp["echo"] == echo) total = CampaignCounts::from_json(cp.at("counts"));
    }
    if (total.trials > cfg.trials) total = CampaignCounts{};
    const std::size_t every = std::max<std::size_t>(1, cfg.checkpoint_every);
    auto trial = [&](CampaignCounts& acc, std::size_t t) {
        const std::uint64_t s = substream(cfg.seed, t, 0x7);
        acc.add(cfg.kind == CampaignKind::Distill ? distill_trial(code, s, cfg.trial) : channel_coding_trial(code, s, cfg.trial));
    };
    while (total.trials < cfg.trials) {
        const std::size_t lo = total.trials, hi = std::min<std::size_t>(cfg.trials, lo + every);
        CampaignCounts part = parallel_trials<CampaignCounts>(
            lo, hi, cfg.jobs, [] { return CampaignCounts{}; }, trial, [](CampaignCounts& a, CampaignCounts& b) { a.merge(b); });
        total.merge(part);
        if (!cfg.checkpoint.empty()) {
            std::ofstream f(cfg.checkpoint);
            f << nlohmann::json{{"echo", echo}, {"counts", total.to_json()}}.dump() << '\n';
        }
        if (cfg.progress) cfg.progress(total.trials, cfg.trials);
    }
    TrialReport r = make_report(total, code, cfg.seed);
    if (cfg.record_timing) r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

struct SweepRow {
    std::string param;
    std::string value;
    TrialReport report;
};

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "param,value,eps1,eps2,rate,bound,trials\n";
    os.precision(10);
    for (auto& r : rows)
        os << r.param << ',' << r.value << ',' << r.report.eps1_hat << ',' << r.report.eps2_hat << ',' << r.report.rate << ','
           << r.report.fidelity_bound << ',' << r.report.counts.trials << '\n';
}

}  // namespace polarforge
