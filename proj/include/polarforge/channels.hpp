#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bits.hpp"
#include "llr.hpp"
#include "rng.hpp"

namespace polarforge {

struct PauliParams {
    double p_i = 1, p_x = 0, p_y = 0, p_z = 0;

    void validate() const {
        for (double v : {p_i, p_x, p_y, p_z})
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("pauli: probabilities must lie in [0,1]");
        if (std::fabs(p_i + p_x + p_y + p_z - 1.0) > 1e-12) throw std::invalid_argument("pauli: probabilities must sum to 1");
    }

    static PauliParams depolarizing(double p) { return {1.0 - p, p / 3, p / 3, p / 3}; }
    static PauliParams dephasing(double p) { return {1.0 - p, 0, 0, p}; }
    static PauliParams bit_flip(double p) { return {1.0 - p, p, 0, 0}; }
};

struct ErasureParams {
    double p = 0;
    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("erasure: p must lie in [0,1]");
    }
};

/// Classical binary symmetric channel with uniform input.
struct BscParams {
    double p = 0;
    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bsc: p must lie in [0,1]");
    }
};

/// Classical binary erasure channel with uniform input.
struct BecParams {
    double p = 0;
    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bec: p must lie in [0,1]");
    }
};

using ChannelModel = std::variant<BscParams, BecParams, PauliParams, ErasureParams>;

inline bool is_quantum(const ChannelModel& m) {
    return std::holds_alternative<PauliParams>(m) || std::holds_alternative<ErasureParams>(m);
}

inline void validate(const ChannelModel& m) {
    std::visit([](const auto& p) { p.validate(); }, m);
}

/// Binary source X ~ Bernoulli(prior_one) seen through a BSC.
struct BinarySymmetricView {
    double crossover = 0;
    double prior_one = 0.5;
};

/// Uniform binary source seen through an erasure channel.
struct BinaryErasureView {
    double erasure = 0;
};

using BinaryView = std::variant<BinarySymmetricView, BinaryErasureView>;

struct ConditionalPhaseView {
    double crossover_given_ex0 = 0;
    double crossover_given_ex1 = 0;
};

struct ChannelMetrics {
    double h_amp = 0;
    double h_phase_given_amp = 0;
    double z_param = 0;
    double coherent_info = 0;
};

inline double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

inline double shannon_entropy(std::initializer_list<double> ps) {
    double h = 0;
    for (double p : ps)
        if (p > 0) h -= p * std::log2(p);
    return h;
}

// ---- samplers -------------------------------------------------------------

inline void sample_pauli(const PauliParams& p, std::size_t n, Rng& rng, BitBlock& e_x, BitBlock& e_z) {
    e_x.assign(n, 0);
    e_z.assign(n, 0);
    const double t1 = p.p_i, t2 = t1 + p.p_x, t3 = t2 + p.p_y;
    for (std::size_t j = 0; j < n; ++j) {
        double u = rng.uniform();
        if (u < t1) continue;
        if (u < t2) {
            e_x[j] = 1;
        } else if (u < t3) {
            e_x[j] = 1;
            e_z[j] = 1;
        } else {
            e_z[j] = 1;
        }
    }
}

inline std::pair<BitBlock, BitBlock> sample_pauli(const PauliParams& p, std::size_t n, std::uint64_t seed) {
    p.validate();
    if (n == 0) throw std::invalid_argument("sample_pauli: n must be positive");
    Rng rng(seed);
    std::pair<BitBlock, BitBlock> out;
    sample_pauli(p, n, rng, out.first, out.second);
    return out;
}

inline void sample_flags(double p, std::size_t n, Rng& rng, BitBlock& flags) {
    flags.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) flags[j] = rng.bernoulli(p);
}

inline BitBlock sample_erasure(const ErasureParams& p, std::size_t n, std::uint64_t seed) {
    p.validate();
    if (n == 0) throw std::invalid_argument("sample_erasure: n must be positive");
    Rng rng(seed);
    BitBlock flags;
    sample_flags(p.p, n, rng, flags);
    return flags;
}

// ---- views ----------------------------------------------------------------

inline BinarySymmetricView amplitude_view(const PauliParams& p) {
    p.validate();
    return {p.p_x + p.p_y, 0.5};
}

inline ConditionalPhaseView phase_view(const PauliParams& p) {
    p.validate();
    double d0 = p.p_i + p.p_z, d1 = p.p_x + p.p_y;
    return {d0 > 0 ? p.p_z / d0 : 0.0, d1 > 0 ? p.p_y / d1 : 0.0};
}

/// The binary view the inner (amplitude) layer decodes against.
inline BinaryView binary_view(const ChannelModel& m) {
    validate(m);
    if (auto* b = std::get_if<BscParams>(&m)) return BinarySymmetricView{b->p, 0.5};
    if (auto* b = std::get_if<BecParams>(&m)) return BinaryErasureView{b->p};
    if (auto* q = std::get_if<PauliParams>(&m)) return amplitude_view(*q);
    return BinaryErasureView{std::get<ErasureParams>(m).p};
}

inline bool view_is_symmetric(const BinaryView& v) {
    if (auto* s = std::get_if<BinarySymmetricView>(&v)) return s->prior_one == 0.5;
    return true;
}

/// Draws a source block x and the posterior evidence log P(x_j=0|y_j)/P(x_j=1|y_j).
inline void sample_view(const BinaryView& view, std::size_t n, Rng& rng, BitBlock& x, EvidenceVector& ev) {
    x.resize(n);
    ev.resize(n);
    if (auto* s = std::get_if<BinarySymmetricView>(&view)) {
        const double prior = crossover_llr(s->prior_one);
        const double ch = crossover_llr(s->crossover);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = s->prior_one == 0.5 ? rng.bit() : rng.bernoulli(s->prior_one);
            std::uint8_t y = x[j] ^ rng.bernoulli(s->crossover);
            ev[j] = clamp_llr(prior + (y ? -ch : ch));
        }
    } else {
        const double p = std::get<BinaryErasureView>(view).erasure;
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = rng.bit();
            ev[j] = rng.bernoulli(p) ? 0.0 : (x[j] ? -kLlrClamp : kLlrClamp);
        }
    }
}

/// Evidence on X-basis values from the phase observation obs = x ^ e_z, given the
/// amplitude error pattern e_x the receiver believes.
inline void phase_evidence(const PauliParams& p, const BitBlock& obs, const BitBlock& e_x, EvidenceVector& ev) {
    const ConditionalPhaseView v = phase_view(p);
    const double l0 = crossover_llr(v.crossover_given_ex0), l1 = crossover_llr(v.crossover_given_ex1);
    ev.resize(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
        double l = e_x[j] ? l1 : l0;
        ev[j] = obs[j] ? -l : l;
    }
}

/// Erased positions carry no evidence; the rest are noiseless.
inline void erasure_evidence(const BitBlock& obs, const BitBlock& flags, EvidenceVector& ev) {
    ev.resize(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) ev[j] = flags[j] ? 0.0 : (obs[j] ? -kLlrClamp : kLlrClamp);
}

// ---- metrics --------------------------------------------------------------

inline ChannelMetrics closed_form_metrics(const ChannelModel& m) {
    validate(m);
    ChannelMetrics r;
    if (auto* b = std::get_if<BscParams>(&m)) {
        // classical channels: entropies of the uniform input given the output
        r.h_amp = binary_entropy(b->p);
        r.z_param = 2 * std::sqrt(b->p * (1 - b->p));
        r.coherent_info = 1 - r.h_amp;
    } else if (auto* e = std::get_if<BecParams>(&m)) {
        r.h_amp = e->p;
        r.z_param = e->p;
        r.coherent_info = 1 - e->p;
    } else if (auto* q = std::get_if<PauliParams>(&m)) {
        double c = q->p_x + q->p_y;
        double h = shannon_entropy({q->p_i, q->p_x, q->p_y, q->p_z});
        r.h_amp = binary_entropy(c);
        r.h_phase_given_amp = h - r.h_amp;
        r.z_param = 2 * std::sqrt(c * (1 - c));
        r.coherent_info = 1 - h;
    } else {
        double p = std::get<ErasureParams>(m).p;
        r.h_amp = p;
        r.h_phase_given_amp = p;
        r.z_param = p;
        r.coherent_info = 1 - 2 * p;
    }
    return r;
}

// ---- serialization --------------------------------------------------------

inline nlohmann::json channel_to_json(const ChannelModel& m) {
    using nlohmann::json;
    if (auto* b = std::get_if<BscParams>(&m)) return json{{"kind", "bsc"}, {"p", b->p}};
    if (auto* b = std::get_if<BecParams>(&m)) return json{{"kind", "bec"}, {"p", b->p}};
    if (auto* q = std::get_if<PauliParams>(&m))
        return json{{"kind", "pauli"}, {"p", json::array({q->p_i, q->p_x, q->p_y, q->p_z})}};
    return json{{"kind", "erasure"}, {"p", std::get<ErasureParams>(m).p}};
}

inline ChannelModel channel_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("p")) throw std::invalid_argument("channel: expected {\"kind\",\"p\"}");
    const std::string kind = j.at("kind").get<std::string>();
    ChannelModel m;
    if (kind == "pauli") {
        const auto& p = j.at("p");
        if (!p.is_array() || p.size() != 4) throw std::invalid_argument("channel: pauli needs four probabilities");
        m = PauliParams{p[0].get<double>(), p[1].get<double>(), p[2].get<double>(), p[3].get<double>()};
    } else {
        if (!j.at("p").is_number()) throw std::invalid_argument("channel: p must be a number");
        double p = j.at("p").get<double>();
        if (kind == "erasure") m = ErasureParams{p};
        else if (kind == "bsc") m = BscParams{p};
        else if (kind == "bec") m = BecParams{p};
        else throw std::invalid_argument("channel: unknown kind '" + kind + "'");
    }
    validate(m);
    return m;
}

/// Parses "depolarizing:0.05", "dephasing:p", "bitflip:p", "pauli:pI,pX,pY,pZ",
/// "erasure:p", "bsc:p", "bec:p", "identity", or an inline JSON object.
inline ChannelModel parse_channel_spec(const std::string& spec) {
    if (!spec.empty() && spec.front() == '{') return channel_from_json(nlohmann::json::parse(spec));
    if (spec == "identity" || spec == "noiseless") return PauliParams{};
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("channel spec '" + spec + "': expected kind:value");
    std::string kind = spec.substr(0, colon);
    std::vector<double> vals;
    std::stringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("");
        } catch (...) {
            throw std::invalid_argument("channel spec '" + spec + "': bad number '" + tok + "'");
        }
    }
    auto one = [&]() {
        if (vals.size() != 1) throw std::invalid_argument("channel spec '" + spec + "': expected one parameter");
        return vals[0];
    };
    ChannelModel m;
    if (kind == "depolarizing") m = PauliParams::depolarizing(one());
    else if (kind == "dephasing") m = PauliParams::dephasing(one());
    else if (kind == "bitflip") m = PauliParams::bit_flip(one());
    else if (kind == "pauli") {
        if (vals.size() != 4) throw std::invalid_argument("channel spec '" + spec + "': pauli needs four values");
        m = PauliParams{vals[0], vals[1], vals[2], vals[3]};
    } else if (kind == "erasure") m = ErasureParams{one()};
    else if (kind == "bsc") m = BscParams{one()};
    else if (kind == "bec") m = BecParams{one()};
    else throw std::invalid_argument("channel spec '" + spec + "': unknown kind");
    validate(m);
    return m;
}

}  // namespace polarforge
