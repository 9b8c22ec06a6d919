#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bits.hpp"
#include "channels.hpp"
#include "llr.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace polarforge {

/// Counters for the elementary operations of transform and decoding.
struct OpCounts {
    std::uint64_t check = 0;  ///< check-node evaluations
    std::uint64_t bit = 0;    ///< bit-node evaluations
    std::uint64_t xors = 0;   ///< partial-sum and butterfly XORs

    std::uint64_t total() const { return check + bit + xors; }
    OpCounts& operator+=(const OpCounts& o) {
        check += o.check;
        bit += o.bit;
        xors += o.xors;
        return *this;
    }
};

// ---- transform ------------------------------------------------------------

/// In-place butterfly (a, b) -> (a^b, b) over all stages, natural order.
inline void transform_inplace(std::uint8_t* x, std::size_t n, OpCounts* ops = nullptr) {
    require_pow2(n, "transform");
    for (std::size_t h = 1; h < n; h <<= 1)
        for (std::size_t base = 0; base < n; base += 2 * h)
            for (std::size_t j = base; j < base + h; ++j) x[j] ^= x[j + h];
    if (ops) ops->xors += static_cast<std::uint64_t>(n / 2) * ilog2(n);
}

inline BitBlock transform(BitBlock x) {
    transform_inplace(x.data(), x.size());
    return x;
}

// ---- frozen sets ----------------------------------------------------------

struct FrozenSpec {
    std::vector<std::uint32_t> indices;  ///< sorted, distinct
    BitBlock values;                     ///< one per index

    std::size_t size() const { return indices.size(); }

    void validate(std::size_t n) const {
        if (values.size() != indices.size()) throw std::invalid_argument("frozen: values/indices length mismatch");
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k] >= n) throw std::out_of_range("frozen: index " + std::to_string(indices[k]) + " out of range");
            if (k > 0 && indices[k] <= indices[k - 1]) throw std::invalid_argument("frozen: indices must be sorted and distinct");
            if (values[k] > 1) throw std::invalid_argument("frozen: values must be bits");
        }
    }

    /// -1 for free positions, otherwise the frozen bit.
    std::vector<std::int8_t> lookup(std::size_t n) const {
        validate(n);
        std::vector<std::int8_t> t(n, -1);
        for (std::size_t k = 0; k < indices.size(); ++k) t[indices[k]] = static_cast<std::int8_t>(values[k]);
        return t;
    }

    bool contains(std::uint32_t i) const { return std::binary_search(indices.begin(), indices.end(), i); }

    static FrozenSpec with_values(std::vector<std::uint32_t> idx, const BitBlock& u) {
        FrozenSpec f;
        f.indices = std::move(idx);
        f.values.reserve(f.indices.size());
        for (auto i : f.indices) f.values.push_back(u.at(i));
        return f;
    }
};

inline std::vector<std::uint32_t> complement(const std::vector<std::uint32_t>& idx, std::size_t n) {
    std::vector<std::uint8_t> in(n, 0);
    for (auto i : idx) in.at(i) = 1;
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < n; ++i)
        if (!in[i]) out.push_back(i);
    return out;
}

struct DecodeOutcome {
    BitBlock u_hat;
    BitBlock x_hat;
    std::vector<double> per_index_llr;  ///< filled on request
};

// ---- successive cancellation ----------------------------------------------

/// Step-by-step SC engine: step_llr() gives LLR(U_i | committed prefix, evidence),
/// commit() fixes U_i. Total work over a block is O(N log N).
class ScDecoder {
public:
    explicit ScDecoder(std::size_t n) : n_(n) {
        require_pow2(n, "ScDecoder");
        depth_ = ilog2(n);
        llr_.resize(depth_ + 1);
        left_.resize(depth_ + 1);
        cur_.resize(depth_ + 1);
        for (unsigned d = 0; d <= depth_; ++d) {
            llr_[d].assign(n >> d, 0.0);
            left_[d].assign(n >> d, 0);
            cur_[d].assign(n >> d, 0);
        }
    }

    std::size_t size() const { return n_; }
    std::size_t step() const { return step_; }

    void reset(const double* evidence) {
        for (std::size_t j = 0; j < n_; ++j) llr_[0][j] = clamp_llr(evidence[j]);
        step_ = 0;
        ready_ = false;
    }
    void reset(const EvidenceVector& evidence) {
        if (evidence.size() != n_) throw std::invalid_argument("ScDecoder: evidence length mismatch");
        reset(evidence.data());
    }

    double step_llr() {
        if (step_ >= n_) throw std::logic_error("ScDecoder: block already complete");
        if (ready_) return llr_[depth_][0];
        unsigned start = 1;
        if (step_ > 0) {
            unsigned d = depth_ - static_cast<unsigned>(std::countr_zero(step_));
            const std::size_t half = n_ >> d;
            const double* up = llr_[d - 1].data();
            const std::uint8_t* v = left_[d].data();
            double* out = llr_[d].data();
            for (std::size_t j = 0; j < half; ++j) out[j] = bit_node(up[j], up[j + half], v[j]);
            if (ops) ops->bit += half;
            start = d + 1;
        }
        for (unsigned d = start; d <= depth_; ++d) {
            const std::size_t half = n_ >> d;
            const double* up = llr_[d - 1].data();
            double* out = llr_[d].data();
            for (std::size_t j = 0; j < half; ++j) out[j] = check_node(up[j], up[j + half]);
            if (ops) ops->check += half;
        }
        ready_ = true;
        return llr_[depth_][0];
    }

    void commit(std::uint8_t u) {
        if (!ready_) step_llr();
        unsigned d = depth_;
        std::size_t node = step_;
        cur_[d][0] = u & 1u;
        while (d > 0 && (node & 1u)) {
            const std::size_t half = n_ >> d;
            std::uint8_t* parent = cur_[d - 1].data();
            const std::uint8_t* l = left_[d].data();
            const std::uint8_t* r = cur_[d].data();
            for (std::size_t j = 0; j < half; ++j) {
                parent[j] = l[j] ^ r[j];
                parent[j + half] = r[j];
            }
            if (ops) ops->xors += half;
            --d;
            node >>= 1;
        }
        if (d > 0) std::copy(cur_[d].begin(), cur_[d].end(), left_[d].begin());
        ++step_;
        ready_ = false;
    }

    /// Re-encoded block; valid once every index is committed.
    const BitBlock& x_hat() const {
        if (step_ != n_) throw std::logic_error("ScDecoder: block not complete");
        return cur_[0];
    }

    OpCounts* ops = nullptr;

private:
    std::size_t n_;
    unsigned depth_ = 0;
    std::size_t step_ = 0;
    bool ready_ = false;
    std::vector<std::vector<double>> llr_;        // llr_[d]: current node at depth d
    std::vector<BitBlock> left_;                  // finished left sibling, re-encoded
    std::vector<BitBlock> cur_;                   // scratch for partial-sum propagation
};

inline DecodeOutcome sc_decode(ScDecoder& dec, const EvidenceVector& evidence, const FrozenSpec& frozen, bool record_llr = false) {
    const std::size_t n = dec.size();
    auto table = frozen.lookup(n);
    dec.reset(evidence);
    DecodeOutcome out;
    out.u_hat.resize(n);
    if (record_llr) out.per_index_llr.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double l = dec.step_llr();
        if (record_llr) out.per_index_llr[i] = l;
        std::uint8_t u = table[i] >= 0 ? static_cast<std::uint8_t>(table[i]) : hard_decision(l);
        out.u_hat[i] = u;
        dec.commit(u);
    }
    out.x_hat = dec.x_hat();
    return out;
}

inline DecodeOutcome sc_decode(const EvidenceVector& evidence, const FrozenSpec& frozen, bool record_llr = false) {
    require_pow2(evidence.size(), "sc_decode");
    ScDecoder dec(evidence.size());
    return sc_decode(dec, evidence, frozen, record_llr);
}

// ---- genie statistics -----------------------------------------------------

struct IndexStats {
    std::uint64_t trials = 0;
    std::vector<std::uint64_t> errors;    ///< hard decision differs from the true bit
    std::vector<std::uint64_t> failures;  ///< wrong, or LLR exactly 0

    std::vector<double> error_freq() const { return freq(errors); }
    std::vector<double> failure_freq() const { return freq(failures); }
    std::vector<double> stderr_of(const std::vector<double>& f) const {
        std::vector<double> s(f.size(), 0.0);
        if (trials == 0) return s;
        for (std::size_t i = 0; i < f.size(); ++i) s[i] = std::sqrt(f[i] * (1 - f[i]) / static_cast<double>(trials));
        return s;
    }

private:
    std::vector<double> freq(const std::vector<std::uint64_t>& c) const {
        std::vector<double> f(c.size(), 0.0);
        if (trials == 0) return f;
        for (std::size_t i = 0; i < c.size(); ++i) f[i] = static_cast<double>(c[i]) / static_cast<double>(trials);
        return f;
    }
};

inline void merge_stats(IndexStats& a, const IndexStats& b) {
    a.trials += b.trials;
    for (std::size_t i = 0; i < a.errors.size(); ++i) {
        a.errors[i] += b.errors[i];
        a.failures[i] += b.failures[i];
    }
}

/// Genie-aided SC over `trials` independent source/noise draws; trial t uses substream t.
inline IndexStats genie_index_stats(const BinaryView& view, std::size_t n, std::size_t trials, std::uint64_t seed, unsigned jobs = 1) {
    require_pow2(n, "genie_index_stats");
    if (trials == 0) throw std::invalid_argument("genie_index_stats: trials must be positive");
    struct Acc {
        IndexStats s;
        ScDecoder dec;
        BitBlock x;
        EvidenceVector ev;
    };
    auto make = [n] {
        Acc a{IndexStats{}, ScDecoder(n), {}, {}};
        a.s.errors.assign(n, 0);
        a.s.failures.assign(n, 0);
        return a;
    };
    auto body = [&](Acc& a, std::size_t t) {
        Rng rng(substream(seed, t));
        sample_view(view, n, rng, a.x, a.ev);
        BitBlock u = transform(a.x);
        a.dec.reset(a.ev);
        for (std::size_t i = 0; i < n; ++i) {
            double l = a.dec.step_llr();
            bool wrong = hard_decision(l) != u[i];
            a.s.errors[i] += wrong;
            a.s.failures[i] += wrong || l == 0.0;
            a.dec.commit(u[i]);
        }
        ++a.s.trials;
    };
    auto merge = [](Acc& a, Acc& b) { merge_stats(a.s, b.s); };
    return parallel_trials<Acc>(0, trials, jobs, make, body, merge).s;
}

// ---- source prior ---------------------------------------------------------

/// P(U_i = 1 | U^{i-1} = prefix) for an i.i.d. Bernoulli(source_prior) block of length n.
inline double conditional_prior(const BitBlock& prefix, std::size_t n, double source_prior) {
    require_pow2(n, "conditional_prior");
    if (prefix.size() >= n) throw std::invalid_argument("conditional_prior: prefix must be shorter than the block");
    if (source_prior == 0.5) return 0.5;
    ScDecoder dec(n);
    EvidenceVector ev(n, crossover_llr(source_prior));
    dec.reset(ev);
    for (auto b : prefix) dec.commit(b);
    return prob_one(dec.step_llr());
}

// ---- unknown positions ----------------------------------------------------

inline constexpr std::size_t kExhaustiveLimit = 4096;  // 2^12 assignments

namespace detail {

inline double log_sigmoid(double l) {
    // log(1/(1+e^{-l}))
    return l >= 0 ? -std::log1p(std::exp(-l)) : l - std::log1p(std::exp(l));
}

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

/// Accumulates equal-weight averages of P(U_i=0) and P(U_i=1) in log space.
struct ProbAverage {
    double log0 = -std::numeric_limits<double>::infinity();
    double log1 = -std::numeric_limits<double>::infinity();
    void add(double llr) {
        log0 = log_add(log0, log_sigmoid(llr));
        log1 = log_add(log1, log_sigmoid(-llr));
    }
    double llr() const { return clamp_llr(log0 - log1); }
};

}  // namespace detail

/// LLR of U_i with the unknown positions before i averaged out under equal weights.
///
/// Every index below i must be either frozen_known or unknown. Up to 2^12
/// assignments are enumerated; beyond that n_samples uniform assignments are drawn.
inline double marginalized_llr(const EvidenceVector& evidence, const FrozenSpec& frozen_known, const std::vector<std::uint32_t>& unknown_set,
                               std::size_t i, std::size_t n_samples, std::uint64_t seed) {
    const std::size_t n = evidence.size();
    require_pow2(n, "marginalized_llr");
    if (i >= n) throw std::out_of_range("marginalized_llr: index out of range");
    auto table = frozen_known.lookup(n);
    std::vector<std::uint8_t> unk(n, 0);
    for (auto k : unknown_set) {
        if (k >= n) throw std::out_of_range("marginalized_llr: unknown index out of range");
        if (table[k] >= 0) throw std::invalid_argument("marginalized_llr: unknown position carries a frozen value");
        unk[k] = 1;
    }
    if (unk[i]) throw std::invalid_argument("marginalized_llr: target index is unknown");
    std::vector<std::size_t> before;
    for (std::size_t k = 0; k < i; ++k) {
        if (unk[k]) before.push_back(k);
        else if (table[k] < 0) throw std::invalid_argument("marginalized_llr: index " + std::to_string(k) + " is neither known nor unknown");
    }
    const bool exhaustive = before.size() <= 12;
    if (!exhaustive && n_samples == 0) throw std::invalid_argument("marginalized_llr: n_samples = 0 with a non-enumerable unknown set");
    const std::size_t terms = exhaustive ? (std::size_t{1} << before.size()) : n_samples;

    ScDecoder dec(n);
    Rng rng(seed);
    detail::ProbAverage avg;
    BitBlock fill(n, 0);
    for (std::size_t t = 0; t < terms; ++t) {
        for (std::size_t b = 0; b < before.size(); ++b) fill[before[b]] = exhaustive ? ((t >> b) & 1u) : rng.bit();
        dec.reset(evidence);
        for (std::size_t k = 0; k < i; ++k) dec.commit(unk[k] ? fill[k] : static_cast<std::uint8_t>(table[k]));
        avg.add(dec.step_llr());
    }
    return avg.llr();
}

/// Fills unknown positions with uniform bits and runs SC. Only valid for a
/// symmetric (uniform) source; any other prior is rejected.
inline DecodeOutcome randomized_fill_decode(const EvidenceVector& evidence, const FrozenSpec& frozen_known, const std::vector<std::uint32_t>& unknown_set,
                                            std::uint64_t seed, double source_prior = 0.5) {
    if (source_prior != 0.5) throw std::invalid_argument("randomized_fill_decode: source is not symmetric");
    const std::size_t n = evidence.size();
    require_pow2(n, "randomized_fill_decode");
    frozen_known.validate(n);
    Rng rng(seed);
    std::vector<std::int8_t> table = frozen_known.lookup(n);
    for (auto k : unknown_set) {
        if (k >= n) throw std::out_of_range("randomized_fill_decode: unknown index out of range");
        if (table[k] >= 0) throw std::invalid_argument("randomized_fill_decode: unknown set overlaps frozen set");
    }
    std::vector<std::uint32_t> sorted_unknown = unknown_set;
    std::sort(sorted_unknown.begin(), sorted_unknown.end());
    for (auto k : sorted_unknown) table[k] = static_cast<std::int8_t>(rng.bit());
    FrozenSpec merged;
    for (std::uint32_t k = 0; k < n; ++k)
        if (table[k] >= 0) {
            merged.indices.push_back(k);
            merged.values.push_back(static_cast<std::uint8_t>(table[k]));
        }
    return sc_decode(evidence, merged);
}

/// Stepwise decoder that averages over unknown positions (equal weights).
///
/// Keeps one SC branch per assignment of the unknown positions seen so far. Branches
/// fork while their count stays within kExhaustiveLimit; after that a uniform
/// subsample of n_samples branches continues with random bits.
class MarginalizingDecoder {
public:
    MarginalizingDecoder(std::size_t n, std::size_t n_samples) : n_(n), n_samples_(std::max<std::size_t>(1, n_samples)), rng_(0) {
        require_pow2(n, "MarginalizingDecoder");
    }

    void reset(const double* evidence, std::uint64_t seed) {
        if (branches_.empty()) branches_.emplace_back(n_);
        branches_.erase(branches_.begin() + 1, branches_.end());
        branches_[0].ops = ops;
        branches_[0].reset(evidence);
        sampled_ = false;
        rng_ = Rng(seed);
        step_ = 0;
    }

    std::size_t step() const { return step_; }
    std::size_t branch_count() const { return branches_.size(); }
    bool sampled() const { return sampled_; }

    double step_llr() {
        detail::ProbAverage avg;
        for (auto& b : branches_) avg.add(b.step_llr());
        return avg.llr();
    }

    void commit(std::uint8_t u) {
        for (auto& b : branches_) b.commit(u);
        ++step_;
    }

    void skip_unknown() {
        if (!sampled_ && branches_.size() * 2 <= kExhaustiveLimit) {
            const std::size_t m = branches_.size();
            branches_.reserve(2 * m);
            for (std::size_t k = 0; k < m; ++k) branches_.push_back(branches_[k]);
            for (std::size_t k = 0; k < m; ++k) {
                branches_[k].commit(0);
                branches_[m + k].commit(1);
            }
        } else {
            if (!sampled_) {
                std::vector<ScDecoder> pick;
                pick.reserve(n_samples_);
                for (std::size_t s = 0; s < n_samples_; ++s) pick.push_back(branches_[rng_.below(branches_.size())]);
                branches_ = std::move(pick);
                sampled_ = true;
            }
            for (auto& b : branches_) b.commit(rng_.bit());
        }
        ++step_;
    }

    OpCounts* ops = nullptr;

private:
    std::size_t n_;
    std::size_t n_samples_;
    std::vector<ScDecoder> branches_;
    bool sampled_ = false;
    Rng rng_;
    std::size_t step_ = 0;
};

}  // namespace polarforge
