#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bits.hpp"
#include "polar_core.hpp"

namespace polarforge {

/// How an inner block treats positions whose values the decoder never sees.
enum class PhaseMode {
    Exact,         ///< values are disclosed (classical source coding, or a genie)
    Randomized,    ///< uniform random fill
    Marginalized,  ///< equal-weight average over fills
    Decide,        ///< the decoder's own hard decision
};

inline std::string to_string(PhaseMode m) {
    switch (m) {
        case PhaseMode::Exact: return "exact";
        case PhaseMode::Randomized: return "randomized";
        case PhaseMode::Marginalized: return "marginalized";
        case PhaseMode::Decide: return "decide";
    }
    return "?";
}

inline PhaseMode parse_phase_mode(const std::string& s) {
    if (s == "exact") return PhaseMode::Exact;
    if (s == "randomized") return PhaseMode::Randomized;
    if (s == "marginalized") return PhaseMode::Marginalized;
    if (s == "decide") return PhaseMode::Decide;
    throw std::invalid_argument("unknown phase mode '" + s + "' (expected exact|randomized|marginalized|decide)");
}

inline constexpr std::size_t kDefaultMarginalSamples = 64;

/// Decode-order description of a two-layer code.
///
/// Positions are "steps" of the inner SC decoder. With `reversed` set, block
/// position p holds qubit label L-1-p: the inner transform then acts as G^T on
/// labels, which is how the CNOT network acts on X-basis values.
struct LayerPlan {
    std::size_t L = 1, M = 1;
    bool reversed = false;
    std::vector<std::uint32_t> inner_steps;   ///< frozen steps, ascending
    std::vector<std::uint32_t> inner_slot;    ///< payload slot of each inner step
    std::vector<std::uint32_t> level_steps;   ///< step of level j, ascending
    std::vector<std::int32_t> role;           ///< per step: -1 - slot for frozen, else level index

    std::size_t K() const { return level_steps.size(); }
    std::size_t N() const { return L * M; }
    std::uint32_t label(std::uint32_t step) const { return reversed ? static_cast<std::uint32_t>(L - 1 - step) : step; }
    std::uint32_t step_of(std::uint32_t label) const { return reversed ? static_cast<std::uint32_t>(L - 1 - label) : label; }

    /// Copies block m of `in` (label order) into `out` (step order).
    template <class T>
    void gather(const T* in, std::size_t m, T* out) const {
        const T* b = in + m * L;
        if (reversed) std::reverse_copy(b, b + L, out);
        else std::copy(b, b + L, out);
    }
    template <class T>
    void scatter(const T* in, std::size_t m, T* out) const {
        T* b = out + m * L;
        if (reversed) std::reverse_copy(in, in + L, b);
        else std::copy(in, in + L, b);
    }
};

/// inner_labels: sorted frozen labels (payload slot order); level_labels: labels in level order.
inline LayerPlan make_plan(std::size_t L, std::size_t M, const std::vector<std::uint32_t>& inner_labels,
                           const std::vector<std::uint32_t>& level_labels, bool reversed) {
    require_pow2(L, "inner length");
    require_pow2(M, "outer length");
    LayerPlan p;
    p.L = L;
    p.M = M;
    p.reversed = reversed;
    p.role.assign(L, std::numeric_limits<std::int32_t>::min());
    for (std::size_t s = 0; s < inner_labels.size(); ++s) {
        if (inner_labels[s] >= L) throw std::out_of_range("plan: inner index out of range");
        if (s > 0 && inner_labels[s] <= inner_labels[s - 1]) throw std::invalid_argument("plan: inner indices must be sorted");
        p.role[p.step_of(inner_labels[s])] = -1 - static_cast<std::int32_t>(s);
    }
    for (std::size_t j = 0; j < level_labels.size(); ++j) {
        if (level_labels[j] >= L) throw std::out_of_range("plan: level position out of range");
        auto st = p.step_of(level_labels[j]);
        if (p.role[st] != std::numeric_limits<std::int32_t>::min()) throw std::invalid_argument("plan: level order is not a bijection onto the non-frozen positions");
        p.role[st] = static_cast<std::int32_t>(j);
        p.level_steps.push_back(st);
    }
    for (std::size_t st = 0; st < L; ++st)
        if (p.role[st] == std::numeric_limits<std::int32_t>::min()) throw std::invalid_argument("plan: level order does not cover every non-frozen position");
    if (!std::is_sorted(p.level_steps.begin(), p.level_steps.end()))
        throw std::invalid_argument("plan: levels must follow the inner decoding order");
    for (std::uint32_t st = 0; st < L; ++st)
        if (p.role[st] < 0) {
            p.inner_steps.push_back(st);
            p.inner_slot.push_back(static_cast<std::uint32_t>(-1 - p.role[st]));
        }
    return p;
}

/// One inner block's decoder with the chosen handling of frozen steps whose
/// values are unobserved.
class InnerStepper {
public:
    InnerStepper(std::size_t L, PhaseMode mode, std::size_t n_samples = kDefaultMarginalSamples) : mode_(mode), sc_(L), rng_(0) {
        if (mode == PhaseMode::Marginalized) marg_.emplace(L, n_samples);
    }

    void set_ops(OpCounts* ops) {
        sc_.ops = ops;
        if (marg_) marg_->ops = ops;
    }

    void reset(const double* evidence, std::uint64_t seed) {
        if (marg_) marg_->reset(evidence, seed);
        else sc_.reset(evidence);
        rng_ = Rng(seed);
    }

    double step_llr() { return marg_ ? marg_->step_llr() : sc_.step_llr(); }

    void commit(std::uint8_t u) {
        if (marg_) marg_->commit(u);
        else sc_.commit(u);
    }

    /// Frozen step. `value` is used in Exact mode and ignored otherwise.
    void frozen(std::uint8_t value) {
        switch (mode_) {
            case PhaseMode::Exact: sc_.commit(value); break;
            case PhaseMode::Randomized: sc_.commit(rng_.bit()); break;
            case PhaseMode::Marginalized: marg_->skip_unknown(); break;
            case PhaseMode::Decide: sc_.commit(hard_decision(sc_.step_llr())); break;
        }
    }

    std::size_t step() const { return marg_ ? marg_->step() : sc_.step(); }

    /// Re-encoded block of the plain SC branch (not defined in Marginalized mode).
    const BitBlock& x_hat() const {
        if (marg_) throw std::logic_error("InnerStepper: no single estimate in marginalized mode");
        return sc_.x_hat();
    }

private:
    PhaseMode mode_;
    ScDecoder sc_;
    std::optional<MarginalizingDecoder> marg_;
    Rng rng_;
};

}  // namespace polarforge
