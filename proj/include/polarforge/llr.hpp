#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace polarforge {

/// Per-position log P(0)/P(1); erasures are exactly 0.
using EvidenceVector = std::vector<double>;

inline constexpr double kLlrClamp = 40.0;

inline double clamp_llr(double v) {
    if (std::isnan(v)) return 0.0;
    return std::clamp(v, -kLlrClamp, kLlrClamp);
}

/// log((1-c)/c), clamped; c = 0.5 gives 0.
inline double crossover_llr(double c) {
    if (c <= 0.0) return kLlrClamp;
    if (c >= 1.0) return -kLlrClamp;
    return clamp_llr(std::log1p(-c) - std::log(c));
}

/// Check node 2*atanh(tanh(a/2)*tanh(b/2)), written in its log-sum form so it
/// stays finite for saturated inputs.
inline double check_node(double a, double b) {
    double s = ((a < 0) != (b < 0)) ? -1.0 : 1.0;
    double m = std::min(std::fabs(a), std::fabs(b));
    // log1p(e^-d) is below 2^-52 once d > 36
    auto corr = [](double d) { return d > 36.0 ? 0.0 : std::log1p(std::exp(-d)); };
    double v = s * m + corr(std::fabs(a + b)) - corr(std::fabs(a - b));
    return clamp_llr(v);
}

/// Bit node (-1)^u * a + b.
inline double bit_node(double a, double b, std::uint8_t u) { return clamp_llr(u ? b - a : b + a); }

/// P(bit = 1) from an LLR.
inline double prob_one(double llr) { return 1.0 / (1.0 + std::exp(llr)); }

inline std::uint8_t hard_decision(double llr) { return llr >= 0.0 ? 0 : 1; }

}  // namespace polarforge
