#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cfidd/numerics.hpp"

namespace cfidd {

// All LLRs use L = log P(bit = 0) / P(bit = 1) and are clamped to +/- kLlrSat
// before any exponentiation.
inline constexpr double kLlrSat = 60.0;

inline double saturate_llr(double l) {
    if (l > kLlrSat) return kLlrSat;
    if (l < -kLlrSat) return -kLlrSat;
    return l;
}

// Gray-labeled unit-energy QPSK. First bit selects the real sign, second bit
// the imaginary sign; bit 0 maps to +1, so label (0,0) -> (1+i)/sqrt(2).
class Constellation {
  public:
    static constexpr int kBitsPerSymbol = 2;
    static constexpr std::size_t kSize = 4;

    Constellation();

    const std::array<cplx, kSize>& points() const { return points_; }
    cplx point(std::size_t index) const { return points_[index]; }

    // bit l of the label of point `index` (0 or 1)
    static int bit(std::size_t index, int l) { return static_cast<int>((index >> (1 - l)) & 1u); }

    cplx map(int b0, int b1) const { return points_[(static_cast<std::size_t>(b0) << 1) | static_cast<std::size_t>(b1)]; }

    std::size_t nearest_index(cplx s) const;
    cplx quantize(cplx s) const { return points_[nearest_index(s)]; }
    std::array<int, 2> demap_hard(cplx s) const;

  private:
    std::array<cplx, kSize> points_;
};

const Constellation& qpsk();

// Bits (0/1), length divisible by 2, consumed first-bit-first per symbol.
std::vector<cplx> modulate(const std::vector<std::uint8_t>& bits);

// Per-point symbol prior P(s) = prod_l 1 / (1 + exp(-s^{b_l} L_l)), where
// s^{b_l} is +1 when bit l of the label is 0 and -1 otherwise.
std::array<double, Constellation::kSize> apriori_probs(double l0, double l1);

struct SoftStats {
    cplx mean;    // sum_s s P(s)
    double var;   // sum_s |s - mean|^2 P(s)
};

SoftStats soft_symbol_stats(double l0, double l1);

}  // namespace cfidd
