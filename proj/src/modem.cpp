#include "cfidd/modem.hpp"

#include <cmath>

namespace cfidd {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;

// log(1 + exp(x)) without overflow
double softplus(double x) {
    if (x > 36.0) return x;
    if (x < -36.0) return std::exp(x);
    return std::log1p(std::exp(x));
}
}  // namespace

Constellation::Constellation() {
    for (std::size_t idx = 0; idx < kSize; ++idx) {
        const double re = bit(idx, 0) == 0 ? kInvSqrt2 : -kInvSqrt2;
        const double im = bit(idx, 1) == 0 ? kInvSqrt2 : -kInvSqrt2;
        points_[idx] = {re, im};
    }
}

const Constellation& qpsk() {
    static const Constellation c;
    return c;
}

std::size_t Constellation::nearest_index(cplx s) const {
    // signs decide; ties (exactly zero component) go to bit 0, i.e. +
    const std::size_t b0 = s.real() < 0.0 ? 1 : 0;
    const std::size_t b1 = s.imag() < 0.0 ? 1 : 0;
    return (b0 << 1) | b1;
}

std::array<int, 2> Constellation::demap_hard(cplx s) const {
    const std::size_t idx = nearest_index(s);
    return {bit(idx, 0), bit(idx, 1)};
}

std::vector<cplx> modulate(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw contract_error("modulate: bit count must be even");
    const Constellation& c = qpsk();
    std::vector<cplx> out(bits.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.map(bits[2 * i], bits[2 * i + 1]);
    return out;
}

std::array<double, Constellation::kSize> apriori_probs(double l0, double l1) {
    const double l[2] = {saturate_llr(l0), saturate_llr(l1)};
    const Constellation& c = qpsk();
    std::array<double, Constellation::kSize> p{};
    for (std::size_t idx = 0; idx < Constellation::kSize; ++idx) {
        double lp = 0.0;
        for (int b = 0; b < 2; ++b) {
            const double sgn = c.bit(idx, b) == 0 ? 1.0 : -1.0;
            lp -= softplus(-sgn * l[b]);  // log of 1/(1+exp(-sgn*L))
        }
        p[idx] = std::exp(lp);
    }
    return p;
}

SoftStats soft_symbol_stats(double l0, double l1) {
    const auto p = apriori_probs(l0, l1);
    const Constellation& c = qpsk();
    cplx mean{};
    for (std::size_t idx = 0; idx < Constellation::kSize; ++idx) mean += p[idx] * c.point(idx);
    double var = 0.0;
    for (std::size_t idx = 0; idx < Constellation::kSize; ++idx) var += p[idx] * std::norm(c.point(idx) - mean);
    return {mean, var};
}

}  // namespace cfidd
