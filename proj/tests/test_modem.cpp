#include <doctest.h>

#include <cmath>

#include "cfidd/modem.hpp"
#include "cfidd/rng.hpp"

using namespace cfidd;

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

TEST_SUITE("modem") {

TEST_CASE("Gray labeling: first bit sets the real sign, bit 0 maps to +") {
    const Constellation& c = qpsk();
    CHECK(std::abs(c.map(0, 0) - cplx{kInvSqrt2, kInvSqrt2}) < 1e-15);
    CHECK(std::abs(c.map(0, 1) - cplx{kInvSqrt2, -kInvSqrt2}) < 1e-15);
    CHECK(std::abs(c.map(1, 0) - cplx{-kInvSqrt2, kInvSqrt2}) < 1e-15);
    CHECK(std::abs(c.map(1, 1) - cplx{-kInvSqrt2, -kInvSqrt2}) < 1e-15);
    for (std::size_t i = 0; i < Constellation::kSize; ++i) {
        CHECK(std::abs(c.point(i)) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(Constellation::bit(i, 0) == ((c.point(i).real() > 0) ? 0 : 1));
        CHECK(Constellation::bit(i, 1) == ((c.point(i).imag() > 0) ? 0 : 1));
    }
}

TEST_CASE("adjacent constellation points differ in exactly one bit") {
    const Constellation& c = qpsk();
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) {
            const int hamming = (Constellation::bit(i, 0) != Constellation::bit(j, 0)) +
                                (Constellation::bit(i, 1) != Constellation::bit(j, 1));
            const double dist = std::abs(c.point(i) - c.point(j));
            if (hamming == 1) CHECK(dist == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
            if (hamming == 2) CHECK(dist == doctest::Approx(2.0).epsilon(1e-12));
        }
}

TEST_CASE("nearest_index / quantize / demap_hard pick the right quadrant") {
    const Constellation& c = qpsk();
    CHECK(c.nearest_index({0.2, -3.0}) == c.nearest_index(c.map(0, 1)));
    CHECK(c.quantize({-0.1, 0.9}) == c.map(1, 0));
    const auto bits = c.demap_hard({-2.0, -0.5});
    CHECK(bits[0] == 1);
    CHECK(bits[1] == 1);
}

TEST_CASE("modulate consumes bits first-bit-first") {
    const auto syms = modulate({0, 0, 1, 0, 0, 1});
    REQUIRE(syms.size() == 3);
    const Constellation& c = qpsk();
    CHECK(syms[0] == c.map(0, 0));
    CHECK(syms[1] == c.map(1, 0));
    CHECK(syms[2] == c.map(0, 1));
    CHECK_THROWS_AS(modulate({0, 1, 0}), contract_error);
}

TEST_CASE("apriori_probs closed form at L = (2, 0)") {
    const auto p = apriori_probs(2.0, 0.0);
    CHECK(p[0] == doctest::Approx(sigmoid(2.0) / 2).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(sigmoid(2.0) / 2).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(sigmoid(-2.0) / 2).epsilon(1e-12));
    CHECK(p[3] == doctest::Approx(sigmoid(-2.0) / 2).epsilon(1e-12));
}

TEST_CASE("apriori_probs sum to one and survive huge LLRs") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const double l0 = (rng.uniform01() - 0.5) * 40;
        const double l1 = (rng.uniform01() - 0.5) * 40;
        const auto p = apriori_probs(l0, l1);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(std::isfinite(v));
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto p = apriori_probs(1e18, -1e18);
    CHECK(std::isfinite(p[0]));
    CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-12));  // b0 = 0, b1 = 1 certain
}

TEST_CASE("soft_symbol_stats closed form at L = (2, 0)") {
    const SoftStats st = soft_symbol_stats(2.0, 0.0);
    CHECK(st.mean.real() == doctest::Approx(std::tanh(1.0) * kInvSqrt2).epsilon(1e-12));
    CHECK(st.mean.imag() == doctest::Approx(0.0).epsilon(1).scale(1e-12));
    CHECK(st.var == doctest::Approx(1.0 - std::tanh(1.0) * std::tanh(1.0) / 2).epsilon(1e-12));
    // frozen values of the expressions above
    CHECK(st.mean.real() == doctest::Approx(0.5385283921883663).epsilon(1e-12));
    CHECK(st.var == doctest::Approx(0.7099871708070131).epsilon(1e-12));
}

TEST_CASE("soft_symbol_stats matches the direct sum over the constellation") {
    Rng rng(4);
    const Constellation& c = qpsk();
    for (int trial = 0; trial < 100; ++trial) {
        const double l0 = (rng.uniform01() - 0.5) * 30;
        const double l1 = (rng.uniform01() - 0.5) * 30;
        const auto p = apriori_probs(l0, l1);
        cplx mean{};
        for (std::size_t i = 0; i < 4; ++i) mean += p[i] * c.point(i);
        double var = 0.0;
        for (std::size_t i = 0; i < 4; ++i) var += p[i] * std::norm(c.point(i) - mean);
        const SoftStats st = soft_symbol_stats(l0, l1);
        CHECK(std::abs(st.mean - mean) < 1e-12);
        CHECK(st.var == doctest::Approx(var).epsilon(1e-10));
    }
}

TEST_CASE("soft_symbol_stats antisymmetry and zero/certain priors") {
    const SoftStats z = soft_symbol_stats(0.0, 0.0);
    CHECK(std::abs(z.mean) < 1e-15);
    CHECK(z.var == doctest::Approx(1.0).epsilon(1e-15));

    const SoftStats a = soft_symbol_stats(3.0, -1.5);
    const SoftStats b = soft_symbol_stats(-3.0, 1.5);
    CHECK(std::abs(a.mean + b.mean) < 1e-14);
    CHECK(a.var == doctest::Approx(b.var).epsilon(1e-14));

    const SoftStats sure = soft_symbol_stats(1e9, 1e9);  // saturated internally
    CHECK(std::abs(sure.mean - qpsk().map(0, 0)) < 1e-12);
    CHECK(sure.var < 1e-12);
}

TEST_CASE("saturate_llr clamps symmetrically at the documented bound") {
    CHECK(saturate_llr(1e9) == kLlrSat);
    CHECK(saturate_llr(-1e9) == -kLlrSat);
    CHECK(saturate_llr(12.5) == 12.5);
}

}  // TEST_SUITE("modem")
