#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cfidd/ldpc.hpp"
#include "cfidd/rng.hpp"

using namespace cfidd;

namespace {

std::vector<std::uint8_t> random_message(const LinearCode& code, Rng& rng) {
    std::vector<std::uint8_t> msg(code.k());
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng.uniform_below(2));
    return msg;
}

// dense GF(2) row reduction, independent of the builder's bookkeeping
std::size_t gf2_rank(const LinearCode& code) {
    std::vector<std::vector<std::uint8_t>> rows(code.m, std::vector<std::uint8_t>(code.n, 0));
    for (std::size_t j = 0; j < code.m; ++j)
        for (int v : code.check_vars[j]) rows[j][static_cast<std::size_t>(v)] = 1;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < code.n && rank < code.m; ++col) {
        std::size_t pivot = rank;
        while (pivot < code.m && !rows[pivot][col]) ++pivot;
        if (pivot == code.m) continue;
        std::swap(rows[rank], rows[pivot]);
        for (std::size_t r = 0; r < code.m; ++r)
            if (r != rank && rows[r][col])
                for (std::size_t c = col; c < code.n; ++c) rows[r][c] ^= rows[rank][c];
        ++rank;
    }
    return rank;
}

// single parity check over 3 bits, built by hand; decode needs only the graph
LinearCode spc3() {
    LinearCode code;
    code.n = 3;
    code.m = 1;
    code.check_vars = {{0, 1, 2}};
    code.var_checks = {{0}, {0}, {0}};
    return code;
}

}  // namespace

TEST_SUITE("ldpc") {

TEST_CASE("box_plus frozen oracles") {
    CHECK(box_plus(-1.0, 3.0) == doctest::Approx(-0.8912219168748371).epsilon(1e-12));
    CHECK(box_plus(1.0, 2.0) == doctest::Approx(0.735325664055519).epsilon(1e-12));
    CHECK(box_plus(0.5, -0.25) == doctest::Approx(-0.06093158623605637).epsilon(1e-12));
}

TEST_CASE("box_plus equals the tanh and log-domain closed forms") {
    Rng rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        const double a = (rng.uniform01() - 0.5) * 40.0;
        const double b = (rng.uniform01() - 0.5) * 40.0;
        // log((1 + e^(a+b)) / (e^a + e^b)), stable at the corners
        const double log_form = std::log1p(std::exp(a + b)) -
                                (std::max(a, b) + std::log1p(std::exp(-std::abs(a - b))));
        CHECK(std::abs(box_plus(a, b) - log_form) < 1e-10);
        // the naive tanh form itself loses ~ulp/delta accuracy when both
        // inputs are large, so it only rates a loose tolerance here
        const double tanh_form = 2.0 * std::atanh(std::tanh(a / 2) * std::tanh(b / 2));
        CHECK(std::abs(box_plus(a, b) - tanh_form) < 1e-7);
    }
}

TEST_CASE("box_plus algebraic properties") {
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = (rng.uniform01() - 0.5) * 30.0;
        const double b = (rng.uniform01() - 0.5) * 30.0;
        const double r = box_plus(a, b);
        CHECK(r == box_plus(b, a));                                     // commutative
        CHECK(std::abs(r) <= std::min(std::abs(a), std::abs(b)) + 1e-12);  // contraction
        if (a != 0.0 && b != 0.0)
            CHECK(std::copysign(1.0, r) == std::copysign(1.0, a) * std::copysign(1.0, b));
        CHECK(box_plus(a, 0.0) == 0.0);                                 // annihilator
        CHECK(std::abs(box_plus(a, 1e9) - a) < 1e-9);                   // near-identity
        CHECK(std::abs(box_plus(a, b) + box_plus(-a, b)) < 1e-12);      // antisymmetry
    }
}

TEST_CASE("build_ldpc produces a regular full-rank graph") {
    const LinearCode code = build_ldpc(256, 128, 1);
    REQUIRE(code.n == 256);
    REQUIRE(code.m == 128);
    CHECK(code.k() == 128);
    CHECK(code.rate() == doctest::Approx(0.5));
    for (const auto& vc : code.var_checks) CHECK(vc.size() == 3);
    for (const auto& cv : code.check_vars) CHECK(cv.size() == 6);
    // no duplicate edges: adjacency lists are strictly ascending
    for (const auto& cv : code.check_vars)
        CHECK(std::adjacent_find(cv.begin(), cv.end()) == cv.end());
    CHECK(gf2_rank(code) == 128);
    CHECK(code.message_positions.size() == 128);
    CHECK(code.parity_positions.size() == 128);
}

TEST_CASE("build_ldpc is deterministic in the seed") {
    const LinearCode a = build_ldpc(128, 64, 5);
    const LinearCode b = build_ldpc(128, 64, 5);
    const LinearCode c = build_ldpc(128, 64, 6);
    CHECK(a.check_vars == b.check_vars);
    CHECK(a.check_vars != c.check_vars);
}

TEST_CASE("encode is systematic and satisfies every check") {
    const LinearCode code = build_ldpc(128, 64, 2);
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto msg = random_message(code, rng);
        const auto cw = encode(code, msg);
        REQUIRE(cw.size() == code.n);
        CHECK(parity_ok(code, cw));
        for (std::size_t i = 0; i < msg.size(); ++i)
            CHECK(cw[static_cast<std::size_t>(code.message_positions[i])] == msg[i]);
    }
    CHECK_THROWS_AS(encode(code, std::vector<std::uint8_t>(3)), contract_error);
}

TEST_CASE("encoding is linear over GF(2)") {
    const LinearCode code = build_ldpc(64, 32, 3);
    Rng rng(8);
    const auto m1 = random_message(code, rng);
    const auto m2 = random_message(code, rng);
    std::vector<std::uint8_t> mx(code.k());
    for (std::size_t i = 0; i < mx.size(); ++i) mx[i] = m1[i] ^ m2[i];
    const auto c1 = encode(code, m1);
    const auto c2 = encode(code, m2);
    const auto cx = encode(code, mx);
    for (std::size_t i = 0; i < code.n; ++i) CHECK(cx[i] == (c1[i] ^ c2[i]));
}

TEST_CASE("decode returns a noiseless codeword in one iteration") {
    const LinearCode code = build_ldpc(256, 128, 1);
    Rng rng(9);
    const auto cw = encode(code, random_message(code, rng));
    std::vector<double> llr(code.n);
    for (std::size_t i = 0; i < code.n; ++i) llr[i] = cw[i] ? -9.0 : 9.0;
    const DecodeResult dr = decode(code, llr, 10);
    CHECK(dr.iterations == 1);
    CHECK(dr.parity);
    CHECK(dr.hard == cw);
    REQUIRE(dr.extrinsic.size() == code.n);
    for (std::size_t i = 0; i < code.n; ++i)
        CHECK(dr.posterior[i] == doctest::Approx(llr[i] + dr.extrinsic[i]).epsilon(1e-12));
}

TEST_CASE("decode fixes a few flipped signs") {
    const LinearCode code = build_ldpc(256, 128, 1);
    Rng rng(10);
    const auto cw = encode(code, random_message(code, rng));
    std::vector<double> llr(code.n);
    for (std::size_t i = 0; i < code.n; ++i) llr[i] = cw[i] ? -4.0 : 4.0;
    llr[3] = -llr[3];
    llr[77] = -llr[77];
    llr[200] = -llr[200];
    const DecodeResult dr = decode(code, llr, 20);
    CHECK(dr.parity);
    CHECK(dr.hard == cw);
    CHECK(dr.iterations <= 20);
}

TEST_CASE("decode respects the iteration cap and flags parity failure") {
    const LinearCode code = build_ldpc(64, 32, 4);
    std::vector<double> llr(code.n);
    Rng rng(11);
    for (auto& v : llr) v = (rng.uniform01() - 0.5) * 2.0;  // noise-only input
    const DecodeResult dr = decode(code, llr, 3);
    CHECK(dr.iterations <= 3);
    if (!dr.parity) CHECK(dr.iterations == 3);
    CHECK_THROWS_AS(decode(code, llr, 0), contract_error);
    CHECK_THROWS_AS(decode(code, std::vector<double>(5), 3), contract_error);
}

TEST_CASE("single-parity-check extrinsic is the box-plus of the other inputs") {
    const LinearCode code = spc3();
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> llr = {(rng.uniform01() - 0.5) * 16, (rng.uniform01() - 0.5) * 16,
                                   (rng.uniform01() - 0.5) * 16};
        const DecodeResult dr = decode(code, llr, 1);
        CHECK(std::abs(dr.extrinsic[0] - box_plus(llr[1], llr[2])) < 1e-12);
        CHECK(std::abs(dr.extrinsic[1] - box_plus(llr[0], llr[2])) < 1e-12);
        CHECK(std::abs(dr.extrinsic[2] - box_plus(llr[0], llr[1])) < 1e-12);
    }
}

TEST_CASE("decoder input saturates at +/-60") {
    const LinearCode code = spc3();
    const DecodeResult dr = decode(code, {1e9, 50.0, 50.0}, 1);
    CHECK(dr.posterior[0] == doctest::Approx(60.0 + box_plus(50.0, 50.0)).epsilon(1e-12));
}

TEST_CASE("alist round-trip preserves the code") {
    const LinearCode code = build_ldpc(128, 64, 13);
    std::ostringstream os;
    save_alist(os, code);
    std::istringstream is(os.str());
    const LinearCode back = load_alist(is);
    CHECK(back.n == code.n);
    CHECK(back.m == code.m);
    CHECK(back.check_vars == code.check_vars);
    CHECK(back.var_checks == code.var_checks);
    CHECK(back.message_positions == code.message_positions);
    CHECK(back.parity_positions == code.parity_positions);
    // same encoder behavior
    Rng rng(14);
    const auto msg = random_message(code, rng);
    CHECK(encode(back, msg) == encode(code, msg));
}

TEST_CASE("load_alist rejects malformed input") {
    std::istringstream empty("");
    CHECK_THROWS_AS(load_alist(empty), contract_error);
    std::istringstream bad_dims("3 5\n");
    CHECK_THROWS_AS(load_alist(bad_dims), contract_error);
}

}  // TEST_SUITE("ldpc")
