#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "cfidd/idd.hpp"
#include "cfidd/ldpc.hpp"
#include "cfidd/modem.hpp"
#include "cfidd/rng.hpp"

using namespace cfidd;

namespace {

CMat random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    CMat a(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) a(i, j) = rng.cnormal();
    return a;
}

CMat noiseless_rx(const CMat& g, const CMat& x) {
    CMat y(g.rows(), x.cols());
    for (std::size_t t = 0; t < x.cols(); ++t)
        for (std::size_t i = 0; i < g.rows(); ++i) {
            cplx acc{};
            for (std::size_t k = 0; k < g.cols(); ++k) acc += g(i, k) * x(k, t);
            y(i, t) = acc;
        }
    return y;
}

}  // namespace

TEST_SUITE("idd") {

TEST_CASE("interleaver is a seeded bijection") {
    const auto pi = interleaver_permutation(256, 9);
    std::set<std::size_t> seen(pi.begin(), pi.end());
    CHECK(seen.size() == 256);
    CHECK(*seen.rbegin() == 255);
    CHECK(interleaver_permutation(256, 9) == pi);
    CHECK(interleaver_permutation(256, 10) != pi);
}

TEST_CASE("interleave / deinterleave round-trip") {
    Rng rng(2);
    std::vector<double> v(100);
    for (auto& x : v) x = rng.uniform01();
    CHECK(deinterleave(interleave(v, 7), 7) == v);
    CHECK(interleave(deinterleave(v, 7), 7) == v);
    CHECK(interleave(v, 7) != v);  // 100 elements: fixed-point permutation is absurdly unlikely
}

TEST_CASE("make_tx_frame encodes, interleaves per user, and modulates") {
    const LinearCode code = build_ldpc(64, 32, 3);
    Rng rng(4);
    const std::uint64_t il_seed = 11;
    const TxFrame tx = make_tx_frame(code, 3, il_seed, rng);
    REQUIRE(tx.message.size() == 3);
    REQUIRE(tx.codeword.size() == 3);
    REQUIRE(tx.x.rows() == 3);
    REQUIRE(tx.x.cols() == 32);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(tx.message[k].size() == code.k());
        CHECK(tx.codeword[k] == encode(code, tx.message[k]));
        CHECK(parity_ok(code, tx.codeword[k]));
        const auto syms = modulate(interleave(tx.codeword[k], Rng::derive(il_seed, k)));
        for (std::size_t t = 0; t < 32; ++t) CHECK(tx.x(k, t) == syms[t]);
    }
    // users carry distinct data
    CHECK(tx.message[0] != tx.message[1]);
}

TEST_CASE("make_tx_symbols draws unit-energy constellation points") {
    Rng rng(5);
    const CMat x = make_tx_symbols(2, 40, rng);
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 40);
    const Constellation& c = qpsk();
    std::set<std::size_t> used;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t t = 0; t < 40; ++t) {
            const std::size_t idx = c.nearest_index(x(k, t));
            CHECK(x(k, t) == c.point(idx));
            used.insert(idx);
        }
    CHECK(used.size() == 4);  // all four points appear in 80 draws
}

TEST_CASE("pass 1 decodes a noiseless frame for every detector") {
    const LinearCode code = build_ldpc(64, 32, 3);
    Rng rng(6);
    const CMat g = random_matrix(8, 2, rng);
    const TxFrame tx = make_tx_frame(code, 2, 0, rng);
    const CMat y = noiseless_rx(g, tx.x);
    IddConfig cfg;
    cfg.idd_iterations = 1;
    for (DetectorKind kind : {DetectorKind::mmse, DetectorKind::sic, DetectorKind::pic,
                              DetectorKind::mf_sic, DetectorKind::mf_pic}) {
        FrameEngine engine(g, 1e-6, 1.0, kind, OrderPolicy::norm, MfConfig{});
        const PassState st = run_pass1(engine, y, code, cfg);
        CAPTURE(detector_name(kind));
        CHECK(st.out.message == tx.message);
        CHECK(st.out.parity == std::vector<std::uint8_t>(2, 1));
    }
}

TEST_CASE("run_frame is exactly pass 1 plus continue_frame") {
    const LinearCode code = build_ldpc(64, 32, 3);
    Rng rng(7);
    const CMat g = random_matrix(6, 2, rng);
    const TxFrame tx = make_tx_frame(code, 2, 5, rng);
    CMat y = noiseless_rx(g, tx.x);
    for (std::size_t i = 0; i < y.rows(); ++i)  // put real noise on the frame
        for (std::size_t t = 0; t < y.cols(); ++t) y(i, t) += 0.8 * rng.cnormal();
    IddConfig cfg;
    cfg.idd_iterations = 3;
    cfg.interleaver_seed = 5;

    FrameEngine engine(g, 0.64, 1.0, DetectorKind::sic, OrderPolicy::norm, MfConfig{});
    const auto whole = run_frame(engine, y, code, cfg);
    REQUIRE(whole.size() == 3);

    const PassState st = run_pass1(engine, y, code, cfg);
    const auto rest = continue_frame(engine, y, code, cfg, st);
    REQUIRE(rest.size() == 2);
    CHECK(whole[0].message == st.out.message);
    CHECK(whole[0].parity == st.out.parity);
    for (std::size_t p = 0; p < 2; ++p) {
        CHECK(whole[p + 1].message == rest[p].message);
        CHECK(whole[p + 1].parity == rest[p].parity);
    }
}

TEST_CASE("the loop is deterministic") {
    const LinearCode code = build_ldpc(64, 32, 3);
    Rng rng(8);
    const CMat g = random_matrix(6, 2, rng);
    const TxFrame tx = make_tx_frame(code, 2, 1, rng);
    CMat y = noiseless_rx(g, tx.x);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t t = 0; t < y.cols(); ++t) y(i, t) += rng.cnormal();
    IddConfig cfg;
    cfg.idd_iterations = 2;
    cfg.interleaver_seed = 1;
    FrameEngine engine(g, 1.0, 1.0, DetectorKind::pic, OrderPolicy::natural, MfConfig{});
    const auto a = run_frame(engine, y, code, cfg);
    const auto b = run_frame(engine, y, code, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
        CHECK(a[p].message == b[p].message);
        CHECK(a[p].parity == b[p].parity);
    }
}

TEST_CASE("the loop validates its configuration") {
    const LinearCode code = build_ldpc(64, 32, 3);
    Rng rng(9);
    const CMat g = random_matrix(6, 2, rng);
    const CMat y(6, 32);
    FrameEngine engine(g, 1.0, 1.0, DetectorKind::pic, OrderPolicy::natural, MfConfig{});
    IddConfig cfg;
    cfg.idd_iterations = 0;
    CHECK_THROWS_AS(run_frame(engine, y, code, cfg), contract_error);
    cfg.idd_iterations = 2;
    cfg.ldpc_max_iter = 0;
    CHECK_THROWS_AS(run_frame(engine, y, code, cfg), contract_error);
    cfg.ldpc_max_iter = 10;
    const CMat y_short(6, 30);  // 2T != n
    CHECK_THROWS_AS(run_frame(engine, y_short, code, cfg), contract_error);
}

}  // TEST_SUITE("idd")
