#pragma once

#include <cstdint>
#include <vector>

#include "cfidd/frame_engine.hpp"
#include "cfidd/ldpc.hpp"
#include "cfidd/numerics.hpp"
#include "cfidd/rng.hpp"

namespace cfidd {

struct IddConfig {
    int idd_iterations = 2;              // detection+decode passes; 1 = no feedback
    int ldpc_max_iter = 10;              // flooding iterations per pass
    std::uint64_t interleaver_seed = 0;  // user k permutes with derive(seed, k)
};

// Seeded uniform permutation; interleave is out[i] = in[pi[i]].
std::vector<std::size_t> interleaver_permutation(std::size_t n, std::uint64_t seed);

template <typename T>
std::vector<T> interleave(const std::vector<T>& block, std::uint64_t seed) {
    const auto pi = interleaver_permutation(block.size(), seed);
    std::vector<T> out(block.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = block[pi[i]];
    return out;
}

template <typename T>
std::vector<T> deinterleave(const std::vector<T>& block, std::uint64_t seed) {
    const auto pi = interleaver_permutation(block.size(), seed);
    std::vector<T> out(block.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[pi[i]] = block[i];
    return out;
}

// One transmitted frame: each user encodes a random message, interleaves the
// codeword, and maps it to N/2 QPSK symbols; x(k, t) is user k's symbol in
// channel use t.
struct TxFrame {
    std::vector<std::vector<std::uint8_t>> message;   // K x (n-m)
    std::vector<std::vector<std::uint8_t>> codeword;  // K x n, pre-interleaving
    CMat x;                                           // K x T
};

TxFrame make_tx_frame(const LinearCode& code, std::size_t k_users,
                      std::uint64_t interleaver_seed, Rng& rng);

// Uncoded side-mode: raw random unit-energy symbols, x(k, t).
CMat make_tx_symbols(std::size_t k_users, std::size_t t_uses, Rng& rng);

struct PassOutput {
    std::vector<std::vector<std::uint8_t>> message;  // K x (n-m) decoded bits
    std::vector<std::uint8_t> parity;                // per user: H * hard == 0
};

// Decoder state carried between IDD passes: per-user decoder extrinsic in
// codeword order, plus that pass's decisions.
struct PassState {
    std::vector<std::vector<double>> dec_ext;  // K x n
    PassOutput out;
};

// First pass: detection with zero priors, then one LDPC decode per user.
PassState run_pass1(const FrameEngine& engine, const CMat& y_seq, const LinearCode& code,
                    const IddConfig& cfg);

// Passes 2..idd_iterations, feeding each pass the previous decoder extrinsic
// (interleaved) as detector priors. Returns one output per extra pass.
std::vector<PassOutput> continue_frame(const FrameEngine& engine, const CMat& y_seq,
                                       const LinearCode& code, const IddConfig& cfg,
                                       const PassState& pass1);

// All passes; result[p] is the receiver decision after p+1 IDD iterations.
std::vector<PassOutput> run_frame(const FrameEngine& engine, const CMat& y_seq,
                                  const LinearCode& code, const IddConfig& cfg);

}  // namespace cfidd
