#include "cfidd/idd.hpp"

#include "cfidd/errors.hpp"
#include "cfidd/modem.hpp"

namespace cfidd {

namespace {

void validate(const FrameEngine& engine, const CMat& y_seq, const LinearCode& code,
              const IddConfig& cfg) {
    if (cfg.idd_iterations < 1) throw contract_error("idd_iterations must be >= 1");
    if (cfg.ldpc_max_iter < 1) throw contract_error("ldpc_max_iter must be >= 1");
    if (y_seq.rows() != engine.aps()) throw contract_error("observation rows do not match channel");
    if (2 * y_seq.cols() != code.n)
        throw contract_error("frame length does not match codeword length");
}

// Decode every user from detector-extrinsic LLRs (interleaved domain);
// returns the pass decisions and the decoder extrinsic for feedback.
PassState decode_users(const std::vector<std::vector<double>>& det_ext, const LinearCode& code,
                       const IddConfig& cfg) {
    const std::size_t kk = det_ext.size();
    PassState st;
    st.dec_ext.resize(kk);
    st.out.message.resize(kk);
    st.out.parity.assign(kk, 0);
    for (std::size_t k = 0; k < kk; ++k) {
        const std::uint64_t seed = Rng::derive(cfg.interleaver_seed, k);
        const std::vector<double> chan = deinterleave(det_ext[k], seed);
        DecodeResult dr = decode(code, chan, cfg.ldpc_max_iter);
        st.out.parity[k] = dr.parity ? 1 : 0;
        st.out.message[k].resize(code.k());
        for (std::size_t i = 0; i < code.k(); ++i)
            st.out.message[k][i] = dr.hard[code.message_positions[i]];
        st.dec_ext[k] = std::move(dr.extrinsic);
    }
    return st;
}

}  // namespace

std::vector<std::size_t> interleaver_permutation(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return rng.permutation(n);
}

TxFrame make_tx_frame(const LinearCode& code, std::size_t k_users,
                      std::uint64_t interleaver_seed, Rng& rng) {
    if (k_users == 0) throw contract_error("need at least one user");
    if (code.n % 2 != 0) throw contract_error("codeword length must be even");
    const std::size_t t_uses = code.n / 2;
    TxFrame f;
    f.message.resize(k_users);
    f.codeword.resize(k_users);
    f.x = CMat(k_users, t_uses);
    for (std::size_t k = 0; k < k_users; ++k) {
        f.message[k].resize(code.k());
        for (auto& b : f.message[k]) b = static_cast<std::uint8_t>(rng.uniform_below(2));
        f.codeword[k] = encode(code, f.message[k]);
        const std::uint64_t seed = Rng::derive(interleaver_seed, k);
        const std::vector<cplx> sym = modulate(interleave(f.codeword[k], seed));
        for (std::size_t t = 0; t < t_uses; ++t) f.x(k, t) = sym[t];
    }
    return f;
}

CMat make_tx_symbols(std::size_t k_users, std::size_t t_uses, Rng& rng) {
    if (k_users == 0 || t_uses == 0) throw contract_error("need at least one user and channel use");
    const Constellation& c = qpsk();
    CMat x(k_users, t_uses);
    for (std::size_t k = 0; k < k_users; ++k)
        for (std::size_t t = 0; t < t_uses; ++t)
            x(k, t) = c.point(static_cast<std::size_t>(rng.uniform_below(4)));
    return x;
}

PassState run_pass1(const FrameEngine& engine, const CMat& y_seq, const LinearCode& code,
                    const IddConfig& cfg) {
    validate(engine, y_seq, code, cfg);
    const std::size_t kk = engine.users();
    const std::vector<std::vector<double>> priors(kk, std::vector<double>(code.n, 0.0));
    std::vector<std::vector<double>> det_ext;
    engine.detect(y_seq, priors, det_ext, nullptr);
    return decode_users(det_ext, code, cfg);
}

std::vector<PassOutput> continue_frame(const FrameEngine& engine, const CMat& y_seq,
                                       const LinearCode& code, const IddConfig& cfg,
                                       const PassState& pass1) {
    validate(engine, y_seq, code, cfg);
    const std::size_t kk = engine.users();
    if (pass1.dec_ext.size() != kk) throw contract_error("pass state user count mismatch");
    std::vector<PassOutput> outs;
    std::vector<std::vector<double>> priors(kk);
    std::vector<std::vector<double>> det_ext;
    const PassState* prev = &pass1;
    PassState cur;
    for (int pass = 2; pass <= cfg.idd_iterations; ++pass) {
        for (std::size_t k = 0; k < kk; ++k) {
            const std::uint64_t seed = Rng::derive(cfg.interleaver_seed, k);
            priors[k] = interleave(prev->dec_ext[k], seed);
        }
        engine.detect(y_seq, priors, det_ext, nullptr);
        cur = decode_users(det_ext, code, cfg);
        outs.push_back(cur.out);
        prev = &cur;
    }
    return outs;
}

std::vector<PassOutput> run_frame(const FrameEngine& engine, const CMat& y_seq,
                                  const LinearCode& code, const IddConfig& cfg) {
    PassState s1 = run_pass1(engine, y_seq, code, cfg);
    std::vector<PassOutput> outs;
    outs.push_back(s1.out);
    for (auto& o : continue_frame(engine, y_seq, code, cfg, s1)) outs.push_back(std::move(o));
    return outs;
}

}  // namespace cfidd
