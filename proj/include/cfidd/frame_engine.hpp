#pragma once

#include <cstddef>
#include <vector>

#include "cfidd/detectors.hpp"
#include "cfidd/numerics.hpp"

namespace cfidd {

// Frame-level detector for one channel realization at one noise level. All
// linear algebra runs in the K x K Gram domain: with S = G^H G and
// Delta = diag(d), the push-through identity
//   ((sigma2_n/es) I_L + G Delta G^H)^{-1} G = G ((sigma2_n/es) I_K + Delta S)^{-1}
// turns every per-user L-dimensional solve into column reads of one K x K
// inverse. For pic the unit self-weight of user k is restored by a rank-one
// (Sherman-Morrison) correction of the shared inverse; for sic the stage
// inverses start from the zero-prior system and each cancelled user's row
// weight drops to its prior variance by a rank-one update. Outputs match the
// per-call ops in detectors.hpp to numerical dust; tests pin the agreement.
class FrameEngine {
  public:
    FrameEngine(CMat g, double sigma2_n, double es, DetectorKind kind,
                OrderPolicy order_policy, const MfConfig& mf);

    std::size_t aps() const { return g_.rows(); }
    std::size_t users() const { return g_.cols(); }
    DetectorKind kind() const { return kind_; }
    const std::vector<std::size_t>& order() const { return order_; }

    // Detect every channel use of a frame.
    //   y_seq:      L x T, column t is the received vector of channel use t.
    //   prior_llrs: per user, 2T bit LLRs in symbol order (bits 2t, 2t+1).
    //   ext_llrs:   same layout, overwritten with detector-extrinsic LLRs.
    //   hard_syms:  optional K*T hard symbol decisions, index t*K + k; the
    //               only output of the `ml` kind, which accepts K <= 8.
    void detect(const CMat& y_seq, const std::vector<std::vector<double>>& prior_llrs,
                std::vector<std::vector<double>>& ext_llrs, CVec* hard_syms) const;

  private:
    CMat weighted_system(const std::vector<double>& d) const;

    CMat g_;
    double c_ = 0.0;  // sigma2_n / es
    double es_ = 1.0;
    DetectorKind kind_;
    MfConfig mf_;
    std::vector<std::size_t> order_;
    CMat s_;  // Gram matrix G^H G

    // Zero-prior (and mmse) fast path: B0 = (c I + S)^{-1}, one per frame.
    CMat b0_;
    std::vector<AwgnParams> awgn0_;

    // mf-sic stage filters in the Gram domain, beta_[pos] has zeros at the
    // already-detected positions; w = G beta. Prior-independent.
    std::vector<CVec> beta_;
    std::vector<AwgnParams> stage_awgn_;
};

}  // namespace cfidd
