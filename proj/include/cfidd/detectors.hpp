#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cfidd/modem.hpp"
#include "cfidd/numerics.hpp"

namespace cfidd {

enum class DetectorKind { mmse, sic, pic, mf_sic, mf_pic, ml };

const char* detector_name(DetectorKind k);
DetectorKind detector_from_name(const std::string& name);  // throws config_error

enum class OrderPolicy { natural, norm };

// Detection order: user indices, a permutation of 0..K-1. `norm` sorts by
// descending channel column norm (strongest user first).
std::vector<std::size_t> detection_order(const CMat& g, OrderPolicy policy);

struct SymbolPrior {
    cplx mean{};         // prior soft symbol
    double var = 1.0;    // prior symbol variance
    double l0 = 0.0, l1 = 0.0;  // the two bit LLRs behind the stats
};

// Priors for one channel use from per-bit LLR pairs (saturated internally).
std::vector<SymbolPrior> make_priors(const std::vector<std::array<double, 2>>& llrs);

// One channel use seen by the detectors: y = G s + n, n ~ CN(0, sigma2_n I),
// symbols with average energy es and per-user priors.
struct DetectorContext {
    const CMat* g = nullptr;
    CVec y;
    double sigma2_n = 1.0;
    double es = 1.0;
    std::vector<SymbolPrior> priors;
};

// Soft-interference-aware MMSE filter for user k:
//   w_k = ((sigma2_n/es) I + G Delta_k G^H)^{-1} g_k,
// Delta_k = diag(var_j/es) with a 1 at position k.
CVec mmse_filter(const DetectorContext& ctx, std::size_t k);

// Parallel soft cancellation: every other user's prior mean is removed before
// filtering. With zero priors this reduces to the plain MMSE filter bank.
CVec soft_pic_estimate(const DetectorContext& ctx);

// Successive soft cancellation: users are filtered in `order`; the prior
// means of the users already processed are removed from y, and the stage
// filter weights them by var_j/es while users still in the residual keep
// their full energy (weight 1). With zero priors every stage sees the
// unmodified y through the plain MMSE filter, so the outputs coincide with
// soft_pic_estimate's.
CVec soft_sic_estimate(const DetectorContext& ctx, const std::vector<std::size_t>& order);

// Equivalent-AWGN parameters of a filtered output: shat ~ mu s + z with
// z ~ CN(0, lambda2), mu = w^H g_k real in (0,1), lambda2 = mu - mu^2.
struct AwgnParams {
    double mu = 0.0;
    double lambda2 = 0.0;
};

AwgnParams awgn_params(const DetectorContext& ctx, std::size_t k, const CVec& w);

// Same conversion from a precomputed effective gain w^H g_k: checks the gain
// is real within 1e-9 dust and inside (0,1), clamps lambda2 from below at
// 1e-12.
AwgnParams awgn_params_from_gain(cplx gain);

// Extrinsic per-bit LLRs of one filtered symbol under the AWGN approximation;
// the prior LLR of the bit itself is subtracted, outputs saturated.
std::array<double, 2> extrinsic_llrs(cplx shat, const AwgnParams& p, double prior_l0, double prior_l1);

struct MfConfig {
    double d_th = 0.38;   // shadow-region radius of the reliability test
    int candidates = 4;   // nearest constellation points examined when unreliable

    bool operator==(const MfConfig&) const = default;
};

struct MfResult {
    CVec hard;                        // committed symbol decisions
    CVec u;                           // per-user filter outputs (pre-refinement)
    std::vector<std::uint8_t> refined;  // 1 where the reliability test failed
    std::vector<CVec> filters;        // per-stage filters, in user index order
};

// Multiple-feedback SIC: per-stage filters w_k = ((sigma2_n/es) I +
// Gbar_k Gbar_k^H)^{-1} g_k over the not-yet-detected columns, hard
// cancellation of detected users, prior-mean cancellation of the rest, and a
// shadow-area candidate search that re-runs conventional SIC for each nearby
// constellation point and keeps the candidate with the smallest
// ||y - G phi||^2. Exactly one linear solve per stage, shared by all
// candidates.
MfResult mf_sic_detect(const DetectorContext& ctx, const MfConfig& mf, const std::vector<std::size_t>& order);

// Multiple-feedback PIC: soft-PIC outputs, per-user reliability test, and for
// unreliable users the candidate (with every other user at its quantized
// output) minimizing ||y - G phi||^2.
MfResult mf_pic_detect(const DetectorContext& ctx, const MfConfig& mf);

// Exhaustive maximum-likelihood symbol decision, K <= 8. Oracle for tests and
// the uncoded side-mode.
CVec exhaustive_ml(const CMat& g, const CVec& y);

// Number of Hermitian solves performed by the detector ops in this process;
// lets tests pin "one solve per stage regardless of candidate count".
std::uint64_t solver_invocations();

}  // namespace cfidd
