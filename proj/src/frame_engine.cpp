#include "cfidd/frame_engine.hpp"

#include <algorithm>
#include <cmath>

#include "cfidd/errors.hpp"
#include "cfidd/modem.hpp"

namespace cfidd {

namespace {

// b_k^H v over the k-th column of a row-major matrix
cplx col_cdot(const CMat& m, std::size_t k, const CVec& v) {
    cplx acc{};
    for (std::size_t i = 0; i < m.rows(); ++i) acc += std::conj(m(i, k)) * v[i];
    return acc;
}

// Constellation indices sorted by distance to u, nearest first.
std::array<int, 4> nearest_candidates(cplx u) {
    const Constellation& c = qpsk();
    std::array<int, 4> idx{0, 1, 2, 3};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(u - c.point(a)) < std::abs(u - c.point(b));
    });
    return idx;
}

}  // namespace

FrameEngine::FrameEngine(CMat g, double sigma2_n, double es, DetectorKind kind,
                         OrderPolicy order_policy, const MfConfig& mf)
    : g_(std::move(g)), es_(es), kind_(kind), mf_(mf) {
    if (g_.rows() == 0 || g_.cols() == 0) throw contract_error("channel matrix is empty");
    if (!(sigma2_n > 0.0)) throw contract_error("noise variance must be positive");
    if (!(es > 0.0)) throw contract_error("symbol energy must be positive");
    if (mf_.candidates < 1 || mf_.candidates > 4)
        throw contract_error("candidate count must be in 1..4");
    if (!(mf_.d_th >= 0.0)) throw contract_error("reliability radius must be >= 0");
    c_ = sigma2_n / es_;
    order_ = detection_order(g_, order_policy);
    s_ = matmul(adjoint(g_), g_);
    const std::size_t kk = g_.cols();

    if (kind_ == DetectorKind::mf_sic) {
        // Stage filters over the not-yet-detected columns; independent of
        // both priors and channel use, so built once per frame.
        beta_.resize(kk);
        stage_awgn_.resize(kk);
        for (std::size_t pos = 0; pos < kk; ++pos) {
            const std::size_t m = kk - pos;
            CMat a(m, m);
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c) {
                    a(r, c) = s_(order_[pos + r], order_[pos + c]);
                    if (r == c) a(r, c) += c_;
                }
            CVec e(m, cplx{});
            e[0] = cplx{1.0, 0.0};
            const CVec sub = LuFactor(a).solve(e);
            CVec full(kk, cplx{});
            for (std::size_t j = 0; j < m; ++j) full[order_[pos + j]] = sub[j];
            const std::size_t k = order_[pos];
            cplx gain{};
            for (std::size_t j = 0; j < kk; ++j) gain += std::conj(full[j]) * s_(j, k);
            stage_awgn_[pos] = awgn_params_from_gain(gain);
            beta_[pos] = std::move(full);
        }
    } else if (kind_ != DetectorKind::ml) {
        const std::vector<double> ones(kk, 1.0);
        b0_ = LuFactor(weighted_system(ones)).inverse();
        awgn0_.resize(kk);
        for (std::size_t k = 0; k < kk; ++k) {
            cplx q{};
            for (std::size_t i = 0; i < kk; ++i) q += std::conj(s_(i, k)) * b0_(i, k);
            awgn0_[k] = awgn_params_from_gain(std::conj(q));
        }
    }
}

CMat FrameEngine::weighted_system(const std::vector<double>& d) const {
    const std::size_t kk = g_.cols();
    CMat m(kk, kk);
    for (std::size_t r = 0; r < kk; ++r) {
        for (std::size_t c = 0; c < kk; ++c) m(r, c) = d[r] * s_(r, c);
        m(r, r) += c_;
    }
    return m;
}

void FrameEngine::detect(const CMat& y_seq, const std::vector<std::vector<double>>& prior_llrs,
                         std::vector<std::vector<double>>& ext_llrs, CVec* hard_syms) const {
    const std::size_t ll = g_.rows();
    const std::size_t kk = g_.cols();
    if (y_seq.rows() != ll) throw contract_error("observation rows do not match channel");
    const std::size_t tt = y_seq.cols();
    if (tt == 0) throw contract_error("frame has no channel uses");
    if (prior_llrs.size() != kk) throw contract_error("prior user count mismatch");
    for (const auto& p : prior_llrs)
        if (p.size() != 2 * tt) throw contract_error("prior LLR length mismatch");

    ext_llrs.assign(kk, std::vector<double>(2 * tt, 0.0));
    if (hard_syms) hard_syms->assign(kk * tt, cplx{});

    const Constellation& cst = qpsk();
    CVec y(ll);

    if (kind_ == DetectorKind::ml) {
        if (!hard_syms) throw contract_error("ml detector produces hard decisions only");
        for (std::size_t t = 0; t < tt; ++t) {
            for (std::size_t i = 0; i < ll; ++i) y[i] = y_seq(i, t);
            const CVec phi = exhaustive_ml(g_, y);
            for (std::size_t k = 0; k < kk; ++k) (*hard_syms)[t * kk + k] = phi[k];
        }
        return;
    }

    bool zero_priors = true;
    for (const auto& p : prior_llrs) {
        for (double v : p)
            if (v != 0.0) {
                zero_priors = false;
                break;
            }
        if (!zero_priors) break;
    }

    const double inv_sqrt_es = 1.0 / std::sqrt(es_);
    CVec h_full(kk), h(kk), hh(kk), shat(kk), means(kk), phi(kk), committed(kk);
    CMat bsic;
    std::vector<double> d(kk, 1.0), var(kk, 1.0);
    std::vector<AwgnParams> awgn(kk);
    std::vector<cplx> alpha_conj(kk), qvec(kk);

    // f(phi) = phi^H S phi - 2 Re(phi^H h_full) orders candidates exactly like
    // ||y - G phi||^2 (they differ by the constant ||y||^2).
    const auto quad_score = [&](const CVec& p) {
        cplx cross{};
        double q = 0.0;
        for (std::size_t r = 0; r < kk; ++r) {
            cross += std::conj(p[r]) * h_full[r];
            cplx row{};
            for (std::size_t c = 0; c < kk; ++c) row += s_(r, c) * p[c];
            q += (std::conj(p[r]) * row).real();
        }
        return q - 2.0 * cross.real();
    };

    for (std::size_t t = 0; t < tt; ++t) {
        for (std::size_t i = 0; i < ll; ++i) y[i] = y_seq(i, t) * inv_sqrt_es;
        for (std::size_t k = 0; k < kk; ++k) h_full[k] = col_cdot(g_, k, y);

        if (zero_priors) {
            for (std::size_t k = 0; k < kk; ++k) means[k] = cplx{};
        } else {
            for (std::size_t k = 0; k < kk; ++k) {
                const double l0 = saturate_llr(prior_llrs[k][2 * t]);
                const double l1 = saturate_llr(prior_llrs[k][2 * t + 1]);
                const SoftStats st = soft_symbol_stats(l0, l1);
                means[k] = st.mean;
                var[k] = st.var;
            }
        }

        if (kind_ == DetectorKind::mf_sic) {
            // hvec tracks G^H (y - hard-cancelled detected - prior-cancelled rest)
            h = h_full;
            if (!zero_priors)
                for (std::size_t p = 1; p < kk; ++p) {
                    const std::size_t j = order_[p];
                    for (std::size_t i = 0; i < kk; ++i) h[i] -= means[j] * s_(i, j);
                }
            for (std::size_t pos = 0; pos < kk; ++pos) {
                const std::size_t k = order_[pos];
                const cplx u = cdot(beta_[pos], h);
                cplx chosen = cst.quantize(u);
                if (std::abs(u - chosen) > mf_.d_th) {
                    const std::array<int, 4> cand = nearest_candidates(u);
                    double best = HUGE_VAL;
                    for (int m = 0; m < mf_.candidates; ++m) {
                        const cplx cm = cst.point(cand[m]);
                        for (std::size_t p2 = 0; p2 < pos; ++p2)
                            phi[order_[p2]] = committed[order_[p2]];
                        phi[k] = cm;
                        for (std::size_t i = 0; i < kk; ++i) hh[i] = h[i] - cm * s_(i, k);
                        for (std::size_t p2 = pos + 1; p2 < kk; ++p2) {
                            const std::size_t j = order_[p2];
                            if (!zero_priors)
                                for (std::size_t i = 0; i < kk; ++i) hh[i] += means[j] * s_(i, j);
                            const cplx q2 = cst.quantize(cdot(beta_[p2], hh));
                            phi[j] = q2;
                            for (std::size_t i = 0; i < kk; ++i) hh[i] -= q2 * s_(i, j);
                        }
                        const double score = quad_score(phi);
                        if (score < best) {
                            best = score;
                            chosen = cm;
                        }
                    }
                }
                committed[k] = chosen;
                const auto e = extrinsic_llrs(u, stage_awgn_[pos], prior_llrs[k][2 * t],
                                              prior_llrs[k][2 * t + 1]);
                ext_llrs[k][2 * t] = e[0];
                ext_llrs[k][2 * t + 1] = e[1];
                if (hard_syms) (*hard_syms)[t * kk + k] = chosen;
                for (std::size_t i = 0; i < kk; ++i) h[i] -= chosen * s_(i, k);
                if (pos + 1 < kk && !zero_priors) {
                    const std::size_t j = order_[pos + 1];
                    for (std::size_t i = 0; i < kk; ++i) h[i] += means[j] * s_(i, j);
                }
            }
            continue;
        }

        const bool collapsed = zero_priors || kind_ == DetectorKind::mmse;
        if (collapsed) {
            for (std::size_t k = 0; k < kk; ++k) {
                shat[k] = col_cdot(b0_, k, h_full);
                awgn[k] = awgn0_[k];
            }
        } else if (kind_ == DetectorKind::pic || kind_ == DetectorKind::mf_pic) {
            for (std::size_t k = 0; k < kk; ++k) d[k] = var[k];
            const CMat b = LuFactor(weighted_system(d)).inverse();
            for (std::size_t k = 0; k < kk; ++k) {
                cplx q{};
                for (std::size_t i = 0; i < kk; ++i) q += std::conj(s_(i, k)) * b(i, k);
                qvec[k] = q;
                const cplx den = cplx{1.0, 0.0} + (1.0 - d[k]) * q;
                awgn[k] = awgn_params_from_gain(std::conj(q / den));
                alpha_conj[k] = std::conj(cplx{1.0, 0.0} / den);
            }
            h = h_full;  // minus S * means
            for (std::size_t j = 0; j < kk; ++j)
                for (std::size_t i = 0; i < kk; ++i) h[i] -= means[j] * s_(i, j);
            for (std::size_t k = 0; k < kk; ++k)
                shat[k] = alpha_conj[k] * (col_cdot(b, k, h) + means[k] * std::conj(qvec[k]));
        } else {  // sic: stages start from the zero-prior inverse; cancelling a
                  // user demotes its row weight from full energy to var_k via a
                  // rank-one update, so later users see it at var_k and everyone
                  // still in the residual keeps weight 1.
            bsic = b0_;
            h = h_full;
            for (std::size_t pos = 0; pos < kk; ++pos) {
                const std::size_t k = order_[pos];
                cplx gain{};
                for (std::size_t i = 0; i < kk; ++i) gain += std::conj(bsic(i, k)) * s_(i, k);
                awgn[k] = awgn_params_from_gain(gain);
                shat[k] = col_cdot(bsic, k, h);
                for (std::size_t i = 0; i < kk; ++i) h[i] -= means[k] * s_(i, k);
                if (pos + 1 == kk) break;
                const double dv = var[k] - 1.0;
                if (dv == 0.0) continue;
                // (cI + Delta S) + e_k (dv * S(k,:)) inverted in place
                for (std::size_t i = 0; i < kk; ++i) qvec[i] = bsic(i, k);
                cplx vb{};
                for (std::size_t i = 0; i < kk; ++i) vb += s_(k, i) * qvec[i];
                const cplx den = cplx{1.0, 0.0} + dv * vb;
                for (std::size_t j = 0; j < kk; ++j) {
                    cplx r{};
                    for (std::size_t i = 0; i < kk; ++i) r += s_(k, i) * bsic(i, j);
                    const cplx f = r * (dv / den);
                    for (std::size_t i = 0; i < kk; ++i) bsic(i, j) -= qvec[i] * f;
                }
            }
        }

        for (std::size_t k = 0; k < kk; ++k) {
            const auto e =
                extrinsic_llrs(shat[k], awgn[k], prior_llrs[k][2 * t], prior_llrs[k][2 * t + 1]);
            ext_llrs[k][2 * t] = e[0];
            ext_llrs[k][2 * t + 1] = e[1];
            if (hard_syms) (*hard_syms)[t * kk + k] = cst.quantize(shat[k]);
        }

        if (kind_ == DetectorKind::mf_pic && hard_syms) {
            for (std::size_t k = 0; k < kk; ++k) committed[k] = cst.quantize(shat[k]);
            for (std::size_t k = 0; k < kk; ++k) {
                if (std::abs(shat[k] - committed[k]) <= mf_.d_th) continue;
                const std::array<int, 4> cand = nearest_candidates(shat[k]);
                double best = HUGE_VAL;
                cplx chosen = committed[k];
                for (int m = 0; m < mf_.candidates; ++m) {
                    phi = committed;
                    phi[k] = cst.point(cand[m]);
                    const double score = quad_score(phi);
                    if (score < best) {
                        best = score;
                        chosen = phi[k];
                    }
                }
                (*hard_syms)[t * kk + k] = chosen;
            }
        }
    }
}

}  // namespace cfidd
