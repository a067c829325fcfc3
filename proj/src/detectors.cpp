#include "cfidd/detectors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "cfidd/errors.hpp"

namespace cfidd {

namespace {

std::atomic<std::uint64_t> g_solves{0};

CVec counted_solve(const CMat& m, const CVec& rhs) {
    ++g_solves;
    return hermitian_solve(m, rhs);
}

void validate_ctx(const DetectorContext& ctx) {
    if (!ctx.g) throw contract_error("detector context has no channel matrix");
    if (ctx.y.size() != ctx.g->rows())
        throw contract_error("observation length does not match channel rows");
    if (ctx.priors.size() != ctx.g->cols())
        throw contract_error("prior count does not match channel columns");
    if (!(ctx.sigma2_n > 0.0)) throw contract_error("noise variance must be positive");
    if (!(ctx.es > 0.0)) throw contract_error("symbol energy must be positive");
}

void validate_order(const std::vector<std::size_t>& order, std::size_t k_users) {
    if (order.size() != k_users) throw contract_error("detection order has wrong length");
    std::vector<std::uint8_t> seen(k_users, 0);
    for (std::size_t k : order) {
        if (k >= k_users || seen[k]) throw contract_error("detection order is not a permutation");
        seen[k] = 1;
    }
}

// w_j = var_j/es for everyone except `self`, which detects at full energy.
std::vector<double> delta_weights(const DetectorContext& ctx, std::size_t self) {
    std::vector<double> w(ctx.priors.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = ctx.priors[j].var / ctx.es;
    w[self] = 1.0;
    return w;
}

// ||y - G phi||^2
double residual_norm2(const CMat& g, const CVec& y, const CVec& phi) {
    CVec r = y;
    for (std::size_t j = 0; j < g.cols(); ++j) {
        const cplx s = phi[j];
        for (std::size_t i = 0; i < g.rows(); ++i) r[i] -= g(i, j) * s;
    }
    double s2 = 0.0;
    for (const cplx& z : r) s2 += std::norm(z);
    return s2;
}

double lse2(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Constellation indices sorted by distance to u, nearest first (ties keep
// index order).
std::array<int, 4> nearest_candidates(cplx u) {
    const Constellation& c = qpsk();
    std::array<int, 4> idx{0, 1, 2, 3};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(u - c.point(a)) < std::abs(u - c.point(b));
    });
    return idx;
}

}  // namespace

const char* detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::mmse: return "mmse";
        case DetectorKind::sic: return "sic";
        case DetectorKind::pic: return "pic";
        case DetectorKind::mf_sic: return "mf-sic";
        case DetectorKind::mf_pic: return "mf-pic";
        case DetectorKind::ml: return "ml";
    }
    throw contract_error("unknown detector kind");
}

DetectorKind detector_from_name(const std::string& name) {
    if (name == "mmse") return DetectorKind::mmse;
    if (name == "sic") return DetectorKind::sic;
    if (name == "pic") return DetectorKind::pic;
    if (name == "mf-sic") return DetectorKind::mf_sic;
    if (name == "mf-pic") return DetectorKind::mf_pic;
    if (name == "ml") return DetectorKind::ml;
    throw config_error("unknown detector: " + name);
}

std::vector<std::size_t> detection_order(const CMat& g, OrderPolicy policy) {
    std::vector<std::size_t> order(g.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (policy == OrderPolicy::norm) {
        std::vector<double> n2(g.cols(), 0.0);
        for (std::size_t j = 0; j < g.cols(); ++j)
            for (std::size_t i = 0; i < g.rows(); ++i) n2[j] += std::norm(g(i, j));
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return n2[a] > n2[b]; });
    }
    return order;
}

std::vector<SymbolPrior> make_priors(const std::vector<std::array<double, 2>>& llrs) {
    std::vector<SymbolPrior> out(llrs.size());
    for (std::size_t k = 0; k < llrs.size(); ++k) {
        const double l0 = saturate_llr(llrs[k][0]);
        const double l1 = saturate_llr(llrs[k][1]);
        const SoftStats st = soft_symbol_stats(l0, l1);
        out[k] = SymbolPrior{st.mean, st.var, l0, l1};
    }
    return out;
}

CVec mmse_filter(const DetectorContext& ctx, std::size_t k) {
    validate_ctx(ctx);
    if (k >= ctx.g->cols()) throw contract_error("user index out of range");
    const CMat m = gram_plus_scaled_identity(*ctx.g, delta_weights(ctx, k), ctx.sigma2_n / ctx.es);
    return counted_solve(m, ctx.g->col(k));
}

CVec soft_pic_estimate(const DetectorContext& ctx) {
    validate_ctx(ctx);
    const CMat& g = *ctx.g;
    const std::size_t kk = g.cols();
    // y with every prior mean removed; each user adds its own back.
    CVec base = ctx.y;
    for (std::size_t j = 0; j < kk; ++j) {
        const cplx s = ctx.priors[j].mean;
        for (std::size_t i = 0; i < g.rows(); ++i) base[i] -= g(i, j) * s;
    }
    CVec shat(kk);
    CVec yk(g.rows());
    for (std::size_t k = 0; k < kk; ++k) {
        const cplx s = ctx.priors[k].mean;
        for (std::size_t i = 0; i < g.rows(); ++i) yk[i] = base[i] + g(i, k) * s;
        shat[k] = cdot(mmse_filter(ctx, k), yk);
    }
    return shat;
}

CVec soft_sic_estimate(const DetectorContext& ctx, const std::vector<std::size_t>& order) {
    validate_ctx(ctx);
    validate_order(order, ctx.g->cols());
    const CMat& g = *ctx.g;
    CVec shat(g.cols());
    CVec resid = ctx.y;  // y minus the prior means of the users already passed
    // A cancelled user leaves var_j/es of residual power behind; everyone not
    // yet passed still sits in `resid` at full energy, so its weight stays 1
    // until its turn (which also makes the stage filter correct for `k`).
    std::vector<double> w(g.cols(), 1.0);
    for (std::size_t k : order) {
        const CMat m = gram_plus_scaled_identity(g, w, ctx.sigma2_n / ctx.es);
        shat[k] = cdot(counted_solve(m, g.col(k)), resid);
        const cplx s = ctx.priors[k].mean;
        for (std::size_t i = 0; i < g.rows(); ++i) resid[i] -= g(i, k) * s;
        w[k] = ctx.priors[k].var / ctx.es;
    }
    return shat;
}

AwgnParams awgn_params_from_gain(cplx gain) {
    if (std::abs(gain.imag()) > 1e-9 * std::max(1.0, std::abs(gain)))
        throw consistency_error("effective gain w^H g_k is not real");
    const double mu = gain.real();
    if (!(mu > 0.0) || mu > 1.0 + 1e-9)
        throw consistency_error("effective gain outside (0,1): " + std::to_string(mu));
    AwgnParams p;
    p.mu = mu;
    p.lambda2 = std::max(mu - mu * mu, 1e-12);
    return p;
}

AwgnParams awgn_params(const DetectorContext& ctx, std::size_t k, const CVec& w) {
    validate_ctx(ctx);
    if (k >= ctx.g->cols()) throw contract_error("user index out of range");
    if (w.size() != ctx.g->rows()) throw contract_error("filter length does not match channel rows");
    return awgn_params_from_gain(cdot(w, ctx.g->col(k)));
}

std::array<double, 2> extrinsic_llrs(cplx shat, const AwgnParams& p, double prior_l0, double prior_l1) {
    const Constellation& c = qpsk();
    const double l0 = saturate_llr(prior_l0);
    const double l1 = saturate_llr(prior_l1);
    const std::array<double, 4> prob = apriori_probs(l0, l1);
    std::array<double, 4> t{};
    for (int idx = 0; idx < 4; ++idx) {
        const double d2 = std::norm(shat - p.mu * c.point(idx));
        t[idx] = -d2 / p.lambda2 + std::log(prob[idx]);
    }
    std::array<double, 2> out{};
    const std::array<double, 2> prior{l0, l1};
    for (int l = 0; l < 2; ++l) {
        double num = -HUGE_VAL, den = -HUGE_VAL;
        for (int idx = 0; idx < 4; ++idx) {
            if (Constellation::bit(idx, l) == 0)
                num = (num == -HUGE_VAL) ? t[idx] : lse2(num, t[idx]);
            else
                den = (den == -HUGE_VAL) ? t[idx] : lse2(den, t[idx]);
        }
        out[l] = saturate_llr(num - den - prior[l]);
    }
    return out;
}

MfResult mf_sic_detect(const DetectorContext& ctx, const MfConfig& mf,
                       const std::vector<std::size_t>& order) {
    validate_ctx(ctx);
    validate_order(order, ctx.g->cols());
    if (mf.candidates < 1 || mf.candidates > 4)
        throw contract_error("candidate count must be in 1..4");
    if (!(mf.d_th >= 0.0)) throw contract_error("reliability radius must be >= 0");
    const CMat& g = *ctx.g;
    const std::size_t kk = g.cols();
    const Constellation& c = qpsk();

    MfResult res;
    res.hard.assign(kk, cplx{});
    res.u.assign(kk, cplx{});
    res.refined.assign(kk, 0);
    res.filters.assign(kk, CVec{});

    // Prior-independent stage filters: at stage p only the not-yet-detected
    // columns order[p..] stay in the covariance, at full energy.
    for (std::size_t pos = 0; pos < kk; ++pos) {
        const std::size_t k = order[pos];
        std::vector<double> w(kk, 0.0);
        for (std::size_t p2 = pos; p2 < kk; ++p2) w[order[p2]] = 1.0;
        const CMat m = gram_plus_scaled_identity(g, w, ctx.sigma2_n / ctx.es);
        res.filters[k] = counted_solve(m, g.col(k));
    }

    // resid at stage pos: y - sum(hard, detected) - sum(prior mean, not yet).
    CVec resid = ctx.y;
    for (std::size_t p2 = 1; p2 < kk; ++p2) {
        const std::size_t j = order[p2];
        const cplx s = ctx.priors[j].mean;
        for (std::size_t i = 0; i < g.rows(); ++i) resid[i] -= g(i, j) * s;
    }

    for (std::size_t pos = 0; pos < kk; ++pos) {
        const std::size_t k = order[pos];
        const CVec& wk = res.filters[k];
        const cplx u = cdot(wk, resid);
        res.u[k] = u;
        cplx chosen = c.quantize(u);
        if (std::abs(u - chosen) > mf.d_th) {
            res.refined[k] = 1;
            const std::array<int, 4> cand = nearest_candidates(u);
            double best = HUGE_VAL;
            // One conventional-SIC rollout per candidate, sharing the stage
            // filters; the committed decision minimizes ||y - G phi||^2.
            CVec phi(kk);
            CVec rr(g.rows());
            for (int m = 0; m < mf.candidates; ++m) {
                const cplx cm = c.point(cand[m]);
                for (std::size_t t = 0; t < pos; ++t) phi[order[t]] = res.hard[order[t]];
                phi[k] = cm;
                for (std::size_t i = 0; i < g.rows(); ++i) rr[i] = resid[i] - g(i, k) * cm;
                for (std::size_t p2 = pos + 1; p2 < kk; ++p2) {
                    const std::size_t j = order[p2];
                    const cplx mean_j = ctx.priors[j].mean;
                    for (std::size_t i = 0; i < g.rows(); ++i) rr[i] += g(i, j) * mean_j;
                    const cplx q = c.quantize(cdot(res.filters[j], rr));
                    phi[j] = q;
                    for (std::size_t i = 0; i < g.rows(); ++i) rr[i] -= g(i, j) * q;
                }
                const double r2 = residual_norm2(g, ctx.y, phi);
                if (r2 < best) {
                    best = r2;
                    chosen = cm;
                }
            }
        }
        res.hard[k] = chosen;
        for (std::size_t i = 0; i < g.rows(); ++i) resid[i] -= g(i, k) * chosen;
        if (pos + 1 < kk) {
            const std::size_t j = order[pos + 1];
            const cplx s = ctx.priors[j].mean;
            for (std::size_t i = 0; i < g.rows(); ++i) resid[i] += g(i, j) * s;
        }
    }
    return res;
}

MfResult mf_pic_detect(const DetectorContext& ctx, const MfConfig& mf) {
    validate_ctx(ctx);
    if (mf.candidates < 1 || mf.candidates > 4)
        throw contract_error("candidate count must be in 1..4");
    if (!(mf.d_th >= 0.0)) throw contract_error("reliability radius must be >= 0");
    const CMat& g = *ctx.g;
    const std::size_t kk = g.cols();
    const Constellation& c = qpsk();

    MfResult res;
    res.u = soft_pic_estimate(ctx);
    res.hard.assign(kk, cplx{});
    res.refined.assign(kk, 0);
    for (std::size_t k = 0; k < kk; ++k) res.hard[k] = c.quantize(res.u[k]);

    const CVec quantized = res.hard;  // refinement always sees Q(u_j) for the others
    CVec phi(kk);
    for (std::size_t k = 0; k < kk; ++k) {
        if (std::abs(res.u[k] - quantized[k]) <= mf.d_th) continue;
        res.refined[k] = 1;
        const std::array<int, 4> cand = nearest_candidates(res.u[k]);
        double best = HUGE_VAL;
        cplx chosen = quantized[k];
        for (int m = 0; m < mf.candidates; ++m) {
            phi = quantized;
            phi[k] = c.point(cand[m]);
            const double r2 = residual_norm2(g, ctx.y, phi);
            if (r2 < best) {
                best = r2;
                chosen = phi[k];
            }
        }
        res.hard[k] = chosen;
    }
    return res;
}

CVec exhaustive_ml(const CMat& g, const CVec& y) {
    const std::size_t kk = g.cols();
    if (kk == 0 || kk > 8) throw contract_error("exhaustive search supports 1..8 users");
    if (y.size() != g.rows()) throw contract_error("observation length does not match channel rows");
    const Constellation& c = qpsk();
    CVec phi(kk), best_phi(kk);
    double best = HUGE_VAL;
    const std::size_t total = std::size_t{1} << (2 * kk);
    for (std::size_t code = 0; code < total; ++code) {
        for (std::size_t k = 0; k < kk; ++k) phi[k] = c.point((code >> (2 * k)) & 3u);
        const double r2 = residual_norm2(g, y, phi);
        if (r2 < best) {
            best = r2;
            best_phi = phi;
        }
    }
    return best_phi;
}

std::uint64_t solver_invocations() { return g_solves.load(); }

}  // namespace cfidd
