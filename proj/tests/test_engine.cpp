#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "cfidd/detectors.hpp"
#include "cfidd/frame_engine.hpp"
#include "cfidd/numerics.hpp"
#include "cfidd/rng.hpp"

using namespace cfidd;

namespace {

CMat random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    CMat a(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) a(i, j) = rng.cnormal();
    return a;
}

struct Instance {
    CMat g;
    CMat y;                                       // L x T
    double sigma2_n = 0.0;
    std::vector<std::vector<double>> prior_llrs;  // K x 2T
};

Instance random_instance(std::size_t l, std::size_t k, std::size_t t, bool with_priors, Rng& rng) {
    Instance in;
    in.g = random_matrix(l, k, rng);
    in.sigma2_n = 0.3 + rng.uniform01();
    in.y = CMat(l, t);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < t; ++j) in.y(i, j) = rng.cnormal() * 2.0;
    in.prior_llrs.assign(k, std::vector<double>(2 * t, 0.0));
    if (with_priors)
        for (auto& row : in.prior_llrs)
            for (auto& v : row) v = (rng.uniform01() - 0.5) * 12.0;
    return in;
}

// per-channel-use reference built from the single-shot detector ops
std::vector<std::vector<double>> reference_extrinsics(const Instance& in, DetectorKind kind,
                                                      OrderPolicy pol, const MfConfig& mf,
                                                      CVec* hard_out = nullptr) {
    const std::size_t kk = in.g.cols();
    const std::size_t tt = in.y.cols();
    std::vector<std::vector<double>> ext(kk, std::vector<double>(2 * tt, 0.0));
    if (hard_out) hard_out->assign(kk * tt, cplx{});
    const auto order = detection_order(in.g, pol);
    for (std::size_t t = 0; t < tt; ++t) {
        DetectorContext ctx;
        ctx.g = &in.g;
        ctx.sigma2_n = in.sigma2_n;
        ctx.es = 1.0;
        ctx.y = in.y.col(t);
        std::vector<std::array<double, 2>> llrs(kk);
        for (std::size_t k = 0; k < kk; ++k)
            llrs[k] = {in.prior_llrs[k][2 * t], in.prior_llrs[k][2 * t + 1]};
        ctx.priors = make_priors(llrs);

        DetectorContext ctx0 = ctx;  // zero-prior twin for the mmse filter bank
        ctx0.priors = make_priors(std::vector<std::array<double, 2>>(kk, {0.0, 0.0}));

        CVec shat(kk);
        std::vector<AwgnParams> ap(kk);
        if (kind == DetectorKind::mmse) {
            for (std::size_t k = 0; k < kk; ++k) {
                const CVec w = mmse_filter(ctx0, k);
                shat[k] = cdot(w, ctx.y);
                ap[k] = awgn_params(ctx0, k, w);
            }
        } else if (kind == DetectorKind::pic || kind == DetectorKind::mf_pic) {
            shat = soft_pic_estimate(ctx);
            for (std::size_t k = 0; k < kk; ++k) ap[k] = awgn_params(ctx, k, mmse_filter(ctx, k));
        } else if (kind == DetectorKind::sic) {
            shat = soft_sic_estimate(ctx, order);
            // stage filters: cancelled users weighted var/es, the rest at 1
            std::vector<double> w(kk, 1.0);
            for (std::size_t k : order) {
                const CMat m = gram_plus_scaled_identity(in.g, w, ctx.sigma2_n / ctx.es);
                ap[k] = awgn_params(ctx, k, hermitian_solve(m, in.g.col(k)));
                w[k] = ctx.priors[k].var / ctx.es;
            }
        } else {  // mf_sic
            const MfResult r = mf_sic_detect(ctx, mf, order);
            shat = r.u;
            for (std::size_t k = 0; k < kk; ++k) ap[k] = awgn_params(ctx, k, r.filters[k]);
            if (hard_out)
                for (std::size_t k = 0; k < kk; ++k) (*hard_out)[t * kk + k] = r.hard[k];
        }
        if (hard_out && kind == DetectorKind::mf_pic) {
            const MfResult r = mf_pic_detect(ctx, mf);
            for (std::size_t k = 0; k < kk; ++k) (*hard_out)[t * kk + k] = r.hard[k];
        }
        if (hard_out && (kind == DetectorKind::mmse || kind == DetectorKind::pic || kind == DetectorKind::sic))
            for (std::size_t k = 0; k < kk; ++k) (*hard_out)[t * kk + k] = qpsk().quantize(shat[k]);

        for (std::size_t k = 0; k < kk; ++k) {
            const auto l = extrinsic_llrs(shat[k], ap[k], ctx.priors[k].l0, ctx.priors[k].l1);
            ext[k][2 * t] = l[0];
            ext[k][2 * t + 1] = l[1];
        }
    }
    return ext;
}

double max_ext_diff(const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        REQUIRE(a[k].size() == b[k].size());
        for (std::size_t i = 0; i < a[k].size(); ++i) m = std::max(m, std::abs(a[k][i] - b[k][i]));
    }
    return m;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("engine extrinsics match the single-shot ops for every detector") {
    Rng rng(21);
    const MfConfig mf;
    for (DetectorKind kind : {DetectorKind::mmse, DetectorKind::pic, DetectorKind::sic,
                              DetectorKind::mf_sic, DetectorKind::mf_pic}) {
        for (int trial = 0; trial < 12; ++trial) {
            const std::size_t l = 5 + rng.uniform_below(5);
            const std::size_t k = 2 + rng.uniform_below(3);
            const Instance in = random_instance(l, k, 3, trial % 2 == 1, rng);
            const OrderPolicy pol = trial % 3 == 0 ? OrderPolicy::natural : OrderPolicy::norm;

            FrameEngine engine(in.g, in.sigma2_n, 1.0, kind, pol, mf);
            std::vector<std::vector<double>> got;
            CVec got_hard;
            engine.detect(in.y, in.prior_llrs, got, &got_hard);

            CVec want_hard;
            const auto want = reference_extrinsics(in, kind, pol, mf, &want_hard);
            CAPTURE(detector_name(kind));
            CAPTURE(trial);
            CHECK(max_ext_diff(got, want) < 1e-9);
            REQUIRE(got_hard.size() == want_hard.size());
            for (std::size_t i = 0; i < got_hard.size(); ++i)
                CHECK(std::abs(got_hard[i] - want_hard[i]) < 1e-9);
        }
    }
}

TEST_CASE("zero priors: mmse, pic, sic and mf-pic produce bit-identical extrinsics") {
    Rng rng(22);
    const MfConfig mf;
    for (int trial = 0; trial < 10; ++trial) {
        const Instance in = random_instance(8, 4, 2, false, rng);
        std::vector<std::vector<std::vector<double>>> outs;
        for (DetectorKind kind : {DetectorKind::mmse, DetectorKind::pic, DetectorKind::sic,
                                  DetectorKind::mf_pic}) {
            FrameEngine engine(in.g, in.sigma2_n, 1.0, kind, OrderPolicy::norm, mf);
            std::vector<std::vector<double>> ext;
            engine.detect(in.y, in.prior_llrs, ext, nullptr);
            outs.push_back(ext);
        }
        CHECK(outs[1] == outs[0]);
        CHECK(outs[2] == outs[0]);
        CHECK(outs[3] == outs[0]);
    }
}

TEST_CASE("engine is invariant to the symbol-energy normalization") {
    Rng rng(23);
    const MfConfig mf;
    const double es = 2.5;
    for (DetectorKind kind : {DetectorKind::mmse, DetectorKind::sic, DetectorKind::mf_sic}) {
        const Instance in = random_instance(6, 3, 2, true, rng);
        // scaled view: y' = sqrt(es) y received from sqrt(es)-scaled symbols
        CMat y_scaled = in.y;
        const double amp = std::sqrt(es);
        for (std::size_t i = 0; i < y_scaled.rows(); ++i)
            for (std::size_t j = 0; j < y_scaled.cols(); ++j) y_scaled(i, j) *= amp;

        FrameEngine unit(in.g, in.sigma2_n, 1.0, kind, OrderPolicy::norm, mf);
        FrameEngine scaled(in.g, in.sigma2_n * es, es, kind, OrderPolicy::norm, mf);
        std::vector<std::vector<double>> ext_unit, ext_scaled;
        CVec hard_unit, hard_scaled;
        unit.detect(in.y, in.prior_llrs, ext_unit, &hard_unit);
        scaled.detect(y_scaled, in.prior_llrs, ext_scaled, &hard_scaled);
        CHECK(max_ext_diff(ext_unit, ext_scaled) < 1e-9);
        for (std::size_t i = 0; i < hard_unit.size(); ++i)
            CHECK(std::abs(hard_unit[i] - hard_scaled[i]) < 1e-12);
    }
}

TEST_CASE("ml kind produces the exhaustive argmin and requires a hard output") {
    Rng rng(24);
    const Instance in = random_instance(5, 3, 3, false, rng);
    FrameEngine engine(in.g, in.sigma2_n, 1.0, DetectorKind::ml, OrderPolicy::natural, MfConfig{});
    std::vector<std::vector<double>> ext;
    CVec hard;
    engine.detect(in.y, in.prior_llrs, ext, &hard);
    for (std::size_t t = 0; t < 3; ++t) {
        const CVec want = exhaustive_ml(in.g, in.y.col(t));
        for (std::size_t k = 0; k < 3; ++k) CHECK(hard[t * 3 + k] == want[k]);
    }
    CHECK_THROWS_AS(engine.detect(in.y, in.prior_llrs, ext, nullptr), contract_error);
}

TEST_CASE("engine validates its inputs") {
    Rng rng(25);
    const Instance in = random_instance(4, 2, 2, false, rng);
    FrameEngine engine(in.g, in.sigma2_n, 1.0, DetectorKind::pic, OrderPolicy::natural, MfConfig{});
    std::vector<std::vector<double>> ext;

    std::vector<std::vector<double>> bad_rows(3, std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(engine.detect(in.y, bad_rows, ext, nullptr), contract_error);
    std::vector<std::vector<double>> bad_len(2, std::vector<double>(3, 0.0));
    CHECK_THROWS_AS(engine.detect(in.y, bad_len, ext, nullptr), contract_error);
    CHECK_THROWS_AS(FrameEngine(in.g, -1.0, 1.0, DetectorKind::pic, OrderPolicy::natural, MfConfig{}),
                    contract_error);
}

}  // TEST_SUITE("engine")
