#include "cfidd/channel.hpp"

#include <cmath>

#include "cfidd/rng.hpp"

namespace cfidd {

double hata_lambda(double freq_mhz, double h_ap_m, double h_ue_m) {
    if (!(freq_mhz > 0.0) || !(h_ap_m > 0.0)) throw contract_error("hata_lambda: frequency and AP height must be positive");
    const double lf = std::log10(freq_mhz);
    return 46.3 + 33.9 * lf - 13.82 * std::log10(h_ap_m) - (1.1 * lf - 0.7) * h_ue_m + (1.56 * lf - 0.8);
}

double path_loss_db(double d_m, double lambda_db, double d0_m, double d1_m) {
    if (!(d0_m > 0.0) || !(d1_m > d0_m)) throw contract_error("path_loss_db: breakpoints must satisfy 0 < d0 < d1");
    if (d_m < 0.0) throw contract_error("path_loss_db: negative distance");
    if (d_m > d1_m) return -lambda_db - 35.0 * std::log10(d_m);
    if (d_m > d0_m) return -lambda_db - 15.0 * std::log10(d1_m) - 20.0 * std::log10(d_m);
    return -lambda_db - 15.0 * std::log10(d1_m) - 20.0 * std::log10(d0_m);
}

double large_scale_gain(double pl_db, double sigma_sh_db, double zeta) {
    return std::pow(10.0, (pl_db + sigma_sh_db * zeta) / 10.0);
}

ChannelRealization draw_channel(const GeometryConfig& geo, std::size_t l, std::size_t k, Rng& rng) {
    if (l == 0 || k == 0) throw contract_error("draw_channel: L and K must be positive");
    ChannelRealization ch;
    ch.l = l;
    ch.k = k;
    ch.ap_xy.resize(l);
    ch.ue_xy.resize(k);
    for (auto& p : ch.ap_xy) {
        p.first = rng.uniform01() * geo.area_m;
        p.second = rng.uniform01() * geo.area_m;
    }
    for (auto& p : ch.ue_xy) {
        p.first = rng.uniform01() * geo.area_m;
        p.second = rng.uniform01() * geo.area_m;
    }

    const double lambda = hata_lambda(geo.freq_mhz, geo.h_ap_m, geo.h_ue_m);
    ch.beta.resize(l * k);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double dx = ch.ap_xy[i].first - ch.ue_xy[j].first;
            const double dy = ch.ap_xy[i].second - ch.ue_xy[j].second;
            const double d = std::sqrt(dx * dx + dy * dy);
            const double pl = path_loss_db(d, lambda, geo.d0_m, geo.d1_m);
            const double zeta = geo.shadow_db > 0.0 ? rng.normal() : 0.0;
            ch.beta[i * k + j] = large_scale_gain(pl, geo.shadow_db, zeta);
        }
    }

    ch.g = CMat(l, k);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < k; ++j) ch.g(i, j) = std::sqrt(ch.beta[i * k + j]) * rng.cnormal();
    return ch;
}

ChannelRealization redraw_fading(const ChannelRealization& frozen, Rng& rng) {
    ChannelRealization ch = frozen;
    for (std::size_t i = 0; i < ch.l; ++i)
        for (std::size_t j = 0; j < ch.k; ++j) ch.g(i, j) = std::sqrt(ch.beta[i * ch.k + j]) * rng.cnormal();
    return ch;
}

CVec apply_channel(const CMat& g, const CVec& s, double sigma2_w, Rng& rng) {
    if (sigma2_w < 0.0) throw contract_error("apply_channel: negative noise variance");
    CVec y = matvec(g, s);
    if (sigma2_w > 0.0) {
        const double scale = std::sqrt(sigma2_w);
        for (cplx& v : y) v += scale * rng.cnormal();
    }
    return y;
}

double noise_variance_for_snr(const CMat& g, double sigma2_s, double rate, double snr_linear) {
    if (!(sigma2_s > 0.0) || !(rate > 0.0) || !(snr_linear > 0.0))
        throw contract_error("noise_variance_for_snr: sigma2_s, rate and snr must be positive");
    double tr = 0.0;  // tr(G G^H) = squared Frobenius norm
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) tr += std::norm(g(i, j));
    if (!(tr > 0.0)) throw degenerate_error("noise_variance_for_snr: channel matrix has zero energy");
    return sigma2_s * tr * rate / (static_cast<double>(g.rows()) * static_cast<double>(g.cols()) * snr_linear);
}

}  // namespace cfidd
