#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cfidd/numerics.hpp"
#include "cfidd/rng.hpp"

namespace cfidd {
class Rng;

struct GeometryConfig {
    double area_m = 1000.0;    // square side D
    double d0_m = 10.0;        // inner breakpoint
    double d1_m = 50.0;        // outer breakpoint
    double h_ap_m = 15.0;      // access point height
    double h_ue_m = 1.65;      // terminal height
    double freq_mhz = 1900.0;  // carrier frequency
    double shadow_db = 10.0;   // log-normal shadowing std dev (dB); 0 disables

    bool operator==(const GeometryConfig&) const = default;
};

// Fixed attenuation term of the COST-231 Hata model (dB), f in MHz, heights in m.
double hata_lambda(double freq_mhz, double h_ap_m, double h_ue_m);

// Three-slope path loss (dB, negative). 35 dB/decade beyond d1, 20 dB/decade
// between d0 and d1, constant below d0. Continuous at both breakpoints.
double path_loss_db(double d_m, double lambda_db, double d0_m, double d1_m);

// Linear large-scale gain beta = 10^((PL_dB + sigma_sh * zeta) / 10).
double large_scale_gain(double pl_db, double sigma_sh_db, double zeta);

struct ChannelRealization {
    std::size_t l = 0, k = 0;
    CMat g;                                      // L x K complex gains
    std::vector<double> beta;                    // L x K large-scale gains, row-major
    std::vector<std::pair<double, double>> ap_xy;  // L positions
    std::vector<std::pair<double, double>> ue_xy;  // K positions

    double beta_at(std::size_t row, std::size_t col) const { return beta[row * k + col]; }
};

// Draw AP/UE positions uniformly on [0, D]^2, large-scale gains with
// shadowing, and CN(0,1) small-scale fading; g = sqrt(beta) * h.
// Draw order is fixed (APs, UEs, shadowing row-major, fading row-major) so a
// seed pins the realization exactly.
ChannelRealization draw_channel(const GeometryConfig& geo, std::size_t l, std::size_t k, Rng& rng);

// As draw_channel but keeps positions and large-scale gains from `frozen`
// and redraws only the small-scale fading.
ChannelRealization redraw_fading(const ChannelRealization& frozen, Rng& rng);

// y = G s + n with n ~ CN(0, sigma2_w I).
CVec apply_channel(const CMat& g, const CVec& s, double sigma2_w, Rng& rng);

// Noise variance that realizes a target SNR:
//   sigma2_w = tr(sigma2_s G G^H) * rate / (L * K * snr_linear).
// Throws degenerate_error when G has zero Frobenius norm.
double noise_variance_for_snr(const CMat& g, double sigma2_s, double rate, double snr_linear);

}  // namespace cfidd
