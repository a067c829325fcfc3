#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfidd/channel.hpp"
#include "cfidd/detectors.hpp"
#include "cfidd/idd.hpp"

namespace cfidd {

struct SimConfig {
    GeometryConfig geometry;
    std::size_t l_aps = 100;
    std::size_t k_users = 40;

    std::size_t code_n = 256;
    std::size_t code_m = 128;
    int code_var_degree = 3;
    std::uint64_t code_seed = 1;

    std::vector<DetectorKind> detectors = {DetectorKind::mmse, DetectorKind::sic,
                                           DetectorKind::pic, DetectorKind::mf_sic,
                                           DetectorKind::mf_pic};
    int idd_iterations = 2;
    int ldpc_max_iter = 10;
    std::vector<double> snr_db = {-5.0, 0.0, 5.0, 10.0, 15.0};
    std::size_t realizations = 1000;
    // Coded: codewords per realization. Uncoded: channel uses per realization.
    std::size_t frames_per_realization = 1;
    std::uint64_t seed = 1;
    double sigma2_s = 1.0;
    MfConfig mf;
    OrderPolicy order = OrderPolicy::natural;
    bool uncoded = false;          // bypass the code, count hard symbol errors
    bool freeze_geometry = false;  // keep positions/shadowing, redraw fading only
    int threads = 1;

    bool operator==(const SimConfig&) const = default;
};

// Throws config_error naming every invalid field at once.
void validate(const SimConfig& cfg);

struct BerRecord {
    std::string detector;
    double snr_db = 0.0;
    int idd_iters = 1;
    std::size_t l_aps = 0, k_users = 0;
    std::uint64_t bits = 0, bit_errors = 0;
    // Coded: frame = one user codeword. Uncoded: frame = one user symbol.
    std::uint64_t frames = 0, frame_errors = 0;
    double elapsed_s = 0.0;      // wall time actually spent computing this cell
    std::uint64_t y_hash = 0;    // XOR of per-realization observation hashes
    std::uint64_t faults = 0;    // realizations whose cell aborted on an error

    double ber() const { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
    double fer() const { return frames ? static_cast<double>(frame_errors) / static_cast<double>(frames) : 0.0; }
};

// Counter addition; keys (detector, snr, idd, L, K) must match.
BerRecord accumulate(const BerRecord& a, const BerRecord& b);

// Per-(realization, cell) contribution, for paired statistical tests.
using Observer = std::function<void(std::size_t realization, const BerRecord& delta)>;

// Runs the sweep: every (detector, idd in 1..idd_iterations, snr) cell sees
// the same channel and the same noise at a given (realization, snr) — common
// random numbers — and idd = p records the receiver state after pass p of a
// single run. Records come back sorted by (detector, idd, snr). Reproducible
// bit-for-bit for a fixed seed, independent of thread count. `progress`, when
// set, receives one line per ~5% of realizations.
std::vector<BerRecord> run_sweep(const SimConfig& cfg, const Observer& observer = {},
                                 std::ostream* progress = nullptr);

std::uint64_t fnv1a(const void* data, std::size_t len);

}  // namespace cfidd
