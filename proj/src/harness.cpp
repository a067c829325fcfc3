#include "cfidd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "cfidd/errors.hpp"

namespace cfidd {

namespace {

// substream tags; every random draw is pinned to (master seed, realization,
// purpose) so scheduling cannot shift any stream
constexpr std::uint64_t kFrozenGeometryTag = 0x67656f;
constexpr std::uint64_t kChannelTag = 1;
constexpr std::uint64_t kFadingTag = 2;
constexpr std::uint64_t kFrameBaseTag = 16;
constexpr std::uint64_t kTxTag = 1;
constexpr std::uint64_t kNoiseTag = 2;
constexpr std::uint64_t kInterleaverTag = 3;

struct CellKey {
    std::string det;
    int idd;
    double snr;

    bool operator<(const CellKey& o) const {
        if (det != o.det) return det < o.det;
        if (idd != o.idd) return idd < o.idd;
        return snr < o.snr;
    }
};

using CellMap = std::map<CellKey, BerRecord>;

void merge_into(CellMap& into, const CellKey& key, const BerRecord& delta) {
    auto it = into.find(key);
    if (it == into.end())
        into.emplace(key, delta);
    else
        it->second = accumulate(it->second, delta);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BerRecord make_delta(const SimConfig& cfg, DetectorKind det, double snr, int idd,
                     std::uint64_t y_hash) {
    BerRecord r;
    r.detector = detector_name(det);
    r.snr_db = snr;
    r.idd_iters = idd;
    r.l_aps = cfg.l_aps;
    r.k_users = cfg.k_users;
    r.y_hash = y_hash;
    return r;
}

struct SweepContext {
    explicit SweepContext(const SimConfig& c) : cfg(c) {}

    const SimConfig& cfg;
    const LinearCode* code = nullptr;
    const ChannelRealization* frozen = nullptr;
    std::vector<double> snr_linear;
    const Observer* observer = nullptr;
    std::ostream* progress = nullptr;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex io;
};

// Count message-bit errors of one decoded pass against the transmitted frame.
void count_pass(const TxFrame& tx, const PassOutput& out, BerRecord& rec) {
    const std::size_t kk = tx.message.size();
    for (std::size_t k = 0; k < kk; ++k) {
        const auto& truth = tx.message[k];
        const auto& got = out.message[k];
        std::uint64_t errs = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) errs += truth[i] != got[i];
        rec.bits += truth.size();
        rec.bit_errors += errs;
        rec.frames += 1;
        rec.frame_errors += errs != 0;
    }
}

void fault_cells(const SimConfig& cfg, CellMap& rmap, DetectorKind det, double snr,
                 std::uint64_t y_hash) {
    for (int p = 1; p <= cfg.idd_iterations; ++p) {
        BerRecord d = make_delta(cfg, det, snr, p, y_hash);
        d.faults = 1;
        merge_into(rmap, CellKey{d.detector, p, snr}, d);
    }
}

// One coded (frame, snr) for one detector: records every IDD pass. The
// zero-prior first pass collapses to the same computation for mmse/pic/sic/
// mf-pic, so it is computed once per frame and shared (`pass1`); mf-sic has
// its own filters and its own pass 1.
void run_detector_cells(const SimConfig& cfg, const LinearCode& code, const TxFrame& tx,
                        const CMat& y, std::uint64_t y_hash, double snr, const IddConfig& icfg,
                        DetectorKind det, const FrameEngine& engine, const PassState& pass1,
                        double pass1_seconds, CellMap& rmap) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<PassOutput> later = continue_frame(engine, y, code, icfg, pass1);
    const double later_seconds = seconds_since(t0);

    BerRecord d1 = make_delta(cfg, det, snr, 1, y_hash);
    d1.elapsed_s = pass1_seconds;
    count_pass(tx, pass1.out, d1);
    merge_into(rmap, CellKey{d1.detector, 1, snr}, d1);

    const double per_pass = later.empty() ? 0.0 : later_seconds / static_cast<double>(later.size());
    for (std::size_t i = 0; i < later.size(); ++i) {
        const int p = static_cast<int>(i) + 2;
        BerRecord dp = make_delta(cfg, det, snr, p, y_hash);
        dp.elapsed_s = per_pass;
        count_pass(tx, later[i], dp);
        merge_into(rmap, CellKey{dp.detector, p, snr}, dp);
    }
}

void run_coded_snr(const SweepContext& ctx, const ChannelRealization& ch, const TxFrame& tx,
                   const CMat& y, std::uint64_t y_hash, double snr, double sigma2_w,
                   std::uint64_t il_seed, CellMap& rmap) {
    const SimConfig& cfg = ctx.cfg;
    const LinearCode& code = *ctx.code;
    IddConfig icfg;
    icfg.idd_iterations = cfg.idd_iterations;
    icfg.ldpc_max_iter = cfg.ldpc_max_iter;
    icfg.interleaver_seed = il_seed;

    std::vector<DetectorKind> shared_class;
    bool want_mf_sic = false;
    for (DetectorKind det : cfg.detectors) {
        if (det == DetectorKind::mf_sic)
            want_mf_sic = true;
        else
            shared_class.push_back(det);
    }

    if (!shared_class.empty()) {
        std::optional<FrameEngine> first_engine;
        std::optional<PassState> pass1;
        double pass1_seconds = 0.0;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            first_engine.emplace(ch.g, sigma2_w, cfg.sigma2_s, shared_class.front(), cfg.order,
                                 cfg.mf);
            pass1 = run_pass1(*first_engine, y, code, icfg);
            pass1_seconds = seconds_since(t0);
        } catch (const std::exception& e) {
            for (DetectorKind det : shared_class) fault_cells(cfg, rmap, det, snr, y_hash);
            std::cerr << "cell error (shared pass 1, snr " << snr << "): " << e.what() << "\n";
            pass1.reset();
        }
        if (pass1) {
            for (std::size_t i = 0; i < shared_class.size(); ++i) {
                const DetectorKind det = shared_class[i];
                try {
                    if (i == 0) {
                        run_detector_cells(cfg, code, tx, y, y_hash, snr, icfg, det, *first_engine,
                                           *pass1, pass1_seconds, rmap);
                    } else {
                        FrameEngine engine(ch.g, sigma2_w, cfg.sigma2_s, det, cfg.order, cfg.mf);
                        run_detector_cells(cfg, code, tx, y, y_hash, snr, icfg, det, engine, *pass1,
                                           0.0, rmap);
                    }
                } catch (const std::exception& e) {
                    fault_cells(cfg, rmap, det, snr, y_hash);
                    std::cerr << "cell error (" << detector_name(det) << ", snr " << snr
                              << "): " << e.what() << "\n";
                }
            }
        }
    }

    if (want_mf_sic) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            FrameEngine engine(ch.g, sigma2_w, cfg.sigma2_s, DetectorKind::mf_sic, cfg.order,
                               cfg.mf);
            PassState pass1 = run_pass1(engine, y, code, icfg);
            const double pass1_seconds = seconds_since(t0);
            run_detector_cells(cfg, code, tx, y, y_hash, snr, icfg, DetectorKind::mf_sic, engine,
                               pass1, pass1_seconds, rmap);
        } catch (const std::exception& e) {
            fault_cells(cfg, rmap, DetectorKind::mf_sic, snr, y_hash);
            std::cerr << "cell error (mf-sic, snr " << snr << "): " << e.what() << "\n";
        }
    }
}

void run_uncoded_snr(const SweepContext& ctx, const ChannelRealization& ch, const CMat& x_unit,
                     const CMat& y, std::uint64_t y_hash, double snr, double sigma2_w,
                     CellMap& rmap) {
    const SimConfig& cfg = ctx.cfg;
    const Constellation& cst = qpsk();
    const std::size_t kk = cfg.k_users;
    const std::size_t tt = x_unit.cols();
    const std::vector<std::vector<double>> priors(kk, std::vector<double>(2 * tt, 0.0));
    std::vector<std::vector<double>> ext;
    CVec hard;
    for (DetectorKind det : cfg.detectors) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            FrameEngine engine(ch.g, sigma2_w, cfg.sigma2_s, det, cfg.order, cfg.mf);
            engine.detect(y, priors, ext, &hard);
            BerRecord d = make_delta(cfg, det, snr, 1, y_hash);
            d.elapsed_s = seconds_since(t0);
            for (std::size_t t = 0; t < tt; ++t)
                for (std::size_t k = 0; k < kk; ++k) {
                    const std::size_t truth = cst.nearest_index(x_unit(k, t));
                    const std::size_t got = cst.nearest_index(hard[t * kk + k]);
                    d.frames += 1;
                    d.frame_errors += truth != got;
                    d.bits += 2;
                    d.bit_errors += static_cast<std::uint64_t>(Constellation::bit(truth, 0) !=
                                                               Constellation::bit(got, 0)) +
                                    static_cast<std::uint64_t>(Constellation::bit(truth, 1) !=
                                                               Constellation::bit(got, 1));
                }
            merge_into(rmap, CellKey{d.detector, 1, snr}, d);
        } catch (const std::exception& e) {
            BerRecord d = make_delta(cfg, det, snr, 1, y_hash);
            d.faults = 1;
            merge_into(rmap, CellKey{d.detector, 1, snr}, d);
            std::cerr << "cell error (" << detector_name(det) << ", snr " << snr << "): " << e.what()
                      << "\n";
        }
    }
}

void process_realization(SweepContext& ctx, std::size_t r, CellMap& rmap) {
    const SimConfig& cfg = ctx.cfg;
    const std::uint64_t seed_r = Rng::derive(cfg.seed, r);

    ChannelRealization ch;
    if (ctx.frozen) {
        Rng rng(Rng::derive(seed_r, kFadingTag));
        ch = redraw_fading(*ctx.frozen, rng);
    } else {
        Rng rng(Rng::derive(seed_r, kChannelTag));
        ch = draw_channel(cfg.geometry, cfg.l_aps, cfg.k_users, rng);
    }

    const double amp = std::sqrt(cfg.sigma2_s);
    const double rate = cfg.uncoded ? 1.0 : ctx.code->rate();
    const std::size_t n_frames = cfg.uncoded ? 1 : cfg.frames_per_realization;

    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::uint64_t frame_seed = Rng::derive(seed_r, kFrameBaseTag + f);
        Rng rng_tx(Rng::derive(frame_seed, kTxTag));
        Rng rng_noise(Rng::derive(frame_seed, kNoiseTag));
        const std::uint64_t il_seed = Rng::derive(frame_seed, kInterleaverTag);

        TxFrame tx;
        CMat x_unit;
        if (cfg.uncoded) {
            x_unit = make_tx_symbols(cfg.k_users, cfg.frames_per_realization, rng_tx);
        } else {
            tx = make_tx_frame(*ctx.code, cfg.k_users, il_seed, rng_tx);
            x_unit = tx.x;
        }
        const std::size_t tt = x_unit.cols();

        // noiseless receive + unit noise, shared by every SNR point
        CMat y0(cfg.l_aps, tt);
        for (std::size_t i = 0; i < cfg.l_aps; ++i)
            for (std::size_t t = 0; t < tt; ++t) {
                cplx acc{};
                for (std::size_t k = 0; k < cfg.k_users; ++k) acc += ch.g(i, k) * x_unit(k, t);
                y0(i, t) = amp * acc;
            }
        CMat z(cfg.l_aps, tt);
        for (std::size_t i = 0; i < cfg.l_aps; ++i)
            for (std::size_t t = 0; t < tt; ++t) z(i, t) = rng_noise.cnormal();

        CMat y(cfg.l_aps, tt);
        for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
            const double snr = cfg.snr_db[si];
            const double sigma2_w =
                noise_variance_for_snr(ch.g, cfg.sigma2_s, rate, ctx.snr_linear[si]);
            const double sw = std::sqrt(sigma2_w);
            for (std::size_t i = 0; i < cfg.l_aps; ++i)
                for (std::size_t t = 0; t < tt; ++t) y(i, t) = y0(i, t) + sw * z(i, t);
            const std::uint64_t y_hash =
                fnv1a(y.data(), cfg.l_aps * tt * sizeof(cplx));

            if (cfg.uncoded)
                run_uncoded_snr(ctx, ch, x_unit, y, y_hash, snr, sigma2_w, rmap);
            else
                run_coded_snr(ctx, ch, tx, y, y_hash, snr, sigma2_w, il_seed, rmap);
        }
    }
}

void worker(SweepContext& ctx, CellMap& local) {
    const std::size_t total = ctx.cfg.realizations;
    const std::size_t step = std::max<std::size_t>(1, total / 20);
    for (;;) {
        const std::size_t r = ctx.next.fetch_add(1);
        if (r >= total) break;
        CellMap rmap;
        try {
            process_realization(ctx, r, rmap);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(ctx.io);
            std::cerr << "realization " << r << " failed: " << e.what() << "\n";
            continue;
        }
        for (const auto& [key, rec] : rmap) merge_into(local, key, rec);
        if (ctx.observer && *ctx.observer) {
            std::lock_guard<std::mutex> lock(ctx.io);
            for (const auto& [key, rec] : rmap) (*ctx.observer)(r, rec);
        }
        const std::size_t done = ctx.done.fetch_add(1) + 1;
        if (ctx.progress && (done % step == 0 || done == total)) {
            std::lock_guard<std::mutex> lock(ctx.io);
            *ctx.progress << "realization " << done << "/" << total << "\n";
        }
    }
}

}  // namespace

void validate(const SimConfig& cfg) {
    std::vector<std::string> errs;
    const auto need = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    need(cfg.l_aps >= 1, "sim.l: need at least one access point");
    need(cfg.k_users >= 1, "sim.k: need at least one user");
    need(cfg.realizations >= 1, "sim.realizations: must be >= 1");
    need(cfg.frames_per_realization >= 1, "sim.frames_per_realization: must be >= 1");
    need(!cfg.snr_db.empty(), "sim.snr_db: SNR grid must be nonempty");
    need(!cfg.detectors.empty(), "sim.detectors: detector list must be nonempty");
    need(cfg.idd_iterations >= 1, "sim.idd: must be >= 1");
    need(cfg.ldpc_max_iter >= 1, "sim.ldpc_iters: must be >= 1");
    need(cfg.sigma2_s > 0.0, "sim.sigma2_s: must be positive");
    need(cfg.threads >= 1, "sim.threads: must be >= 1");
    need(cfg.mf.candidates >= 1 && cfg.mf.candidates <= 4, "mf.candidates: must be in 1..4");
    need(cfg.mf.d_th >= 0.0, "mf.d_th: must be >= 0");
    need(cfg.geometry.area_m > 0.0, "channel.area_m: must be positive");
    need(cfg.geometry.d0_m > 0.0, "channel.d0_m: must be positive");
    need(cfg.geometry.d1_m > cfg.geometry.d0_m, "channel.d1_m: must exceed channel.d0_m");
    need(cfg.geometry.h_ap_m > 0.0, "channel.h_ap_m: must be positive");
    need(cfg.geometry.h_ue_m > 0.0, "channel.h_ue_m: must be positive");
    need(cfg.geometry.freq_mhz > 0.0, "channel.freq_mhz: must be positive");
    need(cfg.geometry.shadow_db >= 0.0, "channel.shadow_db: must be >= 0");

    std::vector<DetectorKind> sorted = cfg.detectors;
    std::sort(sorted.begin(), sorted.end());
    need(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
         "sim.detectors: duplicate detector");
    const bool has_ml =
        std::find(cfg.detectors.begin(), cfg.detectors.end(), DetectorKind::ml) !=
        cfg.detectors.end();
    if (has_ml) {
        need(cfg.uncoded, "sim.detectors: ml is only available in uncoded mode");
        need(cfg.k_users <= 8, "sim.detectors: ml supports at most 8 users");
    }
    if (!cfg.uncoded) {
        need(cfg.code_n >= 4 && cfg.code_n % 2 == 0, "code.n: must be even and >= 4");
        need(cfg.code_m >= 1 && cfg.code_m < cfg.code_n, "code.m: must be in 1..n-1");
        need(cfg.code_var_degree >= 2, "code.var_degree: must be >= 2");
        if (cfg.code_m >= 1 && cfg.code_n >= 4)
            need((cfg.code_n * static_cast<std::size_t>(std::max(cfg.code_var_degree, 0))) %
                         cfg.code_m ==
                     0,
                 "code.m: n*var_degree must be divisible by m (regular code)");
    }
    if (!errs.empty()) {
        std::string joined = "invalid configuration: ";
        for (std::size_t i = 0; i < errs.size(); ++i) {
            if (i) joined += "; ";
            joined += errs[i];
        }
        throw config_error(joined);
    }
}

BerRecord accumulate(const BerRecord& a, const BerRecord& b) {
    if (a.detector != b.detector || a.snr_db != b.snr_db || a.idd_iters != b.idd_iters ||
        a.l_aps != b.l_aps || a.k_users != b.k_users)
        throw contract_error("accumulate: record keys differ");
    BerRecord r = a;
    r.bits += b.bits;
    r.bit_errors += b.bit_errors;
    r.frames += b.frames;
    r.frame_errors += b.frame_errors;
    r.elapsed_s += b.elapsed_s;
    r.y_hash ^= b.y_hash;
    r.faults += b.faults;
    return r;
}

std::vector<BerRecord> run_sweep(const SimConfig& cfg, const Observer& observer,
                                 std::ostream* progress) {
    validate(cfg);

    LinearCode code;
    if (!cfg.uncoded) code = build_ldpc(cfg.code_n, cfg.code_m, cfg.code_seed, cfg.code_var_degree);

    ChannelRealization frozen;
    if (cfg.freeze_geometry) {
        Rng rng(Rng::derive(cfg.seed, kFrozenGeometryTag));
        frozen = draw_channel(cfg.geometry, cfg.l_aps, cfg.k_users, rng);
    }

    SweepContext ctx(cfg);
    if (!cfg.uncoded) ctx.code = &code;
    if (cfg.freeze_geometry) ctx.frozen = &frozen;
    ctx.observer = &observer;
    ctx.progress = progress;
    ctx.snr_linear.resize(cfg.snr_db.size());
    for (std::size_t i = 0; i < cfg.snr_db.size(); ++i)
        ctx.snr_linear[i] = std::pow(10.0, cfg.snr_db[i] / 10.0);

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min<std::size_t>(cfg.threads, cfg.realizations));
    std::vector<CellMap> locals(n_workers);
    if (n_workers == 1) {
        worker(ctx, locals[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back([&ctx, &locals, w] { worker(ctx, locals[w]); });
        for (auto& th : pool) th.join();
    }

    CellMap total;
    for (const auto& local : locals)
        for (const auto& [key, rec] : local) merge_into(total, key, rec);

    std::vector<BerRecord> out;
    out.reserve(total.size());
    for (auto& [key, rec] : total) out.push_back(std::move(rec));
    return out;
}

std::uint64_t fnv1a(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace cfidd
