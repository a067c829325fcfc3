#include "cfidd/config.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cfidd/errors.hpp"

namespace cfidd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
}

bool to_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return false;
    out = v;
    return true;
}

bool to_u64(const std::string& s, std::uint64_t& out) {
    const std::string t = trim(s);
    if (t.empty() || t[0] == '-') return false;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) return false;
    out = v;
    return true;
}

bool to_size(const std::string& s, std::size_t& out) {
    std::uint64_t v = 0;
    if (!to_u64(s, v)) return false;
    out = static_cast<std::size_t>(v);
    return true;
}

bool to_int(const std::string& s, int& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || v < INT_MIN || v > INT_MAX) return false;
    out = static_cast<int>(v);
    return true;
}

bool to_bool(const std::string& s, bool& out) {
    const std::string t = trim(s);
    if (t == "true" || t == "1") {
        out = true;
        return true;
    }
    if (t == "false" || t == "0") {
        out = false;
        return true;
    }
    return false;
}

// Shortest decimal that parses back to the same bits.
// shortest %g string that parses back to exactly v (so 10 prints as "10", not "1e+01")
std::string format_double(double v) {
    char buf[40];
    std::string best;
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) != v) continue;
        if (best.empty() || std::strlen(buf) < best.size()) best = buf;
    }
    if (best.empty()) best = buf;
    return best;
}

std::string join_detectors(const std::vector<DetectorKind>& ds) {
    std::string out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (i) out += ',';
        out += detector_name(ds[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ',';
        out += format_double(vs[i]);
    }
    return out;
}

// true if the key is recognized; a value problem is reported through err
bool apply_one(SimConfig& cfg, const std::string& key, const std::string& value,
               std::string& err) {
    const auto bad = [&](const char* expect) {
        err = key + ": expected " + expect + ", got '" + value + "'";
        return true;
    };
    GeometryConfig& geo = cfg.geometry;

    if (key == "channel.area_m")
        return to_double(value, geo.area_m) ? true : bad("a real number (meters)");
    if (key == "channel.d0_m")
        return to_double(value, geo.d0_m) ? true : bad("a real number (meters)");
    if (key == "channel.d1_m")
        return to_double(value, geo.d1_m) ? true : bad("a real number (meters)");
    if (key == "channel.h_ap_m")
        return to_double(value, geo.h_ap_m) ? true : bad("a real number (meters)");
    if (key == "channel.h_ue_m")
        return to_double(value, geo.h_ue_m) ? true : bad("a real number (meters)");
    if (key == "channel.freq_mhz")
        return to_double(value, geo.freq_mhz) ? true : bad("a real number (MHz)");
    if (key == "channel.shadow_db")
        return to_double(value, geo.shadow_db) ? true : bad("a real number (dB)");

    if (key == "code.n") return to_size(value, cfg.code_n) ? true : bad("an integer >= 4");
    if (key == "code.m") return to_size(value, cfg.code_m) ? true : bad("an integer >= 1");
    if (key == "code.var_degree")
        return to_int(value, cfg.code_var_degree) ? true : bad("an integer >= 2");
    if (key == "code.seed") return to_u64(value, cfg.code_seed) ? true : bad("an unsigned integer");

    if (key == "mf.d_th") return to_double(value, cfg.mf.d_th) ? true : bad("a real number >= 0");
    if (key == "mf.candidates")
        return to_int(value, cfg.mf.candidates) ? true : bad("an integer in 1..4");

    if (key == "sim.l") return to_size(value, cfg.l_aps) ? true : bad("an integer >= 1");
    if (key == "sim.k") return to_size(value, cfg.k_users) ? true : bad("an integer >= 1");
    if (key == "sim.idd") return to_int(value, cfg.idd_iterations) ? true : bad("an integer >= 1");
    if (key == "sim.ldpc_iters")
        return to_int(value, cfg.ldpc_max_iter) ? true : bad("an integer >= 1");
    if (key == "sim.realizations")
        return to_size(value, cfg.realizations) ? true : bad("an integer >= 1");
    if (key == "sim.frames_per_realization")
        return to_size(value, cfg.frames_per_realization) ? true : bad("an integer >= 1");
    if (key == "sim.seed") return to_u64(value, cfg.seed) ? true : bad("an unsigned integer");
    if (key == "sim.sigma2_s")
        return to_double(value, cfg.sigma2_s) ? true : bad("a positive real number");
    if (key == "sim.threads") return to_int(value, cfg.threads) ? true : bad("an integer >= 1");
    if (key == "sim.uncoded") return to_bool(value, cfg.uncoded) ? true : bad("true or false");
    if (key == "sim.freeze_geometry")
        return to_bool(value, cfg.freeze_geometry) ? true : bad("true or false");
    if (key == "sim.order") {
        if (trim(value) == "natural") {
            cfg.order = OrderPolicy::natural;
            return true;
        }
        if (trim(value) == "norm") {
            cfg.order = OrderPolicy::norm;
            return true;
        }
        return bad("'natural' or 'norm'");
    }
    if (key == "sim.detectors") {
        try {
            cfg.detectors = parse_detector_list(value);
        } catch (const config_error& e) {
            err = key + ": " + e.what();
        }
        return true;
    }
    if (key == "sim.snr_db") {
        try {
            cfg.snr_db = parse_snr_grid(value);
        } catch (const config_error& e) {
            err = key + ": " + e.what();
        }
        return true;
    }
    return false;
}

void throw_joined(const std::vector<std::string>& errs) {
    if (errs.empty()) return;
    std::string msg = "configuration errors: ";
    for (std::size_t i = 0; i < errs.size(); ++i) {
        if (i) msg += "; ";
        msg += errs[i];
    }
    throw config_error(msg);
}

}  // namespace

KvPairs read_config_kv(const std::string& text) {
    KvPairs out;
    std::vector<std::string> errs;
    std::size_t line_no = 0;
    for (const std::string& raw : split(text, '\n')) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            errs.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            errs.push_back("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        out.emplace_back(key, value);
    }
    throw_joined(errs);
    return out;
}

void apply_config_kv(SimConfig& cfg, const KvPairs& kv) {
    std::vector<std::string> errs;
    for (const auto& [key, value] : kv) {
        if (key.rfind("manifest.", 0) == 0) continue;
        std::string err;
        if (!apply_one(cfg, key, value, err))
            errs.push_back(key + ": unknown key");
        else if (!err.empty())
            errs.push_back(err);
    }
    throw_joined(errs);
}

SimConfig parse_config_text(const std::string& text) {
    SimConfig cfg;
    apply_config_kv(cfg, read_config_kv(text));
    return cfg;
}

SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const SimConfig& cfg) {
    std::ostringstream out;
    out << "channel.area_m = " << format_double(cfg.geometry.area_m) << "\n";
    out << "channel.d0_m = " << format_double(cfg.geometry.d0_m) << "\n";
    out << "channel.d1_m = " << format_double(cfg.geometry.d1_m) << "\n";
    out << "channel.freq_mhz = " << format_double(cfg.geometry.freq_mhz) << "\n";
    out << "channel.h_ap_m = " << format_double(cfg.geometry.h_ap_m) << "\n";
    out << "channel.h_ue_m = " << format_double(cfg.geometry.h_ue_m) << "\n";
    out << "channel.shadow_db = " << format_double(cfg.geometry.shadow_db) << "\n";
    out << "code.m = " << cfg.code_m << "\n";
    out << "code.n = " << cfg.code_n << "\n";
    out << "code.seed = " << cfg.code_seed << "\n";
    out << "code.var_degree = " << cfg.code_var_degree << "\n";
    out << "mf.candidates = " << cfg.mf.candidates << "\n";
    out << "mf.d_th = " << format_double(cfg.mf.d_th) << "\n";
    out << "sim.detectors = " << join_detectors(cfg.detectors) << "\n";
    out << "sim.frames_per_realization = " << cfg.frames_per_realization << "\n";
    out << "sim.freeze_geometry = " << (cfg.freeze_geometry ? "true" : "false") << "\n";
    out << "sim.idd = " << cfg.idd_iterations << "\n";
    out << "sim.k = " << cfg.k_users << "\n";
    out << "sim.l = " << cfg.l_aps << "\n";
    out << "sim.ldpc_iters = " << cfg.ldpc_max_iter << "\n";
    out << "sim.order = " << (cfg.order == OrderPolicy::natural ? "natural" : "norm") << "\n";
    out << "sim.realizations = " << cfg.realizations << "\n";
    out << "sim.seed = " << cfg.seed << "\n";
    out << "sim.sigma2_s = " << format_double(cfg.sigma2_s) << "\n";
    out << "sim.snr_db = " << join_doubles(cfg.snr_db) << "\n";
    out << "sim.threads = " << cfg.threads << "\n";
    out << "sim.uncoded = " << (cfg.uncoded ? "true" : "false") << "\n";
    return out.str();
}

std::vector<double> parse_snr_grid(const std::string& spec) {
    const std::string t = trim(spec);
    if (t.empty()) throw config_error("empty SNR grid");
    if (t.find(':') != std::string::npos) {
        const auto parts = split(t, ':');
        if (parts.size() != 3) throw config_error("range form is start:step:end");
        double start = 0, step = 0, end = 0;
        if (!to_double(parts[0], start) || !to_double(parts[1], step) || !to_double(parts[2], end))
            throw config_error("range form is start:step:end with real numbers");
        if (step == 0.0) throw config_error("range step must be nonzero");
        const double span = (end - start) / step;
        if (span < -1e-9) throw config_error("range is empty (step points away from end)");
        const std::size_t count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
        std::vector<double> grid(count);
        for (std::size_t i = 0; i < count; ++i) grid[i] = start + static_cast<double>(i) * step;
        return grid;
    }
    std::vector<double> grid;
    for (const std::string& part : split(t, ',')) {
        double v = 0;
        if (!to_double(part, v)) throw config_error("bad SNR value '" + trim(part) + "'");
        grid.push_back(v);
    }
    return grid;
}

std::vector<DetectorKind> parse_detector_list(const std::string& spec) {
    const std::string t = trim(spec);
    if (t.empty()) throw config_error("empty detector list");
    std::vector<DetectorKind> out;
    for (const std::string& part : split(t, ','))
        out.push_back(detector_from_name(trim(part)));  // throws on unknown names
    return out;
}

void emit_csv(const std::vector<BerRecord>& records, std::ostream& out) {
    if (records.empty()) throw contract_error("no records to emit");
    out << "detector,snr_db,idd_iters,L,K,bits,bit_errors,ber,frames,frame_errors,fer\n";
    for (const BerRecord& r : records) {
        out << r.detector << ',' << format_double(r.snr_db) << ',' << r.idd_iters << ','
            << r.l_aps << ',' << r.k_users << ',' << r.bits << ',' << r.bit_errors << ','
            << format_double(r.ber()) << ',' << r.frames << ',' << r.frame_errors << ','
            << format_double(r.fer()) << '\n';
    }
}

void emit_csv(const std::vector<BerRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    emit_csv(records, out);
    out.flush();
    if (!out) throw io_error("write failed: " + path);
}

void emit_manifest(const SimConfig& cfg, const std::vector<BerRecord>& records,
                   const ManifestInfo& info, std::ostream& out) {
    out << "manifest.version = " << info.tool_version << "\n";
    out << "manifest.seed = " << cfg.seed << "\n";
    out << "manifest.started_utc = " << info.started_utc << "\n";
    out << "manifest.finished_utc = " << info.finished_utc << "\n";
    out << serialize_config(cfg);
    for (const OverrideNote& o : info.overrides) {
        out << "manifest.override." << o.key << ".file = " << o.file_value << "\n";
        out << "manifest.override." << o.key << ".flag = " << o.flag_value << "\n";
    }
    for (const BerRecord& r : records) {
        const std::string cell = "manifest.cell." + r.detector + ".snr_" + format_double(r.snr_db) +
                                 ".idd_" + std::to_string(r.idd_iters);
        out << cell << ".seconds = " << format_double(r.elapsed_s) << "\n";
        if (r.faults) out << cell << ".faults = " << r.faults << "\n";
    }
}

void emit_manifest(const SimConfig& cfg, const std::vector<BerRecord>& records,
                   const ManifestInfo& info, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    emit_manifest(cfg, records, info, out);
    out.flush();
    if (!out) throw io_error("write failed: " + path);
}

std::string utc_timestamp_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace cfidd
