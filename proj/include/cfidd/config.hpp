#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cfidd/harness.hpp"

namespace cfidd {

using KvPairs = std::vector<std::pair<std::string, std::string>>;

// Flat dotted key=value text: one assignment per line, '#' starts a comment.
// Throws config_error listing every malformed line.
KvPairs read_config_kv(const std::string& text);

// Apply assignments onto cfg. Unknown keys (outside the manifest.* namespace,
// which is ignored) and unparseable values throw one config_error naming
// every offending key with the expected form.
void apply_config_kv(SimConfig& cfg, const KvPairs& kv);

// Built-in defaults overlaid with the assignments in `text`.
SimConfig parse_config_text(const std::string& text);
SimConfig parse_config_file(const std::string& path);

// Canonical echo of every field; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const SimConfig& cfg);

// "a,b,c" or "start:step:end" (inclusive of end), dB values.
std::vector<double> parse_snr_grid(const std::string& spec);
std::vector<DetectorKind> parse_detector_list(const std::string& spec);

// header detector,snr_db,idd_iters,L,K,bits,bit_errors,ber,frames,frame_errors,fer
// one row per record in the given order, LF endings, %.17g doubles.
void emit_csv(const std::vector<BerRecord>& records, std::ostream& out);
void emit_csv(const std::vector<BerRecord>& records, const std::string& path);

struct OverrideNote {
    std::string key, file_value, flag_value;  // flag won; both recorded
};

struct ManifestInfo {
    std::string tool_version;
    std::string started_utc, finished_utc;
    std::vector<OverrideNote> overrides;
};

// Resolved-config echo plus manifest.* metadata (version, timestamps,
// overrides, per-cell runtimes). The output is itself a valid config file.
void emit_manifest(const SimConfig& cfg, const std::vector<BerRecord>& records,
                   const ManifestInfo& info, std::ostream& out);
void emit_manifest(const SimConfig& cfg, const std::vector<BerRecord>& records,
                   const ManifestInfo& info, const std::string& path);

std::string utc_timestamp_now();

}  // namespace cfidd
