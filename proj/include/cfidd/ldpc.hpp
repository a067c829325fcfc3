#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfidd/errors.hpp"

namespace cfidd {

// Binary linear code given by a sparse parity-check matrix H (m x n) plus a
// precomputed systematic encoder: H is reduced over GF(2) to put an identity
// on the pivot (parity) columns; message bits live on the remaining columns.
struct LinearCode {
    std::size_t n = 0, m = 0;
    std::vector<std::vector<int>> check_vars;  // per check: variable indices, ascending
    std::vector<std::vector<int>> var_checks;  // per variable: check indices, ascending

    std::vector<int> message_positions;  // n-m columns, ascending
    std::vector<int> parity_positions;   // m pivot columns, ascending
    // parity bit r = parity of (enc_rows[r] AND message bits)
    std::vector<std::vector<std::uint64_t>> enc_rows;

    std::size_t k() const { return n - m; }
    double rate() const { return static_cast<double>(k()) / static_cast<double>(n); }
};

// Regular LDPC code built by progressive edge growth: every variable node has
// degree n_edges/n, every check node degree n_edges/m, full rank over GF(2).
// Deterministic for a given seed; retries internally with derived seeds and
// throws construction_error if the constraints cannot be met.
LinearCode build_ldpc(std::size_t n, std::size_t m, std::uint64_t seed, int var_degree = 3);

std::vector<std::uint8_t> encode(const LinearCode& code, const std::vector<std::uint8_t>& message);
bool parity_ok(const LinearCode& code, const std::vector<std::uint8_t>& word);

// Exact pairwise check-node combination:
//   box_plus(a, b) = sign(a)sign(b) min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|)
double box_plus(double a, double b);

struct DecodeResult {
    std::vector<double> posterior;  // channel + all check messages
    std::vector<double> extrinsic;  // posterior - channel input
    std::vector<std::uint8_t> hard; // 1 iff posterior < 0 (ties -> 0)
    bool parity = false;            // H * hard == 0
    int iterations = 0;             // flooding iterations actually run
};

// Flooding sum-product decoding with the exact box-plus check update,
// messages clamped to +/-60, early exit once the syndrome is zero.
DecodeResult decode(const LinearCode& code, const std::vector<double>& llr, int max_iterations);

LinearCode load_alist(std::istream& in);
LinearCode load_alist(const std::string& path);
void save_alist(std::ostream& out, const LinearCode& code);
void save_alist(const std::string& path, const LinearCode& code);

}  // namespace cfidd
