#include "cfidd/ldpc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "cfidd/modem.hpp"
#include "cfidd/rng.hpp"

namespace cfidd {

namespace {

using BitRow = std::vector<std::uint64_t>;

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

bool get_bit(const BitRow& r, std::size_t i) { return (r[i >> 6] >> (i & 63)) & 1u; }
void set_bit(BitRow& r, std::size_t i) { r[i >> 6] ^= (std::uint64_t{1} << (i & 63)); }

void xor_rows(BitRow& dst, const BitRow& src) {
    for (std::size_t w = 0; w < dst.size(); ++w) dst[w] ^= src[w];
}

std::vector<BitRow> dense_rows(const LinearCode& code) {
    std::vector<BitRow> rows(code.m, BitRow(words_for(code.n), 0));
    for (std::size_t j = 0; j < code.m; ++j)
        for (int v : code.check_vars[j]) set_bit(rows[j], static_cast<std::size_t>(v));
    return rows;
}

std::size_t gf2_rank(std::vector<BitRow> rows, std::size_t n) {
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < rows.size(); ++col) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && !get_bit(rows[pivot], col)) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[pivot], rows[rank]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (i != rank && get_bit(rows[i], col)) xor_rows(rows[i], rows[rank]);
        ++rank;
    }
    return rank;
}

// One PEG attempt. Grows dv edges per variable node; each new edge goes to a
// check that is (a) below the target degree and (b) as far from the variable
// as the current graph allows, preferring low-degree checks with seeded
// random tie-breaks. Returns empty lists on failure.
bool peg_attempt(std::size_t n, std::size_t m, int dv, int dc, Rng& rng,
                 std::vector<std::vector<int>>& check_vars, std::vector<std::vector<int>>& var_checks) {
    check_vars.assign(m, {});
    var_checks.assign(n, {});
    std::vector<int> cn_deg(m, 0);

    std::vector<int> depth(m);
    std::vector<int> candidates;
    candidates.reserve(m);

    for (std::size_t v = 0; v < n; ++v) {
        for (int e = 0; e < dv; ++e) {
            candidates.clear();
            if (var_checks[v].empty()) {
                for (std::size_t c = 0; c < m; ++c)
                    if (cn_deg[c] < dc) candidates.push_back(static_cast<int>(c));
            } else {
                // BFS over the bipartite graph from v; depth of a check is the
                // layer at which it is first reached (direct neighbors = 0).
                std::fill(depth.begin(), depth.end(), -1);
                std::vector<char> vn_seen(n, 0);
                vn_seen[v] = 1;
                std::deque<int> frontier;
                for (int c : var_checks[v]) {
                    depth[c] = 0;
                    frontier.push_back(c);
                }
                int max_depth = 0;
                while (!frontier.empty()) {
                    const int c = frontier.front();
                    frontier.pop_front();
                    for (int u : check_vars[c]) {
                        if (vn_seen[u]) continue;
                        vn_seen[u] = 1;
                        for (int c2 : var_checks[u]) {
                            if (depth[c2] >= 0) continue;
                            depth[c2] = depth[c] + 1;
                            max_depth = std::max(max_depth, depth[c2]);
                            frontier.push_back(c2);
                        }
                    }
                }
                for (std::size_t c = 0; c < m; ++c)  // prefer unreached checks
                    if (depth[c] < 0 && cn_deg[c] < dc) candidates.push_back(static_cast<int>(c));
                if (candidates.empty()) {
                    for (int d = max_depth; d >= 1 && candidates.empty(); --d)
                        for (std::size_t c = 0; c < m; ++c)
                            if (depth[c] == d && cn_deg[c] < dc) candidates.push_back(static_cast<int>(c));
                }
            }
            if (candidates.empty()) return false;

            int best_deg = dc;
            for (int c : candidates) best_deg = std::min(best_deg, cn_deg[c]);
            std::vector<int> ties;
            for (int c : candidates)
                if (cn_deg[c] == best_deg) ties.push_back(c);
            const int chosen = ties[rng.uniform_below(ties.size())];

            var_checks[v].push_back(chosen);
            check_vars[chosen].push_back(static_cast<int>(v));
            ++cn_deg[chosen];
        }
    }
    for (std::size_t c = 0; c < m; ++c)
        if (cn_deg[c] != dc) return false;
    return true;
}

// Reduce H over GF(2) to identify pivot (parity) columns and build the
// parity equations over the message columns.
void build_encoder(LinearCode& code) {
    std::vector<BitRow> rows = dense_rows(code);
    std::vector<int> pivot_cols;
    std::size_t r = 0;
    for (std::size_t col = 0; col < code.n && r < code.m; ++col) {
        std::size_t pivot = r;
        while (pivot < rows.size() && !get_bit(rows[pivot], col)) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[pivot], rows[r]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (i != r && get_bit(rows[i], col)) xor_rows(rows[i], rows[r]);
        pivot_cols.push_back(static_cast<int>(col));
        ++r;
    }
    if (r < code.m) throw construction_error("ldpc: parity-check matrix is rank deficient");

    code.parity_positions = pivot_cols;
    code.message_positions.clear();
    std::vector<char> is_pivot(code.n, 0);
    for (int c : pivot_cols) is_pivot[c] = 1;
    for (std::size_t c = 0; c < code.n; ++c)
        if (!is_pivot[c]) code.message_positions.push_back(static_cast<int>(c));

    const std::size_t kk = code.message_positions.size();
    code.enc_rows.assign(code.m, BitRow(words_for(kk), 0));
    for (std::size_t i = 0; i < code.m; ++i)
        for (std::size_t j = 0; j < kk; ++j)
            if (get_bit(rows[i], static_cast<std::size_t>(code.message_positions[j]))) set_bit(code.enc_rows[i], j);
}

void finalize_adjacency(LinearCode& code) {
    for (auto& l : code.check_vars) std::sort(l.begin(), l.end());
    code.var_checks.assign(code.n, {});
    for (std::size_t j = 0; j < code.m; ++j)
        for (int v : code.check_vars[j]) code.var_checks[v].push_back(static_cast<int>(j));
}

}  // namespace

LinearCode build_ldpc(std::size_t n, std::size_t m, std::uint64_t seed, int var_degree) {
    if (n == 0 || m == 0 || m >= n) throw contract_error("build_ldpc: need 0 < m < n");
    const std::size_t edges = n * static_cast<std::size_t>(var_degree);
    if (edges % m != 0) throw contract_error("build_ldpc: n*var_degree must be divisible by m for a regular code");
    const int dc = static_cast<int>(edges / m);

    for (int attempt = 0; attempt < 64; ++attempt) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(attempt)));
        LinearCode code;
        code.n = n;
        code.m = m;
        std::vector<std::vector<int>> cv, vc;
        if (!peg_attempt(n, m, var_degree, dc, rng, cv, vc)) continue;
        code.check_vars = std::move(cv);
        finalize_adjacency(code);
        if (gf2_rank(dense_rows(code), n) != m) continue;
        build_encoder(code);
        return code;
    }
    throw construction_error("build_ldpc: no full-rank regular graph found within the retry budget");
}

std::vector<std::uint8_t> encode(const LinearCode& code, const std::vector<std::uint8_t>& message) {
    if (message.size() != code.k()) throw contract_error("encode: message length must be n-m");
    std::vector<std::uint8_t> cw(code.n, 0);
    BitRow msg(words_for(code.k()), 0);
    for (std::size_t j = 0; j < message.size(); ++j) {
        if (message[j] > 1) throw contract_error("encode: bits must be 0 or 1");
        cw[code.message_positions[j]] = message[j];
        if (message[j]) set_bit(msg, j);
    }
    for (std::size_t i = 0; i < code.m; ++i) {
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < msg.size(); ++w) acc ^= code.enc_rows[i][w] & msg[w];
        cw[code.parity_positions[i]] = static_cast<std::uint8_t>(__builtin_parityll(acc));
    }
    return cw;
}

bool parity_ok(const LinearCode& code, const std::vector<std::uint8_t>& word) {
    if (word.size() != code.n) throw contract_error("parity_ok: word length mismatch");
    for (const auto& vars : code.check_vars) {
        unsigned s = 0;
        for (int v : vars) s ^= word[v];
        if (s) return false;
    }
    return true;
}

double box_plus(double a, double b) {
    const double s = ((a >= 0.0) == (b >= 0.0)) ? 1.0 : -1.0;
    return s * std::min(std::abs(a), std::abs(b)) + std::log1p(std::exp(-std::abs(a + b))) -
           std::log1p(std::exp(-std::abs(a - b)));
}

DecodeResult decode(const LinearCode& code, const std::vector<double>& llr, int max_iterations) {
    if (llr.size() != code.n) throw contract_error("decode: llr length mismatch");
    if (max_iterations < 1) throw contract_error("decode: need at least one iteration");

    std::vector<double> chan(code.n);
    for (std::size_t v = 0; v < code.n; ++v) chan[v] = saturate_llr(llr[v]);

    // edges grouped by check, in check_vars order
    std::vector<int> edge_start(code.m + 1, 0);
    for (std::size_t j = 0; j < code.m; ++j)
        edge_start[j + 1] = edge_start[j] + static_cast<int>(code.check_vars[j].size());
    const int n_edges = edge_start[code.m];
    std::vector<double> v2c(n_edges), c2v(n_edges, 0.0);
    for (std::size_t j = 0; j < code.m; ++j)
        for (std::size_t t = 0; t < code.check_vars[j].size(); ++t)
            v2c[edge_start[j] + t] = chan[code.check_vars[j][t]];

    DecodeResult res;
    res.posterior.assign(code.n, 0.0);
    res.hard.assign(code.n, 0);

    std::vector<double> fwd, bwd;
    for (int it = 1; it <= max_iterations; ++it) {
        res.iterations = it;
        for (std::size_t j = 0; j < code.m; ++j) {
            const int base = edge_start[j];
            const int d = edge_start[j + 1] - base;
            if (d == 1) {  // degenerate check: no extrinsic information
                c2v[base] = 0.0;
                continue;
            }
            fwd.resize(d);
            bwd.resize(d);
            fwd[0] = v2c[base];
            for (int t = 1; t < d; ++t) fwd[t] = box_plus(fwd[t - 1], v2c[base + t]);
            bwd[d - 1] = v2c[base + d - 1];
            for (int t = d - 2; t >= 0; --t) bwd[t] = box_plus(bwd[t + 1], v2c[base + t]);
            c2v[base] = saturate_llr(bwd[1]);
            c2v[base + d - 1] = saturate_llr(fwd[d - 2]);
            for (int t = 1; t < d - 1; ++t) c2v[base + t] = saturate_llr(box_plus(fwd[t - 1], bwd[t + 1]));
        }

        for (std::size_t v = 0; v < code.n; ++v) res.posterior[v] = chan[v];
        for (std::size_t j = 0; j < code.m; ++j)
            for (std::size_t t = 0; t < code.check_vars[j].size(); ++t)
                res.posterior[code.check_vars[j][t]] += c2v[edge_start[j] + t];

        for (std::size_t v = 0; v < code.n; ++v) res.hard[v] = res.posterior[v] < 0.0 ? 1 : 0;
        res.parity = parity_ok(code, res.hard);
        if (res.parity || it == max_iterations) break;

        for (std::size_t j = 0; j < code.m; ++j)
            for (std::size_t t = 0; t < code.check_vars[j].size(); ++t) {
                const int e = edge_start[j] + static_cast<int>(t);
                v2c[e] = saturate_llr(res.posterior[code.check_vars[j][t]] - c2v[e]);
            }
    }

    res.extrinsic.resize(code.n);
    for (std::size_t v = 0; v < code.n; ++v) res.extrinsic[v] = res.posterior[v] - chan[v];
    return res;
}

LinearCode load_alist(std::istream& in) {
    auto next_int = [&in]() {
        long long v;
        if (!(in >> v)) throw contract_error("alist: truncated file");
        return v;
    };
    const long long n = next_int(), m = next_int();
    if (n <= 0 || m <= 0 || m >= n) throw contract_error("alist: bad dimensions");
    const long long max_col = next_int(), max_row = next_int();
    std::vector<int> col_deg(n), row_deg(m);
    for (auto& d : col_deg) d = static_cast<int>(next_int());
    for (auto& d : row_deg) d = static_cast<int>(next_int());

    LinearCode code;
    code.n = static_cast<std::size_t>(n);
    code.m = static_cast<std::size_t>(m);
    code.check_vars.assign(code.m, {});
    for (long long v = 0; v < n; ++v) {
        for (long long t = 0; t < max_col; ++t) {
            const long long c = next_int();  // 1-based, 0 = padding
            if (c == 0) continue;
            if (t >= col_deg[v] || c < 1 || c > m) throw contract_error("alist: bad column entry");
            code.check_vars[c - 1].push_back(static_cast<int>(v));
        }
    }
    // row lists are redundant; read and verify degrees
    for (long long j = 0; j < m; ++j) {
        int seen = 0;
        for (long long t = 0; t < max_row; ++t) {
            const long long v = next_int();
            if (v == 0) continue;
            if (v < 1 || v > n) throw contract_error("alist: bad row entry");
            ++seen;
        }
        if (seen != row_deg[j] || static_cast<int>(code.check_vars[j].size()) != row_deg[j])
            throw contract_error("alist: inconsistent row degrees");
    }
    finalize_adjacency(code);
    build_encoder(code);
    return code;
}

LinearCode load_alist(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw contract_error("alist: cannot open " + path);
    return load_alist(f);
}

void save_alist(std::ostream& out, const LinearCode& code) {
    std::size_t max_col = 0, max_row = 0;
    for (const auto& l : code.var_checks) max_col = std::max(max_col, l.size());
    for (const auto& l : code.check_vars) max_row = std::max(max_row, l.size());
    out << code.n << ' ' << code.m << '\n' << max_col << ' ' << max_row << '\n';
    for (std::size_t v = 0; v < code.n; ++v) out << code.var_checks[v].size() << (v + 1 < code.n ? ' ' : '\n');
    for (std::size_t j = 0; j < code.m; ++j) out << code.check_vars[j].size() << (j + 1 < code.m ? ' ' : '\n');
    for (const auto& l : code.var_checks) {
        for (std::size_t t = 0; t < max_col; ++t) out << (t < l.size() ? l[t] + 1 : 0) << (t + 1 < max_col ? ' ' : '\n');
    }
    for (const auto& l : code.check_vars) {
        for (std::size_t t = 0; t < max_row; ++t) out << (t < l.size() ? l[t] + 1 : 0) << (t + 1 < max_row ? ' ' : '\n');
    }
}

void save_alist(const std::string& path, const LinearCode& code) {
    std::ofstream f(path);
    if (!f) throw contract_error("alist: cannot open " + path + " for writing");
    save_alist(f, code);
}

}  // namespace cfidd
