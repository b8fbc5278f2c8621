#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pursuit/target.hpp"

namespace pursuit {

// FNV-1a over raw bytes; used to key cache files and detect corruption.
inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_doubles(std::span<const double> values) {
    return fnv1a64({reinterpret_cast<const unsigned char*>(values.data()),
                    values.size() * sizeof(double)});
}

inline std::uint64_t transition_matrix_hash(const TransitionMatrix& P) {
    std::uint64_t h = hash_doubles(P.data());
    unsigned char kind = static_cast<unsigned char>(P.alphabet_kind());
    return fnv1a64({&kind, 1}, h);
}

// Plain-text matrix file: comment lines with provenance metadata, an alphabet
// header line (d5 | d9), then one row per next-velocity state. Entry (r, c)
// is P(u' = r | u = c).
inline void save_transition_matrix(const std::string& path, const TransitionMatrix& P,
                                   const std::map<std::string, std::string>& metadata = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_transition_matrix: cannot open " + path);
    out << "# pursuit transition matrix; rows = next velocity, columns = current velocity\n";
    for (const auto& [k, v] : metadata) out << "# " << k << " = " << v << "\n";
    out << (P.alphabet_kind() == AlphabetKind::cardinal5 ? "d5" : "d9") << "\n";
    out.precision(17);
    const int n = P.size();
    for (int to = 0; to < n; ++to) {
        for (int from = 0; from < n; ++from) out << (from ? " " : "") << P.prob(to, from);
        out << "\n";
    }
    if (!out) throw std::runtime_error("save_transition_matrix: write failed for " + path);
}

inline TransitionMatrix load_transition_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_transition_matrix: cannot open " + path);
    std::string line;
    std::string header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = line;
        break;
    }
    AlphabetKind kind;
    if (header == "d5")
        kind = AlphabetKind::cardinal5;
    else if (header == "d9")
        kind = AlphabetKind::moore9;
    else
        throw std::runtime_error("load_transition_matrix: bad alphabet header '" + header + "'");
    const int n = kind == AlphabetKind::cardinal5 ? 5 : 9;
    std::vector<double> p(static_cast<std::size_t>(n) * n, 0.0);
    for (int to = 0; to < n; ++to) {
        if (!std::getline(in, line))
            throw std::runtime_error("load_transition_matrix: truncated file " + path);
        std::istringstream row(line);
        for (int from = 0; from < n; ++from)
            if (!(row >> p[static_cast<std::size_t>(to) * n + from]))
                throw std::runtime_error("load_transition_matrix: malformed row in " + path);
    }
    return TransitionMatrix(kind, std::move(p));
}

} // namespace pursuit
