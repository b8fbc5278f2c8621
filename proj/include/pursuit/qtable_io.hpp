#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pursuit/io.hpp"
#include "pursuit/policy.hpp"

namespace pursuit {

// Q-table cache files: a fixed header carrying the cache key
// (L, alphabet size, gamma as a decimal string, source-matrix hash) plus a
// payload checksum, followed by the raw value array. Corrupt or mismatched
// files are detected on load and reported as stale.

namespace detail {
inline constexpr char kQTableMagic[8] = {'P', 'Q', 'T', 'B', 'L', '0', '0', '1'};
}

inline std::string gamma_string(double gamma) {
    std::ostringstream s;
    s.precision(17);
    s << gamma;
    return s.str();
}

inline std::string qtable_cache_name(int side, AlphabetKind kind, double gamma,
                                     std::uint64_t p_hash) {
    std::ostringstream s;
    s << "qtable_L" << side << "_a" << (kind == AlphabetKind::cardinal5 ? 5 : 9) << "_g"
      << gamma_string(gamma) << "_" << std::hex << p_hash << ".qt";
    return s.str();
}

inline void save_qtable(const std::string& path, const QTable& q) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_qtable: cannot open " + path);
    out.write(detail::kQTableMagic, sizeof(detail::kQTableMagic));
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(static_cast<std::uint64_t>(q.grid.side));
    put_u64(static_cast<std::uint64_t>(q.num_vel()));
    std::string gs = gamma_string(q.gamma);
    put_u64(gs.size());
    out.write(gs.data(), static_cast<std::streamsize>(gs.size()));
    put_u64(q.p_hash);
    put_f64(q.residual);
    put_u64(hash_doubles(q.values));
    put_u64(q.values.size());
    out.write(reinterpret_cast<const char*>(q.values.data()),
              static_cast<std::streamsize>(q.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_qtable: write failed for " + path);
}

// Loads and verifies a cache file; throws runtime_error on any corruption or
// header mismatch so callers can fall back to recomputation.
inline QTable load_qtable(const std::string& path, double spacing = 1.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_qtable: cannot open " + path);
    char magic[sizeof(detail::kQTableMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kQTableMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_qtable: bad magic in " + path);
    auto get_u64 = [&]() {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_f64 = [&]() {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    int side = static_cast<int>(get_u64());
    int nvel = static_cast<int>(get_u64());
    std::uint64_t gs_len = get_u64();
    if (gs_len > 64) throw std::runtime_error("load_qtable: bad gamma string in " + path);
    std::string gs(gs_len, '\0');
    in.read(gs.data(), static_cast<std::streamsize>(gs_len));
    std::uint64_t p_hash = get_u64();
    double residual = get_f64();
    std::uint64_t payload_hash = get_u64();
    std::uint64_t count = get_u64();
    if (!in) throw std::runtime_error("load_qtable: truncated header in " + path);

    QTable q;
    q.grid = GridSpec(side, spacing);
    q.alphabet = VelocityAlphabet(nvel == 5 ? AlphabetKind::cardinal5 : AlphabetKind::moore9);
    if (nvel != 5 && nvel != 9) throw std::runtime_error("load_qtable: bad alphabet in " + path);
    q.gamma = std::stod(gs);
    q.residual = residual;
    q.p_hash = p_hash;
    if (count != static_cast<std::uint64_t>(side) * side * nvel * kNumActions)
        throw std::runtime_error("load_qtable: value count mismatch in " + path);
    q.values.resize(count);
    in.read(reinterpret_cast<char*>(q.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("load_qtable: truncated payload in " + path);
    if (hash_doubles(q.values) != payload_hash)
        throw std::runtime_error("load_qtable: checksum mismatch in " + path);
    return q;
}

// Human-readable export for inspection: one row per (d, u, a).
inline void export_qtable_csv(const std::string& path, const QTable& q) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_qtable_csv: cannot open " + path);
    out << "di,dj,u,a,value\n";
    out.precision(17);
    for (int slot = 0; slot < q.grid.cells(); ++slot) {
        Displacement d = disp_from_index(slot, q.grid);
        for (int u = 0; u < q.num_vel(); ++u)
            for (int a = 0; a < kNumActions; ++a)
                out << d.di << ',' << d.dj << ',' << u << ',' << a << ',' << q.at(slot, u, a)
                    << '\n';
    }
}

} // namespace pursuit
