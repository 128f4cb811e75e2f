#pragma once

// Binary codebook format, all integers and IEEE-754 doubles little-endian:
//
//   char[8]  magic "NFRISCB1"
//   u32      format version (1)
//   u64      scenario hash
//   f64 x7   beta_ps, beta_sl, alpha_sl, eps_sl, tolerance, step0, step_decay
//   i32 x2   max_iters, max_backtracks
//   u32      normalize_gain (0/1)
//   u32 x3   K (RIS count), N (scan frames), N~ (separation frames, = N)
//   K*N scan records, then K*N~ partner records, k-major:
//     u32 k, u32 n, u32 kind (0 scan, 1 partner), u32 n_ris,
//     u32 iterations, u32 converged, f64 focal_energy, f64 worst_sidelobe,
//     f64 x 2*n_ris   interleaved (re, im) per element
//
// Partner records carry zeros in the iteration/energy fields.

#include "nfris/ris_design.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace nfris {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
    os.write(b.data(), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
    os.write(b.data(), 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }

inline std::uint64_t get_bytes(std::istream& is, int n) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), n);
    if (!is) throw integrity_error("codebook: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

inline std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_bytes(is, 4)); }
inline std::uint64_t get_u64(std::istream& is) { return get_bytes(is, 8); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }
inline std::int32_t get_i32(std::istream& is) { return static_cast<std::int32_t>(get_u32(is)); }

inline constexpr char codebook_magic[8] = {'N', 'F', 'R', 'I', 'S', 'C', 'B', '1'};
inline constexpr std::uint32_t codebook_version = 1;

inline void put_weights(std::ostream& os, const CVector& w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        put_f64(os, w[i].real());
        put_f64(os, w[i].imag());
    }
}

} // namespace detail

inline void write_codebook(std::ostream& os, const RisCodebook& book) {
    using namespace detail;
    os.write(codebook_magic, 8);
    put_u32(os, codebook_version);
    put_u64(os, book.scenario_hash);
    const DesignParams& p = book.params;
    for (double v : {p.beta_ps, p.beta_sl, p.alpha_sl, p.eps_sl, p.tolerance, p.step0, p.step_decay}) put_f64(os, v);
    put_i32(os, p.max_iters);
    put_i32(os, p.max_backtracks);
    put_u32(os, p.normalize_gain ? 1U : 0U);
    const auto k_count = static_cast<std::uint32_t>(book.ris_count());
    const auto n_count = static_cast<std::uint32_t>(book.cells());
    put_u32(os, k_count);
    put_u32(os, n_count);
    put_u32(os, n_count);

    for (std::uint32_t k = 0; k < k_count; ++k)
        for (std::uint32_t n = 0; n < n_count; ++n) {
            const RisConfiguration& c = book.configs[k][n];
            put_u32(os, k);
            put_u32(os, n);
            put_u32(os, 0);
            put_u32(os, static_cast<std::uint32_t>(c.weights.size()));
            put_u32(os, static_cast<std::uint32_t>(c.iterations));
            put_u32(os, c.converged ? 1U : 0U);
            put_f64(os, c.focal_energy);
            put_f64(os, c.worst_sidelobe);
            put_weights(os, c.weights);
        }
    for (std::uint32_t k = 0; k < k_count; ++k)
        for (std::uint32_t n = 0; n < n_count; ++n) {
            const CVector& w = book.partners[k][n];
            put_u32(os, k);
            put_u32(os, n);
            put_u32(os, 1);
            put_u32(os, static_cast<std::uint32_t>(w.size()));
            put_u32(os, 0);
            put_u32(os, 0);
            put_f64(os, 0.0);
            put_f64(os, 0.0);
            put_weights(os, w);
        }
    if (!os) throw std::runtime_error("codebook: write failed");
}

inline RisCodebook read_codebook(std::istream& is) {
    using namespace detail;
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, codebook_magic, 8) != 0) throw integrity_error("codebook: bad magic");
    if (get_u32(is) != codebook_version) throw integrity_error("codebook: unsupported version");

    RisCodebook book;
    book.scenario_hash = get_u64(is);
    DesignParams& p = book.params;
    for (double* v : {&p.beta_ps, &p.beta_sl, &p.alpha_sl, &p.eps_sl, &p.tolerance, &p.step0, &p.step_decay})
        *v = get_f64(is);
    p.max_iters = get_i32(is);
    p.max_backtracks = get_i32(is);
    p.normalize_gain = get_u32(is) != 0;
    const std::uint32_t k_count = get_u32(is);
    const std::uint32_t n_count = get_u32(is);
    const std::uint32_t partner_count = get_u32(is);
    if (partner_count != n_count) throw integrity_error("codebook: separation frame count must equal N");
    if (k_count > 4096 || n_count > (1U << 20)) throw integrity_error("codebook: implausible dimensions");

    auto read_record = [&](std::uint32_t k, std::uint32_t n, std::uint32_t kind, RisConfiguration& c) {
        if (get_u32(is) != k || get_u32(is) != n || get_u32(is) != kind)
            throw integrity_error("codebook: records out of order");
        const std::uint32_t size = get_u32(is);
        if (size > (1U << 24)) throw integrity_error("codebook: implausible RIS size");
        c.ris = static_cast<int>(k);
        c.cell = static_cast<int>(n);
        c.iterations = static_cast<int>(get_u32(is));
        c.converged = get_u32(is) != 0;
        c.focal_energy = get_f64(is);
        c.worst_sidelobe = get_f64(is);
        c.weights.resize(size);
        for (std::uint32_t i = 0; i < size; ++i) {
            const double re = get_f64(is);
            const double im = get_f64(is);
            c.weights[i] = {re, im};
        }
    };

    book.configs.assign(k_count, std::vector<RisConfiguration>(n_count));
    for (std::uint32_t k = 0; k < k_count; ++k)
        for (std::uint32_t n = 0; n < n_count; ++n) read_record(k, n, 0, book.configs[k][n]);
    book.partners.assign(k_count, std::vector<CVector>(n_count));
    for (std::uint32_t k = 0; k < k_count; ++k)
        for (std::uint32_t n = 0; n < n_count; ++n) {
            RisConfiguration tmp;
            read_record(k, n, 1, tmp);
            if (tmp.weights.size() != book.configs[k][n].weights.size())
                throw integrity_error("codebook: partner size differs from its scan configuration");
            book.partners[k][n] = std::move(tmp.weights);
        }
    return book;
}

inline void save_codebook(const std::string& path, const RisCodebook& book) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_codebook(os, book);
}

inline RisCodebook load_codebook(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_codebook(is);
}

} // namespace nfris
