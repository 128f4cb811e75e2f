#pragma once

#include "nfris/channel.hpp"
#include "nfris/core.hpp"
#include "nfris/geometry.hpp"
#include "nfris/ris_design.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace nfris {

// Static / non-static split of one detection phase, indexed [n][q].
struct SeparatedSignals {
    std::vector<std::vector<CVector>> static_y;
    std::vector<std::vector<CVector>> nonstatic_y;

    std::size_t frames() const { return nonstatic_y.size(); }
};

// frames[n] and frames[n + N] must carry the same pilots and negated RIS
// configurations. y-dot_n = (y_n + y_{n+N}) / 2, y-bar_n = y_n - y-dot_n.
inline SeparatedSignals split_components(std::span<const RxFrame> frames) {
    if (frames.size() % 2 != 0) throw std::invalid_argument("split_components: need an even number of frames");
    const std::size_t n_scan = frames.size() / 2;
    SeparatedSignals out;
    out.static_y.resize(n_scan);
    out.nonstatic_y.resize(n_scan);
    for (std::size_t n = 0; n < n_scan; ++n) {
        const RxFrame& a = frames[n];
        const RxFrame& b = frames[n + n_scan];
        if (a.pilots != b.pilots) throw protocol_error("split_components: partner frames used different pilots");
        if (a.y.size() != b.y.size()) throw protocol_error("split_components: partner frames differ in shape");
        for (std::size_t q = 0; q < a.y.size(); ++q) {
            CVector s = 0.5 * (a.y[q] + b.y[q]);
            out.nonstatic_y[n].push_back(a.y[q] - s);
            out.static_y[n].push_back(std::move(s));
        }
    }
    return out;
}

// Matched-filter template t_{q,n}^(k) = Lambda_{k,q}(c_{k,n}) omega_n^(k): the
// cascade a unit source at the inspected cell center would produce at the BS.
inline CVector reference_cascade(const Scene& scene, const RisCodebook& book,
                                 const std::vector<SubRegionPartition>& partitions, std::size_t k, std::size_t n,
                                 int q) {
    const Vec3& c = partitions.at(k).centers.at(n);
    return scene.bs_ris(k, q) * scene.ris_steering(k, q, c).cwiseProduct(book.configs.at(k).at(n).weights);
}

// Templates indexed [k][n][q].
using TemplateBank = std::vector<std::vector<std::vector<CVector>>>;

inline TemplateBank build_templates(const Scene& scene, const RisCodebook& book,
                                    const std::vector<SubRegionPartition>& partitions) {
    TemplateBank t(book.ris_count());
    for (std::size_t k = 0; k < book.ris_count(); ++k) {
        t[k].resize(book.cells());
        for (std::size_t n = 0; n < book.cells(); ++n)
            for (int q = 0; q < scene.grid().size(); ++q)
                t[k][n].push_back(reference_cascade(scene, book, partitions, k, n, q));
    }
    return t;
}

struct FilterBankOutput {
    std::size_t pilots = 0, ris = 0, frames = 0;
    std::vector<std::vector<RVector>> f; // [b][k], length N, all entries >= 0
    std::uint64_t multiplies = 0;        // complex multiplications performed

    const RVector& at(std::size_t b, std::size_t k) const { return f[b][k]; }
};

// f_n^(b,k) = | sum_q (t_{q,n}^(k) (x) x_q^(b))^H y-bar_{q,n} |, evaluated
// directly: Q * L * N_BS complex multiplications per (n, k, b).
inline FilterBankOutput matched_filter_bank(const SeparatedSignals& sep, const TemplateBank& templates,
                                            const PilotBook& pilots) {
    FilterBankOutput out;
    out.pilots = static_cast<std::size_t>(pilots.size());
    out.ris = templates.size();
    out.frames = sep.frames();
    out.f.assign(out.pilots, std::vector<RVector>(out.ris, RVector::Zero(static_cast<Eigen::Index>(out.frames))));
    const int slots = pilots.timeslots();

    for (std::size_t n = 0; n < out.frames; ++n)
        for (std::size_t k = 0; k < out.ris; ++k)
            for (std::size_t b = 0; b < out.pilots; ++b) {
                cplx acc{0.0, 0.0};
                for (int q = 0; q < pilots.subcarriers(); ++q) {
                    const CVector& t = templates[k][n][static_cast<std::size_t>(q)];
                    const CVector& y = sep.nonstatic_y[n][static_cast<std::size_t>(q)];
                    const RVector& x = pilots.symbols(static_cast<int>(b), q);
                    const Eigen::Index nbs = t.size();
                    for (int l = 0; l < slots; ++l)
                        for (Eigen::Index j = 0; j < nbs; ++j)
                            acc += std::conj(t[j] * x[l]) * y[l * nbs + j];
                    out.multiplies += static_cast<std::uint64_t>(slots) * static_cast<std::uint64_t>(nbs);
                }
                out.f[b][k][static_cast<Eigen::Index>(n)] = std::abs(acc);
            }
    return out;
}

enum class ThresholdMode { per_filter, global };

struct Thresholds {
    ThresholdMode mode = ThresholdMode::per_filter;
    double target_pfa = 0.0;
    std::size_t trials = 0;
    double noise_var = 0.0;                 // noise power the table was calibrated at
    std::vector<std::vector<double>> gamma; // [b][k]

    double at(std::size_t b, std::size_t k) const { return gamma.at(b).at(k); }
};

// Empirical (1 - pfa) quantile: smallest sample x with #{samples <= x} >= (1 - pfa) T.
inline double upper_quantile(std::vector<double> samples, double pfa) {
    if (samples.empty()) throw std::invalid_argument("upper_quantile: no samples");
    std::sort(samples.begin(), samples.end());
    const double pos = std::ceil((1.0 - pfa) * static_cast<double>(samples.size()) - 1e-9);
    const auto idx = static_cast<std::size_t>(std::clamp(pos - 1.0, 0.0, static_cast<double>(samples.size() - 1)));
    return samples[idx];
}

// Null statistic of one noise-only phase: max over n of f_n^(b,k), per (b, k).
inline std::vector<std::vector<double>> null_statistic(const FilterBankOutput& f) {
    std::vector<std::vector<double>> m(f.pilots, std::vector<double>(f.ris, 0.0));
    for (std::size_t b = 0; b < f.pilots; ++b)
        for (std::size_t k = 0; k < f.ris; ++k) m[b][k] = f.f[b][k].size() ? f.f[b][k].maxCoeff() : 0.0;
    return m;
}

// Thresholds from per-trial null statistics [trial][b][k]. In global mode one
// gamma bounds the max over every filter of a phase.
inline Thresholds thresholds_from_null(const std::vector<std::vector<std::vector<double>>>& null, double target_pfa,
                                       ThresholdMode mode) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw std::invalid_argument("target_pfa must lie in (0, 1)");
    if (static_cast<double>(null.size()) < 10.0 / target_pfa - 1e-9)
        throw std::invalid_argument("calibration needs at least 10 / target_pfa trials");
    Thresholds th;
    th.mode = mode;
    th.target_pfa = target_pfa;
    th.trials = null.size();
    const std::size_t nb = null.front().size();
    const std::size_t nk = nb ? null.front().front().size() : 0;
    th.gamma.assign(nb, std::vector<double>(nk, 0.0));
    if (mode == ThresholdMode::global) {
        std::vector<double> s;
        s.reserve(null.size());
        for (const auto& t : null) {
            double m = 0.0;
            for (const auto& row : t)
                for (double v : row) m = std::max(m, v);
            s.push_back(m);
        }
        const double g = upper_quantile(std::move(s), target_pfa);
        for (auto& row : th.gamma) std::fill(row.begin(), row.end(), g);
    } else {
        std::vector<double> s(null.size());
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t k = 0; k < nk; ++k) {
                for (std::size_t t = 0; t < null.size(); ++t) s[t] = null[t][b][k];
                th.gamma[b][k] = upper_quantile(s, target_pfa);
            }
    }
    return th;
}

struct Detection {
    int rb = 0;
    int ris = 0;
    int cell = 0;
    double score = 0.0;
    Vec3 position = Vec3::Zero(); // center of the detected cell
    double gamma = 0.0;
};

struct DetectionReport {
    std::vector<Detection> detections;
    std::vector<std::vector<double>> gamma;   // [b][k]
    std::vector<std::vector<double>> peak;    // [b][k], max_n f
    std::vector<std::vector<bool>> verdict;   // [b][k], true = H1
    std::vector<bool> rb_active;              // [b]
};

// Energy detector: every f_n^(b,k) > gamma is an H1 cell. Super-threshold cells
// that touch on the partition grid (including diagonals) form one cluster,
// reported once at its strongest cell.
inline DetectionReport energy_detect(const FilterBankOutput& f, const Thresholds& th,
                                     const std::vector<SubRegionPartition>& partitions) {
    DetectionReport rep;
    rep.gamma = th.gamma;
    rep.peak.assign(f.pilots, std::vector<double>(f.ris, 0.0));
    rep.verdict.assign(f.pilots, std::vector<bool>(f.ris, false));
    rep.rb_active.assign(f.pilots, false);
    for (std::size_t b = 0; b < f.pilots; ++b)
        for (std::size_t k = 0; k < f.ris; ++k) {
            const double gamma = th.at(b, k);
            if (!(gamma > 0.0)) throw std::invalid_argument("energy_detect: gamma must be positive");
            const RVector& v = f.f[b][k];
            const SubRegionPartition& part = partitions.at(k);
            rep.peak[b][k] = v.size() ? v.maxCoeff() : 0.0;

            std::vector<int> label(static_cast<std::size_t>(v.size()), -1);
            for (Eigen::Index seed = 0; seed < v.size(); ++seed) {
                if (!(v[seed] > gamma) || label[static_cast<std::size_t>(seed)] >= 0) continue;
                // Flood fill one cluster.
                std::vector<std::size_t> stack{static_cast<std::size_t>(seed)};
                label[static_cast<std::size_t>(seed)] = static_cast<int>(seed);
                std::size_t best = static_cast<std::size_t>(seed);
                while (!stack.empty()) {
                    const std::size_t c = stack.back();
                    stack.pop_back();
                    if (v[static_cast<Eigen::Index>(c)] > v[static_cast<Eigen::Index>(best)]) best = c;
                    for (Eigen::Index o = 0; o < v.size(); ++o) {
                        const auto ou = static_cast<std::size_t>(o);
                        if (label[ou] >= 0 || !(v[o] > gamma)) continue;
                        if (part.grid_distance(c, ou) <= 1) {
                            label[ou] = static_cast<int>(seed);
                            stack.push_back(ou);
                        }
                    }
                }
                rep.detections.push_back({static_cast<int>(b), static_cast<int>(k), static_cast<int>(best),
                                          v[static_cast<Eigen::Index>(best)], part.centers[best], gamma});
                rep.verdict[b][k] = true;
                rep.rb_active[b] = true;
            }
        }
    return rep;
}

struct MapCell {
    Vec3 position = Vec3::Zero();
    double energy = 0.0;
    int rb = -1; // -1: maximum over all pilots
    int ris = 0;
    int cell = 0;
};

// Filter outputs projected onto the cell centers of every RIS partition.
inline std::vector<MapCell> build_spatial_map(const FilterBankOutput& f,
                                              const std::vector<SubRegionPartition>& partitions, bool per_rb) {
    std::vector<MapCell> map;
    for (std::size_t k = 0; k < f.ris; ++k) {
        const SubRegionPartition& part = partitions.at(k);
        for (std::size_t n = 0; n < f.frames; ++n) {
            const auto ni = static_cast<Eigen::Index>(n);
            if (per_rb) {
                for (std::size_t b = 0; b < f.pilots; ++b)
                    map.push_back({part.centers[n], f.f[b][k][ni], static_cast<int>(b), static_cast<int>(k),
                                   static_cast<int>(n)});
            } else {
                double e = 0.0;
                for (std::size_t b = 0; b < f.pilots; ++b) e = std::max(e, f.f[b][k][ni]);
                map.push_back({part.centers[n], e, -1, static_cast<int>(k), static_cast<int>(n)});
            }
        }
    }
    return map;
}

inline void write_report_header(std::ostream& os) { os << "phase,rb,ris,cell,x,y,z,score,gamma,verdict\n"; }

// One H1 row per detection plus one H0 row (cell -1) for every silent filter.
inline void write_report_csv(std::ostream& os, const DetectionReport& rep, int phase) {
    for (const auto& d : rep.detections)
        os << phase << ',' << d.rb << ',' << d.ris << ',' << d.cell << ',' << d.position.x() << ','
           << d.position.y() << ',' << d.position.z() << ',' << d.score << ',' << d.gamma << ",H1\n";
    for (std::size_t b = 0; b < rep.verdict.size(); ++b)
        for (std::size_t k = 0; k < rep.verdict[b].size(); ++k)
            if (!rep.verdict[b][k])
                os << phase << ',' << b << ',' << k << ",-1,nan,nan,nan," << rep.peak[b][k] << ',' << rep.gamma[b][k]
                   << ",H0\n";
}

inline void write_map_csv(std::ostream& os, const std::vector<MapCell>& map) {
    os << "x,y,z,energy,rb\n";
    for (const auto& c : map) {
        os << c.position.x() << ',' << c.position.y() << ',' << c.position.z() << ',' << c.energy << ',';
        if (c.rb < 0)
            os << "all\n";
        else
            os << c.rb << '\n';
    }
}

} // namespace nfris
