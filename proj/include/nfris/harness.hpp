#pragma once

#include "nfris/access.hpp"
#include "nfris/channel.hpp"
#include "nfris/codebook_io.hpp"
#include "nfris/detection.hpp"
#include "nfris/ris_design.hpp"
#include "nfris/rng.hpp"
#include "nfris/scenario.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace nfris {

// Everything a detection phase needs, fixed for a scenario + codebook pair.
struct DetectionContext {
    Scenario scenario;
    std::shared_ptr<const Scene> scene;
    std::vector<SubRegionPartition> partitions;
    PilotBook pilots;
    std::shared_ptr<const RisCodebook> book;
    TemplateBank templates;
    std::vector<CMatrix> frame_configs; // [k], N_RIS(k) x 2N
    double noise_var = 0.0;

    static DetectionContext create(const Scenario& s, std::shared_ptr<const RisCodebook> book) {
        if (!book) throw std::invalid_argument("DetectionContext: no codebook");
        if (book->scenario_hash != s.hash())
            throw integrity_error("codebook was built for a different scenario (hash mismatch)");
        if (book->ris_count() != s.ris.size() || book->cells() != s.cells())
            throw integrity_error("codebook dimensions do not match the scenario");
        DetectionContext ctx{s, s.make_scene(), s.partitions(), s.pilot_book(), std::move(book), {}, {}, s.noise_var()};
        for (std::size_t k = 0; k < ctx.book->ris_count(); ++k) {
            for (std::size_t n = 0; n < ctx.book->cells(); ++n)
                if (static_cast<std::size_t>(ctx.book->configs[k][n].weights.size()) != ctx.scene->ris(k).size())
                    throw integrity_error("codebook configuration size does not match RIS " + std::to_string(k));
            ctx.frame_configs.push_back(ctx.book->frame_matrix(k));
        }
        ctx.templates = build_templates(*ctx.scene, *ctx.book, ctx.partitions);
        return ctx;
    }

    std::size_t frames() const { return book->frames(); }
};

inline RisCodebook design_codebook(const Scenario& s, std::uint64_t seed) {
    const auto scene = s.make_scene();
    return build_codebook(*scene, s.partitions(), s.design, seed, s.hash());
}

// Uniform point in a region.
inline Vec3 uniform_point(const Region& r, Rng& rng) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = r.bounds[a].lo + rng.uniform() * r.bounds[a].length();
    return p;
}

// UE population of one trial: fixed positions/pilots when the scenario lists
// them, otherwise uniform positions over the region; LOS drawn per UE.
inline std::vector<UeState> place_ues(const Scenario& s, Rng& rng, std::optional<int> count = std::nullopt) {
    const int m = count.value_or(s.ue.count);
    std::vector<UeState> ues(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        UeState& u = ues[static_cast<std::size_t>(i)];
        u.position = !s.ue.positions.empty() && !count ? s.ue.positions[static_cast<std::size_t>(i)]
                                                        : uniform_point(s.region, rng);
        u.k_rice = s.ue.k_rice;
        u.los = rng.uniform() < s.ue.los_probability;
        if (!s.ue.pilots.empty() && !count) u.pilot = s.ue.pilots[static_cast<std::size_t>(i)];
    }
    return ues;
}

// Per-phase draws: synchronization phase, then the multipath of every UE.
inline std::vector<UeLinks> draw_phase_links(const DetectionContext& ctx, std::vector<UeState>& ues, Rng& rng) {
    std::vector<UeLinks> links;
    links.reserve(ues.size());
    for (auto& u : ues) {
        u.sync_phase = rng.phase();
        links.push_back(draw_ue_links(*ctx.scene, u, rng));
    }
    return links;
}

// The 2N frames of one detection phase. Frame f uses column f of every RIS's
// frame-configuration matrix; inactive UEs stay silent.
inline std::vector<RxFrame> synthesize_phase(const DetectionContext& ctx, const std::vector<UeState>& ues,
                                             const std::vector<UeLinks>& links, double p_sym, double noise_var,
                                             Rng& rng) {
    if (ues.size() != links.size()) throw std::invalid_argument("synthesize_phase: UE/link count mismatch");
    const auto frames = ctx.frames();
    const int nq = ctx.scene->grid().size();
    const int n_bs = static_cast<int>(ctx.scene->bs().size());

    std::vector<std::size_t> active;
    std::vector<std::vector<CMatrix>> hbar;
    for (std::size_t m = 0; m < ues.size(); ++m) {
        if (!ues[m].active) continue;
        if (!ues[m].pilot) throw protocol_error("synthesize_phase: active UE without a pilot");
        if (*ues[m].pilot < 0 || *ues[m].pilot >= ctx.pilots.size())
            throw protocol_error("synthesize_phase: pilot out of range");
        active.push_back(m);
        hbar.push_back(nonstatic_channel_frames(*ctx.scene, links[m], ctx.frame_configs));
    }

    std::vector<RxFrame> out;
    out.reserve(frames);
    std::vector<std::vector<CVector>> totals(active.size(), std::vector<CVector>(static_cast<std::size_t>(nq)));
    std::vector<Transmission> tx(active.size());
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t a = 0; a < active.size(); ++a) {
            const UeLinks& l = links[active[a]];
            for (int q = 0; q < nq; ++q) {
                const auto qi = static_cast<std::size_t>(q);
                totals[a][qi] = l.direct.h[qi] + hbar[a][qi].col(static_cast<Eigen::Index>(f));
            }
            tx[a] = {&totals[a], *ues[active[a]].pilot};
        }
        out.push_back(assemble_frame(static_cast<int>(f), tx, ctx.pilots, n_bs, p_sym, noise_var, rng));
    }
    return out;
}

inline FilterBankOutput filter_phase(const DetectionContext& ctx, const std::vector<RxFrame>& frames) {
    return matched_filter_bank(split_components(frames), ctx.templates, ctx.pilots);
}

// Noiseless filter outputs for the given UEs and links at transmit power p_sym.
inline FilterBankOutput noiseless_filter_output(const DetectionContext& ctx, const std::vector<UeState>& ues,
                                                const std::vector<UeLinks>& links, double p_sym) {
    Rng unused(0);
    return filter_phase(ctx, synthesize_phase(ctx, ues, links, p_sym, 0.0, unused));
}

inline Thresholds calibrate_threshold(const DetectionContext& ctx, double target_pfa, std::size_t trials,
                                      std::uint64_t seed, ThresholdMode mode = ThresholdMode::per_filter,
                                      std::optional<double> noise_var = std::nullopt) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw std::invalid_argument("target_pfa must lie in (0, 1)");
    if (static_cast<double>(trials) < 10.0 / target_pfa - 1e-9)
        throw std::invalid_argument("calibration needs at least 10 / target_pfa trials");
    const double var = noise_var.value_or(ctx.noise_var);
    std::vector<std::vector<std::vector<double>>> null(trials);
    const std::vector<UeState> none;
    const std::vector<UeLinks> no_links;
#pragma omp parallel for schedule(dynamic, 16)
    for (long long t = 0; t < static_cast<long long>(trials); ++t) {
        Rng rng(seed, stream::calibration, static_cast<std::uint64_t>(t));
        null[static_cast<std::size_t>(t)] =
            null_statistic(filter_phase(ctx, synthesize_phase(ctx, none, no_links, 0.0, var, rng)));
    }
    Thresholds th = thresholds_from_null(null, target_pfa, mode);
    th.noise_var = var;
    return th;
}

// Assignment of detections to the UEs that caused them.
struct PhaseOutcome {
    DetectionReport report;
    std::vector<int> matched_ue;  // per detection: UE index, or -1 for a false alarm
    std::vector<bool> ue_detected; // per UE, detected in this phase
    std::size_t false_alarms = 0;
    std::uint64_t multiplies = 0;
};

// A detection on pilot b matches an active UE on pilot b whose position is
// within one cell diagonal of the reported cell center; strongest detections
// claim UEs first, one UE per detection.
inline PhaseOutcome match_detections(const DetectionContext& ctx, const DetectionReport& rep,
                                     const std::vector<UeState>& ues) {
    PhaseOutcome out;
    out.report = rep;
    out.matched_ue.assign(rep.detections.size(), -1);
    out.ue_detected.assign(ues.size(), false);
    std::vector<std::size_t> order(rep.detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rep.detections[a].score > rep.detections[b].score; });
    for (std::size_t i : order) {
        const Detection& d = rep.detections[i];
        const double radius = ctx.partitions.at(static_cast<std::size_t>(d.ris)).cell_diagonal();
        int best = -1;
        double best_dist = radius;
        for (std::size_t m = 0; m < ues.size(); ++m) {
            if (!ues[m].active || !ues[m].pilot || *ues[m].pilot != d.rb || out.ue_detected[m]) continue;
            const double dist = (ues[m].position - d.position).norm();
            if (dist <= best_dist) {
                best_dist = dist;
                best = static_cast<int>(m);
            }
        }
        out.matched_ue[i] = best;
        if (best >= 0)
            out.ue_detected[static_cast<std::size_t>(best)] = true;
        else
            ++out.false_alarms;
    }
    return out;
}

inline PhaseOutcome run_detection_phase(const DetectionContext& ctx, std::vector<UeState>& ues,
                                        const Thresholds& th, double p_sym, Rng& rng) {
    const auto links = draw_phase_links(ctx, ues, rng);
    const FilterBankOutput f = filter_phase(ctx, synthesize_phase(ctx, ues, links, p_sym, ctx.noise_var, rng));
    PhaseOutcome out = match_detections(ctx, energy_detect(f, th, ctx.partitions), ues);
    out.multiplies = f.multiplies;
    return out;
}

struct ProtocolResult {
    std::vector<PhaseOutcome> phases;
    std::vector<int> detected_count; // cumulative, per phase
    std::vector<bool> skipped;       // phase had nothing left to detect
    std::vector<UeState> ues;        // final UE states
};

// Strategy A: undetected UEs draw pilots from the random pool [0, B_R);
// detected UEs move to free reserved pilots [B_R, B), or fall silent when
// none is left. Strategy B: every UE draws from the whole pool [0, B) in
// every phase, detected or not.
inline ProtocolResult run_adaptive_protocol(const DetectionContext& ctx, std::vector<UeState> ues, int J,
                                            Strategy strategy, const Thresholds& th, double p_sym, Rng& rng) {
    if (J < 1) throw std::invalid_argument("run_adaptive_protocol: J must be at least 1");
    const int b_r = ctx.pilots.random_pool();
    const int b_all = ctx.pilots.size();
    ProtocolResult res;
    int total = 0;
    std::vector<char> reserved_used(static_cast<std::size_t>(b_all), 0);
    for (auto& u : ues) {
        u.active = true;
        u.detected = false;
    }
    for (int j = 0; j < J; ++j) {
        bool contenders = false;
        for (auto& u : ues) {
            if (strategy == Strategy::persistent) {
                u.pilot = static_cast<int>(rng.index(static_cast<std::size_t>(b_all)));
                contenders = contenders || !u.detected;
            } else if (!u.detected) {
                u.pilot = static_cast<int>(rng.index(static_cast<std::size_t>(b_r)));
                contenders = true;
            }
        }
        if (!contenders) {
            res.phases.emplace_back();
            res.detected_count.push_back(total);
            res.skipped.push_back(true);
            continue;
        }
        PhaseOutcome out = run_detection_phase(ctx, ues, th, p_sym, rng);
        for (std::size_t m = 0; m < ues.size(); ++m) {
            if (!out.ue_detected[m] || ues[m].detected) continue;
            ues[m].detected = true;
            ++total;
            if (strategy == Strategy::adaptive) {
                int slot = -1;
                for (int b = b_r; b < b_all; ++b)
                    if (!reserved_used[static_cast<std::size_t>(b)]) {
                        slot = b;
                        break;
                    }
                if (slot >= 0) {
                    reserved_used[static_cast<std::size_t>(slot)] = 1;
                    ues[m].pilot = slot;
                } else {
                    ues[m].active = false;
                }
            }
        }
        res.phases.push_back(std::move(out));
        res.detected_count.push_back(total);
        res.skipped.push_back(false);
    }
    res.ues = std::move(ues);
    return res;
}

// p_det(m) measured on the physical layer: m UEs on one random-access pilot at
// uniform positions, fraction of them detected in one phase.
inline DetectionKernel estimate_kernel(const DetectionContext& ctx, const Thresholds& th, int m_max,
                                       std::size_t trials, double p_sym, std::uint64_t seed) {
    if (m_max < 1 || trials < 1) throw std::invalid_argument("estimate_kernel: need m_max >= 1 and trials >= 1");
    std::vector<double> table;
    for (int m = 1; m <= m_max; ++m) {
        std::vector<std::size_t> hits(trials, 0);
#pragma omp parallel for schedule(dynamic)
        for (long long t = 0; t < static_cast<long long>(trials); ++t) {
            Rng rng(seed, stream::trial, (static_cast<std::uint64_t>(m) << 40) | static_cast<std::uint64_t>(t));
            auto ues = place_ues(ctx.scenario, rng, m);
            for (auto& u : ues) u.pilot = 0;
            const PhaseOutcome out = run_detection_phase(ctx, ues, th, p_sym, rng);
            for (bool d : out.ue_detected) hits[static_cast<std::size_t>(t)] += d ? 1 : 0;
        }
        std::size_t sum = 0;
        for (auto h : hits) sum += h;
        table.push_back(static_cast<double>(sum) / (static_cast<double>(trials) * m));
    }
    return DetectionKernel::table(std::move(table));
}

enum class SweepAxis { power, M, B_R, J };

inline SweepAxis parse_axis(const std::string& s) {
    if (s == "power") return SweepAxis::power;
    if (s == "M") return SweepAxis::M;
    if (s == "B_R") return SweepAxis::B_R;
    if (s == "J") return SweepAxis::J;
    throw std::invalid_argument("unknown sweep axis '" + s + "' (power, M, B_R, J)");
}

struct PowerPoint {
    double p_sym_dbw = 0.0;
    double k_rice = 0.0;
    std::size_t trials = 0;
    std::size_t ues = 0;      // active UEs summed over trials
    std::size_t detected = 0; // UEs detected
    std::size_t false_alarms = 0;
    std::size_t filters = 0;  // (b, k) tests summed over trials
    double pd() const { return ues ? static_cast<double>(detected) / static_cast<double>(ues) : 0.0; }
    double pfa() const { return filters ? static_cast<double>(false_alarms) / static_cast<double>(filters) : 0.0; }
};

struct ExperimentResult {
    std::vector<PowerPoint> power;
    std::string csv;
    double seconds = 0.0;
    std::uint64_t multiplies = 0;
};

// Detection probability over a power grid for every K_Rice value. Trial t
// uses the same UE placement, pilots and noise at every power point, so the
// curves are compared under common random numbers.
inline ExperimentResult power_sweep(const DetectionContext& ctx, const Thresholds& th,
                                    const std::vector<double>& p_dbw, std::vector<double> k_rice_values,
                                    std::size_t trials, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    if (k_rice_values.empty()) k_rice_values.push_back(ctx.scenario.ue.k_rice);
    ExperimentResult res;
    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "p_sym_dbw,k_rice,trials,pd,pfa,detected,ues,false_alarms,multiplies\n";
    const std::size_t tests = ctx.pilots.size() * ctx.book->ris_count();
    for (double kr : k_rice_values)
        for (double p : p_dbw) {
            std::vector<PowerPoint> per(trials);
            std::vector<std::uint64_t> mults(trials, 0);
#pragma omp parallel for schedule(dynamic)
            for (long long t = 0; t < static_cast<long long>(trials); ++t) {
                Rng rng(seed, stream::trial, static_cast<std::uint64_t>(t));
                auto ues = place_ues(ctx.scenario, rng);
                for (auto& u : ues) {
                    u.k_rice = kr;
                    if (!u.pilot) u.pilot = static_cast<int>(rng.index(static_cast<std::size_t>(ctx.pilots.random_pool())));
                }
                const PhaseOutcome out = run_detection_phase(ctx, ues, th, db_to_linear(p), rng);
                PowerPoint& pp = per[static_cast<std::size_t>(t)];
                pp.ues = ues.size();
                for (bool d : out.ue_detected) pp.detected += d ? 1 : 0;
                pp.false_alarms = out.false_alarms;
                pp.filters = tests;
                mults[static_cast<std::size_t>(t)] = out.multiplies;
            }
            PowerPoint agg{p, kr, trials};
            std::uint64_t m = 0;
            for (std::size_t t = 0; t < trials; ++t) {
                agg.ues += per[t].ues;
                agg.detected += per[t].detected;
                agg.false_alarms += per[t].false_alarms;
                agg.filters += per[t].filters;
                m += mults[t];
            }
            res.multiplies += m;
            res.power.push_back(agg);
            csv << p << ',' << kr << ',' << trials << ',' << agg.pd() << ',' << agg.pfa() << ',' << agg.detected << ','
                << agg.ues << ',' << agg.false_alarms << ',' << m << '\n';
        }
    res.csv = csv.str();
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// Collision probability, closed form vs. Monte Carlo, along M or B_R (the other
// taken from the access configuration).
inline ExperimentResult collision_sweep(const AccessConfig& cfg, SweepAxis axis, const std::vector<int>& points,
                                        std::size_t trials, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult res;
    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "M,B_R,analytic,montecarlo,trials\n";
    if (trials > 0)
        for (int v : points) {
            const int M = axis == SweepAxis::M ? v : cfg.M;
            const int br = axis == SweepAxis::B_R ? v : cfg.B_R;
            csv << M << ',' << br << ',' << collision_prob(M, br) << ',' << simulate_collision(M, br, trials, seed)
                << ',' << trials << '\n';
        }
    res.csv = csv.str();
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// Detected-count distributions after J = 1 .. J_max phases for both
// strategies: Strategy A on (B_R, B_A), Strategy B on the whole pool.
inline ExperimentResult phase_sweep(const AccessSpec& spec, const DetectionKernel& kernel, int J_max,
                                    std::size_t trials, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult res;
    std::ostringstream csv;
    csv << std::setprecision(10);
    write_distribution_header(csv);
    const AccessConfig& c = spec.config;
    const int M = c.M;
    const int b_all = c.B();

    const TransitionMatrix Pa = transition_matrix(M, c.B_R, kernel, spec.convention, spec.row_law);
    const TransitionMatrix Pb = persistent_transition_matrix(M, b_all, kernel, spec.convention);
    Pmf init_a(static_cast<std::size_t>(M) + 1), init_b(static_cast<std::size_t>(M) + 1);
    for (int i = 0; i <= M; ++i) {
        init_a[static_cast<std::size_t>(i)] = Pa(0, i);
        init_b[static_cast<std::size_t>(i)] = Pb(0, i);
    }
    const auto ea = evolve_phases(init_a, Pa, J_max, spec.evolution);
    const auto eb = evolve_phases(init_b, Pb, J_max, spec.evolution);

    PhaseHistogram ha, hb;
    if (trials > 0) {
        AccessConfig ca = c, cb = c;
        ca.J = cb.J = J_max;
        cb.B_R = b_all;
        cb.B_A = 0;
        ha = simulate_strategy(ca, Strategy::adaptive, kernel, trials, seed);
        hb = simulate_strategy(cb, Strategy::persistent, kernel, trials, seed);
    }
    for (int j = 1; j <= J_max; ++j) {
        const auto ji = static_cast<std::size_t>(j - 1);
        write_distribution_rows(csv, j, ea.phases[ji], "analytic", "A");
        write_distribution_rows(csv, j, eb.phases[ji], "analytic", "B");
        if (trials > 0) {
            write_distribution_rows(csv, j, ha.pmf(ji), "montecarlo", "A");
            write_distribution_rows(csv, j, hb.pmf(ji), "montecarlo", "B");
        }
    }
    res.csv = csv.str();
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline void write_thresholds(std::ostream& os, const Thresholds& th, std::uint64_t hash) {
    os << std::setprecision(17) << "# scenario_hash=" << hash << " pfa=" << th.target_pfa << " trials=" << th.trials
       << " noise_var=" << th.noise_var << " mode=" << (th.mode == ThresholdMode::global ? "global" : "per_filter")
       << '\n';
    os << "rb,ris,gamma\n";
    for (std::size_t b = 0; b < th.gamma.size(); ++b)
        for (std::size_t k = 0; k < th.gamma[b].size(); ++k) os << b << ',' << k << ',' << th.gamma[b][k] << '\n';
}

// `expected_noise_var`, when given, must match the calibration noise power:
// the scenario hash leaves noise settings out, thresholds depend on them.
inline Thresholds read_thresholds(std::istream& is, std::uint64_t expected_hash, std::size_t pilots,
                                  std::size_t ris, std::optional<double> expected_noise_var = std::nullopt) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# scenario_hash=", 0) != 0)
        throw integrity_error("thresholds: missing header");
    Thresholds th;
    {
        std::istringstream hs(line.substr(2));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "scenario_hash" && std::stoull(v) != expected_hash)
                throw integrity_error("thresholds were calibrated for a different scenario");
            if (k == "pfa") th.target_pfa = std::stod(v);
            if (k == "trials") th.trials = std::stoull(v);
            if (k == "noise_var") th.noise_var = std::stod(v);
            if (k == "mode") th.mode = v == "global" ? ThresholdMode::global : ThresholdMode::per_filter;
        }
    }
    if (expected_noise_var && std::abs(th.noise_var - *expected_noise_var) > 1e-9 * *expected_noise_var)
        throw integrity_error("thresholds were calibrated at a different noise power");
    std::getline(is, line);
    th.gamma.assign(pilots, std::vector<double>(ris, -1.0));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string b, k, g;
        std::getline(ls, b, ',');
        std::getline(ls, k, ',');
        std::getline(ls, g, ',');
        const auto bi = std::stoull(b), ki = std::stoull(k);
        if (bi >= pilots || ki >= ris) throw integrity_error("thresholds: entry outside the filter bank");
        th.gamma[bi][ki] = std::stod(g);
    }
    for (const auto& row : th.gamma)
        for (double g : row)
            if (!(g > 0.0)) throw integrity_error("thresholds: incomplete table");
    return th;
}

} // namespace nfris
