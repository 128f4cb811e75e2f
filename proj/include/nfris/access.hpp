#pragma once

#include "nfris/core.hpp"
#include "nfris/rng.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace nfris {

enum class Strategy { adaptive, persistent }; // A, B

inline char strategy_label(Strategy s) { return s == Strategy::adaptive ? 'A' : 'B'; }

struct AccessConfig {
    int M = 0;   // active UEs
    int B_R = 1; // random-access RBs
    int B_A = 0; // RBs reserved for detected UEs
    int J = 1;   // detection phases

    int B() const { return B_R + B_A; }

    void validate() const {
        if (M < 0) throw std::invalid_argument("AccessConfig: M must be non-negative");
        if (B_R < 1 && M > 0) throw std::invalid_argument("AccessConfig: B_R must be at least 1");
        if (B_A < 0) throw std::invalid_argument("AccessConfig: B_A must be non-negative");
        if (J < 1) throw std::invalid_argument("AccessConfig: J must be at least 1");
    }
};

// p_det(m): probability that a given UE is detected while m UEs share its RB.
class DetectionKernel {
public:
    DetectionKernel() = default;

    static DetectionKernel table(std::vector<double> values) {
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("DetectionKernel: values must lie in [0, 1]");
        DetectionKernel k;
        k.table_ = std::move(values);
        return k;
    }

    // p(1) = single, p(m >= 2) = shared.
    static DetectionKernel step(double single, double shared) {
        if (!(single >= 0.0 && single <= 1.0 && shared >= 0.0 && shared <= 1.0))
            throw std::invalid_argument("DetectionKernel: values must lie in [0, 1]");
        DetectionKernel k;
        k.fn_ = [single, shared](int m) { return m <= 1 ? single : shared; };
        return k;
    }

    static DetectionKernel constant(double p) { return step(p, p); }

    // 1 / (1 + exp(slope (m - center)))
    static DetectionKernel logistic(double center, double slope) {
        DetectionKernel k;
        k.fn_ = [center, slope](int m) { return 1.0 / (1.0 + std::exp(slope * (m - center))); };
        return k;
    }

    bool covers(int M) const { return static_cast<bool>(fn_) || static_cast<int>(table_.size()) >= M; }

    double operator()(int m) const {
        if (m < 1) throw std::invalid_argument("DetectionKernel: occupancy must be at least 1");
        if (fn_) return fn_(m);
        if (m > static_cast<int>(table_.size()))
            throw std::invalid_argument("DetectionKernel: no value for occupancy " + std::to_string(m));
        return table_[static_cast<std::size_t>(m - 1)];
    }

    void require(int M) const {
        if (!covers(M)) throw std::invalid_argument("DetectionKernel: kernel undefined up to m = " + std::to_string(M));
    }

private:
    std::vector<double> table_;
    std::function<double(int)> fn_;
};

inline double binomial_pmf(int k, int n, double p) {
    if (k < 0 || k > n) return 0.0;
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(logc + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Probability that exactly m of M UEs pick a given RB out of B_R.
inline double rb_share_pmf(int m, int M, int B_R) {
    if (B_R < 1) throw std::invalid_argument("rb_share_pmf: B_R must be at least 1");
    if (m < 0 || m > M) throw std::invalid_argument("rb_share_pmf: m outside [0, M]");
    return binomial_pmf(m, M, 1.0 / B_R);
}

// conditional: the tagged UE transmits, m - 1 of the other M - 1 join its RB.
// verbatim: weight p_det(m) by the population occupancy law itself.
enum class Convention { conditional, verbatim };

inline double detection_prob(int M, int B_R, const DetectionKernel& kernel,
                             Convention conv = Convention::conditional) {
    if (M <= 0) return 0.0;
    kernel.require(M);
    double p = 0.0;
    for (int m = 1; m <= M; ++m) {
        const double w = conv == Convention::conditional ? binomial_pmf(m - 1, M - 1, 1.0 / B_R)
                                                         : rb_share_pmf(m, M, B_R);
        p += w * kernel(m);
    }
    return p;
}

using Pmf = std::vector<double>;

// Binomial(M, detection_prob): per-UE detections treated as independent.
inline Pmf detections_pmf(int M, int B_R, const DetectionKernel& kernel, Convention conv = Convention::conditional) {
    if (M < 0) throw std::invalid_argument("detections_pmf: M must be non-negative");
    const double p = detection_prob(M, B_R, kernel, conv);
    Pmf out(static_cast<std::size_t>(M) + 1);
    for (int m = 0; m <= M; ++m) out[static_cast<std::size_t>(m)] = binomial_pmf(m, M, p);
    return out;
}

// Exact law of the detected count when M UEs pick among B_R RBs uniformly and
// every UE on an RB of occupancy c is detected independently with p_det(c).
// Dynamic program over RBs on (UEs placed, UEs detected), weighted by the
// multinomial coefficient M! / prod c_r!.
inline Pmf exact_detections_pmf(int M, int B_R, const DetectionKernel& kernel) {
    if (M < 0 || B_R < 1) throw std::invalid_argument("exact_detections_pmf: invalid M or B_R");
    if (M == 0) return {1.0};
    kernel.require(M);
    const auto n = static_cast<std::size_t>(M) + 1;
    // per_rb[c][j]: (1/c!) P{j of c detected}
    std::vector<std::vector<double>> per_rb(n);
    for (int c = 0; c <= M; ++c) {
        per_rb[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(c) + 1, 0.0);
        const double inv_fact = std::exp(-std::lgamma(c + 1.0));
        const double p = c ? kernel(c) : 0.0;
        for (int j = 0; j <= c; ++j) per_rb[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = inv_fact * binomial_pmf(j, c, p);
    }
    std::vector<std::vector<double>> f(n, std::vector<double>(n, 0.0)), g;
    f[0][0] = 1.0;
    for (int r = 0; r < B_R; ++r) {
        g.assign(n, std::vector<double>(n, 0.0));
        for (int u = 0; u <= M; ++u)
            for (int d = 0; d <= u; ++d) {
                const double w = f[static_cast<std::size_t>(u)][static_cast<std::size_t>(d)];
                if (w == 0.0) continue;
                for (int c = 0; u + c <= M; ++c)
                    for (int j = 0; j <= c; ++j)
                        g[static_cast<std::size_t>(u + c)][static_cast<std::size_t>(d + j)] +=
                            w * per_rb[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
            }
        f.swap(g);
    }
    const double scale = std::exp(std::lgamma(M + 1.0) - M * std::log(static_cast<double>(B_R)));
    Pmf out(n);
    for (std::size_t d = 0; d < n; ++d) out[d] = f[n - 1][d] * scale;
    return out;
}

enum class RowLaw { binomial, exact };

using TransitionMatrix = Eigen::MatrixXd;

// Row r (r UEs already detected, M - r still contending) holds the PMF of new
// detections in one phase; the bottom row is (1, 0, ..., 0).
inline TransitionMatrix transition_matrix(int M, int B_R, const DetectionKernel& kernel,
                                          Convention conv = Convention::conditional, RowLaw law = RowLaw::binomial) {
    if (M < 0) throw std::invalid_argument("transition_matrix: M must be non-negative");
    TransitionMatrix P = TransitionMatrix::Zero(M + 1, M + 1);
    for (int r = 0; r <= M; ++r) {
        const Pmf row = law == RowLaw::exact ? exact_detections_pmf(M - r, B_R, kernel)
                                             : detections_pmf(M - r, B_R, kernel, conv);
        for (std::size_t i = 0; i < row.size(); ++i) P(r, static_cast<Eigen::Index>(i)) = row[i];
    }
    return P;
}

// Strategy B: detected UEs keep contending, so all M UEs always share the
// B_R RBs and each of the M - r undetected ones is found with detection_prob(M, B_R).
inline TransitionMatrix persistent_transition_matrix(int M, int B_R, const DetectionKernel& kernel,
                                                     Convention conv = Convention::conditional) {
    TransitionMatrix P = TransitionMatrix::Zero(M + 1, M + 1);
    const double p = detection_prob(M, B_R, kernel, conv);
    for (int r = 0; r <= M; ++r)
        for (int i = 0; i <= M - r; ++i) P(r, i) = binomial_pmf(i, M - r, p);
    return P;
}

enum class Evolution { verbatim, markov };

struct PhaseEvolution {
    std::vector<Pmf> phases;        // phases[j] = distribution after j + 1 phases
    std::vector<double> overflow;   // verbatim mode: mass beyond M folded into M, per phase
};

// verbatim: p~ = p^(J-1) P, then p^(J) = p~ * p^(J-1) (discrete convolution),
//   with any mass landing beyond M folded onto M and recorded in `overflow`
//   (strict mode throws instead).
// markov: p^(J)_{r+i} += p^(J-1)_r P(r, i).
inline PhaseEvolution evolve_phases(const Pmf& initial, const TransitionMatrix& P, int J,
                                    Evolution mode = Evolution::markov, bool strict = false) {
    if (J < 1) throw std::invalid_argument("evolve_phases: J must be at least 1");
    const auto n = static_cast<std::size_t>(P.rows());
    if (initial.size() != n || P.cols() != P.rows())
        throw std::invalid_argument("evolve_phases: dimension mismatch");
    PhaseEvolution out;
    out.phases.push_back(initial);
    out.overflow.push_back(0.0);
    for (int j = 2; j <= J; ++j) {
        const Pmf& prev = out.phases.back();
        Pmf next(n, 0.0);
        double spill = 0.0;
        if (mode == Evolution::markov) {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t i = 0; r + i < n; ++i)
                    next[r + i] += prev[r] * P(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
        } else {
            Pmf tilde(n, 0.0);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t i = 0; i < n; ++i)
                    tilde[i] += prev[r] * P(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k) {
                    const double w = tilde[i] * prev[k];
                    if (i + k < n)
                        next[i + k] += w;
                    else
                        spill += w;
                }
            if (spill > 1e-15 && strict)
                throw std::overflow_error("evolve_phases: convolution places mass beyond M");
            next[n - 1] += spill;
        }
        out.phases.push_back(std::move(next));
        out.overflow.push_back(spill);
    }
    return out;
}

// 1 - prod_{i<M} (B_R - i) / B_R: probability that some RB carries two or more UEs.
inline double collision_prob(int M, int B_R) {
    if (M < 0 || B_R < 1) throw std::invalid_argument("collision_prob: need M >= 0 and B_R >= 1");
    if (M > B_R) return 1.0;
    double distinct = 1.0;
    for (int i = 0; i < M; ++i) distinct *= static_cast<double>(B_R - i) / B_R;
    return 1.0 - distinct;
}

// Histogram of the detected count after every phase: counts[j][m].
struct PhaseHistogram {
    std::vector<std::vector<std::uint64_t>> counts;
    std::uint64_t trials = 0;

    Pmf pmf(std::size_t j) const {
        Pmf p(counts.at(j).size(), 0.0);
        if (trials == 0) return p;
        for (std::size_t m = 0; m < p.size(); ++m) p[m] = static_cast<double>(counts[j][m]) / static_cast<double>(trials);
        return p;
    }

    double mean(std::size_t j) const {
        const Pmf p = pmf(j);
        double s = 0.0;
        for (std::size_t m = 0; m < p.size(); ++m) s += static_cast<double>(m) * p[m];
        return s;
    }
};

inline Pmf to_cdf(const Pmf& p) {
    Pmf c(p.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = (s += p[i]);
    return c;
}

// One phase of random access: `contenders` UEs pick RBs uniformly among
// B_R; `eligible[u]` marks the ones whose detection matters. Returns the
// newly detected contenders (indices into `contenders`).
inline std::vector<int> random_access_round(const std::vector<int>& contenders, int B_R,
                                            const DetectionKernel& kernel, Rng& rng,
                                            std::vector<int>& rb_scratch, std::vector<int>& occ_scratch) {
    rb_scratch.resize(contenders.size());
    occ_scratch.assign(static_cast<std::size_t>(B_R), 0);
    for (std::size_t u = 0; u < contenders.size(); ++u) {
        rb_scratch[u] = static_cast<int>(rng.index(static_cast<std::uint64_t>(B_R)));
        ++occ_scratch[static_cast<std::size_t>(rb_scratch[u])];
    }
    std::vector<int> hit;
    for (std::size_t u = 0; u < contenders.size(); ++u)
        if (rng.uniform() < kernel(occ_scratch[static_cast<std::size_t>(rb_scratch[u])])) hit.push_back(contenders[u]);
    return hit;
}

// Strategy A: only undetected UEs contend on the B_R random RBs (detected
// ones move to reserved RBs). Strategy B: every UE keeps contending on B_R.
inline PhaseHistogram simulate_strategy(const AccessConfig& cfg, Strategy strategy, const DetectionKernel& kernel,
                                        std::uint64_t trials, std::uint64_t seed) {
    cfg.validate();
    kernel.require(cfg.M);
    const auto J = static_cast<std::size_t>(cfg.J);
    const auto bins = static_cast<std::size_t>(cfg.M) + 1;
    PhaseHistogram h;
    h.trials = trials;
    h.counts.assign(J, std::vector<std::uint64_t>(bins, 0));

#pragma omp parallel
    {
        std::vector<std::vector<std::uint64_t>> local(J, std::vector<std::uint64_t>(bins, 0));
        std::vector<int> rb, occ, contenders;
        std::vector<char> detected;
#pragma omp for schedule(static)
        for (long long t = 0; t < static_cast<long long>(trials); ++t) {
            Rng rng(seed, stream::access, static_cast<std::uint64_t>(t));
            detected.assign(static_cast<std::size_t>(cfg.M), 0);
            int total = 0;
            for (std::size_t j = 0; j < J; ++j) {
                contenders.clear();
                for (int u = 0; u < cfg.M; ++u)
                    if (strategy == Strategy::persistent || !detected[static_cast<std::size_t>(u)]) contenders.push_back(u);
                for (int u : random_access_round(contenders, cfg.B_R, kernel, rng, rb, occ))
                    if (!detected[static_cast<std::size_t>(u)]) {
                        detected[static_cast<std::size_t>(u)] = 1;
                        ++total;
                    }
                ++local[j][static_cast<std::size_t>(total)];
            }
        }
#pragma omp critical
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t m = 0; m < bins; ++m) h.counts[j][m] += local[j][m];
    }
    return h;
}

// Pooled RB-occupancy histogram over all RBs and trials (M UEs on B_R RBs).
inline Pmf simulate_occupancy(int M, int B_R, std::uint64_t trials, std::uint64_t seed) {
    if (M < 0 || B_R < 1) throw std::invalid_argument("simulate_occupancy: invalid M or B_R");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(M) + 1, 0);
    std::vector<int> occ;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Rng rng(seed, stream::access, t);
        occ.assign(static_cast<std::size_t>(B_R), 0);
        for (int u = 0; u < M; ++u) ++occ[static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(B_R)))];
        for (int c : occ) ++counts[static_cast<std::size_t>(c)];
    }
    Pmf p(counts.size(), 0.0);
    const double total = static_cast<double>(trials) * B_R;
    if (total > 0.0)
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(counts[i]) / total;
    return p;
}

inline double simulate_collision(int M, int B_R, std::uint64_t trials, std::uint64_t seed) {
    if (M < 0 || B_R < 1) throw std::invalid_argument("simulate_collision: invalid M or B_R");
    if (trials == 0) return 0.0;
    std::uint64_t hits = 0;
    std::vector<char> used;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Rng rng(seed, stream::access, t);
        used.assign(static_cast<std::size_t>(B_R), 0);
        for (int u = 0; u < M; ++u) {
            auto& slot = used[static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(B_R)))];
            if (slot) {
                ++hits;
                break;
            }
            slot = 1;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

inline double total_variation(const Pmf& a, const Pmf& b) {
    const std::size_t n = std::max(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs((i < a.size() ? a[i] : 0.0) - (i < b.size() ? b[i] : 0.0));
    return 0.5 * s;
}

inline void write_distribution_header(std::ostream& os) { os << "J,m,probability,source,strategy\n"; }

inline void write_distribution_rows(std::ostream& os, int J, const Pmf& p, const std::string& source,
                                    const std::string& strategy) {
    for (std::size_t m = 0; m < p.size(); ++m)
        os << J << ',' << m << ',' << p[m] << ',' << source << ',' << strategy << '\n';
}

} // namespace nfris
