#include "nfris/access.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

using namespace nfris;

namespace {

double sum(const Pmf& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

// Exact one-phase law of the detected count by enumerating all B_R^M
// assignments, with independent per-UE detection given the occupancies.
Pmf enumerate_detections(int M, int B_R, const std::function<double(int)>& pdet) {
    Pmf out(static_cast<std::size_t>(M) + 1, 0.0);
    int total = 1;
    for (int i = 0; i < M; ++i) total *= B_R;
    std::vector<int> rb(static_cast<std::size_t>(M));
    for (int code = 0; code < total; ++code) {
        int c = code;
        std::vector<int> occ(static_cast<std::size_t>(B_R), 0);
        for (int u = 0; u < M; ++u, c /= B_R) {
            rb[u] = c % B_R;
            ++occ[rb[u]];
        }
        // Distribution of detections for this assignment: convolve Bernoullis.
        Pmf d{1.0};
        for (int u = 0; u < M; ++u) {
            const double p = pdet(occ[rb[u]]);
            Pmf next(d.size() + 1, 0.0);
            for (std::size_t k = 0; k < d.size(); ++k) {
                next[k] += d[k] * (1 - p);
                next[k + 1] += d[k] * p;
            }
            d = next;
        }
        for (std::size_t k = 0; k < d.size(); ++k) out[k] += d[k] / total;
    }
    return out;
}

TEST(RbShare, Examples) {
    EXPECT_DOUBLE_EQ(rb_share_pmf(1, 1, 1), 1.0);
    EXPECT_DOUBLE_EQ(rb_share_pmf(1, 2, 2), 0.5);
    for (int M : {1, 5, 25}) {
        double s = 0;
        for (int m = 0; m <= M; ++m) s += rb_share_pmf(m, M, 7);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_THROW(rb_share_pmf(3, 2, 2), std::invalid_argument);
    EXPECT_THROW(rb_share_pmf(1, 2, 0), std::invalid_argument);
}

TEST(RbShare, MatchesOccupancySimulation) {
    const Pmf sim = simulate_occupancy(4, 3, 300000, 5);
    Pmf law(5);
    for (int m = 0; m <= 4; ++m) law[m] = rb_share_pmf(m, 4, 3);
    EXPECT_LE(total_variation(sim, law), 0.01);
}

TEST(Kernel, Factories) {
    const auto lg = DetectionKernel::logistic(3.5, 3.0);
    EXPECT_NEAR(lg(1), 1.0 / (1.0 + std::exp(-7.5)), 1e-15);
    EXPECT_NEAR(lg(4), 1.0 / (1.0 + std::exp(1.5)), 1e-15);
    const auto st = DetectionKernel::step(0.9, 0.3);
    EXPECT_EQ(st(1), 0.9);
    EXPECT_EQ(st(7), 0.3);
    const auto tb = DetectionKernel::table({1.0, 0.5});
    EXPECT_TRUE(tb.covers(2));
    EXPECT_FALSE(tb.covers(3));
    EXPECT_THROW(tb(3), std::invalid_argument);
    EXPECT_THROW(tb(0), std::invalid_argument);
    EXPECT_THROW(DetectionKernel::table({1.2}), std::invalid_argument);
    EXPECT_THROW(detection_prob(3, 2, tb), std::invalid_argument);
}

TEST(DetectionProb, Examples) {
    EXPECT_NEAR(detection_prob(25, 25, DetectionKernel::constant(1.0)), 1.0, 1e-12);
    EXPECT_EQ(detection_prob(25, 25, DetectionKernel::constant(0.0)), 0.0);
    EXPECT_NEAR(detection_prob(2, 2, DetectionKernel::step(0.9, 0.3)), 0.6, 1e-15);
    // Verbatim weighting leaves out the m = 0 mass, so a perfect detector falls short of 1.
    EXPECT_NEAR(detection_prob(2, 2, DetectionKernel::constant(1.0), Convention::verbatim), 0.75, 1e-15);
    EXPECT_EQ(detection_prob(0, 2, DetectionKernel::constant(1.0)), 0.0);
}

TEST(DetectionProb, ConditionalMatchesEnumeration) {
    const auto pdet = [](int m) { return m == 1 ? 0.9 : m == 2 ? 0.3 : 0.1; };
    const auto kernel = DetectionKernel::table({0.9, 0.3, 0.1, 0.1});
    for (int M = 1; M <= 4; ++M)
        for (int B = 1; B <= 4; ++B) {
            const Pmf exact = enumerate_detections(M, B, pdet);
            double mean = 0;
            for (std::size_t k = 0; k < exact.size(); ++k) mean += static_cast<double>(k) * exact[k];
            EXPECT_NEAR(detection_prob(M, B, kernel), mean / M, 1e-12) << M << "," << B;
        }
}

TEST(DetectionsPmf, PointMasses) {
    EXPECT_EQ(detections_pmf(0, 3, DetectionKernel::constant(0.5)), Pmf{1.0});
    const Pmf all = detections_pmf(5, 3, DetectionKernel::constant(1.0));
    EXPECT_NEAR(all[5], 1.0, 1e-12);
}

TEST(DetectionsPmf, BinomialVersusExhaustive) {
    const auto kernel = DetectionKernel::step(1.0, 0.0);
    const Pmf bin = detections_pmf(3, 3, kernel);
    const double p = 4.0 / 9.0; // the tagged UE is alone
    for (int k = 0; k <= 3; ++k) EXPECT_NEAR(bin[k], binomial_pmf(k, 3, p), 1e-15);

    const Pmf exact = enumerate_detections(3, 3, [](int m) { return m == 1 ? 1.0 : 0.0; });
    EXPECT_NEAR(exact[0], 3.0 / 27, 1e-15);
    EXPECT_NEAR(exact[1], 18.0 / 27, 1e-15);
    EXPECT_NEAR(exact[2], 0.0, 1e-15);
    EXPECT_NEAR(exact[3], 6.0 / 27, 1e-15);
    // The independence approximation puts mass where the exact law has none.
    EXPECT_NEAR(total_variation(bin, exact), 0.3896, 1e-4);
}

TEST(DetectionsPmf, ExactDynamicProgramMatchesEnumeration) {
    const auto pdet = [](int m) { return 1.0 / (1.0 + std::exp(3.0 * (m - 1.5))); };
    std::vector<double> table;
    for (int m = 1; m <= 4; ++m) table.push_back(pdet(m));
    const auto kernel = DetectionKernel::table(table);
    for (int M = 0; M <= 4; ++M)
        for (int B = 1; B <= 4; ++B) {
            const Pmf dp = exact_detections_pmf(M, B, kernel);
            const Pmf en = enumerate_detections(M, B, pdet);
            ASSERT_EQ(dp.size(), en.size());
            for (std::size_t k = 0; k < dp.size(); ++k) EXPECT_NEAR(dp[k], en[k], 1e-12) << M << "," << B;
        }
}

TEST(DetectionsPmf, SimulationMatchesEnumeration) {
    const auto pdet = [](int m) { return m == 1 ? 0.95 : m == 2 ? 0.5 : 0.2; };
    const auto kernel = DetectionKernel::table({0.95, 0.5, 0.2, 0.2});
    for (int M = 1; M <= 4; ++M)
        for (int B = 1; B <= 4; ++B) {
            const auto h = simulate_strategy({M, B, 0, 1}, Strategy::adaptive, kernel, 100000, 3);
            EXPECT_LE(total_variation(h.pmf(0), enumerate_detections(M, B, pdet)), 0.01) << M << "," << B;
        }
}

TEST(Transition, RowsAndShape) {
    const auto kernel = DetectionKernel::logistic(3.5, 3.0);
    const auto P = transition_matrix(25, 25, kernel);
    ASSERT_EQ(P.rows(), 26);
    for (int r = 0; r <= 25; ++r) {
        EXPECT_NEAR(P.row(r).sum(), 1.0, 1e-12);
        EXPECT_GE(P.row(r).minCoeff(), 0.0);
        const double p = detection_prob(25 - r, 25, kernel);
        for (int i = 0; i <= 25 - r; ++i) EXPECT_NEAR(P(r, i), binomial_pmf(i, 25 - r, p), 1e-15);
        for (int i = 26 - r; i <= 25; ++i) EXPECT_EQ(P(r, i), 0.0);
    }
    EXPECT_EQ(P(25, 0), 1.0);

    const auto one = transition_matrix(1, 4, DetectionKernel::constant(0.7));
    EXPECT_NEAR(one(0, 0), 0.3, 1e-15);
    EXPECT_NEAR(one(0, 1), 0.7, 1e-15);
    EXPECT_EQ(one(1, 0), 1.0);
    EXPECT_EQ(one(1, 1), 0.0);
}

TEST(Transition, PersistentRows) {
    const auto kernel = DetectionKernel::logistic(3.5, 3.0);
    const auto P = persistent_transition_matrix(6, 4, kernel);
    const double p = detection_prob(6, 4, kernel);
    for (int r = 0; r <= 6; ++r) {
        EXPECT_NEAR(P.row(r).sum(), 1.0, 1e-12);
        for (int i = 0; i <= 6 - r; ++i) EXPECT_NEAR(P(r, i), binomial_pmf(i, 6 - r, p), 1e-15);
    }
}

TEST(Evolution, FirstPhaseIsInitial) {
    const auto P = transition_matrix(4, 3, DetectionKernel::constant(0.6));
    Pmf init(5);
    for (int i = 0; i < 5; ++i) init[i] = P(0, i);
    const auto ev = evolve_phases(init, P, 1);
    EXPECT_EQ(ev.phases.size(), 1u);
    EXPECT_EQ(ev.phases[0], init);
    EXPECT_THROW(evolve_phases(init, P, 0), std::invalid_argument);
}

TEST(Evolution, PerfectDetectorAbsorbs) {
    const auto P = transition_matrix(6, 3, DetectionKernel::constant(1.0));
    Pmf init(7);
    for (int i = 0; i < 7; ++i) init[i] = P(0, i);
    const auto ev = evolve_phases(init, P, 4);
    for (const auto& p : ev.phases) EXPECT_NEAR(p[6], 1.0, 1e-12);
}

TEST(Evolution, TwoPhaseEnumeration) {
    // M = 2, B_R = 2, only lone UEs are detected; Strategy A removes detected UEs.
    const auto kernel = DetectionKernel::step(1.0, 0.0);
    const auto P = transition_matrix(2, 2, kernel, Convention::conditional, RowLaw::exact);
    Pmf init{P(0, 0), P(0, 1), P(0, 2)};
    const auto ev = evolve_phases(init, P, 2);
    // Phase 1: both alone w.p. 1/2, else none. Phase 2 repeats for the survivors.
    EXPECT_NEAR(ev.phases[1][0], 0.25, 1e-15);
    EXPECT_NEAR(ev.phases[1][1], 0.0, 1e-15);
    EXPECT_NEAR(ev.phases[1][2], 0.75, 1e-15);
    const auto h = simulate_strategy({2, 2, 0, 2}, Strategy::adaptive, kernel, 200000, 1);
    EXPECT_NEAR(h.mean(1), 1.5, 0.01);
    EXPECT_LE(total_variation(h.pmf(1), ev.phases[1]), 0.01);
}

TEST(Evolution, MassAtFullNonDecreasing) {
    const auto kernel = DetectionKernel::logistic(3.5, 3.0);
    const auto P = transition_matrix(10, 5, kernel);
    Pmf init(11);
    for (int i = 0; i <= 10; ++i) init[i] = P(0, i);
    const auto ev = evolve_phases(init, P, 8);
    for (std::size_t j = 0; j < ev.phases.size(); ++j) {
        EXPECT_NEAR(sum(ev.phases[j]), 1.0, 1e-12);
        if (j) EXPECT_GE(ev.phases[j][10], ev.phases[j - 1][10] - 1e-15);
    }
}

TEST(Evolution, VerbatimReportsOverflow) {
    const auto P = transition_matrix(2, 2, DetectionKernel::constant(0.5));
    Pmf init{P(0, 0), P(0, 1), P(0, 2)};
    const auto ev = evolve_phases(init, P, 3, Evolution::verbatim);
    EXPECT_GT(ev.overflow[1], 0.0);
    EXPECT_EQ(ev.overflow[0], 0.0);
    for (const auto& p : ev.phases) EXPECT_NEAR(sum(p), 1.0, 1e-12);
    EXPECT_THROW(evolve_phases(init, P, 2, Evolution::verbatim, true), std::overflow_error);
}

TEST(Collision, Examples) {
    EXPECT_EQ(collision_prob(0, 3), 0.0);
    EXPECT_EQ(collision_prob(1, 3), 0.0);
    EXPECT_DOUBLE_EQ(collision_prob(2, 2), 0.5);
    EXPECT_EQ(collision_prob(5, 4), 1.0);
    EXPECT_THROW(collision_prob(2, 0), std::invalid_argument);
}

TEST(Collision, StrictlyDecreasingInPool) {
    for (int M : {2, 5, 20}) {
        // Below B_R = M the pigeonhole bound pins it at 1.
        double prev = collision_prob(M, M - 1);
        for (int B = M; B <= 200; ++B) {
            const double c = collision_prob(M, B);
            EXPECT_LT(c, prev) << M << "," << B;
            prev = c;
        }
    }
}

TEST(Collision, MatchesSimulation) {
    for (int B : {3, 10, 50}) EXPECT_NEAR(simulate_collision(3, B, 100000, 4), collision_prob(3, B), 1e-2);
    EXPECT_EQ(simulate_collision(5, 4, 1000, 1), 1.0);
}

TEST(Strategy, HistogramsNormalized) {
    const auto kernel = DetectionKernel::logistic(3.5, 3.0);
    const auto h = simulate_strategy({8, 4, 4, 3}, Strategy::persistent, kernel, 2000, 9);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(sum(h.pmf(j)), 1.0, 1e-12);
        const Pmf c = to_cdf(h.pmf(j));
        EXPECT_NEAR(c.back(), 1.0, 1e-12);
        if (j) EXPECT_GE(h.mean(j), h.mean(j - 1));
    }
}

TEST(Strategy, Deterministic) {
    const auto kernel = DetectionKernel::logistic(3.5, 3.0);
    const auto a = simulate_strategy({8, 4, 4, 2}, Strategy::adaptive, kernel, 500, 2);
    const auto b = simulate_strategy({8, 4, 4, 2}, Strategy::adaptive, kernel, 500, 2);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Strategy, PersistentMatchesItsAnalyticMean) {
    // Strategy B: every UE keeps contending, so each undetected UE is found
    // with a fixed per-phase probability.
    const auto kernel = DetectionKernel::logistic(3.5, 3.0);
    const int M = 6, B = 4;
    const double p = detection_prob(M, B, kernel);
    const auto h = simulate_strategy({M, B, 0, 3}, Strategy::persistent, kernel, 100000, 8);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(h.mean(j), M * (1 - std::pow(1 - p, j + 1)), 0.02);
}

TEST(Csv, DistributionRows) {
    std::ostringstream os;
    write_distribution_header(os);
    write_distribution_rows(os, 2, {0.25, 0.75}, "analytic", "A");
    EXPECT_EQ(os.str(), "J,m,probability,source,strategy\n2,0,0.25,analytic,A\n2,1,0.75,analytic,A\n");
}

TEST(Config, Validation) {
    EXPECT_THROW((AccessConfig{-1, 1, 0, 1}.validate()), std::invalid_argument);
    EXPECT_THROW((AccessConfig{2, 0, 0, 1}.validate()), std::invalid_argument);
    EXPECT_THROW((AccessConfig{2, 1, 0, 0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((AccessConfig{0, 0, 0, 1}.validate()));
    EXPECT_EQ((AccessConfig{25, 25, 25, 3}.B()), 50);
}

} // namespace
