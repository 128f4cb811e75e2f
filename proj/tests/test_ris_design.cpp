#include "nfris/ris_design.hpp"

#include <gtest/gtest.h>

using namespace nfris;

namespace {

const CarrierGrid grid6(6e9, 3, 30e3);

Scene desk_scene(int ris_side) {
    const double lam = grid6.carrier_wavelength();
    return Scene(grid6, build_upa({4.5, 0, 2}, {8, 2}, lam / 2, ArrayPlane::xz, 1),
                 {build_upa({4.5, 4.5, 3}, {ris_side, ris_side}, lam / 2, ArrayPlane::xy, -1)});
}

SubRegionPartition desk_cells() { return partition_region(Region({4.05, 4.95}, {4.05, 4.95}, {1.4, 1.8}), {3, 3, 1}); }

CVector random_omega(Eigen::Index n, Rng& rng, double lo, double hi) {
    CVector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = std::polar(lo + (hi - lo) * rng.uniform(), rng.phase());
    return w;
}

TEST(Penalty, Passive) {
    EXPECT_NEAR(penalty_passive(CVector::Zero(576), 0.1), 57.6, 1e-12);
    Rng rng(1);
    const CVector unit = random_omega(50, rng, 1.0, 1.0);
    EXPECT_NEAR(penalty_passive(unit, 0.1), 0.0, 1e-28);
    EXPECT_NEAR(penalty_passive(2.0 * unit, 0.1), 0.1 * 50, 1e-12);
}

TEST(Penalty, Sidelobe) {
    DesignParams p;
    p.beta_sl = 0.3;
    p.alpha_sl = 2.0;
    p.eps_sl = 0.5;
    EXPECT_DOUBLE_EQ(penalty_sidelobe(0.5, p), 0.15);
    EXPECT_NEAR(penalty_sidelobe(1e6, p), 0.3, 1e-15);
    EXPECT_NEAR(penalty_sidelobe_derivative(0.5, p), 2.0 * 0.3 / 4.0, 1e-15);
    for (double chi : {0.0, 0.2, 0.5, 1.3, 4.0}) {
        const double h = 1e-6;
        const double fd = (penalty_sidelobe(chi + h, p) - penalty_sidelobe(chi - h, p)) / (2 * h);
        EXPECT_NEAR(penalty_sidelobe_derivative(chi, p), fd, 1e-8);
    }
    EXPECT_EQ(penalty_sidelobe_derivative(-1e6, p), 0.0);
}

TEST(Objective, ZeroConfiguration) {
    const Scene s = desk_scene(4);
    const Vec3 c(4.5, 4.5, 1.6);
    const FocusProblem prob = make_focus_problem(s, 0, std::span(&c, 1), {}, false);
    DesignParams p;
    EXPECT_NEAR(objective(prob, CVector::Zero(16), p), -0.1 * 16, 1e-15);
}

TEST(Objective, QuadraticFormOracle) {
    const Scene s = desk_scene(4);
    const Vec3 c(4.4, 4.6, 1.6);
    const FocusProblem prob = make_focus_problem(s, 0, std::span(&c, 1), {}, false);
    DesignParams p;
    p.beta_ps = 0.0;
    Rng rng(2);
    const CVector w = random_omega(16, rng, 0.5, 1.5);
    double want = 0;
    for (int q = 0; q < 3; ++q) {
        const CMatrix lam = s.cascade_matrix(0, q, c);
        want += (lam * w).squaredNorm();
    }
    EXPECT_NEAR(objective(prob, w, p), want, 1e-12 * want);
    p.beta_ps = 0.1;
    const CVector u = random_omega(16, rng, 1.0, 1.0);
    double wu = 0;
    for (int q = 0; q < 3; ++q) wu += (s.cascade_matrix(0, q, c) * u).squaredNorm();
    EXPECT_NEAR(objective(prob, u, p), wu, 1e-12 * wu);
    EXPECT_THROW(objective(FocusProblem{}, u, p), std::invalid_argument);
}

double finite_difference_error(const FocusProblem& prob, const CVector& w, const DesignParams& p) {
    const CVector g = gradient(prob, w, p);
    const double h = 1e-6;
    double worst = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        CVector a = w, b = w;
        a[i] += h;
        b[i] -= h;
        const double dre = (objective(prob, a, p) - objective(prob, b, p)) / (2 * h);
        a = w;
        b = w;
        a[i] += cplx(0, h);
        b[i] -= cplx(0, h);
        const double dim = (objective(prob, a, p) - objective(prob, b, p)) / (2 * h);
        worst = std::max(worst, std::abs(g[i] - cplx(dre, dim)));
    }
    return worst / g.cwiseAbs().maxCoeff();
}

TEST(Gradient, FiniteDifferenceOracle) {
    const Scene s = desk_scene(8);
    const auto cells = desk_cells();
    std::vector<Vec3> out(cells.centers.begin() + 1, cells.centers.end());
    const FocusProblem prob = make_focus_problem(s, 0, std::span(&cells.centers[0], 1), out, true);
    DesignParams p;
    // Make the side-lobe term active so its derivative is exercised.
    p.alpha_sl = 40.0;
    p.eps_sl = 0.02;
    p.beta_sl = 0.5;
    Rng rng(20);
    for (int t = 0; t < 20; ++t) {
        const CVector w = random_omega(64, rng, 0.5, 1.5);
        EXPECT_LE(finite_difference_error(prob, w, p), 1e-5) << "draw " << t;
    }
}

TEST(Gradient, QuadraticOnly) {
    const Scene s = desk_scene(4);
    const Vec3 c(4.5, 4.5, 1.6);
    const FocusProblem prob = make_focus_problem(s, 0, std::span(&c, 1), {}, false);
    DesignParams p;
    p.beta_ps = 0.0;
    Rng rng(3);
    const CVector w = random_omega(16, rng, 0.5, 1.5);
    CVector want = CVector::Zero(16);
    for (int q = 0; q < 3; ++q) {
        const CMatrix lam = s.cascade_matrix(0, q, c);
        want += 2.0 * lam.adjoint() * lam * w;
    }
    EXPECT_LT((gradient(prob, w, p) - want).norm(), 1e-12 * want.norm());

    // A unit-modulus point sees no passive-penalty contribution.
    p.beta_ps = 0.1;
    const CVector u = random_omega(16, rng, 1.0, 1.0);
    DesignParams none = p;
    none.beta_ps = 0.0;
    // |u_i| - 1 is at rounding level, so the term is too.
    EXPECT_LT((gradient(prob, u, p) - gradient(prob, u, none)).norm(), 1e-14);
}

TEST(Gradient, VanishingElementThrows) {
    const Scene s = desk_scene(4);
    const Vec3 c(4.5, 4.5, 1.6);
    const FocusProblem prob = make_focus_problem(s, 0, std::span(&c, 1), {}, true);
    CVector w = CVector::Ones(16);
    w[5] = 0.0;
    EXPECT_THROW(gradient(prob, w, DesignParams{}), singularity_error);
}

TEST(Optimizer, ExhaustivePhaseOracle) {
    const Scene s = desk_scene(2);
    const Vec3 c(4.5, 4.5, 1.6);
    const FocusProblem prob = make_focus_problem(s, 0, std::span(&c, 1), {}, true);
    std::array<CMatrix, 3> lam;
    for (int q = 0; q < 3; ++q) lam[q] = s.cascade_matrix(0, q, c);
    auto energy = [&](const CVector& w) {
        double e = 0;
        for (int q = 0; q < 3; ++q) e += (lam[q] * w).squaredNorm();
        return e;
    };
    double best = 0;
    CVector w(4);
    for (int code = 0; code < 16 * 16 * 16 * 16; ++code) {
        int r = code;
        for (int i = 0; i < 4; ++i, r /= 16) w[i] = std::polar(1.0, 2 * pi * (r % 16) / 16.0);
        best = std::max(best, energy(w));
    }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const RisConfiguration cfg = optimize_focus(prob, 4, DesignParams{}, rng);
        EXPECT_GE(energy(cfg.weights), 0.95 * best) << "seed " << seed;
    }
}

TEST(Optimizer, MonotoneTraceAndUnitModulus) {
    const Scene s = desk_scene(8);
    const auto cells = desk_cells();
    Rng rng(7);
    const RisConfiguration cfg = design_configuration(s, 0, 4, cells, DesignParams{}, rng);
    ASSERT_GE(cfg.trace.size(), 2u);
    for (std::size_t i = 1; i < cfg.trace.size(); ++i) EXPECT_GE(cfg.trace[i], cfg.trace[i - 1]);
    for (Eigen::Index i = 0; i < cfg.weights.size(); ++i) EXPECT_NEAR(std::abs(cfg.weights[i]), 1.0, 4e-16);
}

TEST(Optimizer, ScanningSelectivity) {
    const Scene s = desk_scene(8);
    const auto cells = desk_cells();
    const RisCodebook book = build_codebook(s, {cells}, DesignParams{}, 11);
    ASSERT_EQ(book.cells(), 9u);
    for (std::size_t n = 0; n < 9; ++n) {
        const auto e = cell_energies(s, 0, cells, book.configs[0][n].weights);
        for (std::size_t m = 0; m < 9; ++m)
            if (m != n) EXPECT_GT(e[n], e[m]) << "config " << n << " vs cell " << m;
        EXPECT_DOUBLE_EQ(book.configs[0][n].focal_energy, e[n]);
    }
}

TEST(Codebook, PartnersNegateAndFrames) {
    const Scene s = desk_scene(4);
    const auto cells = desk_cells();
    const RisCodebook book = build_codebook(s, {cells}, DesignParams{}, 3);
    EXPECT_EQ(book.frames(), 18u);
    const CMatrix fm = book.frame_matrix(0);
    for (std::size_t n = 0; n < 9; ++n) {
        EXPECT_EQ((book.partners[0][n] + book.configs[0][n].weights).norm(), 0.0);
        EXPECT_EQ((fm.col(static_cast<Eigen::Index>(book.partner_frame(n))) + fm.col(static_cast<Eigen::Index>(n))).norm(), 0.0);
    }
}

TEST(Codebook, DeterministicAcrossRuns) {
    const Scene s = desk_scene(4);
    const auto cells = desk_cells();
    const RisCodebook a = build_codebook(s, {cells}, DesignParams{}, 5);
    const RisCodebook b = build_codebook(s, {cells}, DesignParams{}, 5);
    for (std::size_t n = 0; n < 9; ++n) EXPECT_EQ((a.configs[0][n].weights - b.configs[0][n].weights).norm(), 0.0);
}

TEST(Codebook, MismatchedPartitionsRejected) {
    const Scene s = desk_scene(4);
    EXPECT_THROW(build_codebook(s, {}, DesignParams{}, 1), std::invalid_argument);
    DesignParams bad;
    bad.beta_ps = -1;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

} // namespace
