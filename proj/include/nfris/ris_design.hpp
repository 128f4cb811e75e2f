#pragma once

#include "nfris/channel.hpp"
#include "nfris/core.hpp"
#include "nfris/geometry.hpp"
#include "nfris/rng.hpp"

#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <vector>

namespace nfris {

struct DesignParams {
    // Penalty weights of the relaxed focusing problem.
    double beta_ps = 0.1;
    double beta_sl = 0.1;
    double alpha_sl = 0.1;
    double eps_sl = 0.1;

    int max_iters = 2000;
    double tolerance = 1e-6; // on max_i |omega_i[l] - omega_i[l-1]|
    // Step schedule mu_l = step0 / (1 + l / step_decay), halved while the
    // objective would decrease. step0 <= 0 selects the inverse Lipschitz
    // constant of the focal term; backtracking absorbs the stiffer radial penalty.
    double step0 = 0.0;
    double step_decay = 200.0;
    int max_backtracks = 40;
    // Scale every cascade matrix so the coherent focal bound
    // sum_q sum_b (sum_i |Lambda_{b,i}|)^2 over the in-points equals one.
    bool normalize_gain = true;

    void validate() const {
        if (!(beta_ps >= 0.0 && beta_sl >= 0.0 && alpha_sl >= 0.0))
            throw std::invalid_argument("DesignParams: penalty weights must be non-negative");
        if (max_iters < 1) throw std::invalid_argument("DesignParams: max_iters must be positive");
        if (!(tolerance > 0.0)) throw std::invalid_argument("DesignParams: tolerance must be positive");
        if (!(step_decay > 0.0)) throw std::invalid_argument("DesignParams: step_decay must be positive");
    }
};

// Relaxed focusing problem for one RIS: Lambda_q(p) omega = scale * H_q (alpha_q(p) o omega).
// `channel` views the scene's RIS->BS matrices, which must outlive the problem.
struct FocusProblem {
    std::span<const CMatrix> channel;              // H_q, q = 0..Q-1
    std::vector<std::vector<CVector>> inside;      // [p][q] steering vectors of in-points
    std::vector<std::vector<CVector>> outside;     // [p][q] steering vectors of out-points
    double scale = 1.0;
};

// sum_q || Lambda_q(p) omega ||^2 for one sampled point.
inline double focus_energy(const FocusProblem& prob, const std::vector<CVector>& steer, const CVector& omega) {
    double e = 0.0;
    for (std::size_t q = 0; q < prob.channel.size(); ++q)
        e += (prob.channel[q] * steer[q].cwiseProduct(omega)).squaredNorm();
    return prob.scale * prob.scale * e;
}

inline double penalty_passive(const CVector& omega, double beta_ps) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < omega.size(); ++i) {
        const double d = std::abs(omega[i]) - 1.0;
        s += d * d;
    }
    return beta_ps * s;
}

// Sigmoid side-lobe penalty beta / (1 + exp(-alpha (chi - eps))).
inline double penalty_sidelobe(double chi, const DesignParams& p) {
    return p.beta_sl / (1.0 + std::exp(-p.alpha_sl * (chi - p.eps_sl)));
}

// Exact derivative of penalty_sidelobe (note the squared denominator).
inline double penalty_sidelobe_derivative(double chi, const DesignParams& p) {
    const double e = std::exp(-p.alpha_sl * (chi - p.eps_sl));
    if (std::isinf(e)) return 0.0;
    const double d = 1.0 + e;
    return p.alpha_sl * p.beta_sl * e / (d * d);
}

inline double objective(const FocusProblem& prob, const CVector& omega, const DesignParams& params) {
    if (prob.inside.empty()) throw std::invalid_argument("objective: at least one in-point required");
    double j = 0.0;
    for (const auto& s : prob.inside) j += focus_energy(prob, s, omega);
    j -= penalty_passive(omega, params.beta_ps);
    for (const auto& s : prob.outside) j -= penalty_sidelobe(focus_energy(prob, s, omega), params);
    return j;
}

// Ascent direction dJ/dRe(omega) + j dJ/dIm(omega). The quadratic terms use
// A_i = sum_b conj([Lambda]_{b,i}) [Lambda omega]_b, i.e. Lambda^H Lambda omega.
inline CVector gradient(const FocusProblem& prob, const CVector& omega, const DesignParams& params) {
    if (prob.inside.empty()) throw std::invalid_argument("gradient: at least one in-point required");
    for (Eigen::Index i = 0; i < omega.size(); ++i)
        if (std::abs(omega[i]) < 1e-9) throw singularity_error("gradient: |omega_i| vanishes");

    const double s2 = prob.scale * prob.scale;
    // sum_q Lambda_q^H Lambda_q omega for one point.
    auto gram_apply = [&](const std::vector<CVector>& steer) {
        CVector acc = CVector::Zero(omega.size());
        for (std::size_t q = 0; q < prob.channel.size(); ++q) {
            const CVector field = prob.channel[q] * steer[q].cwiseProduct(omega);
            acc += steer[q].conjugate().cwiseProduct(prob.channel[q].adjoint() * field);
        }
        return CVector(s2 * acc);
    };

    CVector g = CVector::Zero(omega.size());
    for (const auto& s : prob.inside) g += 2.0 * gram_apply(s);
    for (Eigen::Index i = 0; i < omega.size(); ++i) {
        const double mag = std::abs(omega[i]);
        g[i] -= 2.0 * params.beta_ps * (mag - 1.0) * omega[i] / mag;
    }
    for (const auto& s : prob.outside) {
        const double fp = penalty_sidelobe_derivative(focus_energy(prob, s, omega), params);
        if (fp != 0.0) g -= 2.0 * fp * gram_apply(s);
    }
    return g;
}

inline FocusProblem make_focus_problem(const Scene& scene, std::size_t k, std::span<const Vec3> in_points,
                                       std::span<const Vec3> out_points, bool normalize) {
    if (in_points.empty()) throw std::invalid_argument("make_focus_problem: at least one in-point required");
    FocusProblem prob;
    prob.channel = std::span<const CMatrix>(scene.links()[k]);
    auto steer = [&](const Vec3& p) {
        std::vector<CVector> v;
        for (int q = 0; q < scene.grid().size(); ++q) v.push_back(scene.ris_steering(k, q, p));
        return v;
    };
    for (const auto& p : in_points) prob.inside.push_back(steer(p));
    for (const auto& p : out_points) prob.outside.push_back(steer(p));

    if (normalize) {
        double bound = 0.0;
        for (const auto& s : prob.inside)
            for (std::size_t q = 0; q < prob.channel.size(); ++q)
                bound += (prob.channel[q].cwiseAbs() * s[q].cwiseAbs()).squaredNorm();
        if (bound > 0.0) prob.scale = 1.0 / std::sqrt(bound);
    }
    return prob;
}

struct RisConfiguration {
    CVector weights;
    int ris = 0;
    int cell = 0;
    int iterations = 0;
    bool converged = false;
    double focal_energy = 0.0;   // sum_q ||Lambda_q(c_n) omega||^2, unscaled
    double worst_sidelobe = 0.0; // max over the other cell centers, unscaled
    std::vector<double> trace;   // objective after every accepted step
};

// Largest eigenvalue of sum_p sum_q Lambda^H Lambda over the given points (power iteration).
inline double gram_spectral_radius(const FocusProblem& prob, const std::vector<std::vector<CVector>>& points,
                                   Eigen::Index n, int iters = 40) {
    if (points.empty()) return 0.0;
    CVector v = CVector::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    const double s2 = prob.scale * prob.scale;
    for (int it = 0; it < iters; ++it) {
        CVector w = CVector::Zero(n);
        for (const auto& s : points)
            for (std::size_t q = 0; q < prob.channel.size(); ++q)
                w += s[q].conjugate().cwiseProduct(prob.channel[q].adjoint() * (prob.channel[q] * s[q].cwiseProduct(v)));
        w *= s2;
        lambda = w.norm();
        if (lambda == 0.0) return 0.0;
        v = w / lambda;
    }
    return lambda;
}

// Penalized gradient ascent from a random unit-modulus start, followed by a
// hard projection onto |omega_i| = 1.
inline RisConfiguration optimize_focus(const FocusProblem& prob, Eigen::Index n_elements, const DesignParams& params,
                                       Rng& rng) {
    params.validate();
    CVector omega(n_elements);
    for (Eigen::Index i = 0; i < n_elements; ++i) omega[i] = std::polar(1.0, rng.phase());

    double step0 = params.step0;
    if (step0 <= 0.0) {
        const double lip = 2.0 * gram_spectral_radius(prob, prob.inside, n_elements);
        step0 = lip > 0.0 ? 1.0 / lip : 1.0;
    }

    RisConfiguration out;
    double j = objective(prob, omega, params);
    out.trace.push_back(j);
    for (int l = 1; l <= params.max_iters; ++l) {
        const CVector g = gradient(prob, omega, params);
        double mu = step0 / (1.0 + l / params.step_decay);
        bool accepted = false;
        CVector cand;
        double jc = 0.0;
        for (int bt = 0; bt <= params.max_backtracks; ++bt, mu *= 0.5) {
            cand = omega + mu * g;
            if ((cand.cwiseAbs().array() < 1e-9).any()) continue;
            jc = objective(prob, cand, params);
            if (jc >= j) {
                accepted = true;
                break;
            }
        }
        out.iterations = l;
        if (!accepted) {
            // No ascent direction left at machine precision.
            out.converged = true;
            break;
        }
        const double delta = (cand - omega).cwiseAbs().maxCoeff();
        omega = std::move(cand);
        j = jc;
        out.trace.push_back(j);
        if (delta < params.tolerance) {
            out.converged = true;
            break;
        }
    }
    for (Eigen::Index i = 0; i < n_elements; ++i) omega[i] /= std::abs(omega[i]);
    out.weights = std::move(omega);
    return out;
}

// Physical (unscaled) energy sum_q ||Lambda_{k,q}(p) omega||^2 at every cell center.
inline std::vector<double> cell_energies(const Scene& scene, std::size_t k, const SubRegionPartition& part,
                                         const CVector& omega) {
    std::vector<double> e;
    e.reserve(part.size());
    for (const auto& c : part.centers) {
        double acc = 0.0;
        for (int q = 0; q < scene.grid().size(); ++q)
            acc += (scene.bs_ris(k, q) * scene.ris_steering(k, q, c).cwiseProduct(omega)).squaredNorm();
        e.push_back(acc);
    }
    return e;
}

// Configuration focusing RIS k on cell n of its partition: in-point is the
// cell center, out-points are all other cell centers.
inline RisConfiguration design_configuration(const Scene& scene, std::size_t k, std::size_t n,
                                             const SubRegionPartition& part, const DesignParams& params, Rng& rng) {
    if (n >= part.size()) throw std::invalid_argument("design_configuration: cell index out of range");
    std::vector<Vec3> in{part.centers[n]}, out;
    for (std::size_t m = 0; m < part.size(); ++m)
        if (m != n) out.push_back(part.centers[m]);
    const FocusProblem prob = make_focus_problem(scene, k, in, out, params.normalize_gain);

    RisConfiguration cfg = optimize_focus(prob, static_cast<Eigen::Index>(scene.ris(k).size()), params, rng);
    cfg.ris = static_cast<int>(k);
    cfg.cell = static_cast<int>(n);
    const auto energies = cell_energies(scene, k, part, cfg.weights);
    cfg.focal_energy = energies[n];
    for (std::size_t m = 0; m < energies.size(); ++m)
        if (m != n) cfg.worst_sidelobe = std::max(cfg.worst_sidelobe, energies[m]);
    return cfg;
}

// Scanning codebook: N designed configurations per RIS plus N negated partners.
// Frame f < N uses configs[k][f]; frame N + n uses partners[k][n] (partner of frame n).
struct RisCodebook {
    std::uint64_t scenario_hash = 0;
    DesignParams params;
    std::vector<std::vector<RisConfiguration>> configs; // [k][n]
    std::vector<std::vector<CVector>> partners;         // [k][n]

    std::size_t ris_count() const { return configs.size(); }
    std::size_t cells() const { return configs.empty() ? 0 : configs.front().size(); }
    std::size_t frames() const { return 2 * cells(); }
    std::size_t partner_frame(std::size_t n) const { return n + cells(); }

    const CVector& frame_config(std::size_t k, std::size_t frame) const {
        const std::size_t n = cells();
        return frame < n ? configs.at(k).at(frame).weights : partners.at(k).at(frame - n);
    }

    std::vector<CVector> frame_configs(std::size_t frame) const {
        std::vector<CVector> out;
        for (std::size_t k = 0; k < ris_count(); ++k) out.push_back(frame_config(k, frame));
        return out;
    }

    // N_RIS(k) x 2N matrix with one frame configuration per column.
    CMatrix frame_matrix(std::size_t k) const {
        const auto& first = configs.at(k).front().weights;
        CMatrix m(first.size(), static_cast<Eigen::Index>(frames()));
        for (std::size_t f = 0; f < frames(); ++f) m.col(static_cast<Eigen::Index>(f)) = frame_config(k, f);
        return m;
    }
};

inline std::vector<CVector> negated_partners(const std::vector<RisConfiguration>& configs) {
    std::vector<CVector> out;
    out.reserve(configs.size());
    for (const auto& c : configs) out.push_back(-c.weights);
    return out;
}

// Designs all K x N configurations (independent tasks, per-task RNG streams).
inline RisCodebook build_codebook(const Scene& scene, const std::vector<SubRegionPartition>& partitions,
                                  const DesignParams& params, std::uint64_t seed, std::uint64_t scenario_hash = 0) {
    if (partitions.size() != scene.ris_count())
        throw std::invalid_argument("build_codebook: one partition per RIS required");
    if (partitions.empty()) throw std::invalid_argument("build_codebook: no RIS in scene");
    const std::size_t cells = partitions.front().size();
    for (const auto& p : partitions)
        if (p.size() != cells) throw std::invalid_argument("build_codebook: every RIS must scan the same number of cells");

    RisCodebook book;
    book.scenario_hash = scenario_hash;
    book.params = params;
    book.configs.assign(partitions.size(), std::vector<RisConfiguration>(cells));

    const long tasks = static_cast<long>(partitions.size() * cells);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(tasks));
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < tasks; ++t) {
        const auto k = static_cast<std::size_t>(t) / cells;
        const auto n = static_cast<std::size_t>(t) % cells;
        try {
            Rng rng(seed, stream::design, static_cast<std::uint64_t>(t));
            book.configs[k][n] = design_configuration(scene, k, n, partitions[k], params, rng);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(t)] = std::make_exception_ptr(std::runtime_error(
                "design of RIS " + std::to_string(k) + ", cell " + std::to_string(n) + " failed: " + e.what()));
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (const auto& c : book.configs) book.partners.push_back(negated_partners(c));
    return book;
}

} // namespace nfris
