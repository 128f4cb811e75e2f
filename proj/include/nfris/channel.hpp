#pragma once

#include "nfris/core.hpp"
#include "nfris/geometry.hpp"
#include "nfris/rng.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace nfris {

// OFDM subcarriers placed symmetrically around the carrier:
//   f_q = f_o + (q - (Q-1)/2) W_sub,  lambda_q = c_o / f_q.
class CarrierGrid {
public:
    CarrierGrid(double carrier_hz, int subcarriers, double spacing_hz)
        : carrier_(carrier_hz), count_(subcarriers), spacing_(spacing_hz) {
        if (!(carrier_hz > 0.0)) throw std::invalid_argument("CarrierGrid: carrier must be positive");
        if (subcarriers < 1) throw std::invalid_argument("CarrierGrid: need at least one subcarrier");
        if (!(spacing_hz >= 0.0)) throw std::invalid_argument("CarrierGrid: negative subcarrier spacing");
        if (frequency(0) <= 0.0) throw std::invalid_argument("CarrierGrid: subcarrier below 0 Hz");
    }

    double carrier() const { return carrier_; }
    int size() const { return count_; }
    double spacing() const { return spacing_; }
    double frequency(int q) const { return carrier_ + (q - 0.5 * (count_ - 1)) * spacing_; }
    double wavelength(int q) const { return speed_of_light / frequency(q); }
    double carrier_wavelength() const { return speed_of_light / carrier_; }

private:
    double carrier_;
    int count_;
    double spacing_;
};

// B = L*Q mutually orthogonal unit-energy pilots. Pilot b lives on subcarrier
// b / L and uses row (b % L) of an orthogonal L x L time-slot design: a
// normalized Sylvester-Hadamard matrix when L is a power of two, the identity
// (one occupied slot) otherwise. Pilots [0, B_R) form the random-access pool,
// [B_R, B) are reserved for assignment.
class PilotBook {
public:
    PilotBook(int timeslots, int subcarriers, int random_pool, int assigned_pool)
        : slots_(timeslots), subcarriers_(subcarriers), random_(random_pool), assigned_(assigned_pool) {
        if (timeslots < 1 || subcarriers < 1) throw std::invalid_argument("PilotBook: L and Q must be positive");
        if (random_pool < 0 || assigned_pool < 0) throw std::invalid_argument("PilotBook: negative pool size");
        if (random_pool + assigned_pool != size())
            throw std::invalid_argument("PilotBook: B_R + B_A must equal B = L*Q");

        const Eigen::MatrixXd design = slot_design(timeslots);
        symbols_.resize(static_cast<std::size_t>(size()));
        for (int b = 0; b < size(); ++b) {
            auto& per_q = symbols_[static_cast<std::size_t>(b)];
            per_q.assign(static_cast<std::size_t>(subcarriers), RVector::Zero(timeslots));
            per_q[static_cast<std::size_t>(subcarrier_of(b))] = design.row(b % timeslots).transpose();
        }
    }

    int timeslots() const { return slots_; }
    int subcarriers() const { return subcarriers_; }
    int size() const { return slots_ * subcarriers_; }
    int random_pool() const { return random_; }
    int assigned_pool() const { return assigned_; }
    int subcarrier_of(int b) const { return b / slots_; }
    bool is_random(int b) const { return b < random_; }

    // x_q^(b), length L.
    const RVector& symbols(int b, int q) const {
        return symbols_.at(static_cast<std::size_t>(b)).at(static_cast<std::size_t>(q));
    }

private:
    static Eigen::MatrixXd slot_design(int n) {
        if ((n & (n - 1)) != 0) return Eigen::MatrixXd::Identity(n, n);
        Eigen::MatrixXd h = Eigen::MatrixXd::Ones(1, 1);
        while (h.rows() < n) {
            const auto m = h.rows();
            Eigen::MatrixXd next(2 * m, 2 * m);
            next << h, h, h, -h;
            h = next;
        }
        return h / std::sqrt(static_cast<double>(n));
    }

    int slots_, subcarriers_, random_, assigned_;
    std::vector<std::vector<RVector>> symbols_;
};

struct UeState {
    Vec3 position = Vec3::Zero();
    double k_rice = 0.0;      // may be +inf for a pure LOS link
    bool los = true;          // psi
    double sync_phase = 0.0;  // phi_o in [0, 2pi)
    std::optional<int> pilot; // unassigned until the UE picks / is given a pilot
    bool active = true;
    bool detected = false;
};

using BsRisLinks = std::vector<std::vector<CMatrix>>; // [k][q], N_BS x N_RIS(k)

// H between two arrays: entry (j, i) couples element i of `from` to element j of `to`,
//   G(theta_i) G(theta_j) lambda / (4 pi d_ij) exp(-j 2 pi d_ij / lambda).
inline std::vector<CMatrix> bs_ris_channel(const PlanarArray& from, const PlanarArray& to, const CarrierGrid& grid) {
    const auto rows = static_cast<Eigen::Index>(to.size());
    const auto cols = static_cast<Eigen::Index>(from.size());
    Eigen::MatrixXd dist(rows, cols), gain(rows, cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        const Vec3& a = from.element(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < rows; ++j) {
            const Vec3& b = to.element(static_cast<std::size_t>(j));
            const double d = (a - b).norm();
            if (d == 0.0) throw singularity_error("bs_ris_channel: arrays share an element position");
            dist(j, i) = d;
            gain(j, i) = element_gain_towards(from, a, b) * element_gain_towards(to, b, a);
        }
    }
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(grid.size()));
    for (int q = 0; q < grid.size(); ++q) {
        const double lambda = grid.wavelength(q);
        CMatrix h(rows, cols);
        for (Eigen::Index i = 0; i < cols; ++i)
            for (Eigen::Index j = 0; j < rows; ++j)
                h(j, i) = gain(j, i) * lambda / (4.0 * pi * dist(j, i)) *
                          std::polar(1.0, -2.0 * pi * dist(j, i) / lambda);
        out.push_back(std::move(h));
    }
    return out;
}

// Static deployment: carrier grid, BS, RISs and the cached RIS->BS channels.
class Scene {
public:
    Scene(CarrierGrid grid, PlanarArray bs, std::vector<PlanarArray> ris)
        : grid_(grid), bs_(std::move(bs)), ris_(std::move(ris)) {
        auto links = std::make_shared<BsRisLinks>();
        links->reserve(ris_.size());
        for (const auto& r : ris_) links->push_back(bs_ris_channel(r, bs_, grid_));
        links_ = std::move(links);
    }

    const CarrierGrid& grid() const { return grid_; }
    const PlanarArray& bs() const { return bs_; }
    const std::vector<PlanarArray>& ris() const { return ris_; }
    const PlanarArray& ris(std::size_t k) const { return ris_.at(k); }
    std::size_t ris_count() const { return ris_.size(); }
    const CMatrix& bs_ris(std::size_t k, int q) const { return (*links_)[k][static_cast<std::size_t>(q)]; }
    const BsRisLinks& links() const { return *links_; }

    // RIS-side steering vector alpha_{k,q}(p).
    CVector ris_steering(std::size_t k, int q, const Vec3& p) const {
        return nf_steering(ris_.at(k), p, grid_.wavelength(q));
    }

    // Lambda_{k,q}(p) = H_{k,q} diag(alpha_{k,q}(p)).
    CMatrix cascade_matrix(std::size_t k, int q, const Vec3& p) const {
        return cascade_matrix(bs_ris(k, q), ris_steering(k, q, p));
    }

    static CMatrix cascade_matrix(const CMatrix& h, const CVector& alpha) {
        return h * alpha.asDiagonal();
    }

private:
    CarrierGrid grid_;
    PlanarArray bs_;
    std::vector<PlanarArray> ris_;
    std::shared_ptr<const BsRisLinks> links_;
};

struct StaticChannel {
    std::vector<CVector> h;         // [q], N_BS
    std::vector<CVector> multipath; // [q], the CN(0, I) draw behind h
};

// Rician static link for given multipath draws:
//   h_q = beta_q / sqrt(K+1) [psi sqrt(K) alpha_q(p) + m_q],  beta_q = lambda_q / (4 pi d_b) e^{j phi_o}.
// K = +inf yields the pure LOS channel psi * beta_q * alpha_q(p).
inline StaticChannel static_channel(const UeState& ue, const CarrierGrid& grid, const PlanarArray& bs,
                                    std::vector<CVector> multipath) {
    if (static_cast<int>(multipath.size()) != grid.size())
        throw std::invalid_argument("static_channel: one multipath vector per subcarrier required");
    const double d_b = (ue.position - bs.center()).norm();
    if (d_b == 0.0) throw singularity_error("static_channel: UE at the BS center");
    StaticChannel out;
    out.h.reserve(multipath.size());
    for (int q = 0; q < grid.size(); ++q) {
        const double lambda = grid.wavelength(q);
        const cplx beta = lambda / (4.0 * pi * d_b) * std::polar(1.0, ue.sync_phase);
        const CVector alpha = nf_steering(bs, ue.position, lambda);
        if (std::isinf(ue.k_rice)) {
            out.h.push_back(ue.los ? CVector(beta * alpha) : CVector(CVector::Zero(alpha.size())));
        } else {
            const double los = ue.los ? std::sqrt(ue.k_rice) : 0.0;
            const auto& m = multipath[static_cast<std::size_t>(q)];
            out.h.push_back(beta / std::sqrt(ue.k_rice + 1.0) * (los * alpha + m));
        }
    }
    out.multipath = std::move(multipath);
    return out;
}

inline StaticChannel static_channel(const UeState& ue, const CarrierGrid& grid, const PlanarArray& bs, Rng& rng) {
    std::vector<CVector> m(static_cast<std::size_t>(grid.size()));
    for (auto& v : m) {
        v.resize(static_cast<Eigen::Index>(bs.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.complex_normal(1.0);
    }
    return static_channel(ue, grid, bs, std::move(m));
}

// UE -> RIS link: [r]_i = G(theta_i) lambda / (4 pi d_i) exp(-j 2 pi d_i / lambda + j phi_o).
inline std::vector<CVector> ris_ue_channel(const UeState& ue, const PlanarArray& ris, const CarrierGrid& grid) {
    std::vector<CVector> out;
    out.reserve(static_cast<std::size_t>(grid.size()));
    for (int q = 0; q < grid.size(); ++q) {
        const double lambda = grid.wavelength(q);
        CVector r(static_cast<Eigen::Index>(ris.size()));
        for (std::size_t i = 0; i < ris.size(); ++i) {
            const Vec3& e = ris.element(i);
            const double d = (ue.position - e).norm();
            if (d <= 1e-12) throw singularity_error("ris_ue_channel: UE coincides with a RIS element");
            const double g = element_gain_towards(ris, e, ue.position);
            r[static_cast<Eigen::Index>(i)] =
                g * lambda / (4.0 * pi * d) * std::polar(1.0, -2.0 * pi * d / lambda + ue.sync_phase);
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Per-UE channels for one detection phase.
struct UeLinks {
    StaticChannel direct;                 // h-dot and the multipath draw
    std::vector<std::vector<CVector>> ris; // [k][q], r_{k,q}
};

struct ChannelSet {
    std::shared_ptr<const Scene> scene;
    std::vector<UeLinks> ues;
};

inline UeLinks draw_ue_links(const Scene& scene, const UeState& ue, Rng& rng) {
    UeLinks links;
    links.direct = static_channel(ue, scene.grid(), scene.bs(), rng);
    links.ris.reserve(scene.ris_count());
    for (const auto& r : scene.ris()) links.ris.push_back(ris_ue_channel(ue, r, scene.grid()));
    return links;
}

// h-bar_q = sum_k H_{k,q} diag(omega^(k)) r_{k,q}; `configs` holds one omega per RIS.
inline std::vector<CVector> nonstatic_channel(const Scene& scene, const UeLinks& ue, std::span<const CVector> configs) {
    if (configs.size() != scene.ris_count())
        throw std::invalid_argument("nonstatic_channel: one configuration per RIS required");
    std::vector<CVector> out;
    out.reserve(static_cast<std::size_t>(scene.grid().size()));
    for (int q = 0; q < scene.grid().size(); ++q) {
        CVector acc = CVector::Zero(static_cast<Eigen::Index>(scene.bs().size()));
        for (std::size_t k = 0; k < scene.ris_count(); ++k)
            acc += scene.bs_ris(k, q) * configs[k].cwiseProduct(ue.ris[k][static_cast<std::size_t>(q)]);
        out.push_back(std::move(acc));
    }
    return out;
}

// Same as nonstatic_channel for a batch of frames. `frame_configs[k]` holds
// one configuration per column; the result has one column per frame.
inline std::vector<CMatrix> nonstatic_channel_frames(const Scene& scene, const UeLinks& ue,
                                                     std::span<const CMatrix> frame_configs) {
    if (frame_configs.size() != scene.ris_count())
        throw std::invalid_argument("nonstatic_channel_frames: one configuration matrix per RIS required");
    const Eigen::Index frames = frame_configs.empty() ? 0 : frame_configs.front().cols();
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(scene.grid().size()));
    for (int q = 0; q < scene.grid().size(); ++q) {
        CMatrix acc = CMatrix::Zero(static_cast<Eigen::Index>(scene.bs().size()), frames);
        for (std::size_t k = 0; k < scene.ris_count(); ++k) {
            const CVector& r = ue.ris[k][static_cast<std::size_t>(q)];
            acc.noalias() += scene.bs_ris(k, q) * (r.asDiagonal() * frame_configs[k]);
        }
        out.push_back(std::move(acc));
    }
    return out;
}

struct RxFrame {
    int index = 0;
    std::vector<CVector> y;  // [q], N_BS * L; block l (entries l*N_BS .. l*N_BS+N_BS-1) = h * x^(l)
    double noise_power = 0.0;
    double p_sym = 0.0;
    std::vector<int> pilots; // pilot of every transmitting UE, in UE order
};

// One UE's contribution to one frame: total channel per subcarrier and its pilot.
struct Transmission {
    const std::vector<CVector>* h = nullptr;
    int pilot = 0;
};

// y_q = sqrt(P) sum_m h_q^(m) (x) x_q^(m) + z_q. Noise is always drawn (also
// for zero variance) so noise realizations stay aligned across settings.
inline RxFrame assemble_frame(int index, std::span<const Transmission> tx, const PilotBook& pilots, int n_bs,
                              double p_sym, double noise_var, Rng& rng) {
    if (!(noise_var >= 0.0)) throw std::invalid_argument("assemble_frame: negative noise power");
    const int slots = pilots.timeslots();
    const double amp = std::sqrt(p_sym);
    RxFrame frame;
    frame.index = index;
    frame.noise_power = noise_var;
    frame.p_sym = p_sym;
    frame.y.assign(static_cast<std::size_t>(pilots.subcarriers()), CVector::Zero(static_cast<Eigen::Index>(n_bs) * slots));
    for (const auto& t : tx) {
        frame.pilots.push_back(t.pilot);
        for (int q = 0; q < pilots.subcarriers(); ++q) {
            const RVector& x = pilots.symbols(t.pilot, q);
            const CVector& h = (*t.h)[static_cast<std::size_t>(q)];
            auto& y = frame.y[static_cast<std::size_t>(q)];
            for (int l = 0; l < slots; ++l)
                if (x[l] != 0.0) y.segment(static_cast<Eigen::Index>(l) * n_bs, n_bs) += (amp * x[l]) * h;
        }
    }
    for (auto& y : frame.y)
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.complex_normal(noise_var);
    return frame;
}

// Frame n with RIS configurations `configs` (one per RIS). ues[m] pairs with channels.ues[m].
inline RxFrame synthesize_frame(int n, std::span<const UeState> ues, const PilotBook& pilots,
                                const ChannelSet& channels, std::span<const CVector> configs, double p_sym,
                                double noise_var, Rng& rng) {
    if (ues.size() != channels.ues.size()) throw std::invalid_argument("synthesize_frame: UE/channel count mismatch");
    const Scene& scene = *channels.scene;
    std::vector<std::vector<CVector>> totals;
    std::vector<Transmission> tx;
    totals.reserve(ues.size());
    for (std::size_t m = 0; m < ues.size(); ++m) {
        if (!ues[m].active) continue;
        if (!ues[m].pilot) throw protocol_error("synthesize_frame: active UE without a pilot");
        if (*ues[m].pilot < 0 || *ues[m].pilot >= pilots.size()) throw protocol_error("synthesize_frame: pilot out of range");
        auto h = nonstatic_channel(scene, channels.ues[m], configs);
        for (std::size_t q = 0; q < h.size(); ++q) h[q] += channels.ues[m].direct.h[q];
        totals.push_back(std::move(h));
    }
    std::size_t t = 0;
    for (std::size_t m = 0; m < ues.size(); ++m) {
        if (!ues[m].active) continue;
        tx.push_back({&totals[t++], *ues[m].pilot});
    }
    return assemble_frame(n, tx, pilots, static_cast<int>(scene.bs().size()), p_sym, noise_var, rng);
}

// sigma_z^2 [dBW] = N_D[dBm/Hz] - 30 + 10 log10(BW) + NF, returned in watts.
inline double noise_power(double density_dbm_per_hz, double noise_figure_db, double bandwidth_hz) {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("noise_power: bandwidth must be positive");
    return db_to_linear(density_dbm_per_hz - 30.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

} // namespace nfris
