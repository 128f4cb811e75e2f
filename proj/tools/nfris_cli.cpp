#include "nfris/nfris.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace nfris;

namespace {

constexpr int exit_config = 2;
constexpr int exit_integrity = 3;

struct Options {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::string out = ".";
    std::string strategy = "A";
    std::optional<int> phases;
    std::string codebook;
    std::string thresholds;
    std::string axis = "power";
    std::vector<double> points;
};

Scenario load(const Options& o) {
    if (o.scenario.empty()) throw std::invalid_argument("--scenario is required");
    if (!fs::exists(o.scenario)) throw std::invalid_argument("scenario file " + o.scenario + " not found");
    Scenario s = load_scenario(o.scenario);
    if (o.seed) s.seed = *o.seed;
    return s;
}

fs::path out_path(const Options& o, const std::string& name) {
    fs::create_directories(o.out);
    return fs::path(o.out) / name;
}

std::ofstream open_out(const Options& o, const std::string& name) {
    const fs::path p = out_path(o, name);
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

Strategy parse_strategy(const std::string& s) {
    if (s == "A" || s == "a") return Strategy::adaptive;
    if (s == "B" || s == "b") return Strategy::persistent;
    throw std::invalid_argument("--strategy must be A or B");
}

// Codebook from --codebook, else <out>/codebook.nfcb, else designed on the spot.
std::shared_ptr<const RisCodebook> obtain_codebook(const Options& o, const Scenario& s) {
    std::string path = o.codebook;
    if (path.empty() && fs::exists(fs::path(o.out) / "codebook.nfcb")) path = (fs::path(o.out) / "codebook.nfcb").string();
    if (!path.empty()) {
        std::cerr << "codebook: " << path << '\n';
        return std::make_shared<const RisCodebook>(load_codebook(path));
    }
    std::cerr << "codebook: designing " << s.ris.size() << " x " << s.cells() << " configurations\n";
    return std::make_shared<const RisCodebook>(design_codebook(s, s.seed));
}

Thresholds obtain_thresholds(const Options& o, const DetectionContext& ctx) {
    std::string path = o.thresholds;
    if (path.empty() && fs::exists(fs::path(o.out) / "thresholds.csv")) path = (fs::path(o.out) / "thresholds.csv").string();
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open " + path);
        std::cerr << "thresholds: " << path << '\n';
        return read_thresholds(is, ctx.scenario.hash(), static_cast<std::size_t>(ctx.pilots.size()),
                               ctx.book->ris_count(), ctx.noise_var);
    }
    const auto trials = static_cast<std::size_t>(ctx.scenario.calibration_trials);
    std::cerr << "thresholds: calibrating on " << trials << " noise-only phases\n";
    return calibrate_threshold(ctx, ctx.scenario.target_pfa, trials, ctx.scenario.seed, ctx.scenario.threshold_mode);
}

int cmd_design(const Options& o) {
    const Scenario s = load(o);
    const RisCodebook book = design_codebook(s, s.seed);
    save_codebook(out_path(o, "codebook.nfcb").string(), book);
    auto csv = open_out(o, "design.csv");
    csv << "ris,cell,iterations,converged,focal_energy,worst_sidelobe,margin_db\n" << std::setprecision(10);
    int selective = 0, total = 0;
    for (std::size_t k = 0; k < book.ris_count(); ++k)
        for (std::size_t n = 0; n < book.cells(); ++n) {
            const auto& c = book.configs[k][n];
            const double margin = linear_to_db(c.focal_energy / c.worst_sidelobe);
            csv << k << ',' << n << ',' << c.iterations << ',' << (c.converged ? 1 : 0) << ',' << c.focal_energy << ','
                << c.worst_sidelobe << ',' << margin << '\n';
            ++total;
            if (c.focal_energy > c.worst_sidelobe) ++selective;
        }
    std::cout << "designed " << total << " configurations (" << selective
              << " focus strictly on their target cell), hash " << book.scenario_hash << '\n';
    return 0;
}

int cmd_calibrate(const Options& o) {
    const Scenario s = load(o);
    const auto ctx = DetectionContext::create(s, obtain_codebook(o, s));
    const std::size_t trials = o.trials.value_or(static_cast<std::size_t>(s.calibration_trials));
    const Thresholds th = calibrate_threshold(ctx, s.target_pfa, trials, s.seed, s.threshold_mode);
    auto os = open_out(o, "thresholds.csv");
    write_thresholds(os, th, s.hash());
    for (std::size_t b = 0; b < th.gamma.size(); ++b)
        for (std::size_t k = 0; k < th.gamma[b].size(); ++k)
            std::cout << "rb " << b << " ris " << k << " gamma " << th.gamma[b][k] << '\n';
    return 0;
}

std::vector<UeState> trial_ues(const Scenario& s, Rng& rng, int pool) {
    auto ues = place_ues(s, rng);
    for (auto& u : ues)
        if (!u.pilot) u.pilot = static_cast<int>(rng.index(static_cast<std::size_t>(pool)));
    return ues;
}

int cmd_detect(const Options& o) {
    const Scenario s = load(o);
    const auto ctx = DetectionContext::create(s, obtain_codebook(o, s));
    const Thresholds th = obtain_thresholds(o, ctx);
    Rng rng(s.seed, stream::trial, 0);
    auto ues = trial_ues(s, rng, ctx.pilots.random_pool());
    const auto links = draw_phase_links(ctx, ues, rng);
    const FilterBankOutput f = filter_phase(ctx, synthesize_phase(ctx, ues, links, s.p_sym(), ctx.noise_var, rng));
    const PhaseOutcome out = match_detections(ctx, energy_detect(f, th, ctx.partitions), ues);

    auto rep = open_out(o, "report.csv");
    rep << std::setprecision(10);
    write_report_header(rep);
    write_report_csv(rep, out.report, 1);
    auto map = open_out(o, "map.csv");
    map << std::setprecision(10);
    write_map_csv(map, build_spatial_map(f, ctx.partitions, false));

    for (std::size_t m = 0; m < ues.size(); ++m)
        std::cout << "ue " << m << " rb " << *ues[m].pilot << " at (" << ues[m].position.transpose() << ") "
                  << (out.ue_detected[m] ? "detected" : "missed") << '\n';
    for (std::size_t i = 0; i < out.report.detections.size(); ++i) {
        const auto& d = out.report.detections[i];
        std::cout << "detection rb " << d.rb << " ris " << d.ris << " cell " << d.cell << " score " << d.score
                  << " gamma " << d.gamma << (out.matched_ue[i] < 0 ? " (false alarm)" : "") << '\n';
    }
    std::cout << "complex multiplications " << f.multiplies << '\n';
    return 0;
}

int cmd_protocol(const Options& o) {
    const Strategy strat = parse_strategy(o.strategy);
    const Scenario s = load(o);
    const int J = o.phases.value_or(s.access.config.J);
    if (J < 1) throw std::invalid_argument("--phases must be at least 1");
    const auto ctx = DetectionContext::create(s, obtain_codebook(o, s));
    const Thresholds th = obtain_thresholds(o, ctx);
    Rng rng(s.seed, stream::trial, 0);
    const auto ues = place_ues(s, rng);
    const ProtocolResult res = run_adaptive_protocol(ctx, ues, J, strat, th, s.p_sym(), rng);

    auto csv = open_out(o, "protocol.csv");
    csv << "phase,detected_total,false_alarms,skipped\n";
    auto rep = open_out(o, "report.csv");
    rep << std::setprecision(10);
    write_report_header(rep);
    for (std::size_t j = 0; j < res.phases.size(); ++j) {
        csv << j + 1 << ',' << res.detected_count[j] << ',' << res.phases[j].false_alarms << ','
            << (res.skipped[j] ? 1 : 0) << '\n';
        if (!res.skipped[j]) write_report_csv(rep, res.phases[j].report, static_cast<int>(j + 1));
        std::cout << "phase " << j + 1 << ": " << res.detected_count[j] << " / " << ues.size() << " detected"
                  << (res.skipped[j] ? " (nothing left to detect)" : "") << '\n';
    }
    return 0;
}

DetectionKernel access_kernel(const Options& o, const Scenario& s) {
    if (s.access.kernel != KernelSource::physical) return s.access.synthetic_kernel();
    const auto ctx = DetectionContext::create(s, obtain_codebook(o, s));
    const Thresholds th = obtain_thresholds(o, ctx);
    const std::size_t trials = o.trials.value_or(200);
    std::cerr << "kernel: estimating p_det(m) on the physical layer\n";
    return estimate_kernel(ctx, th, s.access.config.M, trials, s.p_sym(), s.seed);
}

int cmd_access(const Options& o) {
    const Scenario s = load(o);
    const AccessSpec& a = s.access;
    const DetectionKernel kernel = access_kernel(o, s);
    const int J = o.phases.value_or(a.config.J);
    const std::size_t trials = o.trials.value_or(10000);
    const ExperimentResult res = phase_sweep(a, kernel, J, a.kernel == KernelSource::physical ? 0 : trials, s.seed);
    auto csv = open_out(o, "access.csv");
    csv << res.csv;
    const auto& c = a.config;
    std::cout << std::setprecision(6);
    std::cout << "M " << c.M << ", B_R " << c.B_R << ", B_A " << c.B_A << '\n';
    std::cout << "collision probability (random pool) " << collision_prob(c.M, c.B_R) << '\n';
    std::cout << "per-UE detection probability " << detection_prob(c.M, c.B_R, kernel, a.convention) << '\n';
    std::cout << "wrote " << out_path(o, "access.csv").string() << '\n';
    return 0;
}

std::vector<int> int_points(const std::vector<double>& p) {
    std::vector<int> out;
    for (double v : p) {
        if (std::floor(v) != v || v < 0) throw std::invalid_argument("--points must be non-negative integers on this axis");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

int cmd_sweep(const Options& o) {
    const Scenario s = load(o);
    const SweepAxis axis = parse_axis(o.axis);
    const std::size_t trials = o.trials.value_or(1000);
    ExperimentResult res;
    if (axis == SweepAxis::power) {
        const auto ctx = DetectionContext::create(s, obtain_codebook(o, s));
        const Thresholds th = obtain_thresholds(o, ctx);
        const auto points = o.points.empty() ? s.power_sweep_dbw : o.points;
        if (points.empty()) throw std::invalid_argument("no power points (power.sweep_dbw or --points)");
        res = power_sweep(ctx, th, points, s.sweep_k_rice, trials, s.seed);
    } else if (axis == SweepAxis::J) {
        const auto pts = int_points(o.points);
        const int J = pts.empty() ? s.access.config.J : *std::max_element(pts.begin(), pts.end());
        res = phase_sweep(s.access, access_kernel(o, s), J, trials, s.seed);
    } else {
        std::vector<int> pts = int_points(o.points);
        if (pts.empty())
            for (int v = 1; v <= 2 * std::max(s.access.config.M, s.access.config.B_R); ++v) pts.push_back(v);
        res = collision_sweep(s.access.config, axis, pts, trials, s.seed);
    }
    auto csv = open_out(o, "sweep_" + o.axis + ".csv");
    csv << res.csv;
    std::cout << "sweep " << o.axis << ": " << res.seconds << " s";
    if (res.multiplies) std::cout << ", " << res.multiplies << " complex multiplications";
    std::cout << '\n';
    return 0;
}

int cmd_check() {
    const double lambda = speed_of_light / 6e9;
    const double half = lambda / 2.0;
    bool ok = true;
    auto row = [&](const std::string& what, double got, double want, double tol) {
        const bool pass = std::abs(got - want) <= tol;
        ok = ok && pass;
        std::cout << std::left << std::setw(44) << what << std::setw(14) << got << (pass ? "ok" : "MISMATCH") << '\n';
    };
    std::cout << std::setprecision(6);
    row("RIS elements, azimuth 6.28 deg", required_elements_for_angular_resolution(6.28, half, lambda), 15, 0);
    row("RIS elements, elevation 6.28 deg", required_elements_for_angular_resolution(6.28, half, lambda), 15, 0);
    row("BS elements, azimuth 2.72 deg", required_elements_for_angular_resolution(2.72, half, lambda), 34, 0);
    row("BS elements, azimuth 6.61 deg", required_elements_for_angular_resolution(6.61, half, lambda), 14, 0);
    row("bandwidth [Hz], range 0.3 m", required_bandwidth_for_range_resolution(0.3), 1e9, 1e-3);
    row("bandwidth [Hz], range 1 m", required_bandwidth_for_range_resolution(1.0), 3e8, 1e-3);
    const PlanarArray bs = build_upa({4.5, 0, 2}, {34, 6}, half, ArrayPlane::xz);
    const PlanarArray ris = build_upa({4.5, 4.5, 3}, {24, 24}, half, ArrayPlane::xy, -1);
    row("Fraunhofer distance [m], BS 34x6", fraunhofer_distance(bs, lambda), 29.78, 0.05);
    row("Fraunhofer distance [m], RIS 24x24", fraunhofer_distance(ris, lambda), 28.78, 0.05);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RIS-assisted near-field UE detection and localization"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, bool scenario_required) {
        auto* opt = sub->add_option("--scenario", o.scenario, "scenario file");
        if (scenario_required) opt->required();
        sub->add_option("--seed", o.seed, "master seed (overrides the scenario)");
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--codebook", o.codebook, "codebook file (default <out>/codebook.nfcb)");
        sub->add_option("--thresholds", o.thresholds, "threshold table (default <out>/thresholds.csv)");
    };

    auto* design = app.add_subcommand("design", "design the RIS scanning codebook");
    common(design, true);
    auto* calibrate = app.add_subcommand("calibrate", "calibrate detection thresholds on noise-only phases");
    common(calibrate, true);
    calibrate->add_option("--trials", o.trials, "noise-only phases");
    auto* detect = app.add_subcommand("detect", "run one detection phase");
    common(detect, true);
    auto* protocol = app.add_subcommand("protocol", "run the multi-phase adaptive protocol");
    common(protocol, true);
    protocol->add_option("--phases", o.phases, "detection phases J");
    protocol->add_option("--strategy", o.strategy, "A (adaptive) or B (persistent)")->capture_default_str();
    auto* access = app.add_subcommand("access", "closed-form access analytics with Monte Carlo check");
    common(access, true);
    access->add_option("--phases", o.phases, "detection phases J");
    access->add_option("--trials", o.trials, "Monte Carlo trials");
    auto* sweep = app.add_subcommand("sweep", "figure data along one axis");
    common(sweep, true);
    sweep->add_option("--axis", o.axis, "power, M, B_R or J")->capture_default_str();
    sweep->add_option("--points", o.points, "axis values")->delimiter(',');
    sweep->add_option("--trials", o.trials, "trials per point");
    auto* check = app.add_subcommand("check", "audit the resolution and Fraunhofer arithmetic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*design) return cmd_design(o);
        if (*calibrate) return cmd_calibrate(o);
        if (*detect) return cmd_detect(o);
        if (*protocol) return cmd_protocol(o);
        if (*access) return cmd_access(o);
        if (*sweep) return cmd_sweep(o);
        if (*check) return cmd_check();
    } catch (const parse_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const integrity_error& e) {
        std::cerr << "integrity error: " << e.what() << '\n';
        return exit_integrity;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
