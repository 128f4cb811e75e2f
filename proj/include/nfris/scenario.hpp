#pragma once

// Scenario files are flat `key = value` lines. `#` starts a comment. Values:
//
//   number   6e9, -174, inf
//   string   xz, "per_filter"        (bare words or double-quoted)
//   vector   [4.5, 0, 2], [[1, 2], [3, 4]]
//
// RIS entries are numbered ris.<k>.<field> with k = 0 .. ris.count - 1.
// Unknown or repeated keys are rejected with the offending line. The full key
// list is in the README.

#include "nfris/access.hpp"
#include "nfris/channel.hpp"
#include "nfris/core.hpp"
#include "nfris/detection.hpp"
#include "nfris/geometry.hpp"
#include "nfris/ris_design.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nfris {

struct ConfigValue {
    std::variant<double, std::string, std::vector<ConfigValue>> v;
};

struct ConfigEntry {
    ConfigValue value;
    int line = 0;
    bool used = false;
};

using ConfigMap = std::map<std::string, ConfigEntry>;

namespace detail {

class ValueParser {
public:
    ValueParser(std::string_view text, int line, std::string key) : s_(text), line_(line), key_(std::move(key)) {}

    ConfigValue parse() {
        ConfigValue v = value();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw parse_error(line_, key_, what); }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    ConfigValue value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '[') return list();
        if (c == '"') return quoted();
        return scalar();
    }

    ConfigValue list() {
        ++pos_;
        std::vector<ConfigValue> items;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return {std::move(items)};
        }
        while (true) {
            items.push_back(value());
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated list");
            if (s_[pos_] == ',') {
                ++pos_;
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return {std::move(items)};
            }
            fail("expected ',' or ']' in list");
        }
    }

    ConfigValue quoted() {
        const auto end = s_.find('"', pos_ + 1);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
        return {std::move(out)};
    }

    ConfigValue scalar() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
        const std::string_view tok = s_.substr(start, pos_ - start);
        if (tok.empty()) fail("empty value");
        if (tok == "inf" || tok == "+inf") return {std::numeric_limits<double>::infinity()};
        if (tok == "-inf") return {-std::numeric_limits<double>::infinity()};
        const char first = tok.front();
        if (std::isdigit(static_cast<unsigned char>(first)) || first == '-' || first == '+' || first == '.') {
            double d = 0.0;
            const char* b = tok.data() + (first == '+' ? 1 : 0);
            const auto [ptr, ec] = std::from_chars(b, tok.data() + tok.size(), d);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("malformed number '" + std::string(tok) + "'");
            return {d};
        }
        return {std::string(tok)};
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
    std::string key_;
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Strip a trailing comment, ignoring '#' inside quotes.
inline std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

} // namespace detail

inline ConfigMap parse_config(std::istream& in) {
    ConfigMap out;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string_view s = detail::trim(detail::strip_comment(raw));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw parse_error(line, "", "expected 'key = value'");
        const std::string key(detail::trim(s.substr(0, eq)));
        if (key.empty()) throw parse_error(line, "", "missing key");
        for (char c : key)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_'))
                throw parse_error(line, key, "invalid character in key");
        if (out.count(key)) throw parse_error(line, key, "duplicate key (first set on line " + std::to_string(out[key].line) + ")");
        ConfigValue v = detail::ValueParser(detail::trim(s.substr(eq + 1)), line, key).parse();
        out.emplace(key, ConfigEntry{std::move(v), line, false});
    }
    if (out.empty()) throw parse_error(line, "", "scenario file is empty");
    return out;
}

// Typed, consuming access to a parsed config. Every read marks the key as
// used; finish() rejects whatever is left over.
class ConfigReader {
public:
    explicit ConfigReader(ConfigMap map) : map_(std::move(map)) {}

    bool has(const std::string& key) const { return map_.count(key) != 0; }

    int line_of(const std::string& key) const {
        const auto it = map_.find(key);
        return it == map_.end() ? 0 : it->second.line;
    }

    double number(const std::string& key) { return as_number(take(key), key); }
    double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

    int integer(const std::string& key) { return to_int(number(key), key); }
    int integer(const std::string& key, int def) { return has(key) ? integer(key) : def; }

    std::string string(const std::string& key) {
        const ConfigEntry& e = take(key);
        if (const auto* s = std::get_if<std::string>(&e.value.v)) return *s;
        throw parse_error(e.line, key, "expected a string");
    }
    std::string string(const std::string& key, const std::string& def) { return has(key) ? string(key) : def; }

    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const int line = line_of(key);
        const std::string s = string(key);
        if (s == "true" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "no" || s == "off") return false;
        throw parse_error(line, key, "expected true or false");
    }

    std::vector<double> numbers(const std::string& key) {
        const ConfigEntry& e = take(key);
        const auto* list = std::get_if<std::vector<ConfigValue>>(&e.value.v);
        if (!list) throw parse_error(e.line, key, "expected a list");
        std::vector<double> out;
        for (const auto& item : *list) out.push_back(as_number({item, e.line, true}, key));
        return out;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> def) {
        return has(key) ? numbers(key) : def;
    }

    std::vector<int> integers(const std::string& key) {
        std::vector<int> out;
        for (double d : numbers(key)) out.push_back(to_int(d, key));
        return out;
    }

    std::vector<std::vector<double>> matrix(const std::string& key) {
        const ConfigEntry& e = take(key);
        const auto* list = std::get_if<std::vector<ConfigValue>>(&e.value.v);
        if (!list) throw parse_error(e.line, key, "expected a list of lists");
        std::vector<std::vector<double>> out;
        for (const auto& row : *list) {
            const auto* r = std::get_if<std::vector<ConfigValue>>(&row.v);
            if (!r) throw parse_error(e.line, key, "expected a list of lists");
            std::vector<double> vals;
            for (const auto& item : *r) vals.push_back(as_number({item, e.line, true}, key));
            out.push_back(std::move(vals));
        }
        return out;
    }

    Vec3 vec3(const std::string& key) {
        const int line = line_of(key);
        const auto v = numbers(key);
        if (v.size() != 3) throw parse_error(line, key, "expected three components");
        return {v[0], v[1], v[2]};
    }

    Interval interval(const std::string& key) {
        const int line = line_of(key);
        const auto v = numbers(key);
        if (v.size() != 2) throw parse_error(line, key, "expected [lo, hi]");
        if (!(v[1] >= v[0])) throw parse_error(line, key, "interval upper bound below lower bound");
        return {v[0], v[1]};
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw parse_error(line_of(key), key, what);
    }

    void finish() const {
        const ConfigEntry* first = nullptr;
        std::string first_key;
        for (const auto& [k, e] : map_)
            if (!e.used && (!first || e.line < first->line)) {
                first = &e;
                first_key = k;
            }
        if (first) throw parse_error(first->line, first_key, "unknown key");
    }

private:
    ConfigEntry& take(const std::string& key) {
        const auto it = map_.find(key);
        if (it == map_.end()) throw parse_error(0, key, "missing required key");
        it->second.used = true;
        return it->second;
    }

    static double as_number(const ConfigEntry& e, const std::string& key) {
        if (const auto* d = std::get_if<double>(&e.value.v)) return *d;
        throw parse_error(e.line, key, "expected a number");
    }

    int to_int(double d, const std::string& key) const {
        if (!(std::floor(d) == d) || std::abs(d) > 2e9) throw parse_error(line_of(key), key, "expected an integer");
        return static_cast<int>(d);
    }

    ConfigMap map_;
};

struct ArraySpec {
    Vec3 center = Vec3::Zero();
    std::array<int, 2> counts{1, 1};
    double spacing_wavelengths = 0.5; // element pitch in carrier wavelengths
    ArrayPlane plane = ArrayPlane::xy;
    int normal_sign = 1;

    PlanarArray build(double wavelength) const {
        return build_upa(center, counts, spacing_wavelengths * wavelength, plane, normal_sign);
    }
};

struct RisSpec {
    ArraySpec array;
    Region region;
    std::array<int, 3> grid{1, 1, 1};
};

struct UeSpec {
    int count = 1;
    double k_rice = 10.0;
    double los_probability = 1.0;
    std::vector<Vec3> positions; // empty: uniform over the inspected region
    std::vector<int> pilots;     // empty: random access
};

enum class KernelSource { logistic, step, table, physical };

struct AccessSpec {
    AccessConfig config;
    KernelSource kernel = KernelSource::logistic;
    double kernel_center = 3.5;
    double kernel_slope = 3.0;
    double step_single = 1.0;
    double step_shared = 0.0;
    std::vector<double> kernel_table;
    Convention convention = Convention::conditional;
    Evolution evolution = Evolution::markov;
    RowLaw row_law = RowLaw::binomial;

    DetectionKernel synthetic_kernel() const {
        switch (kernel) {
        case KernelSource::logistic: return DetectionKernel::logistic(kernel_center, kernel_slope);
        case KernelSource::step: return DetectionKernel::step(step_single, step_shared);
        case KernelSource::table: return DetectionKernel::table(kernel_table);
        case KernelSource::physical: break;
        }
        throw std::invalid_argument("access kernel is estimated from the physical layer");
    }
};

struct Scenario {
    std::string name;
    double carrier_hz = 6e9;
    int subcarriers = 1;
    double subcarrier_spacing_hz = 30e3;
    double noise_density_dbm_hz = -174.0;
    double noise_figure_db = 10.0;
    double noise_bandwidth_hz = 15e3;

    ArraySpec bs;
    std::vector<RisSpec> ris;
    Region region;

    int timeslots = 1;
    int random_pool = 1;
    int assigned_pool = 0;

    UeSpec ue;
    double p_sym_dbw = -50.0;
    std::vector<double> power_sweep_dbw;
    std::vector<double> sweep_k_rice;

    double target_pfa = 1e-2;
    int calibration_trials = 1000;
    ThresholdMode threshold_mode = ThresholdMode::per_filter;

    DesignParams design;
    AccessSpec access;
    std::uint64_t seed = 1;

    double wavelength() const { return speed_of_light / carrier_hz; }
    double noise_var() const { return noise_power(noise_density_dbm_hz, noise_figure_db, noise_bandwidth_hz); }
    double p_sym() const { return db_to_linear(p_sym_dbw); }
    CarrierGrid carrier() const { return {carrier_hz, subcarriers, subcarrier_spacing_hz}; }
    PilotBook pilot_book() const { return {timeslots, subcarriers, random_pool, assigned_pool}; }
    std::size_t cells() const { return ris.empty() ? 0 : static_cast<std::size_t>(ris[0].grid[0]) * ris[0].grid[1] * ris[0].grid[2]; }

    PlanarArray bs_array() const { return bs.build(wavelength()); }

    std::shared_ptr<const Scene> make_scene() const {
        std::vector<PlanarArray> arrays;
        for (const auto& r : ris) arrays.push_back(r.array.build(wavelength()));
        return std::make_shared<const Scene>(carrier(), bs_array(), std::move(arrays));
    }

    std::vector<SubRegionPartition> partitions() const {
        std::vector<SubRegionPartition> out;
        for (const auto& r : ris) out.push_back(partition_region(r.region, r.grid));
        return out;
    }

    void validate() const;
    std::uint64_t hash() const;
};

namespace detail {

class Fnv1a {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void f64(double v) {
        if (v == 0.0) v = 0.0; // fold -0
        const auto u = std::bit_cast<std::uint64_t>(v);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
        bytes(b, 8);
    }
    void i64(std::int64_t v) { f64(static_cast<double>(v)); }
    void tag(const char* s) { bytes(s, std::strlen(s) + 1); }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline void hash_array(Fnv1a& h, const ArraySpec& a) {
    for (int i = 0; i < 3; ++i) h.f64(a.center[i]);
    h.i64(a.counts[0]);
    h.i64(a.counts[1]);
    h.f64(a.spacing_wavelengths);
    h.i64(static_cast<int>(a.plane));
    h.i64(a.normal_sign);
}

inline void hash_region(Fnv1a& h, const Region& r) {
    for (const auto& b : r.bounds) {
        h.f64(b.lo);
        h.f64(b.hi);
    }
}

} // namespace detail

// Fingerprint of everything a codebook depends on: carrier grid, array
// layouts, inspected regions and partitions, and the design parameters.
inline std::uint64_t Scenario::hash() const {
    detail::Fnv1a h;
    h.tag("carrier");
    h.f64(carrier_hz);
    h.i64(subcarriers);
    h.f64(subcarrier_spacing_hz);
    h.tag("bs");
    detail::hash_array(h, bs);
    h.tag("region");
    detail::hash_region(h, region);
    for (const auto& r : ris) {
        h.tag("ris");
        detail::hash_array(h, r.array);
        detail::hash_region(h, r.region);
        for (int g : r.grid) h.i64(g);
    }
    h.tag("design");
    for (double v : {design.beta_ps, design.beta_sl, design.alpha_sl, design.eps_sl, design.tolerance, design.step0,
                     design.step_decay})
        h.f64(v);
    h.i64(design.max_iters);
    h.i64(design.max_backtracks);
    h.i64(design.normalize_gain ? 1 : 0);
    return h.value();
}

inline void Scenario::validate() const {
    auto bad = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };
    if (ris.empty()) bad("at least one RIS is required");
    const std::size_t n = cells();
    for (const auto& r : ris) {
        if (static_cast<std::size_t>(r.grid[0]) * r.grid[1] * r.grid[2] != n)
            bad("every RIS must scan the same number of cells");
        if (!region.contains(r.region)) bad("RIS inspection region lies outside the scenario region");
    }
    if (timeslots * subcarriers != random_pool + assigned_pool) bad("pilots.random + pilots.assigned must equal L*Q");
    if (ue.count < 0) bad("ue.count must be non-negative");
    if (!ue.positions.empty() && static_cast<int>(ue.positions.size()) != ue.count)
        bad("ue.positions must list ue.count positions");
    if (!ue.pilots.empty() && static_cast<int>(ue.pilots.size()) != ue.count) bad("ue.pilots must list ue.count pilots");
    for (const auto& p : ue.positions)
        if (!region.contains(p)) bad("UE position outside the scenario region");
    for (int b : ue.pilots)
        if (b < 0 || b >= random_pool + assigned_pool) bad("UE pilot out of range");
    if (!(ue.k_rice >= 0.0)) bad("ue.k_rice must be non-negative");
    if (!(ue.los_probability >= 0.0 && ue.los_probability <= 1.0)) bad("ue.los_probability must lie in [0, 1]");
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) bad("detection.pfa must lie in (0, 1)");
    if (calibration_trials < 1) bad("detection.calibration_trials must be positive");
    design.validate();
    access.config.validate();
    if (access.config.B_R + access.config.B_A < 1) bad("access pools are empty");
}

namespace detail {

inline ArrayPlane parse_plane(ConfigReader& r, const std::string& key) {
    const int line = r.line_of(key);
    const std::string s = r.string(key);
    if (s == "xy") return ArrayPlane::xy;
    if (s == "xz") return ArrayPlane::xz;
    if (s == "yz") return ArrayPlane::yz;
    throw parse_error(line, key, "plane must be xy, xz or yz");
}

inline ArraySpec parse_array(ConfigReader& r, const std::string& prefix) {
    ArraySpec a;
    a.center = r.vec3(prefix + ".center");
    const int line = r.line_of(prefix + ".counts");
    const auto c = r.integers(prefix + ".counts");
    if (c.size() != 2 || c[0] < 1 || c[1] < 1) throw parse_error(line, prefix + ".counts", "expected two positive counts");
    a.counts = {c[0], c[1]};
    a.spacing_wavelengths = r.number(prefix + ".spacing_wavelengths", 0.5);
    if (!(a.spacing_wavelengths > 0.0)) r.fail(prefix + ".spacing_wavelengths", "spacing must be positive");
    a.plane = parse_plane(r, prefix + ".plane");
    a.normal_sign = r.integer(prefix + ".normal_sign", 1);
    if (a.normal_sign != 1 && a.normal_sign != -1) r.fail(prefix + ".normal_sign", "must be 1 or -1");
    return a;
}

inline Region parse_region(ConfigReader& r, const std::string& prefix) {
    return {r.interval(prefix + ".x"), r.interval(prefix + ".y"), r.interval(prefix + ".z")};
}

template <class E>
E parse_enum(ConfigReader& r, const std::string& key, E def, std::initializer_list<std::pair<const char*, E>> names) {
    if (!r.has(key)) return def;
    const int line = r.line_of(key);
    const std::string s = r.string(key);
    std::string all;
    for (const auto& [n, e] : names) {
        if (s == n) return e;
        all += all.empty() ? n : std::string(", ") + n;
    }
    throw parse_error(line, key, "expected one of " + all);
}

} // namespace detail

inline Scenario scenario_from_config(ConfigMap map) {
    using namespace detail;
    ConfigReader r(std::move(map));
    Scenario s;
    s.name = r.string("name", "scenario");

    s.carrier_hz = r.number("carrier.frequency");
    s.subcarriers = r.integer("carrier.subcarriers", 1);
    s.subcarrier_spacing_hz = r.number("carrier.spacing", 30e3);
    if (!(s.carrier_hz > 0.0)) r.fail("carrier.frequency", "must be positive");
    if (s.subcarriers < 1) r.fail("carrier.subcarriers", "must be positive");

    s.noise_density_dbm_hz = r.number("noise.density_dbm_hz", -174.0);
    s.noise_figure_db = r.number("noise.figure_db", 10.0);
    s.noise_bandwidth_hz = r.number("noise.bandwidth", 15e3);
    if (!(s.noise_bandwidth_hz > 0.0)) r.fail("noise.bandwidth", "must be positive");

    s.bs = parse_array(r, "bs");
    s.region = parse_region(r, "region");

    const int k_count = r.integer("ris.count");
    if (k_count < 1) r.fail("ris.count", "at least one RIS is required");
    for (int k = 0; k < k_count; ++k) {
        const std::string p = "ris." + std::to_string(k);
        RisSpec spec;
        spec.array = parse_array(r, p);
        spec.region = parse_region(r, p + ".region");
        const int line = r.line_of(p + ".grid");
        const auto g = r.integers(p + ".grid");
        if (g.size() != 3 || g[0] < 1 || g[1] < 1 || g[2] < 1)
            throw parse_error(line, p + ".grid", "expected three positive grid dimensions");
        spec.grid = {g[0], g[1], g[2]};
        s.ris.push_back(spec);
    }

    s.timeslots = r.integer("pilots.timeslots", 1);
    s.random_pool = r.integer("pilots.random");
    s.assigned_pool = r.integer("pilots.assigned", 0);

    s.ue.count = r.integer("ue.count", 1);
    s.ue.k_rice = r.number("ue.k_rice", 10.0);
    s.ue.los_probability = r.number("ue.los_probability", 1.0);
    if (r.has("ue.positions")) {
        const int line = r.line_of("ue.positions");
        for (const auto& row : r.matrix("ue.positions")) {
            if (row.size() != 3) throw parse_error(line, "ue.positions", "expected [x, y, z] entries");
            s.ue.positions.emplace_back(row[0], row[1], row[2]);
        }
    }
    if (r.has("ue.pilots")) s.ue.pilots = r.integers("ue.pilots");

    s.p_sym_dbw = r.number("power.p_sym_dbw", -50.0);
    s.power_sweep_dbw = r.numbers("power.sweep_dbw", {});
    s.sweep_k_rice = r.numbers("sweep.k_rice", {});

    s.target_pfa = r.number("detection.pfa", 1e-2);
    s.calibration_trials = r.integer("detection.calibration_trials", 1000);
    s.threshold_mode = parse_enum(r, "detection.threshold", ThresholdMode::per_filter,
                                  {{"per_filter", ThresholdMode::per_filter}, {"global", ThresholdMode::global}});

    DesignParams& d = s.design;
    d.beta_ps = r.number("design.beta_ps", d.beta_ps);
    d.beta_sl = r.number("design.beta_sl", d.beta_sl);
    d.alpha_sl = r.number("design.alpha_sl", d.alpha_sl);
    d.eps_sl = r.number("design.eps_sl", d.eps_sl);
    d.max_iters = r.integer("design.max_iters", d.max_iters);
    d.tolerance = r.number("design.tolerance", d.tolerance);
    d.step0 = r.number("design.step0", d.step0);
    d.step_decay = r.number("design.step_decay", d.step_decay);
    d.max_backtracks = r.integer("design.max_backtracks", d.max_backtracks);
    d.normalize_gain = r.boolean("design.normalize_gain", d.normalize_gain);

    AccessSpec& a = s.access;
    a.config.M = r.integer("access.M", s.ue.count);
    a.config.B_R = r.integer("access.B_R", s.random_pool);
    a.config.B_A = r.integer("access.B_A", s.assigned_pool);
    a.config.J = r.integer("access.J", 1);
    a.kernel = parse_enum(r, "access.kernel", KernelSource::logistic,
                          {{"logistic", KernelSource::logistic}, {"step", KernelSource::step},
                           {"table", KernelSource::table}, {"physical", KernelSource::physical}});
    a.kernel_center = r.number("access.kernel_center", a.kernel_center);
    a.kernel_slope = r.number("access.kernel_slope", a.kernel_slope);
    a.step_single = r.number("access.step_single", a.step_single);
    a.step_shared = r.number("access.step_shared", a.step_shared);
    a.kernel_table = r.numbers("access.kernel_table", {});
    a.convention = parse_enum(r, "access.convention", Convention::conditional,
                              {{"conditional", Convention::conditional}, {"verbatim", Convention::verbatim}});
    a.evolution = parse_enum(r, "access.evolution", Evolution::markov,
                             {{"markov", Evolution::markov}, {"verbatim", Evolution::verbatim}});
    a.row_law = parse_enum(r, "access.row_law", RowLaw::binomial,
                           {{"binomial", RowLaw::binomial}, {"exact", RowLaw::exact}});

    if (r.has("seed")) {
        const double v = r.number("seed");
        if (!(v >= 0.0 && std::floor(v) == v && v < 1.8e19)) r.fail("seed", "expected a non-negative integer");
        s.seed = static_cast<std::uint64_t>(v);
    }

    r.finish();
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw parse_error(0, "", e.what());
    }
    return s;
}

inline Scenario parse_scenario(std::istream& in) { return scenario_from_config(parse_config(in)); }

inline Scenario parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario " + path);
    return parse_scenario(in);
}

} // namespace nfris
