#pragma once

#include "nfris/core.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace nfris {

// Which pair of global axes spans an array aperture. The normal points along
// the remaining axis, with the sign chosen at construction time.
enum class ArrayPlane { xy, xz, yz };

struct AngleOfArrival {
    double azimuth = 0.0;   // [-pi, pi], in the plane spanned by the first array axis and the normal
    double elevation = 0.0; // [-pi/2, pi/2], out of that plane towards the second axis
};

// Uniform planar array. Element i sits at
//   center + (i1 - (n1-1)/2) * spacing * axis1 + (i2 - (n2-1)/2) * spacing * axis2
// with i = i2 * n1 + i1 (first axis runs fastest).
class PlanarArray {
public:
    PlanarArray(Vec3 center, std::array<int, 2> counts, double spacing, ArrayPlane plane, int normal_sign = 1)
        : center_(std::move(center)), counts_(counts), spacing_(spacing), plane_(plane) {
        if (counts[0] < 1 || counts[1] < 1)
            throw std::invalid_argument("PlanarArray: element counts must be positive");
        if (!(spacing > 0.0))
            throw std::invalid_argument("PlanarArray: spacing must be positive");
        if (normal_sign != 1 && normal_sign != -1)
            throw std::invalid_argument("PlanarArray: normal_sign must be +1 or -1");

        const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
        switch (plane) {
        case ArrayPlane::xy: axis1_ = ex; axis2_ = ey; normal_ = normal_sign * ez; break;
        case ArrayPlane::xz: axis1_ = ex; axis2_ = ez; normal_ = normal_sign * ey; break;
        case ArrayPlane::yz: axis1_ = ey; axis2_ = ez; normal_ = normal_sign * ex; break;
        }

        positions_.reserve(size());
        for (int i2 = 0; i2 < counts[1]; ++i2) {
            for (int i1 = 0; i1 < counts[0]; ++i1) {
                const double o1 = (i1 - 0.5 * (counts[0] - 1)) * spacing;
                const double o2 = (i2 - 0.5 * (counts[1] - 1)) * spacing;
                positions_.push_back(center_ + o1 * axis1_ + o2 * axis2_);
            }
        }
    }

    const Vec3& center() const { return center_; }
    std::array<int, 2> counts() const { return counts_; }
    double spacing() const { return spacing_; }
    ArrayPlane plane() const { return plane_; }
    const Vec3& axis1() const { return axis1_; }
    const Vec3& axis2() const { return axis2_; }
    const Vec3& normal() const { return normal_; }

    std::size_t size() const { return static_cast<std::size_t>(counts_[0]) * static_cast<std::size_t>(counts_[1]); }
    const Vec3& element(std::size_t i) const { return positions_[i]; }
    const std::vector<Vec3>& elements() const { return positions_; }

    // Aperture side lengths use count * spacing (one element pitch per element).
    double aperture_side(int axis) const { return counts_[axis] * spacing_; }
    double aperture_diagonal() const { return std::hypot(aperture_side(0), aperture_side(1)); }

private:
    Vec3 center_;
    std::array<int, 2> counts_;
    double spacing_;
    ArrayPlane plane_;
    Vec3 axis1_, axis2_, normal_;
    std::vector<Vec3> positions_;
};

inline PlanarArray build_upa(const Vec3& center, std::array<int, 2> counts, double spacing, ArrayPlane plane,
                             int normal_sign = 1) {
    return PlanarArray(center, counts, spacing, plane, normal_sign);
}

// G(theta) = cos^2(az) cos^2(el)
inline double element_gain(const AngleOfArrival& angle) {
    const double ca = std::cos(angle.azimuth);
    const double ce = std::cos(angle.elevation);
    return ca * ca * ce * ce;
}

// Angle of the direction origin -> target in the array's local frame.
inline AngleOfArrival local_angle(const PlanarArray& array, const Vec3& origin, const Vec3& target) {
    const Vec3 d = target - origin;
    const double r = d.norm();
    if (r == 0.0) throw singularity_error("local_angle: target coincides with origin");
    const double a = d.dot(array.axis1());
    const double b = d.dot(array.axis2());
    const double c = d.dot(array.normal());
    return {std::atan2(a, c), std::asin(std::clamp(b / r, -1.0, 1.0))};
}

// Gain of element `origin` of `array` towards `target`. Elements do not
// radiate behind their own aperture plane.
inline double element_gain_towards(const PlanarArray& array, const Vec3& origin, const Vec3& target) {
    const Vec3 d = target - origin;
    if (d.dot(array.normal()) <= 0.0) return 0.0;
    return element_gain(local_angle(array, origin, target));
}

// Near-field steering vector of `array` for a source at p:
//   [a]_i = G(theta_i) (d_b / d_i) exp(-j 2 pi d_i / lambda)
inline CVector nf_steering(const PlanarArray& array, const Vec3& p, double wavelength) {
    const double d_center = (p - array.center()).norm();
    const double eps = 1e-12 * std::max(1.0, d_center);
    CVector out(static_cast<Eigen::Index>(array.size()));
    for (std::size_t i = 0; i < array.size(); ++i) {
        const Vec3& e = array.element(i);
        const double d = (p - e).norm();
        if (d <= eps) throw singularity_error("nf_steering: point coincides with an array element");
        const double g = element_gain_towards(array, e, p);
        out[static_cast<Eigen::Index>(i)] = g * (d_center / d) * std::polar(1.0, -2.0 * pi * d / wavelength);
    }
    return out;
}

inline double fraunhofer_distance(const PlanarArray& array, double wavelength) {
    const double d = array.aperture_diagonal();
    return 2.0 * d * d / wavelength;
}

// Smallest N with N >= (0.8 lambda / (spacing * dtheta_deg)) * 180/pi.
inline int required_elements_for_angular_resolution(double resolution_deg, double spacing, double wavelength) {
    if (!(resolution_deg > 0.0)) throw std::invalid_argument("angular resolution must be positive");
    if (!(spacing > 0.0) || !(wavelength > 0.0)) throw std::invalid_argument("spacing and wavelength must be positive");
    const double bound = 0.8 * wavelength / (spacing * resolution_deg) * 180.0 / pi;
    return static_cast<int>(std::ceil(bound - 1e-9));
}

inline double required_bandwidth_for_range_resolution(double resolution_m) {
    if (!(resolution_m > 0.0)) throw std::invalid_argument("range resolution must be positive");
    return speed_of_light / resolution_m;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

struct Region {
    std::array<Interval, 3> bounds;

    Region() = default;
    Region(Interval x, Interval y, Interval z) : bounds{x, y, z} {
        for (const auto& b : bounds)
            if (!(b.hi >= b.lo)) throw std::invalid_argument("Region: interval upper bound below lower bound");
    }

    double volume() const { return bounds[0].length() * bounds[1].length() * bounds[2].length(); }
    Vec3 centroid() const { return {bounds[0].mid(), bounds[1].mid(), bounds[2].mid()}; }
    bool contains(const Vec3& p) const {
        return bounds[0].contains(p.x()) && bounds[1].contains(p.y()) && bounds[2].contains(p.z());
    }
    bool contains(const Region& other) const {
        for (int a = 0; a < 3; ++a)
            if (other.bounds[a].lo < bounds[a].lo || other.bounds[a].hi > bounds[a].hi) return false;
        return true;
    }
    Vec3 diagonal() const { return {bounds[0].length(), bounds[1].length(), bounds[2].length()}; }
};

// Axis-aligned uniform tiling of a region. Cell n has grid coordinates
// (ix, iy, iz) with n = ix + gx * (iy + gy * iz).
struct SubRegionPartition {
    Region parent;
    std::array<int, 3> grid{1, 1, 1};
    std::vector<Region> cells;
    std::vector<Vec3> centers;

    std::size_t size() const { return cells.size(); }

    std::array<int, 3> coords(std::size_t n) const {
        const int i = static_cast<int>(n);
        return {i % grid[0], (i / grid[0]) % grid[1], i / (grid[0] * grid[1])};
    }

    std::size_t index(const std::array<int, 3>& c) const {
        return static_cast<std::size_t>(c[0] + grid[0] * (c[1] + grid[1] * c[2]));
    }

    // Cell containing p (half-open cells, the upper face of the parent is
    // assigned to the last cell); nullopt outside the parent region.
    std::optional<std::size_t> locate(const Vec3& p) const {
        if (!parent.contains(p)) return std::nullopt;
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a) {
            const double len = parent.bounds[a].length();
            int k = len > 0.0 ? static_cast<int>(std::floor((p[a] - parent.bounds[a].lo) / len * grid[a])) : 0;
            c[a] = std::clamp(k, 0, grid[a] - 1);
        }
        return index(c);
    }

    // Chebyshev distance between two cells on the grid.
    int grid_distance(std::size_t a, std::size_t b) const {
        const auto ca = coords(a), cb = coords(b);
        int d = 0;
        for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(ca[i] - cb[i]));
        return d;
    }

    double cell_diagonal() const { return cells.empty() ? 0.0 : cells.front().diagonal().norm(); }
};

inline SubRegionPartition partition_region(const Region& region, std::array<int, 3> grid) {
    for (int g : grid)
        if (g < 1) throw std::invalid_argument("partition_region: grid dimensions must be positive");

    SubRegionPartition part;
    part.parent = region;
    part.grid = grid;
    const std::size_t count = static_cast<std::size_t>(grid[0]) * grid[1] * grid[2];
    part.cells.reserve(count);
    part.centers.reserve(count);

    auto edge = [&](int axis, int k) {
        const Interval& b = region.bounds[axis];
        // Pin the last edge to the bound so the tiling is exact.
        if (k == grid[axis]) return b.hi;
        return b.lo + b.length() * static_cast<double>(k) / grid[axis];
    };

    for (int iz = 0; iz < grid[2]; ++iz)
        for (int iy = 0; iy < grid[1]; ++iy)
            for (int ix = 0; ix < grid[0]; ++ix) {
                Region cell({edge(0, ix), edge(0, ix + 1)}, {edge(1, iy), edge(1, iy + 1)},
                            {edge(2, iz), edge(2, iz + 1)});
                part.centers.push_back(cell.centroid());
                part.cells.push_back(cell);
            }
    return part;
}

} // namespace nfris
