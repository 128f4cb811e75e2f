#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nfris {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

// Nominal free-space propagation speed. The resolution and Fraunhofer tables
// are quoted against c_o = 3e8 m/s, so the whole library uses it.
inline constexpr double speed_of_light = 3.0e8;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// A point coincides with an array element (or another geometric singularity).
class singularity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The transmission protocol was violated (missing pilot, mismatched partner frames...).
class protocol_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Artifacts that do not belong together (codebook built for another scenario...).
class integrity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
public:
    parse_error(int line, std::string field, const std::string& what)
        : std::runtime_error(format(line, field, what)), line_(line), field_(std::move(field)) {}

    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    static std::string format(int line, const std::string& field, const std::string& what) {
        std::string msg = "line " + std::to_string(line);
        if (!field.empty()) msg += " (" + field + ")";
        return msg + ": " + what;
    }

    int line_;
    std::string field_;
};

} // namespace nfris
