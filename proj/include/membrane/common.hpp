#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace membrane {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Stress and strain triples are ordered (x, y, shear); shear strain is the
// engineering strain gamma = 2 eps_xy.
using Voigt = Eigen::Vector3d;

using Index = std::ptrdiff_t;

/// Infinity norm that is 0 for an empty vector.
inline double inf_norm(const Eigen::VectorXd &v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

/// Triangles with area below this (m^2) are rejected as degenerate.
inline constexpr double kDegenerateArea = 1e-12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class MaterialError : public Error {
public:
    using Error::Error;
};

class DegenerateElement : public Error {
public:
    DegenerateElement(Index element, const std::string &what)
        : Error("element " + std::to_string(element) + ": " + what), element_(element) {}

    Index element() const noexcept { return element_; }

private:
    Index element_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string &field, const std::string &what)
        : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
          line_(line), field_(field) {}

    std::size_t line() const noexcept { return line_; }
    const std::string &field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Reversed or collapsed triangle in a planar cutting sheet.
class PatternError : public Error {
public:
    PatternError(Index element, const std::string &what)
        : Error("pattern element " + std::to_string(element) + ": " + what), element_(element) {}

    Index element() const noexcept { return element_; }

private:
    Index element_;
};

} // namespace membrane
