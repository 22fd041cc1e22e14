#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace qh {

enum class Boundary { Periodic, Dirichlet };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

struct Axis {
    std::size_t points = 0;
    double length = 0.0;
    double origin = 0.0;
    Boundary boundary = Boundary::Periodic;

    // Periodic: L/N with node N identified with node 0. Dirichlet: L/(N-1), both ends are nodes.
    double spacing() const;
    double coord(std::size_t i) const { return origin + static_cast<double>(i) * spacing(); }

    static Axis centered(std::size_t n, double length, Boundary b);
    // Axis with the given spacing whose nodes include x = 0 at index `zero_index`.
    static Axis from_spacing(std::size_t n, double dx, std::size_t zero_index, Boundary b);

    bool operator==(const Axis&) const = default;
};

using Point = std::array<double, 3>;

class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes);

    static Grid line(std::size_t n, double length, Boundary b);
    static Grid square(std::size_t n, double length, Boundary b);

    std::size_t dims() const { return axes_.size(); }
    std::size_t size() const { return size_; }
    const Axis& axis(std::size_t a) const { return axes_.at(a); }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t points(std::size_t a) const { return axes_[a].points; }
    std::size_t stride(std::size_t a) const { return strides_[a]; }
    double dx(std::size_t a) const { return axes_[a].spacing(); }
    double cell_volume() const;
    bool all_periodic() const;

    std::array<std::size_t, 3> unravel(std::size_t flat) const;
    Point point(std::size_t flat) const;

    bool operator==(const Grid& o) const { return axes_ == o.axes_; }
    std::string describe() const;

private:
    std::vector<Axis> axes_;
    std::array<std::size_t, 3> strides_{};
    std::size_t size_ = 0;
};

void require_same_grid(const Grid& a, const Grid& b, const char* op);

}  // namespace qh
