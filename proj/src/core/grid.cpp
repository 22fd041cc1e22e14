#include "qh/grid.hpp"

#include <cmath>
#include <sstream>

#include "qh/errors.hpp"

namespace qh {

const char* to_string(Boundary b) {
    return b == Boundary::Periodic ? "periodic" : "dirichlet";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "periodic") return Boundary::Periodic;
    if (s == "dirichlet" || s == "dirichlet-zero") return Boundary::Dirichlet;
    throw Error("unknown boundary tag '" + s + "'");
}

double Axis::spacing() const {
    return boundary == Boundary::Periodic ? length / static_cast<double>(points)
                                          : length / static_cast<double>(points - 1);
}

Axis Axis::centered(std::size_t n, double length, Boundary b) {
    return Axis{n, length, -0.5 * length, b};
}

Axis Axis::from_spacing(std::size_t n, double dx, std::size_t zero_index, Boundary b) {
    const double length = b == Boundary::Periodic ? dx * n : dx * (n - 1);
    return Axis{n, length, -dx * static_cast<double>(zero_index), b};
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 3) throw Error("grid must have 1 to 3 axes");
    for (const auto& a : axes_) {
        if (a.points < 8) throw Error("grid axis needs at least 8 points");
        if (!(a.length > 0.0) || !std::isfinite(a.length)) throw Error("grid axis length must be positive");
        if (!std::isfinite(a.origin)) throw Error("grid axis origin must be finite");
    }
    size_ = 1;
    for (std::size_t a = axes_.size(); a-- > 0;) {
        strides_[a] = size_;
        size_ *= axes_[a].points;
    }
}

Grid Grid::line(std::size_t n, double length, Boundary b) {
    return Grid({Axis::centered(n, length, b)});
}

Grid Grid::square(std::size_t n, double length, Boundary b) {
    return Grid({Axis::centered(n, length, b), Axis::centered(n, length, b)});
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes_) v *= a.spacing();
    return v;
}

bool Grid::all_periodic() const {
    for (const auto& a : axes_)
        if (a.boundary != Boundary::Periodic) return false;
    return true;
}

std::array<std::size_t, 3> Grid::unravel(std::size_t flat) const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        idx[a] = flat / strides_[a];
        flat -= idx[a] * strides_[a];
    }
    return idx;
}

Point Grid::point(std::size_t flat) const {
    const auto idx = unravel(flat);
    Point p{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < axes_.size(); ++a) p[a] = axes_[a].coord(idx[a]);
    return p;
}

std::string Grid::describe() const {
    std::ostringstream os;
    os << "grid[";
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        const auto& ax = axes_[a];
        if (a) os << " x ";
        os << ax.points << " pts, L=" << ax.length << ", x0=" << ax.origin << ", " << to_string(ax.boundary);
    }
    os << "]";
    return os.str();
}

void require_same_grid(const Grid& a, const Grid& b, const char* op) {
    if (!(a == b))
        throw GridMismatch(std::string(op) + ": operands on different grids (" + a.describe() + " vs " +
                           b.describe() + ")");
}

}  // namespace qh
