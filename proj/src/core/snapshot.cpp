#include "qh/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qh {

namespace {

constexpr char kMagic[8] = {'Q', 'H', 'S', 'N', 'A', 'P', '0', '1'};

template <typename T>
void put_le(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw Error("snapshot: truncated binary file");
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

void write_impl(const std::string& path, const Grid& g, double time, int components, const double* v,
                SnapshotMode mode) {
    const std::size_t count = g.size() * static_cast<std::size_t>(components);
    if (mode == SnapshotMode::Text) {
        std::ofstream os(path);
        if (!os) throw Error("snapshot: cannot open " + path);
        os.precision(17);
        os << "# qh-snapshot v1\n";
        os << "dims," << g.dims() << "\n";
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const auto& ax = g.axis(a);
            os << "axis," << a << "," << ax.points << "," << ax.length << "," << ax.origin << ","
               << to_string(ax.boundary) << "\n";
        }
        os << "time," << time << "\n";
        os << "components," << components << "\n";
        os << "values\n";
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (int c = 0; c < components; ++c) {
                if (c) os << ",";
                os << v[i * components + c];
            }
            os << "\n";
        }
        if (!os) throw Error("snapshot: write failed for " + path);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("snapshot: cannot open " + path);
    os.write(kMagic, 8);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dims()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(components));
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const auto& ax = g.axis(a);
        put_le<std::uint64_t>(os, ax.points);
        put_le<double>(os, ax.length);
        put_le<double>(os, ax.origin);
        put_le<std::uint32_t>(os, ax.boundary == Boundary::Periodic ? 0u : 1u);
    }
    put_le<double>(os, time);
    for (std::size_t i = 0; i < count; ++i) put_le<double>(os, v[i]);
    if (!os) throw Error("snapshot: write failed for " + path);
}

std::string expect_row(std::istream& is, const std::string& key) {
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind(key, 0) != 0) throw Error("snapshot: expected '" + key + "', got '" + line + "'");
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    }
    throw Error("snapshot: missing '" + key + "' row");
}

}  // namespace

void write_snapshot(const std::string& path, const ScalarField& f, double time, SnapshotMode mode) {
    write_impl(path, f.grid(), time, 1, f.data(), mode);
}

void write_snapshot(const std::string& path, const Wavefunction& f, double time, SnapshotMode mode) {
    write_impl(path, f.grid(), time, 2, reinterpret_cast<const double*>(f.data()), mode);
}

Snapshot read_snapshot(const std::string& path, SnapshotMode mode) {
    Snapshot s;
    std::vector<Axis> axes;
    if (mode == SnapshotMode::Text) {
        std::ifstream is(path);
        if (!is) throw Error("snapshot: cannot open " + path);
        const std::size_t dims = std::stoul(expect_row(is, "dims"));
        for (std::size_t a = 0; a < dims; ++a) {
            std::istringstream row(expect_row(is, "axis"));
            std::string tok;
            std::vector<std::string> t;
            while (std::getline(row, tok, ',')) t.push_back(tok);
            if (t.size() != 5) throw Error("snapshot: malformed axis row");
            axes.push_back(Axis{std::stoul(t[1]), std::stod(t[2]), std::stod(t[3]), boundary_from_string(t[4])});
        }
        s.grid = Grid(axes);
        s.time = std::stod(expect_row(is, "time"));
        s.components = std::stoi(expect_row(is, "components"));
        expect_row(is, "values");
        std::string line;
        while (std::getline(is, line)) {
            std::istringstream row(line);
            std::string tok;
            while (std::getline(row, tok, ',')) s.values.push_back(std::stod(tok));
        }
    } else {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw Error("snapshot: cannot open " + path);
        char magic[8];
        if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw Error("snapshot: bad magic in " + path);
        const auto dims = get_le<std::uint32_t>(is);
        s.components = static_cast<int>(get_le<std::uint32_t>(is));
        for (std::uint32_t a = 0; a < dims; ++a) {
            Axis ax;
            ax.points = get_le<std::uint64_t>(is);
            ax.length = get_le<double>(is);
            ax.origin = get_le<double>(is);
            ax.boundary = get_le<std::uint32_t>(is) == 0 ? Boundary::Periodic : Boundary::Dirichlet;
            axes.push_back(ax);
        }
        s.grid = Grid(axes);
        s.time = get_le<double>(is);
        const std::size_t count = s.grid.size() * static_cast<std::size_t>(s.components);
        s.values.resize(count);
        for (auto& v : s.values) v = get_le<double>(is);
    }
    if (s.components != 1 && s.components != 2) throw Error("snapshot: components must be 1 or 2");
    if (s.values.size() != s.grid.size() * static_cast<std::size_t>(s.components))
        throw Error("snapshot: value count does not match header");
    return s;
}

ScalarField Snapshot::scalar() const {
    if (components != 1) throw Error("snapshot holds a complex field");
    return ScalarField(grid, values);
}

Wavefunction Snapshot::wavefunction() const {
    if (components != 2) throw Error("snapshot holds a real field");
    Wavefunction w(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) w[i] = cplx(values[2 * i], values[2 * i + 1]);
    return w;
}

}  // namespace qh
