#include "qh/schrodinger.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qh/fft.hpp"
#include "qh/ops.hpp"

namespace qh {

namespace {

constexpr cplx I{0.0, 1.0};

double sq(double x) { return x * x; }

// Strang splitting exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2) with T diagonal in k-space.
// Vector potentials that are not uniform add a transport substep on each side of T.
class SplitStepper {
public:
    SplitStepper(const Grid& g, const ScalarField& V, const PhysicalConstants& c, double dt,
                 const std::vector<double>& kinetic_shift, const VectorField* A_nonuniform)
        : g_(g), fft_(shape(g)), c_(c), dt_(dt), A_(A_nonuniform) {
        if (!g.all_periodic()) throw SchemeMismatch("split-step requires an all-periodic grid");
        half_pot_.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) half_pot_[i] = std::exp(-I * (0.5 * dt * V[i] / c.hbar));
        kin_.resize(g.size());
        std::vector<std::vector<double>> k;
        for (std::size_t a = 0; a < g.dims(); ++a) k.push_back(wavenumbers(g.points(a), g.axis(a).length));
        const double inv_n = 1.0 / static_cast<double>(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto idx = g.unravel(i);
            double T = 0.0;
            for (std::size_t a = 0; a < g.dims(); ++a)
                T += sq(c.hbar * k[a][idx[a]] - kinetic_shift[a]) / (2.0 * c.mass(a));
            kin_[i] = std::exp(-I * (dt * T / c.hbar)) * inv_n;
        }
        if (A_) {
            double amax = 0.0, kmax = 0.0;
            for (std::size_t a = 0; a < g.dims(); ++a) {
                amax = std::max(amax, max_abs(A_->components[a]) * std::abs(c.charge) / (c.mass(a) * c.light_speed));
                kmax = std::max(kmax, std::numbers::pi / g.dx(a));
            }
            const double half = 0.5 * dt;
            transport_substeps_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(half * amax * kmax / 1.0)));
        }
    }

    void run(Wavefunction& psi, std::size_t steps) {
        cplx* b = fft_.buffer();
        for (std::size_t s = 0; s < steps; ++s) {
            for (std::size_t i = 0; i < g_.size(); ++i) psi[i] *= half_pot_[i];
            if (A_) transport(psi, 0.5 * dt_);
            for (std::size_t i = 0; i < g_.size(); ++i) b[i] = psi[i];
            fft_.forward();
            for (std::size_t i = 0; i < g_.size(); ++i) b[i] *= kin_[i];
            fft_.backward();
            for (std::size_t i = 0; i < g_.size(); ++i) psi[i] = b[i];
            if (A_) transport(psi, 0.5 * dt_);
            for (std::size_t i = 0; i < g_.size(); ++i) psi[i] *= half_pot_[i];
        }
    }

private:
    static std::vector<std::size_t> shape(const Grid& g) {
        std::vector<std::size_t> s;
        for (std::size_t a = 0; a < g.dims(); ++a) s.push_back(g.points(a));
        return s;
    }

    // d psi/d tau = sum_a (q/(m_a c)) (A_a d_a psi + (1/2)(d_a A_a) psi), RK4 substeps.
    Wavefunction transport_rhs(const Wavefunction& psi) const {
        ScalarField re(g_), im(g_);
        for (std::size_t i = 0; i < g_.size(); ++i) {
            re[i] = psi[i].real();
            im[i] = psi[i].imag();
        }
        Wavefunction out(g_, cplx(0.0));
        for (std::size_t a = 0; a < g_.dims(); ++a) {
            const double f = c_.charge / (c_.mass(a) * c_.light_speed);
            const ScalarField dre = derivative(re, a), dim = derivative(im, a);
            const ScalarField dA = derivative(A_->components[a], a);
            for (std::size_t i = 0; i < g_.size(); ++i)
                out[i] += f * (A_->components[a][i] * cplx(dre[i], dim[i]) + 0.5 * dA[i] * psi[i]);
        }
        return out;
    }

    void transport(Wavefunction& psi, double tau) const {
        const double h = tau / static_cast<double>(transport_substeps_);
        for (std::size_t s = 0; s < transport_substeps_; ++s) {
            const Wavefunction k1 = transport_rhs(psi);
            const Wavefunction k2 = transport_rhs(psi + k1 * cplx(0.5 * h));
            const Wavefunction k3 = transport_rhs(psi + k2 * cplx(0.5 * h));
            const Wavefunction k4 = transport_rhs(psi + k3 * cplx(h));
            for (std::size_t i = 0; i < g_.size(); ++i)
                psi[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    Grid g_;
    FftNd fft_;
    PhysicalConstants c_;
    double dt_;
    const VectorField* A_;
    std::size_t transport_substeps_ = 1;
    std::vector<cplx> half_pot_;
    std::vector<cplx> kin_;
};

// Crank-Nicolson with the 3-point Laplacian; boundary nodes pinned to zero.
Wavefunction crank_nicolson_1d(const Wavefunction& psi0, const ScalarField& U, const PhysicalConstants& c, double dt,
                               std::size_t steps) {
    const Grid& g = psi0.grid();
    if (g.dims() != 1 || g.axis(0).boundary != Boundary::Dirichlet)
        throw SchemeMismatch("implicit-difference scheme supports 1D dirichlet grids");
    const std::size_t n = g.points(0);
    const double h = g.dx(0);
    const double kin = c.hbar * c.hbar / (2.0 * c.mass(0) * h * h);
    // Accuracy target: the energy scale sqrt(<H^2>) of the initial state may rotate at most
    // half a radian per step, which keeps the Cayley-transform phase error below ~1%.
    {
        double h2 = 0.0, nn = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const cplx Hpsi = kin * (2.0 * psi0[i] - psi0[i - 1] - psi0[i + 1]) + U[i] * psi0[i];
            h2 += std::norm(Hpsi);
            nn += std::norm(psi0[i]);
        }
        const double escale = nn > 0.0 ? std::sqrt(h2 / nn) : 0.0;
        if (dt * escale / c.hbar > 0.5)
            throw SchemeMismatch("implicit-difference: dt exceeds the accuracy bound 0.5*hbar/sqrt(<H^2>)");
    }
    const cplx r = I * dt / (2.0 * c.hbar);
    const std::size_t m = n - 2;
    std::vector<cplx> diag(m), rhs(m), cp(m), dp(m);
    for (std::size_t j = 0; j < m; ++j) diag[j] = 1.0 + r * (2.0 * kin + U[j + 1]);
    const cplx o = -r * kin;
    Wavefunction psi = psi0;
    psi[0] = 0.0;
    psi[n - 1] = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t i = j + 1;
            const cplx Hpsi = kin * (2.0 * psi[i] - psi[i - 1] - psi[i + 1]) + U[i] * psi[i];
            rhs[j] = psi[i] - r * Hpsi;
        }
        cp[0] = o / diag[0];
        dp[0] = rhs[0] / diag[0];
        for (std::size_t j = 1; j < m; ++j) {
            const cplx den = diag[j] - o * cp[j - 1];
            cp[j] = o / den;
            dp[j] = (rhs[j] - o * dp[j - 1]) / den;
        }
        psi[m] = dp[m - 1];
        for (std::size_t j = m - 1; j-- > 0;) psi[j + 1] = dp[j] - cp[j] * psi[j + 2];
    }
    return psi;
}

void check_common(const Wavefunction& psi0, double dt, const PhysicalConstants& c) {
    c.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("time step must be positive");
    ensure_finite(psi0, "initial wavefunction");
}

}  // namespace

PotentialSpec PotentialSpec::harmonic(double w0) {
    if (!(w0 > 0.0)) throw Error("harmonic potential requires omega0 > 0");
    PotentialSpec p;
    p.kind = Kind::Harmonic;
    p.omega0 = w0;
    return p;
}

PotentialSpec PotentialSpec::barrier(double h, double w) {
    PotentialSpec p;
    p.kind = Kind::Barrier;
    p.height = h;
    p.width = w;
    return p;
}

PotentialSpec PotentialSpec::gaussian_well(double d, double w) {
    PotentialSpec p;
    p.kind = Kind::GaussianWell;
    p.depth = d;
    p.width = w;
    return p;
}

PotentialSpec PotentialSpec::pair_gaussian(double s, double w) {
    PotentialSpec p;
    p.kind = Kind::PairGaussian;
    p.strength = s;
    p.width = w;
    return p;
}

PotentialSpec PotentialSpec::linear(double slope) {
    PotentialSpec p;
    p.kind = Kind::Linear;
    p.slope = slope;
    return p;
}

PotentialSpec PotentialSpec::tabulated(ScalarField u) {
    PotentialSpec p;
    p.kind = Kind::Tabulated;
    p.table = std::make_shared<const ScalarField>(std::move(u));
    return p;
}

PotentialSpec PotentialSpec::sum(std::vector<PotentialSpec> t) {
    PotentialSpec p;
    p.kind = Kind::Sum;
    p.terms = std::move(t);
    return p;
}

PotentialSpec PotentialSpec::box() {
    PotentialSpec p;
    p.kind = Kind::Box;
    return p;
}

ScalarField PotentialSpec::evaluate(const Grid& g, const PhysicalConstants& c) const {
    switch (kind) {
        case Kind::Free:
        case Kind::Box:
            return ScalarField(g, 0.0);
        case Kind::Tabulated:
            require_same_grid(table->grid(), g, "tabulated potential");
            return *table;
        case Kind::Sum: {
            ScalarField out(g, 0.0);
            for (const auto& t : terms) out += t.evaluate(g, c);
            return out;
        }
        case Kind::PairGaussian:
            if (g.dims() != 2) throw Error("pair_gaussian potential needs a 2-axis configuration grid");
            break;
        default:
            break;
    }
    ScalarField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point p = g.point(i);
        double u = 0.0;
        switch (kind) {
            case Kind::Harmonic:
                for (std::size_t a = 0; a < g.dims(); ++a) u += 0.5 * c.mass(a) * omega0 * omega0 * p[a] * p[a];
                break;
            case Kind::Barrier:
                u = std::abs(p[0]) < 0.5 * width ? height : 0.0;
                break;
            case Kind::GaussianWell: {
                double r2 = 0.0;
                for (std::size_t a = 0; a < g.dims(); ++a) r2 += p[a] * p[a];
                u = -depth * std::exp(-r2 / (2.0 * width * width));
                break;
            }
            case Kind::PairGaussian:
                u = strength * std::exp(-sq(p[0] - p[1]) / (2.0 * width * width));
                break;
            case Kind::Linear:
                u = slope * p[0];
                break;
            default:
                break;
        }
        out[i] = u;
    }
    return out;
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Free: os << "free"; break;
        case Kind::Box: os << "box"; break;
        case Kind::Harmonic: os << "harmonic(omega0=" << omega0 << ")"; break;
        case Kind::Barrier: os << "barrier(height=" << height << ",width=" << width << ")"; break;
        case Kind::GaussianWell: os << "gaussian_well(depth=" << depth << ",width=" << width << ")"; break;
        case Kind::PairGaussian: os << "pair_gaussian(strength=" << strength << ",width=" << width << ")"; break;
        case Kind::Linear: os << "linear(slope=" << slope << ")"; break;
        case Kind::Tabulated: os << "tabulated"; break;
        case Kind::Sum:
            for (std::size_t i = 0; i < terms.size(); ++i) os << (i ? "+" : "") << terms[i].describe();
            break;
    }
    return os.str();
}

EMPotentialSpec EMPotentialSpec::zero(const Grid& g) { return EMPotentialSpec{VectorField(g), ScalarField(g, 0.0)}; }

EMPotentialSpec EMPotentialSpec::uniform(const Grid& g, std::vector<double> a, const ScalarField& phi) {
    if (a.size() != g.dims()) throw Error("vector potential component count must match grid dims");
    EMPotentialSpec em{VectorField(g), phi};
    for (std::size_t k = 0; k < g.dims(); ++k) em.A.components[k] = ScalarField(g, a[k]);
    return em;
}

bool EMPotentialSpec::is_uniform() const {
    for (const auto& comp : A.components)
        for (std::size_t i = 1; i < comp.size(); ++i)
            if (comp[i] != comp[0]) return false;
    return true;
}

VectorField EMPotentialSpec::electric_field() const {
    VectorField e = gradient(phi);
    for (auto& comp : e.components) comp *= -1.0;
    return e;
}

ScalarField EMPotentialSpec::magnetic_field_2d() const {
    if (A.grid.dims() != 2) throw Error("magnetic_field_2d needs a 2D grid");
    return derivative(A.components[1], 0) - derivative(A.components[0], 1);
}

const char* to_string(Scheme s) { return s == Scheme::SplitStep ? "split-step" : "implicit-difference"; }

Wavefunction evolve_schrodinger(const Wavefunction& psi0, const ScalarField& U, const PhysicalConstants& c, double dt,
                                std::size_t steps, Scheme scheme) {
    check_common(psi0, dt, c);
    require_same_grid(psi0.grid(), U.grid(), "evolve_schrodinger");
    if (scheme == Scheme::ImplicitDifference) return crank_nicolson_1d(psi0, U, c, dt, steps);
    Wavefunction psi = psi0;
    SplitStepper st(psi0.grid(), U, c, dt, std::vector<double>(psi0.grid().dims(), 0.0), nullptr);
    st.run(psi, steps);
    return psi;
}

Wavefunction evolve_schrodinger(const Wavefunction& psi0, const PotentialSpec& U, const PhysicalConstants& c,
                                double dt, std::size_t steps, Scheme scheme) {
    return evolve_schrodinger(psi0, U.evaluate(psi0.grid(), c), c, dt, steps, scheme);
}

Wavefunction evolve_schrodinger_em(const Wavefunction& psi0, const EMPotentialSpec& em, const PhysicalConstants& c,
                                   double dt, std::size_t steps) {
    check_common(psi0, dt, c);
    const Grid& g = psi0.grid();
    if (g.dims() > 2) throw Error("evolve_schrodinger_em supports grids of at most 2 axes");
    require_same_grid(g, em.phi.grid(), "evolve_schrodinger_em");
    require_same_grid(g, em.A.grid, "evolve_schrodinger_em");
    Wavefunction psi = psi0;
    if (em.is_uniform()) {
        std::vector<double> shift(g.dims());
        ScalarField V(g);
        for (std::size_t a = 0; a < g.dims(); ++a) shift[a] = c.charge * em.A.components[a][0] / c.light_speed;
        for (std::size_t i = 0; i < g.size(); ++i) V[i] = c.charge * em.phi[i];
        SplitStepper st(g, V, c, dt, shift, nullptr);
        st.run(psi, steps);
        return psi;
    }
    ScalarField V(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double a2 = 0.0;
        for (std::size_t a = 0; a < g.dims(); ++a)
            a2 += sq(c.charge * em.A.components[a][i] / c.light_speed) / (2.0 * c.mass(a));
        V[i] = c.charge * em.phi[i] + a2;
    }
    SplitStepper st(g, V, c, dt, std::vector<double>(g.dims(), 0.0), &em.A);
    st.run(psi, steps);
    return psi;
}

Wavefunction evolve_schrodinger_many(const Wavefunction& psi0, const ScalarField& U, const PhysicalConstants& c,
                                     double dt, std::size_t steps) {
    if (psi0.grid().dims() != 2) throw Error("evolve_schrodinger_many needs a 2-axis configuration grid");
    return evolve_schrodinger(psi0, U, c, dt, steps, Scheme::SplitStep);
}

double norm(const Wavefunction& psi) { return std::sqrt(integrate(density_of(psi))); }

void normalize(Wavefunction& psi) {
    const double n = norm(psi);
    if (!(n > 0.0)) throw Error("cannot normalize a zero wavefunction");
    psi *= cplx(1.0 / n);
}

double energy(const Wavefunction& psi, const ScalarField& U, const PhysicalConstants& c) {
    const Grid& g = psi.grid();
    if (!g.all_periodic()) throw SchemeMismatch("energy uses spectral kinetic energy on periodic grids");
    std::vector<std::size_t> shape;
    for (std::size_t a = 0; a < g.dims(); ++a) shape.push_back(g.points(a));
    FftNd fft(shape);
    for (std::size_t i = 0; i < g.size(); ++i) fft.buffer()[i] = psi[i];
    fft.forward();
    std::vector<std::vector<double>> k;
    for (std::size_t a = 0; a < g.dims(); ++a) k.push_back(wavenumbers(g.points(a), g.axis(a).length));
    double ek = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unravel(i);
        double T = 0.0;
        for (std::size_t a = 0; a < g.dims(); ++a) T += sq(c.hbar * k[a][idx[a]]) / (2.0 * c.mass(a));
        ek += std::norm(fft.buffer()[i]) * T;
    }
    ek *= g.cell_volume() / static_cast<double>(g.size());
    return ek + integrate(density_of(psi) * U);
}

Wavefunction gaussian_packet(const Grid& g, const std::vector<double>& center, const std::vector<double>& s0,
                             const std::vector<double>& k0) {
    if (center.size() != g.dims() || s0.size() != g.dims() || k0.size() != g.dims())
        throw Error("gaussian_packet parameters must match grid dims");
    return Wavefunction::sample(g, [&](const Point& p) {
        cplx v = 1.0;
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const double d = p[a] - center[a];
            v *= std::pow(2.0 * std::numbers::pi * s0[a] * s0[a], -0.25) *
                 std::exp(cplx(-d * d / (4.0 * s0[a] * s0[a]), k0[a] * p[a]));
        }
        return v;
    });
}

Wavefunction harmonic_ground_state(const Grid& g, double omega0, const PhysicalConstants& c) {
    return Wavefunction::sample(g, [&](const Point& p) {
        double v = 1.0;
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const double mw = c.mass(a) * omega0 / c.hbar;
            v *= std::pow(mw / std::numbers::pi, 0.25) * std::exp(-0.5 * mw * p[a] * p[a]);
        }
        return cplx(v, 0.0);
    });
}

Wavefunction plane_wave(const Grid& g, const std::vector<double>& k) {
    double vol = 1.0;
    for (std::size_t a = 0; a < g.dims(); ++a) vol *= g.axis(a).length;
    const double amp = 1.0 / std::sqrt(vol);
    return Wavefunction::sample(g, [&](const Point& p) {
        double ph = 0.0;
        for (std::size_t a = 0; a < g.dims(); ++a) ph += k[a] * p[a];
        return amp * std::exp(I * ph);
    });
}

double default_rho_floor(const ScalarField& rho) { return 1e-12 * max_abs(rho); }

MadelungFields madelung_decompose(const Wavefunction& psi, double rho_floor, double hbar) {
    ensure_finite(psi, "madelung_decompose");
    const Grid& g = psi.grid();
    MadelungFields out{density_of(psi), ScalarField(g, 0.0), std::vector<unsigned char>(g.size(), 0)};
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (out.rho[i] > out.rho[anchor]) anchor = i;
    if (!(out.rho[anchor] >= rho_floor)) throw NodeError("madelung_decompose: density below floor everywhere", anchor);

    std::vector<double> phase(g.size(), 0.0);
    std::vector<unsigned char> assigned(g.size(), 0);
    phase[anchor] = std::arg(psi[anchor]);
    out.valid[anchor] = 1;
    assigned[anchor] = 1;
    std::vector<std::size_t> seeds{anchor};

    for (std::size_t a = 0; a < g.dims(); ++a) {
        const std::size_t n = g.points(a), s = g.stride(a);
        std::vector<std::size_t> next;
        for (std::size_t seed : seeds) {
            const std::size_t pos = (seed / s) % n;
            const std::size_t base = seed - pos * s;
            next.push_back(seed);
            for (int dir : {+1, -1}) {
                std::size_t prev = seed;
                bool alive = out.valid[seed] != 0;
                for (long j = static_cast<long>(pos) + dir; j >= 0 && j < static_cast<long>(n); j += dir) {
                    const std::size_t cur = base + static_cast<std::size_t>(j) * s;
                    if (assigned[cur]) break;
                    assigned[cur] = 1;
                    next.push_back(cur);
                    if (alive && out.rho[cur] < rho_floor) {
                        for (long q = j + dir; q >= 0 && q < static_cast<long>(n); q += dir)
                            if (out.rho[base + static_cast<std::size_t>(q) * s] >= rho_floor)
                                throw NodeError("madelung_decompose: node (density below floor) at node " +
                                                    std::to_string(cur) + " on the unwrap path",
                                                cur);
                        alive = false;
                    }
                    if (alive) {
                        phase[cur] = phase[prev] + std::arg(psi[cur] * std::conj(psi[prev]));
                        out.valid[cur] = 1;
                        prev = cur;
                    } else {
                        phase[cur] = phase[prev];
                    }
                }
            }
        }
        seeds = std::move(next);
    }
    for (std::size_t i = 0; i < g.size(); ++i) out.S[i] = hbar * phase[i];
    return out;
}

Wavefunction madelung_compose(const ScalarField& rho, const ScalarField& S, double hbar) {
    require_same_grid(rho.grid(), S.grid(), "madelung_compose");
    Wavefunction psi(rho.grid());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] < 0.0) throw Error("madelung_compose: negative density at node " + std::to_string(i));
        psi[i] = std::sqrt(rho[i]) * std::exp(I * (S[i] / hbar));
    }
    return psi;
}

}  // namespace qh
