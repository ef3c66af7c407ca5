#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relpot/errors.hpp"
#include "relpot/potential.hpp"
#include "relpot/scattering.hpp"

namespace relpot {

struct SpectrumReport {
    std::vector<double> eigenvalues; // lowest k, ascending
    double half_width = 0.0;         // L
    double step = 0.0;               // h
    std::string potential_id;
};

namespace detail {

// eigenvalue count below lambda via the Sturm/LDL^T recurrence for the
// symmetric tridiagonal (d_i, -1/h^2)
inline int sturm_count(const std::vector<double>& diag, double off2, double lambda) {
    int count = 0;
    double q = 0.0;
    bool first = true;
    for (double d : diag) {
        q = (d - lambda) - (first ? 0.0 : off2 / q);
        first = false;
        if (q == 0.0) q = -1e-300;
        if (q < 0.0) ++count;
    }
    return count;
}

} // namespace detail

// Lowest k Dirichlet eigenvalues of -(d/dx)^2 + u on [-L, L], 3-point
// discretization, bisection on Sturm sequences. u is supplied sampled on the
// interior grid x_i = -L + i h, i = 1..N-1.
inline SpectrumReport schrodinger_eigs_sampled(const std::vector<double>& u_interior, double L,
                                               double h, int k, std::string id = {}) {
    if (h > L / 100.0) throw GridTooCoarse("require h <= L/100");
    if (k < 1) throw ValidationError("need k >= 1 eigenvalues");
    const double inv_h2 = 1.0 / (h * h);
    std::vector<double> diag(u_interior.size());
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = 2.0 * inv_h2 + u_interior[i];
    const double off2 = inv_h2 * inv_h2;

    double lo = diag[0], hi = diag[0];
    for (double d : diag) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    lo -= 2.0 * inv_h2 + 1.0;
    hi += 2.0 * inv_h2 + 1.0;

    SpectrumReport rep;
    rep.half_width = L;
    rep.step = h;
    rep.potential_id = std::move(id);
    for (int j = 1; j <= k; ++j) {
        double a = lo, b = hi;
        for (int it = 0; it < 120; ++it) {
            const double mid = 0.5 * (a + b);
            if (detail::sturm_count(diag, off2, mid) >= j) b = mid;
            else a = mid;
            if (b - a <= 1e-13 * std::max(1.0, std::fabs(mid))) break;
        }
        rep.eigenvalues.push_back(0.5 * (a + b));
    }
    return rep;
}

inline std::vector<double> interior_grid(double L, double h) {
    const int n = static_cast<int>(std::llround(2.0 * L / h));
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i) xs.push_back(-L + i * h);
    return xs;
}

inline SpectrumReport schrodinger_eigs(const std::function<double(double)>& u, double L, double h,
                                       int k, std::string id = {}) {
    const auto xs = interior_grid(L, h);
    std::vector<double> uv(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) uv[i] = u(xs[i]);
    return schrodinger_eigs_sampled(uv, L, h, k, std::move(id));
}

struct SpectralBoundCheck {
    int index = 0;
    double max_eta_sq = 0.0;
    double algebraic_bound = 0.0; // M(sigma_n)^2 + sigma_n(R)
    bool algebraic_ok = false;
    double fd_ground = 0.0;
    double fd_bound = 0.0;        // -beta^2 - sigma(R) - eps
    bool fd_ok = false;
};

// Checks of the spectral inclusion along a discretization sequence: the
// algebraic bound max eta^2 <= M^2 + S through forward_map, and the FD ground
// state of psi(P^{sigma_n}) against -beta^2 - sigma(R) - eps. The potential is
// sampled through the Hamiltonian-flow form, which stays accurate for the
// tightly clustered eta of fine discretizations.
inline std::vector<SpectralBoundCheck> verify_spectral_bound(
    const std::vector<AtomicMeasure>& seq, double eps,
    std::optional<double> limit_mass = std::nullopt, double L = 15.0, double h = 5e-3,
    double fd_tol = 1e-3) {
    if (seq.empty()) throw ValidationError("verify_spectral_bound needs at least one measure");
    double beta = 0.0;
    for (const auto& s : seq) beta = std::max(beta, s.max_rate());
    const double mass = limit_mass.value_or(seq.back().total_mass());

    std::vector<SpectralBoundCheck> out;
    const auto xs = interior_grid(L, h);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        SpectralBoundCheck chk;
        chk.index = static_cast<int>(i);
        const auto& sigma = seq[i];
        const auto s = forward_map(sigma);
        chk.max_eta_sq = s.entries().back().eta * s.entries().back().eta;
        chk.algebraic_bound = sigma.max_rate() * sigma.max_rate() + sigma.total_mass();
        chk.algebraic_ok = chk.max_eta_sq <= chk.algebraic_bound + 1e-12;

        const auto uv = potential_from_measure(sigma, xs);
        chk.fd_ground = schrodinger_eigs_sampled(uv, L, h, 1).eigenvalues.front();
        chk.fd_bound = -beta * beta - mass - eps;
        chk.fd_ok = chk.fd_ground >= chk.fd_bound - fd_tol;
        out.push_back(chk);
    }
    return out;
}

} // namespace relpot
