#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "relpot/errors.hpp"
#include "relpot/numerics.hpp"

namespace relpot {

struct Atom {
    double p = 0.0;  // exponential rate, 1/length
    double c2 = 0.0; // atom mass, > 0
};

// Finite atomic spectral measure in the canonical H ordering:
// |p_k| <= |p_{k+1}|, and each exact +/- pair stored positive-first.
// Construct through normalize_H.
class AtomicMeasure {
public:
    AtomicMeasure() = default;

    const std::vector<Atom>& atoms() const { return atoms_; }
    // Indices j(l) of the positive member of each symmetric pair; the mirror
    // atom sits at j(l)+1.
    const std::vector<int>& pair_heads() const { return pair_heads_; }
    int m_pairs() const { return static_cast<int>(pair_heads_.size()); }
    int size() const { return static_cast<int>(atoms_.size()); }
    bool empty() const { return atoms_.empty(); }

    double max_rate() const { // M(sigma)
        double m = 0.0;
        for (const auto& a : atoms_) m = std::max(m, std::fabs(a.p));
        return m;
    }
    double total_mass() const { // S(sigma)
        double s = 0.0;
        for (const auto& a : atoms_) s += a.c2;
        return s;
    }

private:
    friend AtomicMeasure normalize_H(std::vector<Atom> atoms);
    std::vector<Atom> atoms_;
    std::vector<int> pair_heads_;
};

// Puts atoms into the H ordering. Rates within 1e-12*max(1,|p|) of an exact
// +/- pair are symmetrized to +/-(|p_i|+|p_j|)/2; coinciding rates that are
// not such a pair are rejected.
inline AtomicMeasure normalize_H(std::vector<Atom> atoms) {
    const int n = static_cast<int>(atoms.size());
    for (const auto& a : atoms) {
        if (!(a.c2 > 0.0))
            throw NonpositiveMass("atom mass must be positive, got c2=" + std::to_string(a.c2));
    }
    std::vector<int> partner(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double tol = 1e-12 * std::max(1.0, std::fabs(atoms[i].p));
            if (std::fabs(atoms[i].p - atoms[j].p) <= tol)
                throw DuplicateRate("duplicate rate p=" + std::to_string(atoms[i].p));
            if (std::fabs(atoms[i].p + atoms[j].p) <= tol) {
                if (partner[i] >= 0 || partner[j] >= 0)
                    throw DuplicateRate("rate participates in more than one +/- pair");
                partner[i] = j;
                partner[j] = i;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        const int j = partner[i];
        if (j > i) {
            const double v = 0.5 * (std::fabs(atoms[i].p) + std::fabs(atoms[j].p));
            const bool i_pos = atoms[i].p > atoms[j].p;
            atoms[i].p = i_pos ? v : -v;
            atoms[j].p = i_pos ? -v : v;
        }
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
        const double fa = std::fabs(a.p), fb = std::fabs(b.p);
        if (fa != fb) return fa < fb;
        return a.p > b.p; // positive member first inside a pair
    });
    AtomicMeasure out;
    out.atoms_ = std::move(atoms);
    for (int i = 0; i + 1 < n; ++i) {
        if (out.atoms_[static_cast<std::size_t>(i)].p > 0.0 &&
            out.atoms_[static_cast<std::size_t>(i + 1)].p == -out.atoms_[static_cast<std::size_t>(i)].p)
            out.pair_heads_.push_back(i);
    }
    return out;
}

// Element of Sigma: atomic part plus a piecewise-constant density with
// compact support. density_values[i] is the density on
// [density_breaks[i], density_breaks[i+1]).
struct FiniteMeasure {
    AtomicMeasure atomic;
    std::vector<double> density_breaks;
    std::vector<double> density_values;

    FiniteMeasure() = default;
    FiniteMeasure(AtomicMeasure a) : atomic(std::move(a)) {} // NOLINT(google-explicit-constructor)

    static FiniteMeasure make(AtomicMeasure a, std::vector<double> breaks,
                              std::vector<double> values) {
        if (breaks.empty() != values.empty() ||
            (!breaks.empty() && breaks.size() != values.size() + 1))
            throw InvalidMeasure("density needs k+1 breaks for k values");
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            if (!(breaks[i] < breaks[i + 1]))
                throw InvalidMeasure("density breaks must be strictly increasing");
        for (double v : values)
            if (!(v >= 0.0)) throw InvalidMeasure("density values must be nonnegative");
        FiniteMeasure m;
        m.atomic = std::move(a);
        m.density_breaks = std::move(breaks);
        m.density_values = std::move(values);
        return m;
    }

    bool has_density() const { return !density_values.empty(); }

    double density_mass() const {
        double s = 0.0;
        for (std::size_t i = 0; i < density_values.size(); ++i)
            s += density_values[i] * (density_breaks[i + 1] - density_breaks[i]);
        return s;
    }
    double total_mass() const { return atomic.total_mass() + density_mass(); }

    double support_radius() const { // beta
        double b = atomic.max_rate();
        if (has_density())
            b = std::max({b, std::fabs(density_breaks.front()), std::fabs(density_breaks.back())});
        return b;
    }
};

inline AtomicMeasure reflect(const AtomicMeasure& sigma) {
    std::vector<Atom> atoms = sigma.atoms();
    for (auto& a : atoms) a.p = -a.p;
    return normalize_H(std::move(atoms));
}

inline FiniteMeasure reflect(const FiniteMeasure& sigma) {
    FiniteMeasure out;
    out.atomic = reflect(sigma.atomic);
    if (sigma.has_density()) {
        out.density_breaks.assign(sigma.density_breaks.rbegin(), sigma.density_breaks.rend());
        for (auto& b : out.density_breaks) b = -b;
        out.density_values.assign(sigma.density_values.rbegin(), sigma.density_values.rend());
    }
    return out;
}

// Integrand of R_sigma: (e^{zeta(x+y)} - e^{zeta|x-y|}) / (2 zeta), written as
// e^{zeta|x-y|} * expm1(2 zeta min(x,y)) / (2 zeta) so nothing cancels; the
// zeta -> 0 limit min(x,y) is taken through the series of expm1(w)/w.
inline double cov_kernel(double zeta, double x, double y) {
    const double d = std::fabs(x - y);
    const double twomin = x + y - d;
    const double w = zeta * twomin;
    double ratio;
    if (std::fabs(w) < 1e-8)
        ratio = 1.0 + w * (0.5 + w * (1.0 / 6.0 + w / 24.0));
    else
        ratio = std::expm1(w) / w;
    return std::exp(zeta * d) * ratio * 0.5 * twomin;
}

// R_sigma(x,y); atomic part summed exactly, density integrated piecewise.
inline double covariance(const FiniteMeasure& sigma, double x, double y) {
    if (x < 0.0 || y < 0.0)
        throw NegativeTime("covariance requires x,y >= 0");
    double r = 0.0;
    for (const auto& a : sigma.atomic.atoms()) r += a.c2 * cov_kernel(a.p, x, y);
    for (std::size_t i = 0; i < sigma.density_values.size(); ++i) {
        const double v = sigma.density_values[i];
        if (v == 0.0) continue;
        r += v * adaptive_simpson(
                     [&](double z) { return cov_kernel(z, x, y); },
                     sigma.density_breaks[i], sigma.density_breaks[i + 1], 1e-13);
    }
    return r;
}

inline double covariance(const AtomicMeasure& sigma, double x, double y) {
    return covariance(FiniteMeasure(sigma), x, y);
}

// sigma_n(dxi) = sum_{j=-n}^{n} sigma([j b/n, (j+1) b/n)) delta_{j b/n},
// b the support radius. Zero-mass cells are dropped.
inline AtomicMeasure discretize(const FiniteMeasure& sigma, int n) {
    if (n < 1) throw ValidationError("discretize requires n >= 1");
    const double beta = sigma.support_radius();
    if (beta == 0.0) return sigma.atomic; // everything already sits at 0
    std::vector<double> mass(static_cast<std::size_t>(2 * n + 1), 0.0);
    auto cell_of = [&](double p) {
        const double t = p * n / beta;
        const double r = std::round(t);
        const long j = (std::fabs(t - r) < 1e-9) ? static_cast<long>(r)
                                                 : static_cast<long>(std::floor(t));
        return std::clamp(j, static_cast<long>(-n), static_cast<long>(n));
    };
    for (const auto& a : sigma.atomic.atoms())
        mass[static_cast<std::size_t>(cell_of(a.p) + n)] += a.c2;
    for (std::size_t i = 0; i < sigma.density_values.size(); ++i) {
        const double v = sigma.density_values[i];
        if (v == 0.0) continue;
        const double lo = sigma.density_breaks[i], hi = sigma.density_breaks[i + 1];
        for (long j = -n; j <= n; ++j) {
            const double a = std::max(lo, j * beta / n);
            const double b = std::min(hi, (j + 1) * beta / n);
            if (b > a) mass[static_cast<std::size_t>(j + n)] += v * (b - a);
        }
    }
    std::vector<Atom> atoms;
    for (long j = -n; j <= n; ++j) {
        const double m = mass[static_cast<std::size_t>(j + n)];
        if (m > 0.0) atoms.push_back({static_cast<double>(j) * beta / n, m});
    }
    return normalize_H(std::move(atoms));
}

namespace detail {

// exp(-1/(1-t^2)) on (-1,1), normalized to unit mass by 33-point Gauss-Legendre.
inline double bump_raw(double t) {
    const double s = 1.0 - t * t;
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

inline double bump_norm() {
    static const double norm = gauss_legendre([](double t) { return bump_raw(t); }, -1.0, 1.0, 33);
    return norm;
}

// tabulated CDF of the normalized bump; cumulative Simpson on a grid fine
// enough that linear interpolation sits well below the 1e-8 mass tolerance,
// and cell masses still telescope exactly to the total
inline double bump_cdf(double t) {
    static const int n_nodes = 16385;
    static const std::vector<double> table = [] {
        std::vector<double> tab(n_nodes, 0.0);
        const double h = 2.0 / (n_nodes - 1);
        auto node = [&](int i) { return -1.0 + i * h; };
        for (int i = 1; i < n_nodes; ++i) {
            const double a = node(i - 1), b = node(i);
            tab[static_cast<std::size_t>(i)] =
                tab[static_cast<std::size_t>(i - 1)] +
                (b - a) / 6.0 *
                    (bump_raw(a) + 4.0 * bump_raw(0.5 * (a + b)) + bump_raw(b));
        }
        const double total = tab.back();
        for (double& v : tab) v /= total;
        return tab;
    }();
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double pos = (t + 1.0) / 2.0 * (n_nodes - 1);
    const int i = std::min(static_cast<int>(pos), n_nodes - 2);
    const double w = pos - i;
    return (1.0 - w) * table[static_cast<std::size_t>(i)] + w * table[static_cast<std::size_t>(i + 1)];
}

} // namespace detail

// Density-only measure with density g_n(xi)^2 = int n phi(n(xi - eta)) sigma(d eta),
// phi the standard bump, sampled as piecewise-constant with cell masses exact
// up to quadrature so the total mass is preserved.
inline FiniteMeasure mollify(const FiniteMeasure& sigma, int n) {
    if (n < 1) throw ValidationError("mollify requires n >= 1");
    const double beta = sigma.support_radius();
    const double lo = -beta - 1.0 / n, hi = beta + 1.0 / n;
    const int cells = std::clamp(static_cast<int>(std::ceil((hi - lo) * 8.0 * n)), 16, 4096);
    const double width = (hi - lo) / cells;

    std::vector<double> breaks(static_cast<std::size_t>(cells + 1));
    for (int k = 0; k <= cells; ++k) breaks[static_cast<std::size_t>(k)] = lo + k * width;
    std::vector<double> cellmass(static_cast<std::size_t>(cells), 0.0);

    for (int k = 0; k < cells; ++k) {
        const double a = breaks[static_cast<std::size_t>(k)], b = breaks[static_cast<std::size_t>(k + 1)];
        double m = 0.0;
        for (const auto& at : sigma.atomic.atoms())
            m += at.c2 * (detail::bump_cdf(n * (b - at.p)) - detail::bump_cdf(n * (a - at.p)));
        for (std::size_t i = 0; i < sigma.density_values.size(); ++i) {
            const double v = sigma.density_values[i];
            if (v == 0.0) continue;
            const double pa = std::max(sigma.density_breaks[i], a - 1.0 / n);
            const double pb = std::min(sigma.density_breaks[i + 1], b + 1.0 / n);
            if (pb <= pa) continue;
            m += v * adaptive_simpson(
                         [&](double eta) {
                             return detail::bump_cdf(n * (b - eta)) - detail::bump_cdf(n * (a - eta));
                         },
                         pa, pb, 1e-12);
        }
        cellmass[static_cast<std::size_t>(k)] = std::max(m, 0.0);
    }

    int first = 0, last = cells - 1;
    while (first < last && cellmass[static_cast<std::size_t>(first)] == 0.0) ++first;
    while (last > first && cellmass[static_cast<std::size_t>(last)] == 0.0) --last;
    std::vector<double> vb(breaks.begin() + first, breaks.begin() + last + 2);
    std::vector<double> vv;
    for (int k = first; k <= last; ++k)
        vv.push_back(cellmass[static_cast<std::size_t>(k)] / width);
    return FiniteMeasure::make(AtomicMeasure{}, std::move(vb), std::move(vv));
}

// sigma + mu: atoms concatenated (rates must stay distinct), densities added
// over the union of their breakpoints.
inline FiniteMeasure measure_sum(const FiniteMeasure& sigma, const FiniteMeasure& mu) {
    std::vector<Atom> atoms = sigma.atomic.atoms();
    const auto& other = mu.atomic.atoms();
    atoms.insert(atoms.end(), other.begin(), other.end());

    std::vector<double> breaks;
    for (const auto* m : {&sigma, &mu})
        breaks.insert(breaks.end(), m->density_breaks.begin(), m->density_breaks.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<double> values;
    auto value_at = [](const FiniteMeasure& m, double xi) {
        for (std::size_t i = 0; i < m.density_values.size(); ++i)
            if (m.density_breaks[i] <= xi && xi < m.density_breaks[i + 1])
                return m.density_values[i];
        return 0.0;
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
        values.push_back(value_at(sigma, mid) + value_at(mu, mid));
    }
    return FiniteMeasure::make(normalize_H(std::move(atoms)), std::move(breaks), std::move(values));
}

} // namespace relpot
