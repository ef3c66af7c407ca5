#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relpot/errors.hpp"
#include "relpot/measures.hpp"

namespace relpot {

struct ScatteringEntry {
    double eta = 0.0; // bound-state parameter, 1/length
    double m = 0.0;   // norming constant
};

class ScatteringData {
public:
    ScatteringData() = default;

    static ScatteringData from(std::vector<ScatteringEntry> entries) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!(entries[i].eta > 0.0) || !(entries[i].m > 0.0))
                throw InvalidScatteringData("eta and m must be positive");
            if (i > 0 && !(entries[i - 1].eta < entries[i].eta))
                throw InvalidScatteringData("eta must be strictly increasing");
        }
        ScatteringData s;
        s.entries_ = std::move(entries);
        return s;
    }

    const std::vector<ScatteringEntry>& entries() const { return entries_; }
    int size() const { return static_cast<int>(entries_.size()); }

private:
    std::vector<ScatteringEntry> entries_;
};

namespace detail {

struct MergedPoles {
    std::vector<double> v; // distinct p^2, increasing
    std::vector<double> w; // pair-merged masses
};

inline MergedPoles merged_poles(const AtomicMeasure& sigma) {
    std::vector<std::pair<double, double>> ps;
    for (const auto& a : sigma.atoms()) ps.emplace_back(a.p * a.p, a.c2);
    std::sort(ps.begin(), ps.end());
    MergedPoles mp;
    for (const auto& [p2, c2] : ps) {
        if (!mp.v.empty() && p2 == mp.v.back())
            mp.w.back() += c2; // exact +/- pair, squares agree bitwise
        else {
            mp.v.push_back(p2);
            mp.w.push_back(c2);
        }
    }
    return mp;
}

} // namespace detail

// Roots of the secular equation sum_j c_j^2 / (r - p_j^2) = 1 with symmetric
// pairs merged. Exactly one root per gap between consecutive distinct p^2 and
// one above the largest; each satisfies |f(r) - 1| <= 1e-12.
inline std::vector<double> characteristic_roots(const AtomicMeasure& sigma) {
    if (sigma.empty()) throw InvalidMeasure("characteristic_roots of empty measure");
    const auto mp = detail::merged_poles(sigma);
    const int k = static_cast<int>(mp.v.size());
    const double total = sigma.total_mass();

    auto f = [&](double r) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += mp.w[static_cast<std::size_t>(i)] / (r - mp.v[static_cast<std::size_t>(i)]);
        return s;
    };
    auto df = [&](double r) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) {
            const double d = r - mp.v[static_cast<std::size_t>(i)];
            s -= mp.w[static_cast<std::size_t>(i)] / (d * d);
        }
        return s;
    };

    std::vector<double> roots;
    for (int i = 0; i < k; ++i) {
        const double lo = mp.v[static_cast<std::size_t>(i)];
        const double hi = (i + 1 < k) ? mp.v[static_cast<std::size_t>(i + 1)] : lo + total + 1.0;
        // f decreases from +inf across the interval; bracket f=1 from both sides
        double a = lo, b = hi;
        double eps = (hi - lo) * 0.25;
        while (f(lo + eps) < 1.0) eps *= 0.5;
        a = lo + eps;
        if (i + 1 < k) {
            eps = (hi - lo) * 0.25;
            while (f(hi - eps) > 1.0) eps *= 0.5;
            b = hi - eps;
        } else if (f(b) > 1.0) {
            throw NumericalError("secular upper bracket failed");
        }
        double r = 0.5 * (a + b);
        for (int it = 0; it < 200; ++it) {
            const double fr = f(r) - 1.0;
            if (fr > 0.0) a = r; else b = r;
            double rn = r - fr / df(r);
            if (!(rn > a && rn < b)) rn = 0.5 * (a + b); // Newton left the bracket
            if (std::fabs(f(r) - 1.0) <= 1e-13 || rn == r) break;
            r = rn;
        }
        if (std::fabs(f(r) - 1.0) > 1e-12) {
            // a root pinched inside an ulp-wide bracket means two poles
            // (or a pole and the root) nearly coincide
            if (b - a <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r))
                throw NearDegenerate("secular root pinched between nearly coincident poles");
            throw NumericalError("secular root refinement stalled");
        }
        roots.push_back(r);
    }
    return roots;
}

// The mapping psi-bar: eta's are the paired rates plus square roots of the
// secular roots; norming constants follow the two-branch product formula,
// accumulated in log magnitude plus sign.
inline ScatteringData forward_map(const AtomicMeasure& sigma) {
    const auto& atoms = sigma.atoms();
    const int n = sigma.size();
    if (n == 0) throw InvalidMeasure("forward_map of empty measure");

    const auto roots = characteristic_roots(sigma);
    struct EtaSrc {
        double eta;
        int pair_head; // -1 for secular roots
    };
    std::vector<EtaSrc> etas;
    for (int j : sigma.pair_heads()) etas.push_back({atoms[static_cast<std::size_t>(j)].p, j});
    for (double r : roots) etas.push_back({std::sqrt(r), -1});
    std::sort(etas.begin(), etas.end(), [](const EtaSrc& a, const EtaSrc& b) { return a.eta < b.eta; });

    // ill-conditioned products: an eta nearly coincides with an unrelated |p|
    for (const auto& es : etas) {
        for (int j = 0; j < n; ++j) {
            if (es.pair_head == j || es.pair_head + 1 == j) continue;
            if (std::fabs(es.eta - std::fabs(atoms[static_cast<std::size_t>(j)].p)) < 1e-10)
                throw NearDegenerate("eta within 1e-10 of an unpaired |p|");
        }
    }

    std::vector<ScatteringEntry> out;
    for (int i = 0; i < n; ++i) {
        const double eta = etas[static_cast<std::size_t>(i)].eta;
        const int head = etas[static_cast<std::size_t>(i)].pair_head;
        double lg = std::log(2.0 * eta);
        double sign = 1.0;
        auto mul = [&](double t) {
            lg += std::log(std::fabs(t));
            if (t < 0.0) sign = -sign;
        };
        for (int kk = 0; kk < n; ++kk) {
            if (kk == i) continue;
            const double ek = etas[static_cast<std::size_t>(kk)].eta;
            mul((ek + eta) / (ek - eta));
        }
        if (head >= 0) {
            lg += std::log(atoms[static_cast<std::size_t>(head + 1)].c2) -
                  std::log(atoms[static_cast<std::size_t>(head)].c2);
            for (int kk = 0; kk < n; ++kk) {
                if (kk == head || kk == head + 1) continue;
                mul((atoms[static_cast<std::size_t>(kk)].p + eta) / (atoms[static_cast<std::size_t>(kk)].p - eta));
            }
        } else {
            sign = -sign;
            for (int kk = 0; kk < n; ++kk)
                mul((atoms[static_cast<std::size_t>(kk)].p + eta) / (atoms[static_cast<std::size_t>(kk)].p - eta));
        }
        const double m = sign * std::exp(lg);
        if (!(m > 0.0) || !std::isfinite(m))
            throw NumericalError("norming constant m_" + std::to_string(i + 1) +
                                 " not positive/finite");
        out.push_back({eta, m});
    }
    return ScatteringData::from(std::move(out));
}

inline ScatteringData kdv_evolve(const ScatteringData& s, double t) {
    std::vector<ScatteringEntry> e = s.entries();
    for (auto& se : e) se.m *= std::exp(-2.0 * se.eta * se.eta * se.eta * t);
    return ScatteringData::from(std::move(e));
}

namespace detail {

// c_a^2 = -prod_j (p_a^2 - k_j^2) / prod_{b != a} (p_a^2 - p_b^2) from the
// polynomial identity; valid with symmetric pairs counted as two atoms.
inline std::vector<double> residue_masses(const std::vector<double>& p2,
                                          const std::vector<double>& kap2) {
    const std::size_t n = p2.size();
    std::vector<double> c2(n);
    for (std::size_t a = 0; a < n; ++a) {
        double num = 1.0;
        for (double k2 : kap2) num *= (p2[a] - k2);
        double den = 1.0;
        for (std::size_t b = 0; b < n; ++b)
            if (b != a) den *= (p2[a] - p2[b]);
        c2[a] = -num / den;
    }
    return c2;
}

struct InverseProblem {
    std::vector<double> kappa, kap2, m_target;
    int n = 0;

    std::optional<Eigen::VectorXd> residual(const std::vector<Atom>& atoms) const {
        AtomicMeasure cand;
        ScatteringData s;
        try {
            cand = normalize_H(atoms);
            s = forward_map(cand);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (s.size() != n) return std::nullopt;
        Eigen::VectorXd F(n);
        for (int i = 0; i < n; ++i) {
            const auto& e = s.entries()[static_cast<std::size_t>(i)];
            if (std::fabs(e.eta - kappa[static_cast<std::size_t>(i)]) >
                1e-6 * std::max(1.0, kappa[static_cast<std::size_t>(i)]))
                return std::nullopt;
            F(i) = (e.m - m_target[static_cast<std::size_t>(i)]) / m_target[static_cast<std::size_t>(i)];
        }
        return F;
    }
};

// Plain ansatz: |p_a| in (kappa_{a-1}, kappa_a), signs fixed by the pattern,
// masses eliminated through residue_masses.
struct PlainAnsatz {
    const InverseProblem* prob;
    std::vector<int> signs;
    std::vector<double> lo, hi;

    std::optional<std::vector<Atom>> atoms_of(const std::vector<double>& y) const {
        // nearly coincident |p| only makes sense as an exact pair, which the
        // paired ansatz owns; treat it as off-limits here so the line search
        // backs away from bracket corners instead of getting trapped
        for (std::size_t a = 0; a + 1 < y.size(); ++a)
            if (y[a + 1] - y[a] < 1e-7 * std::max(1.0, y[a])) return std::nullopt;
        std::vector<double> p2(y.size());
        for (std::size_t a = 0; a < y.size(); ++a) p2[a] = y[a] * y[a];
        auto c2 = residue_masses(p2, prob->kap2);
        std::vector<Atom> atoms(y.size());
        for (std::size_t a = 0; a < y.size(); ++a) {
            if (!(c2[a] > 0.0) || !std::isfinite(c2[a])) return std::nullopt;
            atoms[a] = {y[a] == 0.0 ? 0.0 : signs[a] * y[a], c2[a]};
        }
        return atoms;
    }
};

// Paired ansatz: slots (a, a+1) frozen at +/- kappa_a for each a in pair_at;
// the pair's total mass comes from the residue of the polynomial identity and
// only its split rho stays unknown.
struct PairedAnsatz {
    const InverseProblem* prob;
    std::vector<int> pair_at;   // slot indices a, pair occupying (a, a+1)
    std::vector<int> free_slot; // remaining slots, one |p| unknown each
    std::vector<int> signs;     // per free slot
    std::vector<double> lo, hi; // per free slot

    std::optional<std::vector<Atom>> atoms_of(const std::vector<double>& u) const {
        const int n = prob->n;
        std::vector<double> p2(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < free_slot.size(); ++i)
            p2[static_cast<std::size_t>(free_slot[i])] = u[i] * u[i];
        for (int a : pair_at) {
            p2[static_cast<std::size_t>(a)] = prob->kap2[static_cast<std::size_t>(a)];
            p2[static_cast<std::size_t>(a + 1)] = prob->kap2[static_cast<std::size_t>(a)];
        }
        std::vector<Atom> atoms(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < free_slot.size(); ++i) {
            const int a = free_slot[i];
            double num = 1.0;
            for (double k2 : prob->kap2) num *= (p2[static_cast<std::size_t>(a)] - k2);
            double den = 1.0;
            for (int b = 0; b < n; ++b)
                if (b != a) den *= (p2[static_cast<std::size_t>(a)] - p2[static_cast<std::size_t>(b)]);
            const double c2 = -num / den;
            if (!(c2 > 0.0) || !std::isfinite(c2)) return std::nullopt;
            atoms[static_cast<std::size_t>(a)] = {u[i] == 0.0 ? 0.0 : signs[i] * u[i], c2};
        }
        for (std::size_t q = 0; q < pair_at.size(); ++q) {
            const int a = pair_at[q];
            double num = 1.0;
            for (int j = 0; j < n; ++j)
                if (j != a) num *= (prob->kap2[static_cast<std::size_t>(a)] - prob->kap2[static_cast<std::size_t>(j)]);
            double den = 1.0;
            for (int b = 0; b < n; ++b)
                if (b != a && b != a + 1) den *= (prob->kap2[static_cast<std::size_t>(a)] - p2[static_cast<std::size_t>(b)]);
            const double tot = -num / den;
            const double rho = u[free_slot.size() + q];
            if (!(tot > 0.0) || !std::isfinite(tot)) return std::nullopt;
            atoms[static_cast<std::size_t>(a)] = {prob->kappa[static_cast<std::size_t>(a)], rho * tot};
            atoms[static_cast<std::size_t>(a + 1)] = {-prob->kappa[static_cast<std::size_t>(a)], (1.0 - rho) * tot};
        }
        return atoms;
    }
};

// Damped, box-clamped Newton with forward-difference Jacobian on the relative
// m-residual. Returns the solution atoms, or the final iterate on stall so
// the caller can inspect boundary proximity.
template <class Ansatz>
struct NewtonOutcome {
    bool converged = false;
    std::vector<double> last;
    std::optional<std::vector<Atom>> atoms;
};

template <class Ansatz>
NewtonOutcome<Ansatz> newton_solve(const Ansatz& ans, std::vector<double> u,
                                   const std::vector<double>& lo,
                                   const std::vector<double>& hi,
                                   const std::vector<bool>& lo_open) {
    const InverseProblem& prob = *ans.prob;
    const int n = prob.n;
    const std::size_t nu = u.size();
    NewtonOutcome<Ansatz> out;

    auto clamp_vec = [&](std::vector<double>& v) {
        for (std::size_t i = 0; i < nu; ++i) {
            const double pad = 1e-9 * std::max(1.0, hi[i] - lo[i]);
            const double l = lo_open[i] ? lo[i] + pad : lo[i];
            v[i] = std::clamp(v[i], l, hi[i] - pad);
        }
    };
    auto eval = [&](const std::vector<double>& v) -> std::optional<Eigen::VectorXd> {
        auto atoms = ans.atoms_of(v);
        if (!atoms) return std::nullopt;
        return prob.residual(*atoms);
    };

    clamp_vec(u);
    auto F = eval(u);
    for (int it = 0; it < 80 && F; ++it) {
        const double nF = F->template lpNorm<Eigen::Infinity>();
        if (nF < 1e-11) {
            out.converged = true;
            out.atoms = ans.atoms_of(u);
            out.last = u;
            return out;
        }
        Eigen::MatrixXd J(n, nu);
        bool jac_ok = true;
        for (std::size_t a = 0; a < nu; ++a) {
            double h = 1e-7 * std::max(1.0, std::fabs(u[a]));
            std::vector<double> up = u;
            up[a] = std::min(u[a] + h, hi[a] - 1e-12);
            auto Fp = eval(up);
            if (!Fp) {
                up[a] = std::max(u[a] - h, lo[a] + (lo_open[a] ? 1e-12 : 0.0));
                Fp = eval(up);
                if (!Fp) { jac_ok = false; break; }
            }
            const double dh = up[a] - u[a];
            if (dh == 0.0) { jac_ok = false; break; }
            J.col(static_cast<Eigen::Index>(a)) = (*Fp - *F) / dh;
        }
        if (!jac_ok) break;
        const Eigen::VectorXd du = J.colPivHouseholderQr().solve(-*F);
        if (!du.allFinite()) break;

        double t = 1.0;
        bool stepped = false;
        for (int ls = 0; ls < 30; ++ls) {
            std::vector<double> un = u;
            for (std::size_t a = 0; a < nu; ++a) un[a] += t * du(static_cast<Eigen::Index>(a));
            clamp_vec(un);
            auto Fn = eval(un);
            if (Fn && Fn->template lpNorm<Eigen::Infinity>() < nF) {
                u = std::move(un);
                F = std::move(Fn);
                stepped = true;
                break;
            }
            t *= 0.5;
        }
        if (!stepped) break; // stalled; boundary inspection happens upstream
    }
    out.last = u;
    return out;
}

} // namespace detail

// Numerical inverse of forward_map: Newton on |p_a| inside the bracket
// [kappa_{a-1}, kappa_a], multi-start over the 2^n sign patterns, masses
// eliminated via residues of the polynomial identity. Iterates pinned to an
// upper bracket endpoint trigger the explicit symmetric-pair ansatz.
inline AtomicMeasure inverse_map(const ScatteringData& s) {
    const int n = s.size();
    if (n == 0) throw InvalidScatteringData("empty scattering data");
    detail::InverseProblem prob;
    prob.n = n;
    for (const auto& e : s.entries()) {
        prob.kappa.push_back(e.eta);
        prob.kap2.push_back(e.eta * e.eta);
        prob.m_target.push_back(e.m);
    }
    std::vector<double> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        lo[static_cast<std::size_t>(a)] = (a == 0) ? 0.0 : prob.kappa[static_cast<std::size_t>(a - 1)];
        hi[static_cast<std::size_t>(a)] = prob.kappa[static_cast<std::size_t>(a)];
    }

    auto accept = [&](const std::vector<Atom>& atoms) -> std::optional<AtomicMeasure> {
        AtomicMeasure cand;
        ScatteringData fwd;
        try {
            cand = normalize_H(atoms);
            fwd = forward_map(cand);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (fwd.size() != n) return std::nullopt;
        for (int i = 0; i < n; ++i) {
            const auto& got = fwd.entries()[static_cast<std::size_t>(i)];
            const auto& want = s.entries()[static_cast<std::size_t>(i)];
            if (std::fabs(got.eta - want.eta) > 1e-8 * std::max(1.0, want.eta)) return std::nullopt;
            if (std::fabs(got.m - want.m) > 1e-8 * want.m) return std::nullopt;
        }
        return cand;
    };

    const std::vector<bool> lo_open_plain = [&] {
        std::vector<bool> v(static_cast<std::size_t>(n), true);
        v[0] = false; // |p_1| may sit exactly at kappa_0 = 0
        return v;
    }();

    for (long bits = 0; bits < (1L << n); ++bits) {
        detail::PlainAnsatz ans;
        ans.prob = &prob;
        ans.lo = lo;
        ans.hi = hi;
        ans.signs.resize(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            ans.signs[static_cast<std::size_t>(a)] = ((bits >> a) & 1) ? -1 : 1;

        detail::NewtonOutcome<detail::PlainAnsatz> outcome;
        std::vector<bool> near_kappa(static_cast<std::size_t>(n), false);
        for (double frac : {0.5, 0.3, 0.8}) {
            std::vector<double> y0(static_cast<std::size_t>(n));
            for (int a = 0; a < n; ++a)
                y0[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] +
                                                  frac * (hi[static_cast<std::size_t>(a)] -
                                                          lo[static_cast<std::size_t>(a)]);
            outcome = detail::newton_solve(ans, y0, lo, hi, lo_open_plain);
            if (outcome.converged) break;
            // iterates pinned near kappa_a, from either side, hint at a pair there
            for (int a = 0; a + 1 < n; ++a) {
                const double span_a = hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)];
                const double span_b = hi[static_cast<std::size_t>(a + 1)] - lo[static_cast<std::size_t>(a + 1)];
                if (hi[static_cast<std::size_t>(a)] - outcome.last[static_cast<std::size_t>(a)] < 0.1 * span_a ||
                    outcome.last[static_cast<std::size_t>(a + 1)] - lo[static_cast<std::size_t>(a + 1)] < 0.1 * span_b)
                    near_kappa[static_cast<std::size_t>(a)] = true;
            }
        }
        if (outcome.converged && outcome.atoms) {
            if (auto got = accept(*outcome.atoms)) return *got;
        }

        std::vector<int> candidates;
        for (int a = 0; a + 1 < n; ++a)
            if (near_kappa[static_cast<std::size_t>(a)]) candidates.push_back(a);
        // try every non-overlapping subset of candidate pair positions
        const int nc = static_cast<int>(candidates.size());
        for (int sub = 1; sub < (1 << nc); ++sub) {
            std::vector<int> pair_at;
            bool overlap = false;
            for (int q = 0; q < nc; ++q) {
                if (!((sub >> q) & 1)) continue;
                if (!pair_at.empty() && candidates[static_cast<std::size_t>(q)] <= pair_at.back() + 1)
                    overlap = true;
                pair_at.push_back(candidates[static_cast<std::size_t>(q)]);
            }
            if (overlap) continue;

            detail::PairedAnsatz pans;
            pans.prob = &prob;
            pans.pair_at = pair_at;
            std::vector<bool> in_pair(static_cast<std::size_t>(n), false);
            for (int a : pair_at) {
                in_pair[static_cast<std::size_t>(a)] = true;
                in_pair[static_cast<std::size_t>(a + 1)] = true;
            }
            for (int a = 0; a < n; ++a)
                if (!in_pair[static_cast<std::size_t>(a)]) pans.free_slot.push_back(a);

            std::vector<double> u0, plo, phi;
            std::vector<bool> lopen;
            for (int a : pans.free_slot) {
                pans.signs.push_back(((bits >> a) & 1) ? -1 : 1);
                u0.push_back(0.5 * (lo[static_cast<std::size_t>(a)] + hi[static_cast<std::size_t>(a)]));
                plo.push_back(lo[static_cast<std::size_t>(a)]);
                phi.push_back(hi[static_cast<std::size_t>(a)]);
                lopen.push_back(a != 0);
            }
            for (std::size_t q = 0; q < pair_at.size(); ++q) {
                u0.push_back(0.5);
                plo.push_back(0.0);
                phi.push_back(1.0);
                lopen.push_back(true);
            }
            auto po = detail::newton_solve(pans, u0, plo, phi, lopen);
            if (po.converged && po.atoms) {
                if (auto got = accept(*po.atoms)) return *got;
            }
        }
    }
    throw NoConvergence("inverse_map: no sign pattern converged");
}

} // namespace relpot
