#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relpot/errors.hpp"
#include "relpot/measures.hpp"
#include "relpot/numerics.hpp"
#include "relpot/rng.hpp"

namespace relpot {

struct McConfig {
    std::int64_t n_paths = 100000;
    double dt = 1e-3;
    double T = 3.0;
    std::uint64_t seed = 42;
    int q_grid = 128;
};

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0; // sample sd / sqrt(n_paths), delta method where applicable
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
};

// Sheet-kernel specification, atomic strip form (a, b, alpha = {(p_j, d_j)}).
struct AtomicSheetSpec {
    double a = 0.0;
    double b = 0.0;
    std::vector<std::pair<double, double>> alpha;
};

// Density form: X_{a,g} with g piecewise-constant on the q-axis, vanishing
// outside [g_breaks.front(), g_breaks.back()); simulated on q_grid cells.
struct DensitySheetSpec {
    double a = 0.0;
    std::vector<double> g_breaks;
    std::vector<double> g_values;
    int q_grid = 128;
};

using CompoundOUSpec = std::variant<AtomicSheetSpec, DensitySheetSpec>;

struct KernelModulus {
    double K = 0.0;
    double T = 0.0;
};

namespace detail {

constexpr std::uint64_t kPlainOuTag = 0x9ec4f2a1d0b35c77ull;

struct OUComponent {
    double rate = 0.0;
    double weight = 0.0;
    std::uint64_t stream_key = 0; // addresses the sheet strip driving this factor
};

// Strips are identified by the bit patterns of their q-interval, so two specs
// built over the same seed share noise exactly when they share strips and are
// independent when their strips are disjoint. Partially overlapping strips of
// different widths are not modeled.
inline std::uint64_t strip_key(double q_lo, double q_hi) {
    return hash_combine(std::bit_cast<std::uint64_t>(q_lo), std::bit_cast<std::uint64_t>(q_hi));
}

inline std::vector<OUComponent> components(const AtomicSheetSpec& s) {
    if (s.alpha.empty()) throw ValidationError("atomic sheet spec needs at least one (p,d)");
    if (s.a < 0.0) throw ValidationError("sheet spec requires a >= 0");
    if (!(-s.a <= s.b) || !(s.b < s.alpha.front().first))
        throw ValidationError("strip layout requires -a <= b < p_1");
    for (std::size_t i = 0; i < s.alpha.size(); ++i)
        for (std::size_t j = i + 1; j < s.alpha.size(); ++j)
            if (s.alpha[i].first == s.alpha[j].first)
                throw ValidationError("strip rates must be distinct");
    std::vector<OUComponent> out;
    double q_prev = s.b + s.a, p_prev = s.b;
    for (const auto& [p, d] : s.alpha) {
        const double q_next = q_prev + std::fabs(p - p_prev);
        out.push_back({p, d, strip_key(q_prev, q_next)});
        q_prev = q_next;
        p_prev = p;
    }
    return out;
}

inline std::vector<OUComponent> components(const DensitySheetSpec& s) {
    if (s.a < 0.0) throw ValidationError("sheet spec requires a >= 0");
    if (s.g_breaks.size() != s.g_values.size() + 1 || s.g_values.empty())
        throw ValidationError("density sheet spec needs k+1 breaks for k values");
    if (s.g_breaks.front() < 0.0)
        throw ValidationError("density kernel g lives on the nonnegative q-axis");
    if (s.q_grid < 1) throw ValidationError("q_grid must be positive");
    for (std::size_t i = 0; i + 1 < s.g_breaks.size(); ++i)
        if (!(s.g_breaks[i] < s.g_breaks[i + 1]))
            throw ValidationError("g breaks must be strictly increasing");
    const double total = s.g_breaks.back() - s.g_breaks.front();
    std::vector<OUComponent> out;
    for (std::size_t i = 0; i < s.g_values.size(); ++i) {
        const double g = s.g_values[i];
        if (g == 0.0) continue;
        if (g < 0.0) throw ValidationError("g must be nonnegative");
        const double lo = s.g_breaks[i], hi = s.g_breaks[i + 1];
        const int cells =
            std::max(1, static_cast<int>(std::llround(s.q_grid * (hi - lo) / total)));
        const double dq = (hi - lo) / cells;
        for (int c = 0; c < cells; ++c) {
            const double qa = lo + c * dq, qb = lo + (c + 1) * dq;
            const double qc = 0.5 * (qa + qb);
            out.push_back({qc - s.a, g * std::sqrt(dq), strip_key(qa, qb)});
        }
    }
    if (out.empty()) throw ValidationError("density sheet spec has zero mass");
    return out;
}

inline std::vector<OUComponent> components(const CompoundOUSpec& spec) {
    return std::visit([](const auto& s) { return components(s); }, spec);
}

// Composite law of a density-plus-atoms measure: density strips at a = beta+1,
// atomic strips shifted right of them by one unit so the two sheet regions are
// disjoint and the summed process carries R_sigma.
struct MeasureComponents {
    std::vector<OUComponent> comps;
    double weight_sq_sum = 0.0; // total mass of the simulated (approximant) measure
    std::optional<DensitySheetSpec> density; // populated when a density part exists
};

inline MeasureComponents components_for_measure(const FiniteMeasure& sigma, int q_grid) {
    MeasureComponents out;
    if (sigma.has_density()) {
        const double beta_d =
            std::max(std::fabs(sigma.density_breaks.front()), std::fabs(sigma.density_breaks.back()));
        DensitySheetSpec ds;
        ds.a = beta_d + 1.0;
        ds.q_grid = q_grid;
        for (double b : sigma.density_breaks) ds.g_breaks.push_back(b + ds.a);
        for (double v : sigma.density_values) ds.g_values.push_back(std::sqrt(v));
        auto dc = components(ds);
        out.comps.insert(out.comps.end(), dc.begin(), dc.end());
        out.density = std::move(ds);
    }
    if (!sigma.atomic.empty()) {
        if (out.density) {
            AtomicSheetSpec as;
            const double m = sigma.atomic.max_rate();
            as.b = -(m + 1.0);
            as.a = out.density->g_breaks.back() + 1.0 - as.b;
            for (const auto& atom : sigma.atomic.atoms())
                as.alpha.emplace_back(atom.p, std::sqrt(atom.c2));
            auto ac = components(as);
            out.comps.insert(out.comps.end(), ac.begin(), ac.end());
        } else {
            // pure atomic law: the plain n-dimensional OU construction
            const auto& atoms = sigma.atomic.atoms();
            for (std::size_t j = 0; j < atoms.size(); ++j)
                out.comps.push_back(
                    {atoms[j].p, std::sqrt(atoms[j].c2), hash_combine(kPlainOuTag, j)});
        }
    }
    if (out.comps.empty()) throw InvalidMeasure("cannot simulate the zero measure");
    for (const auto& c : out.comps) out.weight_sq_sum += c.weight * c.weight;
    return out;
}

inline int checked_steps(double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) throw BadGrid("T and dt must be positive");
    const long k = std::llround(T / dt);
    if (k < 1 || std::fabs(k * dt - T) > 1e-12 * std::max(1.0, T))
        throw BadGrid("dt must divide T");
    return static_cast<int>(k);
}

struct Transition {
    double decay = 0.0; // e^{p dt}
    double sd = 0.0;    // sqrt((e^{2 p dt} - 1) / (2p)), dt at p = 0
};

inline std::vector<Transition> transitions(const std::vector<OUComponent>& comps, double dt) {
    std::vector<Transition> tr(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const double p = comps[i].rate;
        tr[i].decay = std::exp(p * dt);
        tr[i].sd = std::sqrt(p == 0.0 ? dt : std::expm1(2.0 * p * dt) / (2.0 * p));
    }
    return tr;
}

} // namespace detail

// Sampled ensemble on a uniform grid; values are row-major paths x gridpoints.
struct PathEnsemble {
    std::vector<double> time_grid;
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> values;
    std::vector<double> companion; // alpha(sigma) process over the same xi, optional

    double at(std::int64_t path, std::size_t k) const {
        return values[static_cast<std::size_t>(path) * time_grid.size() + k];
    }
    double companion_at(std::int64_t path, std::size_t k) const {
        return companion[static_cast<std::size_t>(path) * time_grid.size() + k];
    }
};

namespace detail {

inline PathEnsemble simulate_components(const std::vector<OUComponent>& comps, double T,
                                        double dt, std::int64_t n_paths, std::uint64_t seed,
                                        bool with_companion) {
    const int K = checked_steps(T, dt);
    if (static_cast<double>(n_paths) * (K + 1) > 5e7)
        throw ValidationError("ensemble too large to materialize; use the streaming estimators");
    PathEnsemble e;
    e.n_paths = n_paths;
    e.seed = seed;
    e.time_grid.resize(static_cast<std::size_t>(K + 1));
    for (int k = 0; k <= K; ++k) e.time_grid[static_cast<std::size_t>(k)] = k * dt;
    e.values.assign(static_cast<std::size_t>(n_paths) * (K + 1), 0.0);
    if (with_companion) e.companion.assign(e.values.size(), 0.0);

    const auto tr = transitions(comps, dt);
    const std::size_t nc = comps.size();
    std::vector<GaussianStream> streams;
    std::vector<double> xi(nc);
    for (std::int64_t path = 0; path < n_paths; ++path) {
        streams.clear();
        for (const auto& c : comps)
            streams.emplace_back(seed, static_cast<std::uint64_t>(path), c.stream_key);
        std::fill(xi.begin(), xi.end(), 0.0);
        double* row = &e.values[static_cast<std::size_t>(path) * (K + 1)];
        double* crow = with_companion ? &e.companion[static_cast<std::size_t>(path) * (K + 1)] : nullptr;
        for (int k = 1; k <= K; ++k) {
            double x = 0.0, xt = 0.0;
            for (std::size_t i = 0; i < nc; ++i) {
                xi[i] = tr[i].decay * xi[i] + tr[i].sd * streams[i].normal();
                x += comps[i].weight * xi[i];
                if (with_companion) xt += comps[i].rate * comps[i].weight * xi[i];
            }
            row[k] = x;
            if (crow) crow[k] = xt;
        }
    }
    return e;
}

} // namespace detail

// Exact n-dimensional OU simulation of X_sigma (and optionally the companion
// X_{alpha(sigma)} sharing the same xi); marginal law exact at grid points.
inline PathEnsemble simulate_ou(const AtomicMeasure& sigma, double T, double dt,
                                std::int64_t n_paths, std::uint64_t seed,
                                bool with_companion = false) {
    if (sigma.empty()) throw InvalidMeasure("simulate_ou of empty measure");
    const auto ms = detail::components_for_measure(FiniteMeasure(sigma), 1);
    return detail::simulate_components(ms.comps, T, dt, n_paths, seed, with_companion);
}

inline PathEnsemble simulate_sheet(const CompoundOUSpec& spec, double T, double dt,
                                   std::int64_t n_paths, std::uint64_t seed,
                                   bool with_companion = false) {
    return detail::simulate_components(detail::components(spec), T, dt, n_paths, seed,
                                       with_companion);
}

// Closed-form covariance of the simulated process (exact for atomic specs,
// exact covariance of the q-cell approximant for density specs).
inline double spec_covariance(const CompoundOUSpec& spec, double x, double y) {
    double r = 0.0;
    for (const auto& c : detail::components(spec))
        r += c.weight * c.weight * cov_kernel(c.rate, x, y);
    return r;
}

// L2 distance between the density kernel h_{a,g}(.,.;y) and its
// piecewise-constant-in-q simulation kernel; the z-integral is closed form,
// the remaining q-integral is smooth and done by fixed-order quadrature.
inline double kernel_l2_error(const DensitySheetSpec& s, double y) {
    auto i2 = [&](double w) { // int_0^y e^{sw} ds = (e^{yw}-1)/w
        const double t = y * w;
        if (std::fabs(t) < 1e-8) return y * (1.0 + t * (0.5 + t / 6.0));
        return std::expm1(t) / w;
    };
    double err2 = 0.0;
    const double total = s.g_breaks.back() - s.g_breaks.front();
    for (std::size_t i = 0; i < s.g_values.size(); ++i) {
        const double g = s.g_values[i];
        if (g == 0.0) continue;
        const double lo = s.g_breaks[i], hi = s.g_breaks[i + 1];
        const int cells =
            std::max(1, static_cast<int>(std::llround(s.q_grid * (hi - lo) / total)));
        const double dq = (hi - lo) / cells;
        for (int c = 0; c < cells; ++c) {
            const double qa = lo + c * dq, qb = qa + dq;
            const double v = 0.5 * (qa + qb) - s.a;
            err2 += g * g *
                    gauss_legendre(
                        [&](double q) {
                            const double u = q - s.a;
                            return i2(2.0 * u) - 2.0 * i2(u + v) + i2(2.0 * v);
                        },
                        qa, qb, 33);
        }
    }
    return std::sqrt(std::max(err2, 0.0));
}

// K_{alpha,T} = e^{2 T M}(1 + T^2 M^2) S  /  K_{a,g,T} = (1+(T0+a)^2 T^2) e^{2T(T0+a)} int g^2
inline KernelModulus kernel_modulus(const CompoundOUSpec& spec, double T) {
    KernelModulus km;
    km.T = T;
    if (const auto* at = std::get_if<AtomicSheetSpec>(&spec)) {
        double m = 0.0, s = 0.0;
        for (const auto& [p, d] : at->alpha) {
            m = std::max(m, std::fabs(p));
            s += d * d;
        }
        km.K = std::exp(2.0 * T * m) * (1.0 + T * T * m * m) * s;
    } else {
        const auto& dn = std::get<DensitySheetSpec>(spec);
        const double t0 = dn.g_breaks.back();
        double g2 = 0.0;
        for (std::size_t i = 0; i < dn.g_values.size(); ++i)
            g2 += dn.g_values[i] * dn.g_values[i] * (dn.g_breaks[i + 1] - dn.g_breaks[i]);
        km.K = (1.0 + (t0 + dn.a) * (t0 + dn.a) * T * T) * std::exp(2.0 * T * (t0 + dn.a)) * g2;
    }
    return km;
}

namespace detail {

struct FkSamples {
    // per recorded x: one entry per path
    std::vector<std::vector<double>> w;  // exp(-1/2 int_0^x X^2)
    std::vector<std::vector<double>> x_at;
    std::vector<std::vector<double>> xt_at;
};

// Streaming Feynman-Kac march: exact OU transitions, trapezoid for int X^2,
// per-path records of (w, X, X~) at the requested grid indices. Never
// materializes whole paths.
inline FkSamples fk_march(const std::vector<OUComponent>& comps, const std::vector<double>& xs,
                          const McConfig& cfg, bool with_companion) {
    (void)checked_steps(cfg.T, cfg.dt);
    std::vector<int> idx(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double x = xs[j];
        if (x < 0.0 || x > cfg.T + 1e-12) throw BadGrid("x outside [0, T]");
        const long k = std::llround(x / cfg.dt);
        if (std::fabs(k * cfg.dt - x) > 1e-9)
            throw BadGrid("x must lie on the dt-grid");
        idx[j] = static_cast<int>(k);
    }
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
    const int kmax = xs.empty() ? 0 : idx[order.back()];

    FkSamples out;
    out.w.assign(xs.size(), {});
    out.x_at.assign(xs.size(), {});
    out.xt_at.assign(xs.size(), {});
    for (auto& v : out.w) v.resize(static_cast<std::size_t>(cfg.n_paths));
    for (auto& v : out.x_at) v.resize(static_cast<std::size_t>(cfg.n_paths));
    if (with_companion)
        for (auto& v : out.xt_at) v.resize(static_cast<std::size_t>(cfg.n_paths));

    const auto tr = transitions(comps, cfg.dt);
    const std::size_t nc = comps.size();
    std::vector<GaussianStream> streams;
    std::vector<double> xi(nc);
    for (std::int64_t path = 0; path < cfg.n_paths; ++path) {
        streams.clear();
        for (const auto& c : comps)
            streams.emplace_back(cfg.seed, static_cast<std::uint64_t>(path), c.stream_key);
        std::fill(xi.begin(), xi.end(), 0.0);
        double run = 0.0; // sum of interior X_k^2 on the trapezoid grid
        std::size_t rec = 0;
        auto record = [&](int k, double x, double xt) {
            while (rec < order.size() && idx[order[rec]] == k) {
                const std::size_t j = order[rec++];
                const double integral = cfg.dt * (run + 0.5 * x * x);
                out.w[j][static_cast<std::size_t>(path)] = std::exp(-0.5 * integral);
                out.x_at[j][static_cast<std::size_t>(path)] = x;
                if (with_companion) out.xt_at[j][static_cast<std::size_t>(path)] = xt;
            }
        };
        record(0, 0.0, 0.0);
        for (int k = 1; k <= kmax; ++k) {
            double x = 0.0, xt = 0.0;
            for (std::size_t i = 0; i < nc; ++i) {
                xi[i] = tr[i].decay * xi[i] + tr[i].sd * streams[i].normal();
                x += comps[i].weight * xi[i];
                if (with_companion) xt += comps[i].rate * comps[i].weight * xi[i];
            }
            record(k, x, xt);
            run += x * x;
        }
    }
    return out;
}

inline McEstimate mean_estimate(const std::vector<double>& samples, const McConfig& cfg) {
    McEstimate e;
    e.n_paths = cfg.n_paths;
    e.seed = cfg.seed;
    // a degenerate sample (all paths identical, e.g. at x = 0) has no noise
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    if (*mn == *mx) {
        e.value = *mn;
        return e;
    }
    e.value = pairwise_mean(samples);
    e.stderr_ = sample_sd(samples, e.value) / std::sqrt(static_cast<double>(samples.size()));
    return e;
}

} // namespace detail

// log Phi_sigma(x) = log E[exp(-1/2 int_0^x X^2)], estimated as the log of the
// path average with delta-method standard error. All xs share one path
// ensemble, so the estimates are pathwise nonincreasing along increasing x.
inline std::vector<McEstimate> estimate_log_phi(const FiniteMeasure& sigma,
                                                const std::vector<double>& xs,
                                                const McConfig& cfg) {
    const auto ms = detail::components_for_measure(sigma, cfg.q_grid);
    auto samples = detail::fk_march(ms.comps, xs, cfg, false);
    std::vector<McEstimate> out;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        McEstimate e = detail::mean_estimate(samples.w[j], cfg);
        const double mean = e.value;
        e.value = std::log(mean);
        e.stderr_ = e.stderr_ / mean;
        out.push_back(e);
    }
    return out;
}

struct PhiDerivEstimates {
    McEstimate d1; // Phi'
    McEstimate d2; // Phi''
};

// Ito-expansion representations of the derivatives, estimated over shared
// paths:
//   Phi'(x)  = -1/2 E[X(x)^2 w],
//   Phi''(x) = -1/4 E[(2 sigma(R) + 4 X(x) X~(x) - X(x)^4) w],
// with the companion X~ built from the same xi with weights rate*weight.
inline std::vector<PhiDerivEstimates> estimate_phi_derivatives(const FiniteMeasure& sigma,
                                                               const std::vector<double>& xs,
                                                               const McConfig& cfg) {
    const auto ms = detail::components_for_measure(sigma, cfg.q_grid);
    auto samples = detail::fk_march(ms.comps, xs, cfg, true);
    std::vector<PhiDerivEstimates> out;
    std::vector<double> g(static_cast<std::size_t>(cfg.n_paths));
    for (std::size_t j = 0; j < xs.size(); ++j) {
        PhiDerivEstimates pd;
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double x = samples.x_at[j][p];
            g[p] = -0.5 * x * x * samples.w[j][p];
        }
        pd.d1 = detail::mean_estimate(g, cfg);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double x = samples.x_at[j][p], xt = samples.xt_at[j][p];
            g[p] = -0.25 * (2.0 * ms.weight_sq_sum + 4.0 * x * xt - x * x * x * x) *
                   samples.w[j][p];
        }
        pd.d2 = detail::mean_estimate(g, cfg);
        out.push_back(pd);
    }
    return out;
}

// Negative-axis functional via the reflection identity
// int_x^0 X_sigma^2 = int_0^{-x} X_{sigma~}^2 with sigma~(A) = sigma(-A).
inline std::vector<McEstimate> estimate_log_phi_negative(const AtomicMeasure& sigma,
                                                         const std::vector<double>& xs,
                                                         const McConfig& cfg) {
    std::vector<double> flipped;
    for (double x : xs) {
        if (x > 0.0) throw BadGrid("negative-axis estimator requires x <= 0");
        flipped.push_back(-x);
    }
    return estimate_log_phi(FiniteMeasure(reflect(sigma)), flipped, cfg);
}

struct MomentCheck {
    int order = 0;          // m, checking E[X^{2m}]
    double empirical = 0.0;
    double expected = 0.0;  // (2m)!/(2^m m!) Var^m
    double se = 0.0;
    double zscore = 0.0;
};

struct MomentReport {
    double y = 0.0;
    double variance = 0.0; // exact closed-form variance of the (approximant) kernel
    std::vector<MomentCheck> moments;
    double incr_s = 0.0, incr_t = 0.0;
    double incr_empirical = 0.0, incr_expected = 0.0, incr_se = 0.0, incr_zscore = 0.0;
};

// Wiener-integral Gaussianity check: empirical E[X(y)^{2m}] against
// (2m)!/(2^m m!) Var^m and the increment identity E|X(t)-X(s)|^2 =
// ||phi(.;t)-phi(.;s)||^2. Marginals are exact under the OU transition, so the
// march uses two coarse exact steps regardless of cfg.dt.
inline MomentReport gaussian_moment_check(const CompoundOUSpec& spec, double y, int m_max,
                                          const McConfig& cfg) {
    if (m_max < 1 || m_max > 4)
        throw ValidationError("gaussian_moment_check supports 1 <= m <= 4");
    if (!(y > 0.0)) throw BadGrid("y must be positive");
    const auto comps = detail::components(spec);
    const double s_half = 0.5 * y;

    MomentReport rep;
    rep.y = y;
    rep.incr_s = s_half;
    rep.incr_t = y;
    rep.variance = spec_covariance(spec, y, y);
    rep.incr_expected = spec_covariance(spec, y, y) - 2.0 * spec_covariance(spec, s_half, y) +
                        spec_covariance(spec, s_half, s_half);

    const auto tr = detail::transitions(comps, s_half);
    const std::size_t nc = comps.size();
    const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<std::vector<double>> pw(static_cast<std::size_t>(m_max),
                                        std::vector<double>(n));
    std::vector<double> incr(n);
    std::vector<GaussianStream> streams;
    std::vector<double> xi(nc);
    for (std::size_t path = 0; path < n; ++path) {
        streams.clear();
        for (const auto& c : comps) streams.emplace_back(cfg.seed, path, c.stream_key);
        std::fill(xi.begin(), xi.end(), 0.0);
        double x_half = 0.0, x_full = 0.0;
        for (int k = 0; k < 2; ++k) {
            double x = 0.0;
            for (std::size_t i = 0; i < nc; ++i) {
                xi[i] = tr[i].decay * xi[i] + tr[i].sd * streams[i].normal();
                x += comps[i].weight * xi[i];
            }
            (k == 0 ? x_half : x_full) = x;
        }
        double acc = 1.0;
        for (int m = 1; m <= m_max; ++m) {
            acc *= x_full * x_full;
            pw[static_cast<std::size_t>(m - 1)][path] = acc;
        }
        const double d = x_full - x_half;
        incr[path] = d * d;
    }

    double dfact = 1.0; // (2m-1)!! = (2m)!/(2^m m!)
    double varm = 1.0;
    for (int m = 1; m <= m_max; ++m) {
        dfact *= (2 * m - 1);
        varm *= rep.variance;
        MomentCheck mc;
        mc.order = m;
        const auto& v = pw[static_cast<std::size_t>(m - 1)];
        mc.empirical = pairwise_mean(v);
        mc.expected = dfact * varm;
        mc.se = sample_sd(v, mc.empirical) / std::sqrt(static_cast<double>(n));
        mc.zscore = mc.se > 0.0 ? (mc.empirical - mc.expected) / mc.se : 0.0;
        rep.moments.push_back(mc);
    }
    rep.incr_empirical = pairwise_mean(incr);
    rep.incr_se = sample_sd(incr, rep.incr_empirical) / std::sqrt(static_cast<double>(n));
    rep.incr_zscore =
        rep.incr_se > 0.0 ? (rep.incr_empirical - rep.incr_expected) / rep.incr_se : 0.0;
    return rep;
}

} // namespace relpot
