#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "relpot/errors.hpp"
#include "relpot/measures.hpp"
#include "relpot/potential.hpp"
#include "relpot/stochastic.hpp"

namespace relpot {

enum class ConvergeMode { closed_form, monte_carlo };

struct ConvergenceReport {
    std::vector<int> schedule;
    std::vector<double> x_grid;
    ConvergeMode mode = ConvergeMode::closed_form;
    std::vector<double> sup_diffs;            // sup_x |logPhi_{2n} - logPhi_n| per level pair
    std::vector<double> sup_diffs_d1, sup_diffs_d2; // same for Phi', Phi'' when requested
    std::vector<std::vector<double>> values;  // per level: logPhi over x_grid
    std::vector<std::vector<double>> stderrs; // monte_carlo mode only
    std::vector<std::vector<double>> d1, d2;  // per level when derivatives requested
};

namespace detail {

// Phi and its derivatives from closed-form log Phi via 4th-order stencils,
// one-sided next to x = 0 where the functional is not defined to the left.
struct PhiFdTable {
    double h = 1e-3;
    std::map<double, double> logphi; // x -> log Phi

    double phi(double x) const { return std::exp(logphi.at(x)); }

    static std::vector<double> stencil_points(double x, double h) {
        if (x < 2.0 * h) return {x, x + h, x + 2 * h, x + 3 * h, x + 4 * h, x + 5 * h};
        return {x - 2 * h, x - h, x, x + h, x + 2 * h};
    }

    double d1_at(double x) const {
        if (x < 2.0 * h)
            return (-25 * phi(x) + 48 * phi(x + h) - 36 * phi(x + 2 * h) + 16 * phi(x + 3 * h) -
                    3 * phi(x + 4 * h)) /
                   (12 * h);
        return (-phi(x + 2 * h) + 8 * phi(x + h) - 8 * phi(x - h) + phi(x - 2 * h)) / (12 * h);
    }

    double d2_at(double x) const {
        if (x < 2.0 * h)
            return (45 * phi(x) - 154 * phi(x + h) + 214 * phi(x + 2 * h) - 156 * phi(x + 3 * h) +
                    61 * phi(x + 4 * h) - 10 * phi(x + 5 * h)) /
                   (12 * h * h);
        return (-phi(x + 2 * h) + 16 * phi(x + h) - 30 * phi(x) + 16 * phi(x - h) -
                phi(x - 2 * h)) /
               (12 * h * h);
    }
};

} // namespace detail

// Convergence experiment: discretize (closed form) or mollify (Monte Carlo)
// along the schedule and report successive sup-differences of log Phi (and of
// Phi', Phi'' when requested) over the x-grid.
inline ConvergenceReport run_converge(const FiniteMeasure& sigma, std::vector<int> schedule,
                                      std::vector<double> x_grid, ConvergeMode mode,
                                      bool with_derivs = false, const McConfig& cfg = {}) {
    if (schedule.size() < 2) throw ValidationError("schedule needs at least two levels");
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
        if (!(schedule[i] < schedule[i + 1]))
            throw ValidationError("schedule must be strictly increasing");
    for (double x : x_grid)
        if (x < 0.0) throw NegativeTime("x grid must be nonnegative");

    ConvergenceReport rep;
    rep.schedule = schedule;
    rep.x_grid = x_grid;
    rep.mode = mode;

    for (int n : schedule) {
        if (mode == ConvergeMode::closed_form) {
            const AtomicMeasure sigma_n = discretize(sigma, n);
            detail::PhiFdTable tab;
            std::vector<double> pts;
            if (with_derivs) {
                for (double x : x_grid)
                    for (double q : detail::PhiFdTable::stencil_points(x, tab.h)) pts.push_back(q);
            } else {
                pts = x_grid;
            }
            std::sort(pts.begin(), pts.end());
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            const auto vals = LogPhiFlow(sigma_n).log_phi(pts);
            for (std::size_t i = 0; i < pts.size(); ++i) tab.logphi[pts[i]] = vals[i];

            std::vector<double> row, row1, row2;
            for (double x : x_grid) {
                row.push_back(tab.logphi.at(x));
                if (with_derivs) {
                    row1.push_back(tab.d1_at(x));
                    row2.push_back(tab.d2_at(x));
                }
            }
            rep.values.push_back(std::move(row));
            if (with_derivs) {
                rep.d1.push_back(std::move(row1));
                rep.d2.push_back(std::move(row2));
            }
        } else {
            const FiniteMeasure sigma_n = mollify(sigma, n);
            const auto est = estimate_log_phi(sigma_n, x_grid, cfg);
            std::vector<double> row, se;
            for (const auto& e : est) {
                row.push_back(e.value);
                se.push_back(e.stderr_);
            }
            rep.values.push_back(std::move(row));
            rep.stderrs.push_back(std::move(se));
            if (with_derivs) {
                const auto dv = estimate_phi_derivatives(sigma_n, x_grid, cfg);
                std::vector<double> row1, row2;
                for (const auto& d : dv) {
                    row1.push_back(d.d1.value);
                    row2.push_back(d.d2.value);
                }
                rep.d1.push_back(std::move(row1));
                rep.d2.push_back(std::move(row2));
            }
        }
    }

    auto sup_diff = [&](const std::vector<std::vector<double>>& tabs) {
        std::vector<double> out;
        for (std::size_t l = 0; l + 1 < tabs.size(); ++l) {
            double sup = 0.0;
            for (std::size_t i = 0; i < x_grid.size(); ++i)
                sup = std::max(sup, std::fabs(tabs[l + 1][i] - tabs[l][i]));
            out.push_back(sup);
        }
        return out;
    };
    rep.sup_diffs = sup_diff(rep.values);
    if (with_derivs) {
        rep.sup_diffs_d1 = sup_diff(rep.d1);
        rep.sup_diffs_d2 = sup_diff(rep.d2);
    }
    return rep;
}

} // namespace relpot
