// relpot: reflectionless potentials from spectral measures.
//
// Subcommands: scatter fwd|inv, potential eval, kdv evolve|residual,
// mc logphi|derivs|negative|moments, converge, spectrum eigs|bound.
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relpot/converge.hpp"
#include "relpot/json_io.hpp"
#include "relpot/measures.hpp"
#include "relpot/potential.hpp"
#include "relpot/scattering.hpp"
#include "relpot/spectrum.hpp"
#include "relpot/stochastic.hpp"

namespace {

using namespace relpot;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json parse_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("JSON parse error in ") + path + ": " + e.what());
    }
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot open output file: " + out_path);
    out << text;
}

std::vector<double> parse_grid(const std::string& spec) {
    double lo = 0, hi = 0;
    int count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(spec);
    if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ',' || c2 != ',' || count < 2)
        throw ValidationError("--grid expects lo,hi,count with count >= 2");
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * i / (count - 1));
    return g;
}

std::vector<double> gather_xs(const std::vector<double>& xs, const std::string& grid) {
    std::vector<double> out = xs;
    if (!grid.empty()) {
        auto g = parse_grid(grid);
        out.insert(out.end(), g.begin(), g.end());
    }
    if (out.empty()) throw ValidationError("no evaluation points: pass --x and/or --grid");
    return out;
}

struct McFlags {
    std::int64_t n_paths = 100000;
    double dt = 1e-3;
    std::uint64_t seed = 42;
    int q_grid = 128;

    void attach(CLI::App* cmd) {
        cmd->add_option("--n-paths", n_paths, "Monte Carlo path count");
        cmd->add_option("--dt", dt, "time step of the OU grid");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--q-grid", q_grid, "q-axis cells for density kernels");
    }

    // T: smallest dt-multiple covering the requested points
    McConfig config(double x_max) const {
        McConfig cfg;
        cfg.n_paths = n_paths;
        cfg.dt = dt;
        cfg.seed = seed;
        cfg.q_grid = q_grid;
        cfg.T = std::max(1.0, std::ceil(x_max / dt - 1e-9)) * dt;
        return cfg;
    }
};

std::string csv_mc(const std::vector<double>& xs, const std::vector<McEstimate>& est) {
    std::string s = "x,value,stderr,n_paths,seed\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s += format_g17(xs[i]) + "," + format_g17(est[i].value) + "," +
             format_g17(est[i].stderr_) + "," + std::to_string(est[i].n_paths) + "," +
             std::to_string(est[i].seed) + "\n";
    }
    return s;
}

// sampled potential from a CSV file with columns x,u (header optional),
// linearly interpolated and clamped at the ends
std::function<double(double)> potential_from_csv(const std::string& path) {
    auto text = read_file(path);
    std::istringstream in(text);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double x, u;
        char comma;
        if (ls >> x >> comma >> u) pts.emplace_back(x, u);
    }
    if (pts.size() < 2) throw ValidationError("potential CSV needs at least two x,u rows");
    std::sort(pts.begin(), pts.end());
    return [pts](double x) {
        if (x <= pts.front().first) return pts.front().second;
        if (x >= pts.back().first) return pts.back().second;
        auto it = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -1e300));
        const auto [x1, u1] = *it;
        const auto [x0, u0] = *(it - 1);
        return u0 + (u1 - u0) * (x - x0) / (x1 - x0);
    };
}

int run(int argc, char** argv) {
    CLI::App app{"reflectionless potentials from spectral measures"};
    app.set_help_flag("--help", "print help"); // keep -h free for the grid step flag
    app.require_subcommand(1);

    std::string in_path, out_path, grid_spec, mode_str = "closed_form";
    std::vector<double> xs, ts;
    double t = 0.0, y = 1.0, eps = 0.05, box_l = 15.0, box_h = 5e-3;
    int k_eigs = 2, m_max = 3;
    std::vector<int> schedule;
    std::optional<double> limit_mass;
    bool with_derivs = false;
    McFlags mc;

    // scatter
    auto* scatter = app.add_subcommand("scatter", "forward/inverse scattering maps");
    auto* sfwd = scatter->add_subcommand("fwd", "measure -> scattering data");
    sfwd->add_option("--in", in_path)->required();
    sfwd->add_option("--out", out_path);
    auto* sinv = scatter->add_subcommand("inv", "scattering data -> measure");
    sinv->add_option("--in", in_path)->required();
    sinv->add_option("--out", out_path);

    // potential
    auto* pot = app.add_subcommand("potential", "reflectionless potential evaluation");
    auto* peval = pot->add_subcommand("eval", "emit x,u,u1,u2,u3 over points");
    peval->add_option("--in", in_path)->required();
    peval->add_option("--out", out_path);
    peval->add_option("--x", xs)->delimiter(',');
    peval->add_option("--grid", grid_spec, "lo,hi,count");

    // kdv
    auto* kdv = app.add_subcommand("kdv", "KdV flow on scattering data");
    auto* kevolve = kdv->add_subcommand("evolve", "evolve norming constants");
    kevolve->add_option("--in", in_path)->required();
    kevolve->add_option("--out", out_path);
    kevolve->add_option("--t", t)->required();
    auto* kres = kdv->add_subcommand("residual", "PDE residual of v = -u_{s(t)}");
    kres->add_option("--in", in_path)->required();
    kres->add_option("--out", out_path);
    kres->add_option("--x", xs)->delimiter(',');
    kres->add_option("--grid", grid_spec, "lo,hi,count");
    kres->add_option("--t", ts, "time points")->delimiter(',')->required();

    // mc
    auto* mcmd = app.add_subcommand("mc", "Monte Carlo estimators");
    auto* mlog = mcmd->add_subcommand("logphi", "log Phi_sigma over x points");
    mlog->add_option("--in", in_path)->required();
    mlog->add_option("--out", out_path);
    mlog->add_option("--x", xs)->delimiter(',');
    mlog->add_option("--grid", grid_spec);
    mc.attach(mlog);
    auto* mder = mcmd->add_subcommand("derivs", "Phi', Phi'' over x points");
    mder->add_option("--in", in_path)->required();
    mder->add_option("--out", out_path);
    mder->add_option("--x", xs)->delimiter(',');
    mder->add_option("--grid", grid_spec);
    mc.attach(mder);
    auto* mneg = mcmd->add_subcommand("negative", "log Phi on the negative axis");
    mneg->add_option("--in", in_path)->required();
    mneg->add_option("--out", out_path);
    mneg->add_option("--x", xs)->delimiter(',');
    mc.attach(mneg);
    auto* mmom = mcmd->add_subcommand("moments", "Gaussian moment checks of a sheet spec");
    mmom->add_option("--in", in_path)->required();
    mmom->add_option("--out", out_path);
    mmom->add_option("--y", y, "evaluation time");
    mmom->add_option("--m", m_max, "highest moment order (E[X^{2m}])");
    mc.attach(mmom);

    // converge
    auto* conv = app.add_subcommand("converge", "discretization convergence experiment");
    conv->add_option("--in", in_path)->required();
    conv->add_option("--out", out_path);
    conv->add_option("--schedule", schedule)->delimiter(',')->required();
    conv->add_option("--grid", grid_spec)->required();
    conv->add_option("--mode", mode_str, "closed_form | monte_carlo");
    conv->add_flag("--derivs", with_derivs, "also track Phi' and Phi''");
    mc.attach(conv);

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "Schrodinger eigenvalue checks");
    auto* seigs = spec->add_subcommand("eigs", "lowest k Dirichlet eigenvalues");
    seigs->add_option("--in", in_path, "scattering JSON or sampled x,u CSV")->required();
    seigs->add_option("--out", out_path);
    seigs->add_option("--L", box_l, "half width of the box");
    seigs->add_option("--h", box_h, "grid step");
    seigs->add_option("--k", k_eigs, "eigenvalue count");
    auto* sbound = spec->add_subcommand("bound", "spectral inclusion checks");
    sbound->add_option("--in", in_path)->required();
    sbound->add_option("--out", out_path);
    sbound->add_option("--schedule", schedule, "discretization levels")->delimiter(',');
    sbound->add_option("--eps", eps);
    sbound->add_option("--limit-mass", limit_mass, "limit sigma(R), defaults to last element");
    sbound->add_option("--L", box_l);
    sbound->add_option("--h", box_h);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (sfwd->parsed()) {
        auto sigma = measure_from_json(parse_json(in_path));
        if (sigma.has_density())
            throw ValidationError("scatter fwd expects a purely atomic measure");
        write_output(out_path, scattering_to_json(forward_map(sigma.atomic)).dump(2) + "\n");
    } else if (sinv->parsed()) {
        auto s = scattering_from_json(parse_json(in_path));
        write_output(out_path, measure_to_json(FiniteMeasure(inverse_map(s))).dump(2) + "\n");
    } else if (peval->parsed()) {
        auto s = scattering_from_json(parse_json(in_path));
        GramEvaluator g(s);
        std::string csv = "x,u,u1,u2,u3\n";
        for (double x : gather_xs(xs, grid_spec)) {
            const auto d = g.evaluate(x);
            csv += format_g17(x) + "," + format_g17(d.u) + "," + format_g17(d.u1) + "," +
                   format_g17(d.u2) + "," + format_g17(d.u3) + "\n";
        }
        write_output(out_path, csv);
    } else if (kevolve->parsed()) {
        auto s = scattering_from_json(parse_json(in_path));
        write_output(out_path, scattering_to_json(kdv_evolve(s, t)).dump(2) + "\n");
    } else if (kres->parsed()) {
        auto s = scattering_from_json(parse_json(in_path));
        std::string csv = "x,t,residual\n";
        for (double tt : ts)
            for (double x : gather_xs(xs, grid_spec))
                csv += format_g17(x) + "," + format_g17(tt) + "," +
                       format_g17(kdv_residual(s, x, tt)) + "\n";
        write_output(out_path, csv);
    } else if (mlog->parsed()) {
        auto sigma = measure_from_json(parse_json(in_path));
        auto pts = gather_xs(xs, grid_spec);
        auto cfg = mc.config(*std::max_element(pts.begin(), pts.end()));
        auto est = estimate_log_phi(sigma, pts, cfg);
        std::string csv = csv_mc(pts, est);
        if (sigma.has_density()) {
            const auto ms = detail::components_for_measure(sigma, cfg.q_grid);
            csv += "# density_kernel_l2_error," +
                   format_g17(kernel_l2_error(*ms.density,
                                              *std::max_element(pts.begin(), pts.end()))) +
                   "\n";
        }
        write_output(out_path, csv);
    } else if (mder->parsed()) {
        auto sigma = measure_from_json(parse_json(in_path));
        auto pts = gather_xs(xs, grid_spec);
        auto cfg = mc.config(*std::max_element(pts.begin(), pts.end()));
        auto est = estimate_phi_derivatives(sigma, pts, cfg);
        std::string csv = "x,phi1,phi1_stderr,phi2,phi2_stderr,n_paths,seed\n";
        for (std::size_t i = 0; i < pts.size(); ++i)
            csv += format_g17(pts[i]) + "," + format_g17(est[i].d1.value) + "," +
                   format_g17(est[i].d1.stderr_) + "," + format_g17(est[i].d2.value) + "," +
                   format_g17(est[i].d2.stderr_) + "," + std::to_string(cfg.n_paths) + "," +
                   std::to_string(cfg.seed) + "\n";
        write_output(out_path, csv);
    } else if (mneg->parsed()) {
        auto sigma = measure_from_json(parse_json(in_path));
        if (sigma.has_density())
            throw ValidationError("mc negative expects a purely atomic measure");
        if (xs.empty()) throw ValidationError("pass --x with nonpositive points");
        double far = 0.0;
        for (double x : xs) far = std::max(far, -x);
        auto cfg = mc.config(far);
        auto est = estimate_log_phi_negative(sigma.atomic, xs, cfg);
        write_output(out_path, csv_mc(xs, est));
    } else if (mmom->parsed()) {
        auto spec_j = sheet_spec_from_json(parse_json(in_path));
        auto cfg = mc.config(y);
        auto rep = gaussian_moment_check(spec_j, y, m_max, cfg);
        nlohmann::json j;
        j["y"] = rep.y;
        j["variance"] = rep.variance;
        for (const auto& m : rep.moments)
            j["moments"].push_back({{"m", m.order},
                                    {"empirical", m.empirical},
                                    {"expected", m.expected},
                                    {"stderr", m.se},
                                    {"zscore", m.zscore}});
        j["increment"] = {{"s", rep.incr_s},
                          {"t", rep.incr_t},
                          {"empirical", rep.incr_empirical},
                          {"expected", rep.incr_expected},
                          {"stderr", rep.incr_se},
                          {"zscore", rep.incr_zscore}};
        write_output(out_path, j.dump(2) + "\n");
    } else if (conv->parsed()) {
        auto sigma = measure_from_json(parse_json(in_path));
        const auto grid = parse_grid(grid_spec);
        ConvergeMode mode;
        if (mode_str == "closed_form") mode = ConvergeMode::closed_form;
        else if (mode_str == "monte_carlo") mode = ConvergeMode::monte_carlo;
        else throw ValidationError("--mode must be closed_form or monte_carlo");
        auto cfg = mc.config(*std::max_element(grid.begin(), grid.end()));
        auto rep = run_converge(sigma, schedule, grid, mode, with_derivs, cfg);
        std::string csv = with_derivs ? "from,to,sup_logphi,sup_phi1,sup_phi2\n"
                                      : "from,to,sup_logphi\n";
        for (std::size_t l = 0; l + 1 < schedule.size(); ++l) {
            csv += std::to_string(schedule[l]) + "," + std::to_string(schedule[l + 1]) + "," +
                   format_g17(rep.sup_diffs[l]);
            if (with_derivs)
                csv += "," + format_g17(rep.sup_diffs_d1[l]) + "," +
                       format_g17(rep.sup_diffs_d2[l]);
            csv += "\n";
        }
        write_output(out_path, csv);
    } else if (seigs->parsed()) {
        std::function<double(double)> u;
        const auto text = read_file(in_path);
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '{') {
            auto s = scattering_from_json(nlohmann::json::parse(text));
            u = [g = std::make_shared<GramEvaluator>(s)](double x) { return g->u(x); };
        } else {
            u = potential_from_csv(in_path);
        }
        auto rep = schrodinger_eigs(u, box_l, box_h, k_eigs, in_path);
        std::string csv = "index,eigenvalue\n";
        for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
            csv += std::to_string(i) + "," + format_g17(rep.eigenvalues[i]) + "\n";
        write_output(out_path, csv);
    } else if (sbound->parsed()) {
        auto sigma = measure_from_json(parse_json(in_path));
        std::vector<AtomicMeasure> seq;
        if (schedule.empty()) {
            if (sigma.has_density())
                throw ValidationError("pass --schedule to discretize a density measure");
            seq.push_back(sigma.atomic);
        } else {
            for (int n : schedule) seq.push_back(discretize(sigma, n));
        }
        auto checks = verify_spectral_bound(seq, eps, limit_mass, box_l, box_h);
        std::string csv =
            "index,max_eta_sq,algebraic_bound,algebraic_ok,fd_ground,fd_bound,fd_ok\n";
        for (const auto& c : checks)
            csv += std::to_string(c.index) + "," + format_g17(c.max_eta_sq) + "," +
                   format_g17(c.algebraic_bound) + "," + (c.algebraic_ok ? "1" : "0") + "," +
                   format_g17(c.fd_ground) + "," + format_g17(c.fd_bound) + "," +
                   (c.fd_ok ? "1" : "0") + "\n";
        write_output(out_path, csv);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const relpot::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const relpot::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
