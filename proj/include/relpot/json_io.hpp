#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "relpot/errors.hpp"
#include "relpot/measures.hpp"
#include "relpot/scattering.hpp"
#include "relpot/stochastic.hpp"

namespace relpot {

// {"atoms":[{"p":0.6,"c2":0.64}],"density":{"breaks":[...],"values":[...]}}
inline nlohmann::json measure_to_json(const FiniteMeasure& m) {
    nlohmann::json j;
    if (!m.atomic.empty()) {
        auto& atoms = j["atoms"] = nlohmann::json::array();
        for (const auto& a : m.atomic.atoms()) atoms.push_back({{"p", a.p}, {"c2", a.c2}});
    }
    if (m.has_density())
        j["density"] = {{"breaks", m.density_breaks}, {"values", m.density_values}};
    return j;
}

inline FiniteMeasure measure_from_json(const nlohmann::json& j) {
    try {
        std::vector<Atom> atoms;
        if (j.contains("atoms"))
            for (const auto& a : j.at("atoms"))
                atoms.push_back({a.at("p").get<double>(), a.at("c2").get<double>()});
        std::vector<double> breaks, values;
        if (j.contains("density")) {
            breaks = j.at("density").at("breaks").get<std::vector<double>>();
            values = j.at("density").at("values").get<std::vector<double>>();
        }
        if (atoms.empty() && values.empty())
            throw InvalidMeasure("measure JSON has neither atoms nor density");
        return FiniteMeasure::make(atoms.empty() ? AtomicMeasure{} : normalize_H(std::move(atoms)),
                                   std::move(breaks), std::move(values));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad measure JSON: ") + e.what());
    }
}

// {"entries":[{"eta":1.0,"m":8.0}]}
inline nlohmann::json scattering_to_json(const ScatteringData& s) {
    nlohmann::json j;
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : s.entries()) entries.push_back({{"eta", e.eta}, {"m", e.m}});
    return j;
}

inline ScatteringData scattering_from_json(const nlohmann::json& j) {
    try {
        std::vector<ScatteringEntry> entries;
        for (const auto& e : j.at("entries"))
            entries.push_back({e.at("eta").get<double>(), e.at("m").get<double>()});
        return ScatteringData::from(std::move(entries));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad scattering JSON: ") + e.what());
    }
}

// {"n_paths":100000,"dt":0.001,"T":3.0,"seed":42,"q_grid":128}; absent fields
// keep their defaults.
inline nlohmann::json mc_config_to_json(const McConfig& c) {
    return {{"n_paths", c.n_paths}, {"dt", c.dt}, {"T", c.T}, {"seed", c.seed}, {"q_grid", c.q_grid}};
}

inline McConfig mc_config_from_json(const nlohmann::json& j) {
    try {
        McConfig c;
        if (j.contains("n_paths")) c.n_paths = j.at("n_paths").get<std::int64_t>();
        if (j.contains("dt")) c.dt = j.at("dt").get<double>();
        if (j.contains("T")) c.T = j.at("T").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("q_grid")) c.q_grid = j.at("q_grid").get<int>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad MC config JSON: ") + e.what());
    }
}

// Sheet spec: {"atomic":{"a":..,"b":..,"alpha":[{"p":..,"d":..}]}} or
// {"density":{"a":..,"g":{"breaks":[...],"values":[...]},"q_grid":128}}
inline CompoundOUSpec sheet_spec_from_json(const nlohmann::json& j) {
    try {
        if (j.contains("atomic")) {
            const auto& a = j.at("atomic");
            AtomicSheetSpec s;
            s.a = a.at("a").get<double>();
            s.b = a.at("b").get<double>();
            for (const auto& pd : a.at("alpha"))
                s.alpha.emplace_back(pd.at("p").get<double>(), pd.at("d").get<double>());
            return s;
        }
        if (j.contains("density")) {
            const auto& d = j.at("density");
            DensitySheetSpec s;
            s.a = d.at("a").get<double>();
            s.g_breaks = d.at("g").at("breaks").get<std::vector<double>>();
            s.g_values = d.at("g").at("values").get<std::vector<double>>();
            if (d.contains("q_grid")) s.q_grid = d.at("q_grid").get<int>();
            return s;
        }
        throw ValidationError("sheet spec JSON needs an \"atomic\" or \"density\" object");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad sheet spec JSON: ") + e.what());
    }
}

// 17 significant digits: enough to reproduce the double bit pattern exactly.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace relpot
