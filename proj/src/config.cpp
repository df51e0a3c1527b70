#include "hjres/config.hpp"

#include "hjres/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace hjres::config {

namespace {

using FT = FieldType;

FieldSpec real(std::string key, std::string def, double min = -1e300, bool strict = false, double max = 1e300) {
    return {std::move(key), FT::Real, std::move(def), min, max, strict, {}, {}};
}
FieldSpec integer(std::string key, std::string def, double min = 0, double max = 1e300) {
    return {std::move(key), FT::Integer, std::move(def), min, max, false, {}, {}};
}
FieldSpec reals(std::string key, std::string def, double min = -1e300, bool strict = false) {
    return {std::move(key), FT::RealList, std::move(def), min, 1e300, strict, {}, {}};
}
FieldSpec integers(std::string key, std::string def, double min = 0) {
    return {std::move(key), FT::IntegerList, std::move(def), min, 1e300, false, {}, {}};
}
FieldSpec choice(std::string key, std::string def, std::vector<std::string> options) {
    return {std::move(key), FT::Choice, std::move(def), -1e300, 1e300, false, std::move(options), {}};
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError("'" + text + "' is not a finite number");
    return v;
}

long long parse_integer(const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end) throw ConfigError("'" + text + "' is not an integer");
    return v;
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.size() == 1 && out[0].empty()) throw ConfigError("empty list");
    return out;
}

void check_range(const FieldSpec& f, double v) {
    const bool low = f.strict_min ? !(v > f.min) : v < f.min;
    if (low || v > f.max) {
        std::string msg = "value " + trim(std::to_string(v)) + " outside ";
        msg += f.strict_min ? "(" : "[";
        msg += (f.min <= -1e300 ? std::string("-inf") : std::to_string(f.min)) + ", ";
        msg += (f.max >= 1e300 ? std::string("inf") : std::to_string(f.max)) + "]";
        throw ConfigError(msg);
    }
}

// Normalizes and checks a value against its field spec; returns the stored text.
std::string check_value(const FieldSpec& f, const std::string& value) {
    const std::string v = trim(value);
    switch (f.type) {
    case FT::Real:
        check_range(f, parse_real(v));
        break;
    case FT::Integer:
        check_range(f, static_cast<double>(parse_integer(v)));
        break;
    case FT::RealList:
        for (const auto& item : split(v)) check_range(f, parse_real(item));
        break;
    case FT::IntegerList:
        for (const auto& item : split(v)) check_range(f, static_cast<double>(parse_integer(item)));
        break;
    case FT::Choice:
        if (std::find(f.choices.begin(), f.choices.end(), v) == f.choices.end()) {
            std::string opts;
            for (const auto& c : f.choices) opts += (opts.empty() ? "" : ", ") + c;
            throw ConfigError("'" + v + "' is not one of {" + opts + "}");
        }
        break;
    }
    return v;
}

} // namespace

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text)) out.push_back(parse_real(item));
    return out;
}

const Schema& experiment_schema() {
    static const Schema schema{
        {"eikonal1d-grid",
         {integers("ns", "20,40,80,160", 2),
          choice("hamiltonian", "lax_friedrichs", {"lax_friedrichs", "upwind"}),
          real("lambda", "1", 0.0, true),
          real("alpha", "1", 0.0),
          real("mu_b", "10", 0.0, true),
          real("q", "2", 1.0),
          real("step", "1e-3", 0.0, true),
          integer("max_iters", "100000", 1),
          real("tol", "1e-3", 0.0, true),
          integer("record_every", "100", 1),
          integers("schedule", "20,40,80,160", 2)}},
        {"eikonal1d-nn",
         {integer("seeds", "20", 1),
          integer("seed", "1", 0),
          integers("layers", "1,64,64,64,1", 1),
          real("lipschitz", "4", 0.0, true),
          integer("n0", "20", 1),
          real("mu_b", "10", 0.0, true),
          real("alpha", "1", 0.0),
          real("lambda", "0.1", 0.0, true),
          choice("optimizer", "adam", {"adam", "sgd"}),
          real("lr", "1e-3", 0.0, true),
          integer("max_iters", "10000", 1),
          integer("stop_window", "50", 1),
          real("stop_tol", "1e-3", 0.0),
          integer("log_every", "0", 0),
          reals("fixed_h", "0.05,0.01,0.001", 0.0, true),
          reals("schedule_h", "0.05,0.01,0.002,0.001", 0.0, true),
          reals("schedule_lambda", "2,1,0.5,0.1", 0.0, true),
          reals("schedule_alpha", "1,1,1,1", 0.0),
          integer("error_samples", "1001", 2)}},
        {"obstacle",
         {integer("dim", "2", 2, 5),
          integer("seed", "1", 0),
          integers("hidden", "48,48,48", 1),
          real("lipschitz", "4", 0.0, true),
          real("lr", "1e-3", 0.0, true),
          integer("iters_per_stage", "2000", 1),
          integer("n_interior", "400", 1),
          integer("n_initial", "400", 1),
          real("initial_weight", "10", 0.0),
          real("t_max", "2", 0.0, true),
          real("half_width", "2.5", 0.0, true),
          real("h_eval", "0.05", 0.0, true),
          real("eval_half_width", "2", 0.0, true),
          reals("lf_h", "0.3,0.2,0.1", 0.0, true),
          reals("lf_dt", "0.15,0.1,0.05", 0.0, true),
          reals("os_h", "0.2,0.1,0.05", 0.0, true),
          reals("os_dt", "0.1,0.05,0.025", 0.0, true)}},
        {"isaacs2d",
         {integers("ns", "100,200", 8),
          real("sigma_x", "0.5", 0.0),
          real("sigma_y", "0.2", 0.0),
          real("vs", "0.5", 0.0),
          real("kappa", "0.1", 0.0),
          real("a", "0.2", 0.0),
          real("r", "0.5", 0.0, true),
          real("R", "1.4142135623730951", 0.0, true),
          real("lambda_extra", "0", 0.0),
          choice("stencil", "central", {"central", "monotone"}),
          choice("boundary", "cut_cell", {"cut_cell", "staircase"}),
          real("newton_tol", "1e-10", 0.0, true),
          integer("newton_max_iters", "100", 1),
          integer("seed", "1", 0),
          integer("nn_iters", "0", 0),
          integers("nn_hidden", "32,32", 1),
          real("nn_lipschitz", "4", 0.0, true),
          real("nn_h", "0.04", 0.0, true),
          integer("nn_interior", "200", 1),
          integer("nn_boundary", "40", 1)}},
        {"analyze-jacobian",
         {integers("ns", "20,40,80,160,320", 2),
          real("lambda", "1", 0.0, true),
          real("alpha", "1", 0.0),
          real("mu_b", "10", 0.0, true)}},
    };
    return schema;
}

Config::Config(const Schema& schema) : schema_(&schema) {
    for (const auto& sec : schema)
        for (const auto& f : sec.fields) values_[sec.name][f.key] = f.default_value;
}

const FieldSpec& Config::spec(const std::string& section, const std::string& key) const {
    for (const auto& sec : *schema_) {
        if (sec.name != section) continue;
        for (const auto& f : sec.fields)
            if (f.key == key) return f;
        throw ConfigError(section + "." + key + ": unknown key");
    }
    throw ConfigError(section + ": unknown section");
}

void Config::assign(const std::string& section, const std::string& key, const std::string& value) {
    const auto& f = spec(section, key);
    try {
        values_[section][key] = check_value(f, value);
    } catch (const ConfigError& e) {
        throw ConfigError(section + "." + key + ": " + e.what());
    }
}

void Config::merge_ini(std::istream& is, const std::string& source) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(source + ": key '" + section + "' outside any section");
        for (const auto& [key, node] : body) assign(section, key, node.data());
    }
}

void Config::merge_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    merge_ini(in, path);
}

void Config::set(const std::string& path, const std::string& value) {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
        throw ConfigError(path + ": override must look like section.key=value");
    assign(path.substr(0, dot), path.substr(dot + 1), value);
}

const std::string& Config::raw(const std::string& section, const std::string& key) const {
    spec(section, key);
    return values_.at(section).at(key);
}

double Config::real(const std::string& section, const std::string& key) const {
    return parse_real(raw(section, key));
}

long long Config::integer(const std::string& section, const std::string& key) const {
    return parse_integer(raw(section, key));
}

std::size_t Config::count(const std::string& section, const std::string& key) const {
    const auto v = integer(section, key);
    if (v < 0) throw ConfigError(section + "." + key + ": must be non-negative");
    return static_cast<std::size_t>(v);
}

std::vector<double> Config::reals(const std::string& section, const std::string& key) const {
    return parse_real_list(raw(section, key));
}

std::vector<std::size_t> Config::counts(const std::string& section, const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split(raw(section, key))) {
        const auto v = parse_integer(item);
        if (v < 0) throw ConfigError(section + "." + key + ": entries must be non-negative");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

const std::string& Config::choice(const std::string& section, const std::string& key) const {
    return raw(section, key);
}

void Config::write_ini(std::ostream& os, const std::string& section) const {
    for (const auto& sec : *schema_) {
        if (!section.empty() && sec.name != section) continue;
        os << '[' << sec.name << "]\n";
        for (const auto& f : sec.fields) os << f.key << " = " << values_.at(sec.name).at(f.key) << '\n';
        os << '\n';
    }
}

} // namespace hjres::config
