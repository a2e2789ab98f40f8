#pragma once

// Threshold configuration shared by every CLI subcommand. The file format is
// INI-style key=value with sections:
//
//   [sfranco]   max_order, slope_threshold, floor_threshold, singular_level
//   [features]  normalize, boundary (one_sided | trim), zero_tolerance
//   [jrc]       d1, d2, stride, drop_factor, floor
//   [verdict]   annihilator_floor, analytic_fallback, fallback_degree
//
// Missing keys keep their defaults; unknown sections or keys are errors.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "uniqcert/errors.hpp"
#include "uniqcert/features.hpp"
#include "uniqcert/verdict.hpp"

namespace uniqcert {

namespace detail {

inline int parse_int(const std::string& v, const std::string& key) {
    std::size_t used = 0;
    int out = 0;
    try {
        out = std::stoi(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' must be an integer, got '" + v + "'");
    return out;
}

inline double parse_config_real(const std::string& v, const std::string& key) {
    try {
        return parse_real(v, key.c_str());
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace detail

inline void apply_config_entry(CertifyConfig& c, const std::string& section, const std::string& key,
                               const std::string& value) {
    const std::string full = section + "." + key;
    auto real = [&] { return detail::parse_config_real(value, full); };
    auto integer = [&] { return detail::parse_int(value, full); };
    if (section == "sfranco") {
        if (key == "max_order") c.max_order = integer();
        else if (key == "slope_threshold") c.slope_threshold = real();
        else if (key == "floor_threshold") c.floor_threshold = real();
        else if (key == "singular_level") c.singular_level = real();
        else throw ConfigError("unknown config key '" + full + "'");
    } else if (section == "features") {
        if (key == "normalize") c.normalize = parse_bool(value);
        else if (key == "zero_tolerance") c.zero_tolerance = real();
        else if (key == "boundary") {
            if (value == "one_sided") c.boundary = Boundary::OneSided;
            else if (value == "trim") c.boundary = Boundary::Trim;
            else throw ConfigError("features.boundary must be one_sided or trim");
        } else throw ConfigError("unknown config key '" + full + "'");
    } else if (section == "jrc") {
        if (key == "d1") c.jrc_d1 = integer();
        else if (key == "d2") c.jrc_d2 = integer();
        else if (key == "stride") {
            const int s = integer();
            if (s < 1) throw ConfigError("jrc.stride must be >= 1");
            c.jrc_stride = static_cast<std::size_t>(s);
        } else if (key == "drop_factor") c.drop_factor = real();
        else if (key == "floor") c.jacobian_floor = real();
        else throw ConfigError("unknown config key '" + full + "'");
    } else if (section == "verdict") {
        if (key == "annihilator_floor") c.annihilator_floor = real();
        else if (key == "analytic_fallback") c.analytic_fallback = parse_bool(value);
        else if (key == "fallback_degree") {
            const int d = integer();
            if (d < 1) throw ConfigError("verdict.fallback_degree must be >= 1");
            c.fallback_degree = static_cast<unsigned>(d);
        } else throw ConfigError("unknown config key '" + full + "'");
    } else {
        throw ConfigError("unknown config section '" + section + "'");
    }
}

inline CertifyConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    CertifyConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key '" + section + "' must sit inside a section");
        for (const auto& [key, value] : body) apply_config_entry(c, section, key, value.get_value<std::string>());
    }
    return c;
}

inline CertifyConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in);
}

// The effective configuration in the same INI layout (round-trips through
// parse_config).
inline std::string config_block(const CertifyConfig& c) {
    auto r = [](double v) { return detail::format_real(v); };
    std::ostringstream s;
    s << "[sfranco]\n"
      << "max_order=" << c.max_order << "\n"
      << "slope_threshold=" << r(c.slope_threshold) << "\n"
      << "floor_threshold=" << r(c.floor_threshold) << "\n"
      << "singular_level=" << r(c.singular_level) << "\n"
      << "[features]\n"
      << "normalize=" << (c.normalize ? "true" : "false") << "\n"
      << "boundary=" << (c.boundary == Boundary::Trim ? "trim" : "one_sided") << "\n"
      << "zero_tolerance=" << r(c.zero_tolerance) << "\n"
      << "[jrc]\n"
      << "d1=" << c.jrc_d1 << "\n"
      << "d2=" << c.jrc_d2 << "\n"
      << "stride=" << c.jrc_stride << "\n"
      << "drop_factor=" << r(c.drop_factor) << "\n"
      << "floor=" << r(c.jacobian_floor) << "\n"
      << "[verdict]\n"
      << "annihilator_floor=" << r(c.annihilator_floor) << "\n"
      << "analytic_fallback=" << (c.analytic_fallback ? "true" : "false") << "\n"
      << "fallback_degree=" << c.fallback_degree << "\n";
    return s.str();
}

}  // namespace uniqcert
