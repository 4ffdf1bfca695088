#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "abflux/errors.hpp"
#include "abflux/flux_geometry.hpp"

namespace abflux {

// 17 significant digits, independent of the global locale.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    if (b < e && *b == '+') ++b;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) throw UsageError("not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

// One pole per line as "x y alpha"; '#' starts a comment.
inline std::vector<Pole> parse_poles(std::istream& in) {
    std::vector<Pole> poles;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok.size() != 3) throw ConfigError("line " + std::to_string(lineno) + ": expected 'x y alpha'");
        poles.push_back({{parse_double(tok[0]), parse_double(tok[1])}, parse_double(tok[2])});
    }
    if (poles.empty()) throw ConfigError("configuration has no poles");
    return poles;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline Configuration load_configuration(const std::string& path, bool allow_integer_flux = false) {
    std::istringstream in(read_file(path));
    return Configuration(parse_poles(in), allow_integer_flux);
}

// "a:b:n": n points from a to b, geometric when both ends are positive.
inline std::vector<double> parse_grid(const std::string& text) {
    auto p = split(text, ':');
    if (p.size() != 3) throw UsageError("grid must look like a:b:n");
    double a = parse_double(p[0]), b = parse_double(p[1]);
    double nd = parse_double(p[2]);
    if (nd < 1 || nd != std::floor(nd)) throw UsageError("grid count must be a positive integer");
    int n = static_cast<int>(nd);
    std::vector<double> out;
    bool geo = a > 0 && b > 0;
    for (int k = 0; k < n; ++k) {
        double f = n == 1 ? 0.0 : double(k) / (n - 1);
        out.push_back(geo ? a * std::pow(b / a, f) : a + (b - a) * f);
    }
    return out;
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    for (auto& t : split(s, ',')) out.push_back(parse_double(t));
    return out;
}

inline Vec2 parse_point(const std::string& s) {
    auto v = parse_list(s);
    if (v.size() != 2) throw UsageError("point must look like x,y");
    return {v[0], v[1]};
}

inline std::vector<Vec2> parse_points(const std::string& s) {
    std::vector<Vec2> out;
    for (auto& t : split(s, ';'))
        if (!t.empty()) out.push_back(parse_point(t));
    return out;
}

}  // namespace abflux
