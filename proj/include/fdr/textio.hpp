#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdr/errors.hpp"

namespace fdr {

// Shortest round-trip decimal form; identical output on every run is part of
// the output contract, so all floating point written to CSV goes through here.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write file: " + path);
    out << content;
}

// Minimal CSV view: no quoting, comma separated, '\n' line ends. All files
// this tool reads and writes stay within that subset.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::string text = read_text_file(path);
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (strip(line).empty() && !first)
            continue;
        if (first) {
            t.header = split(line, ',');
            first = false;
        } else {
            t.rows.push_back(split(line, ','));
        }
    }
    if (first)
        throw ConfigError("empty csv file: " + path);
    return t;
}

inline double parse_double(const std::string& s, const std::string& what = "input") {
    const std::string v = strip(s);
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("bad numeric value '" + s + "' in " + what);
    return out;
}

inline long parse_long(const std::string& s, const std::string& what = "input") {
    const std::string v = strip(s);
    long out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("bad integer value '" + s + "' in " + what);
    return out;
}

} // namespace fdr
