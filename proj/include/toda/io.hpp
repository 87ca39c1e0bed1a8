#pragma once
// CSV / JSON persistence. Numbers are written with %.17g so replays are bit-exact.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toda/core.hpp"
#include "toda/errors.hpp"
#include "toda/measures.hpp"

namespace toda {

using Json = nlohmann::ordered_json;

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// '#'-prefixed metadata line carrying a compact JSON object
inline std::string meta_line(const Json& meta) { return "# " + meta.dump() + "\r\n"; }

inline std::string samples_csv(const std::vector<FlaschkaState>& states, const Json& meta) {
    std::string out = meta_line(meta);
    std::size_t n = states.empty() ? 0 : states.front().n();
    out += "N";
    for (std::size_t j = 1; j <= n; ++j) out += ",a" + std::to_string(j);
    for (std::size_t j = 1; j <= n; ++j) out += ",b" + std::to_string(j);
    out += "\r\n";
    for (const auto& s : states) {
        out += std::to_string(s.n());
        for (double x : s.a) out += "," + fmt17(x);
        for (double x : s.b) out += "," + fmt17(x);
        out += "\r\n";
    }
    return out;
}

inline std::vector<FlaschkaState> parse_samples_csv(const std::string& text) {
    std::vector<FlaschkaState> out;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) { header = true; continue; }
        std::vector<double> v;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t e = line.find(',', pos);
            if (e == std::string::npos) e = line.size();
            std::string cell = line.substr(pos, e - pos);
            char* end = nullptr;
            double x = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size())
                throw IoError("samples CSV: bad number on line " + std::to_string(lineno));
            v.push_back(x);
            pos = e + 1;
        }
        std::size_t n = std::size_t(v[0]);
        if (double(n) != v[0] || v.size() != 1 + 2 * n) throw IoError("samples CSV: wrong width on line " + std::to_string(lineno));
        FlaschkaState s{std::vector<double>(v.begin() + 1, v.begin() + 1 + long(n)),
                        std::vector<double>(v.begin() + 1 + long(n), v.end())};
        out.push_back(std::move(s));
    }
    if (!header) throw IoError("samples CSV: missing header");
    return out;
}

inline std::string measure_csv(const GriddedMeasure& mu, const Json& meta) {
    std::string out = meta_line(meta);
    out += "x,density\r\n";
    for (std::size_t i = 0; i < mu.n(); ++i) out += fmt17(mu.center(i)) + "," + fmt17(mu.density[i]) + "\r\n";
    return out;
}

inline Json measure_header(const GriddedMeasure& mu) {
    Json j;
    j["x0"] = mu.x0;
    j["h"] = mu.h;
    j["n"] = mu.n();
    return j;
}

}  // namespace toda
