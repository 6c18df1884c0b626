#include "raman2d/ini.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "raman2d/errors.hpp"

namespace raman2d {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

}  // namespace

IniDoc IniDoc::parse(const std::string& text) {
    IniDoc doc;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw FormatError("config parse error at line " + std::to_string(lineno) +
                                  ": unterminated section header");
            current = trim(t.substr(1, t.size() - 2));
            doc.section(current);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError("config parse error at line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw FormatError("config parse error at line " + std::to_string(lineno) +
                              ": empty key");
        doc.set(current, key, value);
    }
    return doc;
}

IniDoc IniDoc::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string IniDoc::serialize() const {
    std::string out;
    bool first = true;
    for (const auto& sec : sections_) {
        if (!first) out += "\n";
        first = false;
        if (!sec.name.empty()) out += "[" + sec.name + "]\n";
        for (const auto& [k, v] : sec.entries) out += k + " = " + v + "\n";
    }
    return out;
}

void IniDoc::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << serialize();
}

IniDoc::Section& IniDoc::section(const std::string& name) {
    for (auto& sec : sections_)
        if (sec.name == name) return sec;
    sections_.push_back(Section{name, {}});
    return sections_.back();
}

const IniDoc::Section* IniDoc::find_section(const std::string& name) const {
    for (const auto& sec : sections_)
        if (sec.name == name) return &sec;
    return nullptr;
}

const std::string* IniDoc::find(const std::string& section, const std::string& key) const {
    const Section* sec = find_section(section);
    if (!sec) return nullptr;
    for (const auto& [k, v] : sec->entries)
        if (k == key) return &v;
    return nullptr;
}

bool IniDoc::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

bool IniDoc::has_section(const std::string& section) const {
    return find_section(section) != nullptr;
}

std::string IniDoc::get(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) throw std::runtime_error("missing config key [" + section + "] " + key);
    return *v;
}

double IniDoc::get_double(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw FormatError("config key [" + section + "] " + key + ": not a number: " + v);
    }
}

int64_t IniDoc::get_int(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw FormatError("config key [" + section + "] " + key + ": not an integer: " + v);
    }
}

uint64_t IniDoc::get_u64(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        const unsigned long long i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw FormatError("config key [" + section + "] " + key + ": not an unsigned integer: " + v);
    }
}

bool IniDoc::get_bool(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw FormatError("config key [" + section + "] " + key + ": not a boolean: " + v);
}

std::vector<double> IniDoc::get_doubles(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    std::vector<double> out;
    for (const std::string& item : split_list(v)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw FormatError("config key [" + section + "] " + key + ": bad list element: " + item);
        }
    }
    return out;
}

std::string IniDoc::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
}

void IniDoc::set(const std::string& section_name, const std::string& key,
                 const std::string& value) {
    Section& sec = section(section_name);
    for (auto& [k, v] : sec.entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    sec.entries.emplace_back(key, value);
}

std::string IniDoc::format_double(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        // Integral value: keep it short.
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        // Try shorter representations first.
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

void IniDoc::set_double(const std::string& section, const std::string& key, double value) {
    set(section, key, format_double(value));
}

void IniDoc::set_int(const std::string& section, const std::string& key, int64_t value) {
    set(section, key, std::to_string(value));
}

void IniDoc::set_u64(const std::string& section, const std::string& key, uint64_t value) {
    set(section, key, std::to_string(value));
}

void IniDoc::set_bool(const std::string& section, const std::string& key, bool value) {
    set(section, key, value ? "true" : "false");
}

void IniDoc::set_doubles(const std::string& section, const std::string& key,
                         const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ", ";
        joined += format_double(values[i]);
    }
    set(section, key, joined);
}

void IniDoc::merge_from(const IniDoc& other) {
    for (const auto& sec : other.sections())
        for (const auto& [k, v] : sec.entries) set(sec.name, k, v);
}

}  // namespace raman2d
