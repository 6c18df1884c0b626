#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace raman2d {

// Minimal INI-style document: named sections of key = value pairs.
// Section and key order is preserved so serialization is canonical and
// reproducible. Values are stored as strings; typed access lives on the
// accessor methods.
class IniDoc {
  public:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };

    static IniDoc parse(const std::string& text);
    static IniDoc parse_file(const std::string& path);

    std::string serialize() const;
    void write_file(const std::string& path) const;

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    // Throwing getters.
    std::string get(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    int64_t get_int(const std::string& section, const std::string& key) const;
    uint64_t get_u64(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

    // Defaulted getters.
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_int(const std::string& section, const std::string& key, int64_t value);
    void set_u64(const std::string& section, const std::string& key, uint64_t value);
    void set_bool(const std::string& section, const std::string& key, bool value);
    void set_doubles(const std::string& section, const std::string& key,
                     const std::vector<double>& values);

    // Copies every entry of `other` into this document, overwriting on key
    // collision. Used to layer a user config over defaults.
    void merge_from(const IniDoc& other);

    const std::vector<Section>& sections() const { return sections_; }

    // Full-precision round-trip formatting for doubles.
    static std::string format_double(double v);

  private:
    Section& section(const std::string& name);
    const Section* find_section(const std::string& name) const;
    const std::string* find(const std::string& section, const std::string& key) const;

    std::vector<Section> sections_;
};

}  // namespace raman2d
