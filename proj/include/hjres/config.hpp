#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

// Declarative experiment configuration: INI sections of key = value pairs checked
// against a fixed schema. Every error names the offending field as section.key.
namespace hjres::config {

enum class FieldType { Real, Integer, RealList, IntegerList, Choice };

struct FieldSpec {
    std::string key;
    FieldType type = FieldType::Real;
    std::string default_value;
    double min = -1e300;  // applies to every number, list entries included
    double max = 1e300;
    bool strict_min = false;
    std::vector<std::string> choices;
    std::string help;
};

struct SectionSchema {
    std::string name;
    std::vector<FieldSpec> fields;
};

using Schema = std::vector<SectionSchema>;

/// Sections eikonal1d-grid, eikonal1d-nn, obstacle, isaacs2d, analyze-jacobian.
const Schema& experiment_schema();

class Config {
public:
    explicit Config(const Schema& schema);

    /// Reads INI text. Unknown sections or keys and malformed values throw ConfigError.
    void merge_ini(std::istream& is, const std::string& source);
    void merge_ini_file(const std::string& path);
    /// path = "section.key".
    void set(const std::string& path, const std::string& value);

    double real(const std::string& section, const std::string& key) const;
    long long integer(const std::string& section, const std::string& key) const;
    std::size_t count(const std::string& section, const std::string& key) const;
    std::vector<double> reals(const std::string& section, const std::string& key) const;
    std::vector<std::size_t> counts(const std::string& section, const std::string& key) const;
    const std::string& choice(const std::string& section, const std::string& key) const;
    const std::string& raw(const std::string& section, const std::string& key) const;

    /// Writes one section (or all when empty) back as INI.
    void write_ini(std::ostream& os, const std::string& section = {}) const;

private:
    const FieldSpec& spec(const std::string& section, const std::string& key) const;
    void assign(const std::string& section, const std::string& key, const std::string& value);

    const Schema* schema_;
    std::map<std::string, std::map<std::string, std::string>> values_;
};

/// Comma-separated parsing shared with the schema checks.
std::vector<double> parse_real_list(const std::string& text);

} // namespace hjres::config
