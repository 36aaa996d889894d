#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "landis/error.hpp"

namespace landis {

// Flat "key = value" text grouped under [section] headers; '#' and ';' start comments.
// Every key must be declared in the schema.
struct ConfigKey {
    std::string section, key, default_value, doc;
};

class Config {
public:
    explicit Config(std::vector<ConfigKey> schema) : schema_(std::move(schema)) {
        for (const ConfigKey& k : schema_) values_[k.section + "." + k.key] = k.default_value;
    }

    const std::vector<ConfigKey>& schema() const { return schema_; }

    void parse(const std::string& text, const std::string& origin = "<config>") {
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip(line.substr(0, line.find_first_of("#;")));
            if (s.empty()) continue;
            auto where = [&] { return origin + ":" + std::to_string(lineno) + ": "; };
            if (s.front() == '[') {
                if (s.back() != ']') throw ConfigError(where() + "unterminated section header");
                section = strip(s.substr(1, s.size() - 2));
                bool known = std::any_of(schema_.begin(), schema_.end(), [&](const ConfigKey& k) { return k.section == section; });
                if (!known) throw ConfigError(where() + "unknown section [" + section + "]");
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
            std::string key = strip(s.substr(0, eq));
            if (section.empty()) throw ConfigError(where() + "key '" + key + "' outside any section");
            set(section + "." + key, strip(s.substr(eq + 1)), where());
        }
    }

    void parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        parse(ss.str(), path);
    }

    // "section.key=value" as given on a command line.
    void set_override(const std::string& assignment) {
        auto eq = assignment.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must be section.key=value");
        set(strip(assignment.substr(0, eq)), strip(assignment.substr(eq + 1)), "override: ");
    }

    void set(const std::string& dotted, const std::string& value, const std::string& where = "") {
        auto it = values_.find(dotted);
        if (it == values_.end()) throw ConfigError(where + "unknown key '" + dotted + "'");
        it->second = value;
    }

    const std::string& str(const std::string& dotted) const {
        auto it = values_.find(dotted);
        if (it == values_.end()) throw ConfigError("schema has no key '" + dotted + "'");
        return it->second;
    }

    double num(const std::string& dotted) const {
        const std::string& s = str(dotted);
        double v = 0.0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ConfigError("'" + dotted + "' = '" + s + "' is not a number");
        return v;
    }

    long integer(const std::string& dotted) const {
        const std::string& s = str(dotted);
        long v = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ConfigError("'" + dotted + "' = '" + s + "' is not an integer");
        return v;
    }

    bool flag(const std::string& dotted) const {
        const std::string& s = str(dotted);
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw ConfigError("'" + dotted + "' = '" + s + "' is not a boolean");
    }

    bool empty(const std::string& dotted) const { return str(dotted).empty(); }

    std::vector<double> list(const std::string& dotted) const {
        std::vector<double> out;
        std::stringstream ss(str(dotted));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (item.empty()) continue;
            double v = 0.0;
            auto r = std::from_chars(item.data(), item.data() + item.size(), v);
            if (r.ec != std::errc() || r.ptr != item.data() + item.size())
                throw ConfigError("'" + dotted + "' has a non-numeric entry '" + item + "'");
            out.push_back(v);
        }
        return out;
    }

    // Schema order, one "section.key = value" per line.
    std::vector<std::pair<std::string, std::string>> entries() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const ConfigKey& k : schema_) {
            std::string d = k.section + "." + k.key;
            out.emplace_back(d, values_.at(d));
        }
        return out;
    }

    static std::string strip(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

private:
    std::vector<ConfigKey> schema_;
    std::map<std::string, std::string> values_;
};

}  // namespace landis
