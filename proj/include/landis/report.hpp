#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "landis/error.hpp"

namespace landis {

using ojson = nlohmann::ordered_json;

inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline ojson json_num(double v) { return std::isfinite(v) ? ojson(v) : ojson(fmt_num(v)); }

struct ReportValue {
    std::string stage, name;
    double value = 0.0;
    std::string formula;
};

struct ReportText {
    std::string stage, name, value;
};

struct Assertion {
    std::string stage, name;
    double value = 0.0;
    std::string op;  // "<=", ">=", "=="
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

struct StageStatus {
    std::string stage, status, message;  // status: ok | skipped | error
};

// Every number is filed under its stage with the formula that produced it.
class Report {
public:
    void value(const std::string& stage, const std::string& name, double v, const std::string& formula) {
        values_.push_back({stage, name, v, formula});
    }
    void text(const std::string& stage, const std::string& name, const std::string& v) { texts_.push_back({stage, name, v}); }

    bool check(const std::string& stage, const std::string& name, double v, const std::string& op, double threshold,
               const std::string& note = "") {
        bool pass = false;
        if (op == "<=") pass = v <= threshold;
        else if (op == ">=") pass = v >= threshold;
        else if (op == "==") pass = v == threshold;
        else throw ConfigError("unknown comparator " + op);
        asserts_.push_back({stage, name, v, op, threshold, pass, note});
        return pass;
    }

    void stage(const std::string& stage, const std::string& status, const std::string& message = "") {
        stages_.push_back({stage, status, message});
    }

    const std::vector<ReportValue>& values() const { return values_; }
    const std::vector<Assertion>& assertions() const { return asserts_; }
    const std::vector<StageStatus>& stages() const { return stages_; }

    bool all_pass() const {
        for (const Assertion& a : asserts_)
            if (!a.pass) return false;
        return true;
    }
    bool has_error() const {
        for (const StageStatus& s : stages_)
            if (s.status == "error") return true;
        return false;
    }

    // Looks up a recorded value; throws when absent.
    double get(const std::string& stage, const std::string& name) const {
        for (const ReportValue& v : values_)
            if (v.stage == stage && v.name == name) return v.value;
        throw ConfigError("report has no value " + stage + "." + name);
    }

    ojson to_json() const {
        ojson j = ojson::object();
        for (const StageStatus& s : stages_) {
            ojson& st = j[s.stage];
            st["status"] = s.status;
            if (!s.message.empty()) st["message"] = s.message;
        }
        for (const ReportValue& v : values_)
            j[v.stage]["values"][v.name] = ojson{{"value", json_num(v.value)}, {"formula", v.formula}};
        for (const ReportText& t : texts_) j[t.stage]["labels"][t.name] = t.value;
        return j;
    }

    ojson assertions_json() const {
        ojson a = ojson::array();
        for (const Assertion& x : asserts_)
            a.push_back({{"stage", x.stage},
                         {"name", x.name},
                         {"value", json_num(x.value)},
                         {"op", x.op},
                         {"threshold", json_num(x.threshold)},
                         {"pass", x.pass},
                         {"note", x.note}});
        return a;
    }

    void write_values_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw FormatError("cannot write " + path);
        out << "stage,name,value,formula\n";
        for (const ReportValue& v : values_) out << v.stage << ',' << v.name << ',' << fmt_num(v.value) << ",\"" << v.formula << "\"\n";
    }

    void write_assertions_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw FormatError("cannot write " + path);
        out << "stage,name,value,op,threshold,pass,note\n";
        for (const Assertion& a : asserts_)
            out << a.stage << ',' << a.name << ',' << fmt_num(a.value) << ',' << a.op << ',' << fmt_num(a.threshold) << ','
                << (a.pass ? "true" : "false") << ",\"" << a.note << "\"\n";
    }

private:
    std::vector<ReportValue> values_;
    std::vector<ReportText> texts_;
    std::vector<Assertion> asserts_;
    std::vector<StageStatus> stages_;
};

// Column-oriented CSV with numeric cells.
inline void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << fmt_num(r[c]);
        out << '\n';
    }
}

inline void write_json(const std::string& path, const ojson& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace landis
