#include "promptstream/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "promptstream/errors.hpp"

namespace promptstream {

using nlohmann::json;

namespace {

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

void flatten_into(const json& j, const std::string& prefix,
                  std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            flatten_into(v, prefix.empty() ? k : prefix + "." + k, out);
        }
    } else {
        out.push_back({prefix, j.dump()});
    }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> flatten_config(const json& config) {
    std::vector<std::pair<std::string, std::string>> out;
    flatten_into(config, "", out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> differing_config_keys(const std::vector<RunRecord>& records) {
    std::map<std::string, std::set<std::string>> values;
    for (const RunRecord& r : records) {
        for (const auto& [k, v] : flatten_config(r.config_snapshot)) values[k].insert(v);
    }
    std::vector<std::string> out;
    for (const auto& [k, vs] : values) {
        // A key also differs when absent from some record.
        size_t present = 0;
        for (const RunRecord& r : records) {
            for (const auto& [rk, rv] : flatten_config(r.config_snapshot)) {
                if (rk == k) {
                    ++present;
                    break;
                }
            }
        }
        if (vs.size() > 1 || present != records.size()) out.push_back(k);
    }
    return out;
}

std::string render_report_table(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ContractError("report: no run records");
    const std::vector<std::string> diff_keys = differing_config_keys(records);

    std::ostringstream os;
    os << "| method | AA (up) | FM (down) | trainable/backbone |";
    for (const auto& k : diff_keys) os << " " << k << " |";
    os << "\n|---|---|---|---|";
    for (size_t i = 0; i < diff_keys.size(); ++i) os << "---|";
    os << "\n";
    for (const RunRecord& r : records) {
        os << "| " << r.mode << " | " << fmt(100.0 * r.aa, 2) << " | "
           << (r.fm ? fmt(100.0 * *r.fm, 2) : std::string("n/a")) << " | "
           << fmt(r.trainable_ratio, 4) << " |";
        auto flat = flatten_config(r.config_snapshot);
        for (const auto& k : diff_keys) {
            std::string v = "-";
            for (const auto& [fk, fv] : flat) {
                if (fk == k) {
                    v = fv;
                    break;
                }
            }
            os << " " << v << " |";
        }
        os << "\n";
    }
    return os.str();
}

std::string render_matrix_csv(const RunRecord& record) {
    if (!record.has_matrix) throw ContractError("matrix csv: record has no accuracy matrix");
    std::ostringstream os;
    os << "task,after_task,accuracy\n";
    char buf[64];
    for (int n = 1; n <= record.matrix.num_tasks(); ++n) {
        for (int i = 1; i <= n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", record.matrix.get(i, n));
            os << i << "," << n << "," << buf << "\n";
        }
    }
    return os.str();
}

}  // namespace promptstream
