#ifndef PBENCH_CORE_REPORT_HPP
#define PBENCH_CORE_REPORT_HPP

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbench/core/artifact_store.hpp"

namespace pbench {

// One line of the append-only results log. Field names are part of the file
// contract: plan, victim, asr, ba, t_select, t_train, t_eval, seed, ts.
struct RunReport {
    std::string plan_ref;
    std::string victim_ref;
    double asr = 0.0;
    double ba = 0.0;
    double t_select = 0.0;
    double t_train = 0.0;
    double t_eval = 0.0;
    std::int64_t seed = 0;
    std::string ts;
    nlohmann::json extra;  // cell annotations (strategy, trigger kind, m, ...)
};

inline std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void validate_report(const RunReport& r) {
    if (!(r.asr >= 0.0 && r.asr <= 1.0)) throw std::invalid_argument("run report: asr outside [0,1]");
    if (!(r.ba >= 0.0 && r.ba <= 1.0)) throw std::invalid_argument("run report: ba outside [0,1]");
}

inline std::string report_to_json_line(const RunReport& r) {
    validate_report(r);
    nlohmann::json j{{"plan", r.plan_ref}, {"victim", r.victim_ref}, {"asr", r.asr},
                     {"ba", r.ba},         {"t_select", r.t_select}, {"t_train", r.t_train},
                     {"t_eval", r.t_eval}, {"seed", r.seed},         {"ts", r.ts}};
    if (!r.extra.is_null()) j["extra"] = r.extra;
    return j.dump();
}

inline RunReport report_from_json_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    RunReport r;
    r.plan_ref = j.at("plan").get<std::string>();
    r.victim_ref = j.at("victim").get<std::string>();
    r.asr = j.at("asr").get<double>();
    r.ba = j.at("ba").get<double>();
    r.t_select = j.at("t_select").get<double>();
    r.t_train = j.at("t_train").get<double>();
    r.t_eval = j.at("t_eval").get<double>();
    r.seed = j.at("seed").get<std::int64_t>();
    r.ts = j.at("ts").get<std::string>();
    if (j.contains("extra")) r.extra = j.at("extra");
    validate_report(r);
    return r;
}

inline void append_report(const RunReport& r, ArtifactStore& store) {
    store.append_results(report_to_json_line(r));
}

inline std::vector<RunReport> load_reports(const ArtifactStore& store) {
    std::vector<RunReport> out;
    for (const auto& line : store.read_results()) {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("error")) continue;  // failed cells stay visible but are not reports
        out.push_back(report_from_json_line(line));
    }
    return out;
}

}  // namespace pbench

#endif  // PBENCH_CORE_REPORT_HPP
