#pragma once

// Run configuration: one JSON document with a version field and a list of
// jobs. Parsing reports the offending field on error, and parse/serialize
// round-trips to the identical document once defaults are filled in.

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace tmcert::cli {

using nlohmann::json;

struct Numerics {
    double h = 1.0 / 32;
    double T = 4.0;
    int k = 1;
    double tol = 1e-10;
    long N_series = 10000;
};

struct Job {
    std::string kind;  ///< spectrum | kappa | certificate | modes_export | full_pipeline
    std::string preset;
    std::string id;    ///< certificate id or mode name
    std::string bc = "dirichlet";
    json params = json::object();
    Numerics numerics;
    std::string output;  ///< artifact base name (CSV exports)
};

struct RunConfig {
    int version = 1;
    std::vector<Job> jobs;
};

inline void to_json(json& j, const Numerics& n) {
    j = {{"h", n.h}, {"T", n.T}, {"k", n.k}, {"tol", n.tol}, {"N_series", n.N_series}};
}

inline void to_json(json& j, const Job& job) {
    j = {{"kind", job.kind},     {"preset", job.preset}, {"id", job.id},
         {"bc", job.bc},         {"params", job.params}, {"numerics", job.numerics},
         {"output", job.output}};
}

inline void to_json(json& j, const RunConfig& c) {
    j = {{"version", c.version}, {"jobs", c.jobs}};
}

namespace detail {
template <typename T>
T field(const json& j, const std::string& key, const T& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::runtime_error("config: bad value for " + where + "." + key + ": " + e.what());
    }
}
}  // namespace detail

inline Numerics parse_numerics(const json& j, const std::string& where) {
    Numerics n;
    n.h = detail::field(j, "h", n.h, where);
    n.T = detail::field(j, "T", n.T, where);
    n.k = detail::field(j, "k", n.k, where);
    n.tol = detail::field(j, "tol", n.tol, where);
    n.N_series = detail::field(j, "N_series", n.N_series, where);
    if (!(n.h > 0) || !(n.T > 0) || n.k < 1 || !(n.tol > 0) || n.N_series < 10)
        throw std::runtime_error("config: " + where + ": numerics values must be positive (k >= 1, N_series >= 10)");
    return n;
}

inline RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw std::runtime_error("config: top level must be an object");
    RunConfig c;
    c.version = detail::field(doc, "version", 1, "$");
    if (c.version != 1) throw std::runtime_error("config: unsupported version");
    if (!doc.contains("jobs")) throw std::runtime_error("config: missing 'jobs' array");
    if (!doc.at("jobs").is_array()) throw std::runtime_error("config: 'jobs' must be an array");
    int idx = 0;
    for (const auto& jj : doc.at("jobs")) {
        const std::string where = "jobs[" + std::to_string(idx) + "]";
        if (!jj.is_object()) throw std::runtime_error("config: " + where + " must be an object");
        Job job;
        job.kind = detail::field<std::string>(jj, "kind", "", where);
        if (job.kind != "spectrum" && job.kind != "kappa" && job.kind != "certificate" &&
            job.kind != "modes_export" && job.kind != "full_pipeline")
            throw std::runtime_error("config: " + where + ".kind: unknown kind '" + job.kind + "'");
        job.preset = detail::field<std::string>(jj, "preset", "", where);
        job.id = detail::field<std::string>(jj, "id", "", where);
        job.bc = detail::field<std::string>(jj, "bc", "dirichlet", where);
        if (job.bc != "dirichlet" && job.bc != "neumann")
            throw std::runtime_error("config: " + where + ".bc: expected dirichlet or neumann");
        if (jj.contains("params")) {
            if (!jj.at("params").is_object())
                throw std::runtime_error("config: " + where + ".params must be an object");
            job.params = jj.at("params");
        }
        if (jj.contains("numerics")) job.numerics = parse_numerics(jj.at("numerics"), where);
        job.output = detail::field<std::string>(jj, "output", "", where);
        c.jobs.push_back(std::move(job));
        ++idx;
    }
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace tmcert::cli
