#pragma once

// Batch execution of a RunConfig: dispatch jobs (concurrently up to a limit),
// collect per-job payloads in config order and write report.json, report.txt
// and CSV artifacts. Failed certificates are ordinary results; only job
// errors (bad parameters, solver failures) make the run exit nonzero.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tmcert/certificates.hpp"
#include "tmcert/config.hpp"
#include "tmcert/modes.hpp"
#include "tmcert/spectra.hpp"

namespace tmcert::cli {

using certificates::Certificate;
using certificates::Provenanced;

struct JobOutcome {
    int index = 0;
    std::string kind;
    bool errored = false;
    std::string error;
    json payload = json::object();
    std::vector<std::pair<std::string, std::string>> artifacts;  ///< filename, content
};

struct Report {
    json doc;
    std::string text;
    bool any_error = false;
    bool all_rows_ok = true;  ///< builtin suites only
};

namespace detail {

inline double need(const json& params, const std::string& key) {
    if (!params.contains(key))
        throw std::invalid_argument("missing parameter '" + key + "'");
    return params.at(key).get<double>();
}

inline double opt(const json& params, const std::string& key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
}

inline std::map<std::string, double> to_param_map(const json& params) {
    std::map<std::string, double> m;
    for (auto it = params.begin(); it != params.end(); ++it)
        if (it.value().is_number()) m[it.key()] = it.value().get<double>();
    return m;
}

inline json eigen_payload(const spectra::EigenResult& r) {
    json j = {{"bc", r.bc},
              {"h", r.h},
              {"T", r.T},
              {"eigenvalues", r.eigenvalues},
              {"residuals", r.residuals},
              {"iterations", r.iterations}};
    if (!r.extrapolated.empty()) j["extrapolated"] = r.extrapolated;
    if (std::isfinite(r.t_sensitivity)) j["t_sensitivity"] = r.t_sensitivity;
    return j;
}

/// P1 interpolant that returns zero outside the mesh and keeps the mesh
/// alive through shared ownership, for sampling exports on boxes larger
/// than the section.
inline modes::ScalarField2 fe_zero_outside(std::shared_ptr<geometry::TriMesh> mesh,
                                           std::shared_ptr<std::vector<double>> vals) {
    auto safe_eval = [mesh, vals](double x, double y) -> double {
        const int t = mesh->locate(x, y);
        if (t < 0) return 0.0;
        const auto l = mesh->barycentric(t, x, y);
        const auto& tr = mesh->tris[t];
        return l[0] * (*vals)[tr[0]] + l[1] * (*vals)[tr[1]] + l[2] * (*vals)[tr[2]];
    };
    auto safe_grad = [mesh, vals](double x, double y) -> Eigen::Vector2d {
        const int t = mesh->locate(x, y);
        if (t < 0) return Eigen::Vector2d::Zero();
        Eigen::Vector2d g[3];
        fem2d::detail::p1_gradients(*mesh, t, g);
        const auto& tr = mesh->tris[t];
        return (*vals)[tr[0]] * g[0] + (*vals)[tr[1]] * g[1] + (*vals)[tr[2]] * g[2];
    };
    return {safe_eval, safe_grad};
}

inline spectra::EigenResult pipeline_eigs(const std::string& preset, const Job& job,
                                          spectra::Bc bc) {
    auto dom = geometry::preset_domain(preset, to_param_map(job.params));
    spectra::LaplacianOptions lo;
    lo.tol = job.numerics.tol;
    lo.extrapolate = true;
    lo.t_sensitivity = false;
    return spectra::laplacian_eigs(dom, bc, job.numerics.k, job.numerics.h, job.numerics.T, lo);
}

inline Provenanced fem_input(const spectra::EigenResult& r, int i = 0) {
    Provenanced p;
    p.value = r.eigenvalues[i];
    p.provenance = "fem(h=" + format_double(r.h) + ",T=" + format_double(r.T) + ")";
    if (!r.extrapolated.empty())
        p.uncertainty = std::abs(r.eigenvalues[i] - r.extrapolated[i]);
    return p;
}

inline Certificate dispatch_certificate(const std::string& id, const json& params, long n_series) {
    auto pin = [&](const char* key) -> Provenanced {
        Provenanced p;
        p.value = need(params, key);
        p.provenance = "config";
        p.uncertainty = opt(params, std::string(key) + "_uncertainty", 0.0);
        return p;
    };
    if (id == "cuboid")
        return certificates::cert_cuboid(need(params, "a"), need(params, "L"),
                                         pin("lambda_N_guide"));
    if (id == "te_resonator")
        return certificates::cert_te_resonator(pin("lambda_N_resonator"), need(params, "L"),
                                               pin("lambda_N_guide"));
    if (id == "tem")
        return certificates::cert_tem(need(params, "L"), pin("lambda_N_guide"));
    if (id == "tm")
        return certificates::cert_tm(pin("lambda_D_resonator"), need(params, "L"),
                                     pin("lambda_N_guide"))
            .cert;
    if (id == "big_resonator")
        return certificates::cert_big_resonator(pin("lambda_D_domain"), pin("lambda_N_guide"));
    if (id == "cube_inclusion")
        return certificates::cube_inclusion(need(params, "a_cube"), pin("lambda_N_guide"));
    if (id == "sixlegs")
        return certificates::cert_sixlegs(pin("lambda_X"), certificates::kappa(kPi),
                                          certificates::kappa(std::sqrt(5.0) * kPi));
    if (id == "tripode")
        return certificates::cert_tripode(pin("lambda_L"), n_series).cert;
    throw std::invalid_argument("unknown certificate id '" + id + "'");
}

inline JobOutcome run_modes_export(const Job& job) {
    JobOutcome out;
    const auto& p = job.params;
    modes::VectorField3 field;
    const double a = opt(p, "a", 1.0), b = opt(p, "b", 1.0), L = opt(p, "L", 2.0);
    if (job.id == "te_mode") {
        auto phi = modes::ScalarField2::closed_form(
            [a](double x, double) { return std::cos(kPi * x / a); },
            [a](double x, double) {
                return Eigen::Vector2d(-kPi / a * std::sin(kPi * x / a), 0.0);
            });
        field = modes::te_mode(phi, pi_sq() / (a * a), need(p, "lambda"));
    } else if (job.id == "tm_mode") {
        auto phi = modes::ScalarField2::closed_form(
            [a, b](double x, double y) { return std::sin(kPi * x / a) * std::sin(kPi * y / b); },
            [a, b](double x, double y) {
                return Eigen::Vector2d(kPi / a * std::cos(kPi * x / a) * std::sin(kPi * y / b),
                                       kPi / b * std::sin(kPi * x / a) * std::cos(kPi * y / b));
            });
        field = modes::tm_mode(phi, pi_sq() * (1 / (a * a) + 1 / (b * b)), need(p, "lambda"));
    } else if (job.id == "tem_mode" || job.id == "tem_resonator") {
        auto dom = geometry::preset_domain("square_annulus", {{"a", a}, {"b", b}});
        auto mesh = std::make_shared<geometry::TriMesh>(geometry::triangulate(dom, job.numerics.h));
        auto cp = modes::capacitor_potential(*mesh);
        auto vals = std::make_shared<std::vector<double>>(std::move(cp.u.values));
        auto pot = fe_zero_outside(std::move(mesh), std::move(vals));
        if (job.id == "tem_mode") {
            field = modes::tem_mode(pot, opt(p, "lambda", 0.0));
        } else {
            const double g = 0.5 * (a - b);
            std::vector<modes::Box3> boxes = {
                {{0, 0, 0}, {g, a, 0}},
                {{g + b, 0, 0}, {a, a, 0}},
                {{g, 0, 0}, {g + b, g, 0}},
                {{g, g + b, 0}, {g + b, a, 0}},
            };
            field = modes::testfield_tem_resonator(pot, L, boxes);
        }
    } else if (job.id == "trapped_dirichlet" || job.id == "trapped_neumann") {
        const int m = static_cast<int>(opt(p, "m", job.id == "trapped_dirichlet" ? 0 : 1));
        if (job.id == "trapped_dirichlet") {
            auto phi = modes::ScalarField2::closed_form(
                [](double y, double z) { return std::sin(kPi * y) * std::sin(kPi * z); },
                [](double y, double z) {
                    return Eigen::Vector2d(kPi * std::cos(kPi * y) * std::sin(kPi * z),
                                           kPi * std::sin(kPi * y) * std::cos(kPi * z));
                });
            field = modes::trapped_mode_dirichlet(phi, 2 * pi_sq(), m, a).field;
        } else {
            auto phi = modes::ScalarField2::closed_form(
                [](double y, double z) { return std::cos(kPi * y) * std::cos(kPi * z); },
                [](double y, double z) {
                    return Eigen::Vector2d(-kPi * std::sin(kPi * y) * std::cos(kPi * z),
                                           -kPi * std::cos(kPi * y) * std::sin(kPi * z));
                });
            field = modes::trapped_mode_neumann(phi, 2 * pi_sq(), m, a).field;
        }
    } else if (job.id == "cuboid_te") {
        field = modes::testfield_cuboid_te(a, b, L);
    } else if (job.id == "te_resonator") {
        auto phi = modes::ScalarField2::closed_form(
            [a](double x, double) { return std::cos(kPi * x / a); },
            [a](double x, double) {
                return Eigen::Vector2d(-kPi / a * std::sin(kPi * x / a), 0.0);
            });
        field = modes::testfield_te_resonator(phi, L, {{0, 0, 0}, {a, b, 0}});
    } else if (job.id == "tm_resonator") {
        const double lam_d = pi_sq() * (1 / (a * a) + 1 / (b * b));
        const double norm = 2.0 / std::sqrt(a * b);
        auto phi = modes::ScalarField2::closed_form(
            [=](double x, double y) { return norm * std::sin(kPi * x / a) * std::sin(kPi * y / b); },
            [=](double x, double y) {
                return Eigen::Vector2d(
                    norm * kPi / a * std::cos(kPi * x / a) * std::sin(kPi * y / b),
                    norm * kPi / b * std::sin(kPi * x / a) * std::cos(kPi * y / b));
            });
        field = modes::testfield_tm_resonator(phi, lam_d, L, {{0, 0, 0}, {a, b, 0}});
    } else {
        throw std::invalid_argument("unknown mode '" + job.id + "'");
    }

    modes::Box3 box;
    std::array<int, 3> n = {8, 8, 8};
    if (p.contains("grid")) {
        const auto& g = p.at("grid");
        for (int i = 0; i < 3; ++i) {
            box.lo[i] = g.at("lo").at(i).get<double>();
            box.hi[i] = g.at("hi").at(i).get<double>();
            n[i] = g.at("n").at(i).get<int>();
        }
    } else if (field.support.bounded && !field.support.boxes.empty()) {
        box = field.support.boxes[0];
    } else {
        box = {{0, 0, 0}, {a, b, 1}};
    }
    std::ostringstream csv;
    modes::export_field_csv(field, modes::grid_points(box, n), csv);
    const std::string name = (job.output.empty() ? job.id : job.output) + ".csv";
    out.artifacts.emplace_back(name, csv.str());
    out.payload = {{"mode", job.id}, {"samples", n[0] * n[1] * n[2]}, {"artifact", name}};
    return out;
}

inline JobOutcome run_job(const Job& job) {
    JobOutcome out;
    out.kind = job.kind;
    if (job.kind == "kappa") {
        const auto r = certificates::kappa(need(job.params, "a"));
        out.payload = {{"a", r.a}, {"kappa", r.kappa}, {"residual", r.residual}};
    } else if (job.kind == "spectrum") {
        auto dom = geometry::preset_domain(job.preset, to_param_map(job.params));
        spectra::LaplacianOptions lo;
        lo.tol = job.numerics.tol;
        lo.t_sensitivity = !dom.ports.empty();
        const auto r = spectra::laplacian_eigs(
            dom, job.bc == "neumann" ? spectra::Bc::neumann : spectra::Bc::dirichlet,
            job.numerics.k, job.numerics.h, job.numerics.T, lo);
        out.payload = eigen_payload(r);
        out.payload["preset"] = job.preset;
    } else if (job.kind == "certificate") {
        const Certificate c = dispatch_certificate(job.id, job.params, job.numerics.N_series);
        out.payload = c;
    } else if (job.kind == "full_pipeline") {
        if (job.preset == "x_shape") {
            const auto r = pipeline_eigs("x_shape", job, spectra::Bc::dirichlet);
            const auto c = certificates::cert_sixlegs(fem_input(r), certificates::kappa(kPi),
                                                      certificates::kappa(std::sqrt(5.0) * kPi));
            out.payload = {{"eigen", eigen_payload(r)}, {"certificate", c}};
        } else if (job.preset == "l_shape") {
            const auto r = pipeline_eigs("l_shape", job, spectra::Bc::dirichlet);
            const auto tc = certificates::cert_tripode(fem_input(r), job.numerics.N_series);
            out.payload = {{"eigen", eigen_payload(r)},
                           {"certificate", tc.cert},
                           {"constants",
                            {{"C1", tc.constants.c1},
                             {"C2", tc.constants.c2},
                             {"C_square", tc.constants.c_square},
                             {"tail_value", tc.constants.tail_value},
                             {"sup_q", tc.constants.sup_q},
                             {"precondition_4C1_plus_C2_negative", tc.constants.precondition_ok}}}};
        } else {
            throw std::invalid_argument("full_pipeline: preset must be x_shape or l_shape");
        }
    } else if (job.kind == "modes_export") {
        out = run_modes_export(job);
        out.kind = job.kind;
    } else {
        throw std::invalid_argument("unknown job kind '" + job.kind + "'");
    }
    return out;
}

inline std::string iso_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline std::string verdict_of(const json& payload) {
    if (payload.contains("verdict")) return payload.at("verdict").get<std::string>();
    if (payload.contains("certificate")) return payload.at("certificate").at("verdict");
    return "";
}

inline std::string margin_of(const json& payload) {
    if (payload.contains("margin")) return format_double(payload.at("margin").get<double>());
    if (payload.contains("certificate"))
        return format_double(payload.at("certificate").at("margin").get<double>());
    if (payload.contains("eigenvalues") && !payload.at("eigenvalues").empty())
        return format_double(payload.at("eigenvalues").at(0).get<double>());
    if (payload.contains("kappa")) return format_double(payload.at("kappa").get<double>());
    return "";
}

}  // namespace detail

/// Execute all jobs (at most `jobs_limit` in flight) and assemble the
/// report in config order. Timestamps live in a separate metadata block so
/// reports can be compared without it.
inline Report run_config(const RunConfig& cfg, int jobs_limit = 1, bool include_meta = true) {
    std::vector<JobOutcome> outcomes(cfg.jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfg.jobs.size()) return;
            JobOutcome& out = outcomes[i];
            out.index = static_cast<int>(i);
            try {
                JobOutcome r = detail::run_job(cfg.jobs[i]);
                r.index = static_cast<int>(i);
                out = std::move(r);
            } catch (const std::exception& e) {
                out.kind = cfg.jobs[i].kind;
                out.errored = true;
                out.error = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs_limit, static_cast<int>(cfg.jobs.size())));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    Report rep;
    json jjobs = json::array();
    std::ostringstream txt;
    txt << "idx  kind           id/preset            margin/value        verdict\n";
    txt << "---------------------------------------------------------------------\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        json jo = {{"index", o.index},
                   {"kind", o.kind},
                   {"status", o.errored ? "error" : "ok"}};
        if (o.errored) {
            jo["error"] = o.error;
            rep.any_error = true;
        } else {
            jo["result"] = o.payload;
        }
        jjobs.push_back(jo);
        const std::string name = !cfg.jobs[i].id.empty() ? cfg.jobs[i].id : cfg.jobs[i].preset;
        char line[256];
        std::snprintf(line, sizeof(line), "%-4zu %-14s %-20s %-19s %s\n", i, o.kind.c_str(),
                      name.c_str(),
                      o.errored ? "-" : detail::margin_of(o.payload).c_str(),
                      o.errored ? ("ERROR: " + o.error).c_str()
                                : detail::verdict_of(o.payload).c_str());
        txt << line;
    }
    rep.doc = json{{"version", 1}, {"jobs", jjobs}};
    if (include_meta) rep.doc["meta"] = {{"generated_at", detail::iso_now()}, {"tool", "tmcert"}};
    rep.text = txt.str();

    // stash artifacts for the writer
    json arts = json::array();
    for (const auto& o : outcomes)
        for (const auto& [name, content] : o.artifacts)
            arts.push_back({{"name", name}, {"content", content}});
    if (!arts.empty()) rep.doc["_artifacts"] = arts;
    return rep;
}

/// Write report.json, report.txt and any CSV artifacts into out_dir.
inline void write_report(Report& rep, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (rep.doc.contains("_artifacts")) {
        for (const auto& a : rep.doc.at("_artifacts")) {
            std::ofstream os(fs::path(out_dir) / a.at("name").get<std::string>());
            os << a.at("content").get<std::string>();
        }
        rep.doc.erase("_artifacts");
    }
    std::ofstream oj(fs::path(out_dir) / "report.json");
    oj << rep.doc.dump(2) << '\n';
    std::ofstream ot(fs::path(out_dir) / "report.txt");
    ot << rep.text;
}

// ---------------------------------------------------------------------------
// Builtin reproduction suite
// ---------------------------------------------------------------------------

struct SuiteRow {
    std::string name;
    double reference = 0;
    double computed = 0;
    double tolerance = 0;
    bool ok = false;
};

/// The canned comparison table: reference value vs computed value vs
/// tolerance for every headline constant. FEM rows widen their tolerance
/// with the discretization estimate, so coarser runs stay consistent.
inline Report builtin_suite(const std::string& name, const Numerics& num = {},
                            bool include_meta = true) {
    if (name != "paper_table")
        throw std::invalid_argument("builtin_suite: unknown suite '" + name + "'");
    std::vector<SuiteRow> rows;
    auto add = [&](const std::string& rname, double ref, double got, double tol) {
        rows.push_back({rname, ref, got, tol, std::abs(got - ref) <= tol});
    };

    const auto kp = certificates::kappa(kPi);
    const auto k5 = certificates::kappa(std::sqrt(5.0) * kPi);
    add("kappa(pi)", 4.0214, kp.kappa, 1e-3);
    add("kappa(sqrt(5 pi^2))", 6.0827, k5.kappa, 1e-3);

    spectra::LaplacianOptions lo;
    lo.tol = num.tol;
    auto run_preset = [&](const char* preset) {
        return spectra::laplacian_eigs(geometry::preset_domain(preset), spectra::Bc::dirichlet, 1,
                                       num.h, num.T, lo);
    };
    const auto rl = run_preset("l_shape");
    const auto rx = run_preset("x_shape");
    auto fem_tol = [](const spectra::EigenResult& r, double base) {
        const double est = r.extrapolated.empty()
                               ? 0.0
                               : std::abs(r.eigenvalues[0] - r.extrapolated[0]);
        return std::max(base, 3.0 * est);
    };
    add("lambda(corner L domain)", 9.1722, rl.eigenvalues[0], fem_tol(rl, 0.005 * 9.1722));
    add("lambda(planar cross X)", 6.5186, rx.eigenvalues[0], fem_tol(rx, 0.005 * 6.5186));

    const auto csix = certificates::cert_sixlegs(detail::fem_input(rx), kp, k5);
    add("sixlegs margin", -1.0355, csix.margin, std::max(0.02, 2.0 * csix.uncertainty));

    const auto ctri = certificates::cert_tripode({9.1722, "reference", 0.0}, num.N_series);
    add("tripode C2", 3.571, ctri.constants.c2, 5e-3);
    add("tripode C_square", 0.3052, ctri.constants.c_square, 1e-3);
    add("tripode tail value", -3.8205, ctri.constants.tail_value, 0.02);

    auto rect = geometry::preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}});
    const auto rd = spectra::laplacian_eigs(rect, spectra::Bc::dirichlet, 1, num.h, num.T, lo);
    const auto rn = spectra::laplacian_eigs(rect, spectra::Bc::neumann, 1, num.h, num.T, lo);
    add("unit square Dirichlet", 2 * pi_sq(), rd.eigenvalues[0], fem_tol(rd, 0.005 * 2 * pi_sq()));
    add("unit square Neumann", pi_sq(), rn.eigenvalues[0], fem_tol(rn, 0.005 * pi_sq()));

    Report rep;
    json jrows = json::array();
    std::ostringstream txt;
    txt << "row  name                        reference      computed       tolerance    status\n";
    txt << "-----------------------------------------------------------------------------------\n";
    rep.all_rows_ok = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        jrows.push_back({{"name", r.name},
                         {"reference", r.reference},
                         {"computed", r.computed},
                         {"tolerance", r.tolerance},
                         {"ok", r.ok}});
        char line[256];
        std::snprintf(line, sizeof(line), "%-4zu %-27s %-14.6g %-14.8g %-12.3g %s\n", i + 1,
                      r.name.c_str(), r.reference, r.computed, r.tolerance,
                      r.ok ? "ok" : "OUT OF TOLERANCE");
        txt << line;
        rep.all_rows_ok = rep.all_rows_ok && r.ok;
    }
    txt << "\nsixlegs verdict: " << certificates::to_string(csix.verdict)
        << "\ntripode verdict: " << certificates::to_string(ctri.cert.verdict) << "\n";
    rep.doc = json{{"version", 1},
                   {"suite", name},
                   {"rows", jrows},
                   {"verdicts",
                    {{"sixlegs", certificates::to_string(csix.verdict)},
                     {"tripode", certificates::to_string(ctri.cert.verdict)}}}};
    if (include_meta) rep.doc["meta"] = {{"generated_at", detail::iso_now()}, {"tool", "tmcert"}};
    rep.text = txt.str();
    return rep;
}

}  // namespace tmcert::cli
