// Config parsing, the batch runner, report determinism and the builtin
// reproduction suite.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tmcert/config.hpp"
#include "tmcert/runner.hpp"

using namespace tmcert;
using namespace tmcert::cli;

namespace {
std::filesystem::path fresh_dir(const char* tag) {
    auto p = std::filesystem::temp_directory_path() /
             (std::string("tmcert_test_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

const char* kSmallConfig = R"({
  "version": 1,
  "jobs": [
    {"kind": "kappa", "params": {"a": 3.141592653589793}},
    {"kind": "certificate", "id": "cuboid",
     "params": {"a": 2, "L": 2, "lambda_N_guide": 9.869604401089358}},
    {"kind": "certificate", "id": "cuboid",
     "params": {"a": 1, "L": 1, "lambda_N_guide": 9.869604401089358}},
    {"kind": "spectrum", "preset": "rectangle", "bc": "dirichlet",
     "params": {"a": 1, "b": 1}, "numerics": {"h": 0.125, "k": 1}},
    {"kind": "modes_export", "id": "cuboid_te",
     "params": {"a": 1, "b": 1, "L": 1,
                "grid": {"lo": [-0.4, -0.4, -0.9], "hi": [0.4, 0.4, -0.1], "n": [2, 2, 2]}},
     "output": "field"},
    {"kind": "certificate", "id": "tripode", "params": {"lambda_L": 9.1722}}
  ]
})";
}  // namespace

TEST_CASE("config round-trips through serialization") {
    const auto cfg = parse_config_text(kSmallConfig);
    REQUIRE(cfg.jobs.size() == 6);
    CHECK(cfg.jobs[0].kind == "kappa");
    CHECK(cfg.jobs[3].numerics.h == 0.125);
    CHECK(cfg.jobs[3].numerics.T == 4.0);  // default filled in

    const json once = cfg;
    const auto cfg2 = parse_config(once);
    const json twice = cfg2;
    CHECK(once.dump(2) == twice.dump(2));
}

TEST_CASE("config parse errors carry field diagnostics") {
    CHECK_THROWS_WITH(parse_config_text("{"), Catch::Matchers::ContainsSubstring("parse error"));
    CHECK_THROWS_WITH(parse_config_text(R"({"version": 1})"),
                      Catch::Matchers::ContainsSubstring("jobs"));
    CHECK_THROWS_WITH(parse_config_text(R"({"version": 1, "jobs": [{"kind": "dance"}]})"),
                      Catch::Matchers::ContainsSubstring("jobs[0].kind"));
    CHECK_THROWS_WITH(parse_config_text(R"({"version": 2, "jobs": []})"),
                      Catch::Matchers::ContainsSubstring("version"));
    CHECK_THROWS_WITH(
        parse_config_text(R"({"version": 1, "jobs": [{"kind": "kappa", "bc": "mixed"}]})"),
        Catch::Matchers::ContainsSubstring("bc"));
}

TEST_CASE("runner executes jobs in order and reports outcomes") {
    const auto cfg = parse_config_text(kSmallConfig);
    auto rep = run_config(cfg, 2, false);
    CHECK_FALSE(rep.any_error);
    REQUIRE(rep.doc.at("jobs").size() == 6);

    const auto& jobs = rep.doc.at("jobs");
    CHECK(jobs.at(0).at("result").at("kappa").get<double>() == Catch::Approx(4.0214).margin(1e-3));
    CHECK(jobs.at(1).at("result").at("verdict") == "pass");
    // a failed certificate is a scientific outcome, not an error
    CHECK(jobs.at(2).at("result").at("verdict") == "fail");
    CHECK(jobs.at(2).at("status") == "ok");
    CHECK(jobs.at(3).at("result").at("eigenvalues").at(0).get<double>() >
          2 * pi_sq() - 1e-9);
    CHECK(jobs.at(4).at("result").at("artifact") == "field.csv");

    // the series certificate reports the tail constant in its notes
    const auto notes = jobs.at(5).at("result").at("notes");
    bool tail_noted = false;
    for (const auto& n : notes)
        tail_noted = tail_noted || n.get<std::string>().find("-3.82") != std::string::npos;
    CHECK(tail_noted);
    CHECK(jobs.at(5).at("result").at("verdict") == "pass");

    const auto dir = fresh_dir("run");
    write_report(rep, dir.string());
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "report.txt"));
    CHECK(std::filesystem::exists(dir / "field.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("reports are byte-identical across runs when metadata is omitted") {
    const auto cfg = parse_config_text(kSmallConfig);
    auto a = run_config(cfg, 1, false);
    auto b = run_config(cfg, 2, false);  // concurrency must not change the bytes
    CHECK(a.doc.dump(2) == b.doc.dump(2));
    CHECK(a.text == b.text);

    auto with_meta = run_config(cfg, 1, true);
    CHECK(with_meta.doc.contains("meta"));
    auto stripped = with_meta.doc;
    stripped.erase("meta");
    auto no_meta = a.doc;
    if (no_meta.contains("_artifacts")) no_meta.erase("_artifacts");
    if (stripped.contains("_artifacts")) stripped.erase("_artifacts");
    CHECK(stripped.dump(2) == no_meta.dump(2));
}

TEST_CASE("job errors are recorded per job") {
    RunConfig cfg;
    Job bad;
    bad.kind = "certificate";
    bad.id = "cuboid";  // missing parameters
    cfg.jobs.push_back(bad);
    Job good;
    good.kind = "kappa";
    good.params = {{"a", 1.0}};
    cfg.jobs.push_back(good);

    const auto rep = run_config(cfg, 1, false);
    CHECK(rep.any_error);
    CHECK(rep.doc.at("jobs").at(0).at("status") == "error");
    CHECK(rep.doc.at("jobs").at(0).at("error").get<std::string>().find("missing parameter") !=
          std::string::npos);
    CHECK(rep.doc.at("jobs").at(1).at("status") == "ok");
}

TEST_CASE("empty job list yields a valid empty report") {
    RunConfig cfg;
    const auto rep = run_config(cfg, 1, false);
    CHECK_FALSE(rep.any_error);
    CHECK(rep.doc.at("jobs").empty());
}

TEST_CASE("spectrum job reproduces the corner-domain reference value") {
    RunConfig cfg;
    Job j;
    j.kind = "spectrum";
    j.preset = "l_shape";
    j.bc = "dirichlet";
    j.numerics.h = 1.0 / 32;
    j.numerics.T = 4.0;
    cfg.jobs.push_back(j);
    const auto rep = run_config(cfg, 1, false);
    REQUIRE_FALSE(rep.any_error);
    const auto& res = rep.doc.at("jobs").at(0).at("result");
    const double lam = res.at("eigenvalues").at(0).get<double>();
    CHECK(std::abs(lam - 9.1722) <= 0.005 * 9.1722);
    CHECK(res.contains("extrapolated"));
    // ported domain: the truncation sensitivity is part of the report
    CHECK(res.at("t_sensitivity").get<double>() < 0.01);
}

TEST_CASE("full pipeline job runs FEM into the certificate") {
    RunConfig cfg;
    Job j;
    j.kind = "full_pipeline";
    j.preset = "x_shape";
    j.numerics.h = 1.0 / 16;  // coarse but conclusive
    j.numerics.T = 3.0;
    cfg.jobs.push_back(j);
    const auto rep = run_config(cfg, 1, false);
    REQUIRE_FALSE(rep.any_error);
    const auto& res = rep.doc.at("jobs").at(0).at("result");
    CHECK(res.at("certificate").at("verdict") == "pass");
    CHECK(res.at("eigen").at("eigenvalues").at(0).get<double>() < pi_sq());
}

TEST_CASE("paper_table suite is stable under mesh coarsening") {
    Numerics fine;  // defaults: h = 1/32
    const auto a = builtin_suite("paper_table", fine, false);
    CHECK(a.all_rows_ok);

    Numerics coarse;
    coarse.h = 1.0 / 16;
    const auto b = builtin_suite("paper_table", coarse, false);
    CHECK(b.all_rows_ok);  // tolerances widen with the discretization estimate

    REQUIRE(a.doc.at("rows").size() == 10);
    CHECK(a.doc.at("verdicts") == b.doc.at("verdicts"));
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(a.doc.at("rows").at(i).at("ok") == b.doc.at("rows").at(i).at("ok"));

    // repeated run with identical inputs is bit-identical
    const auto c = builtin_suite("paper_table", fine, false);
    CHECK(a.doc.dump(2) == c.doc.dump(2));

    CHECK_THROWS_AS(builtin_suite("unknown"), std::invalid_argument);
}
