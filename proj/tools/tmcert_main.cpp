// tmcert: batch verification of waveguide trapped-mode certificates.
//
//   tmcert run <config.json> [--jobs N] [--out DIR] [--omit-meta]
//   tmcert suite paper_table [--h H] [--T T] [--out DIR] [--omit-meta]
//   tmcert kappa <a>
//   tmcert spectrum <preset> [--bc dirichlet|neumann] [--h H] [--T T] [-k K]
//                            [--param key=val ...]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "tmcert/config.hpp"
#include "tmcert/runner.hpp"

namespace {

std::map<std::string, double> parse_kv(const std::vector<std::string>& kvs) {
    std::map<std::string, double> m;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--param", "expected key=value, got '" + kv + "'");
        m[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trapped-mode certificate toolkit"};
    app.require_subcommand(1);
    // --h is a domain option (mesh size), so help stays on --help only
    app.set_help_flag("--help", "print help");

    // run
    std::string config_path, out_dir = ".";
    int jobs = 1;
    bool omit_meta = false;
    auto* run = app.add_subcommand("run", "execute a job configuration");
    run->set_help_flag("--help", "print help");
    run->add_option("config", config_path, "JSON run configuration")->required();
    run->add_option("--jobs", jobs, "max jobs in flight")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--omit-meta", omit_meta, "omit the timestamp metadata block");

    // suite
    std::string suite_name;
    double suite_h = 1.0 / 32, suite_T = 4.0;
    auto* suite = app.add_subcommand("suite", "run a builtin reproduction suite");
    suite->set_help_flag("--help", "print help");
    suite->add_option("name", suite_name, "suite name (paper_table)")->required();
    suite->add_option("--h", suite_h, "mesh size")->check(CLI::PositiveNumber);
    suite->add_option("--T", suite_T, "port truncation length")->check(CLI::PositiveNumber);
    suite->add_option("--out", out_dir, "output directory");
    suite->add_flag("--omit-meta", omit_meta, "omit the timestamp metadata block");

    // kappa
    double kappa_a = 0;
    auto* kap = app.add_subcommand("kappa", "smallest positive root of sqrt(k) tan(sqrt(k)/2) = a");
    kap->set_help_flag("--help", "print help");
    kap->add_option("a", kappa_a, "right-hand side a > 0")->required();

    // spectrum
    std::string preset, bc = "dirichlet";
    double sp_h = 1.0 / 32, sp_T = 4.0;
    int sp_k = 1;
    std::vector<std::string> sp_params;
    auto* spec = app.add_subcommand("spectrum", "FEM eigenvalues of a preset domain");
    spec->set_help_flag("--help", "print help");
    spec->add_option("preset", preset, "domain preset name")->required();
    spec->add_option("--bc", bc, "dirichlet or neumann")
        ->check(CLI::IsMember({"dirichlet", "neumann"}));
    spec->add_option("--h", sp_h, "mesh size")->check(CLI::PositiveNumber);
    spec->add_option("--T", sp_T, "port truncation length")->check(CLI::PositiveNumber);
    spec->add_option("-k,--k", sp_k, "number of eigenvalues")->check(CLI::PositiveNumber);
    spec->add_option("--param", sp_params, "preset parameter key=val");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "tmcert: cannot open " << config_path << "\n";
                return 1;
            }
            std::stringstream ss;
            ss << in.rdbuf();
            const auto cfg = tmcert::cli::parse_config_text(ss.str());
            auto rep = tmcert::cli::run_config(cfg, jobs, !omit_meta);
            tmcert::cli::write_report(rep, out_dir);
            std::cout << rep.text;
            return rep.any_error ? 1 : 0;
        }
        if (*suite) {
            tmcert::cli::Numerics num;
            num.h = suite_h;
            num.T = suite_T;
            auto rep = tmcert::cli::builtin_suite(suite_name, num, !omit_meta);
            tmcert::cli::write_report(rep, out_dir);
            std::cout << rep.text;
            return rep.all_rows_ok ? 0 : 1;
        }
        if (*kap) {
            const auto r = tmcert::certificates::kappa(kappa_a);
            std::cout << "kappa(" << tmcert::format_double(kappa_a)
                      << ") = " << tmcert::format_double(r.kappa)
                      << "  residual = " << tmcert::format_double(r.residual) << "\n";
            return 0;
        }
        if (*spec) {
            tmcert::cli::Job job;
            job.kind = "spectrum";
            job.preset = preset;
            job.bc = bc;
            job.numerics.h = sp_h;
            job.numerics.T = sp_T;
            job.numerics.k = sp_k;
            for (const auto& [k, v] : parse_kv(sp_params)) job.params[k] = v;
            tmcert::cli::RunConfig cfg;
            cfg.jobs.push_back(job);
            auto rep = tmcert::cli::run_config(cfg, 1, false);
            std::cout << rep.doc.at("jobs").at(0).dump(2) << "\n";
            return rep.any_error ? 1 : 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "tmcert: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
