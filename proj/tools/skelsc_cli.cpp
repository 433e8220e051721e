// Command-line front end: run experiments, generate synthetic data, convert reports.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include "skelsc/skelsc.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

skelsc::ReportFormat format_for(const std::string& name) {
    if (name == "csv") return skelsc::ReportFormat::csv;
    if (name == "json") return skelsc::ReportFormat::json;
    throw skelsc::ConfigError("unknown report format '" + name + "' (expected json or csv)");
}

void write_report(const skelsc::Report& report, const std::optional<std::string>& out, skelsc::ReportFormat format) {
    if (out) {
        skelsc::emit_report(report, *out, format);
        return;
    }
    if (format == skelsc::ReportFormat::csv)
        skelsc::report_to_csv(report, std::cout);
    else
        std::cout << skelsc::report_to_json(report).dump(2) << '\n';
}

template <class E>
E parse_enum(const std::string& value, const char* what) {
    const nlohmann::json j = value;
    const E e = j.get<E>();
    if (nlohmann::json(e) != j) throw skelsc::ConfigError(std::string("unknown ") + what + " '" + value + "'");
    return e;
}

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<std::string> variant;
    std::optional<std::string> solver;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

int do_run(const RunArgs& a) {
    skelsc::ExperimentConfig cfg = skelsc::load_config(a.config);
    if (a.seed) cfg.seeds = {*a.seed};
    if (a.k) cfg.k = *a.k;
    if (a.variant) cfg.variant = parse_enum<skelsc::PipelineVariant>(*a.variant, "variant");
    if (a.solver) cfg.method = parse_enum<skelsc::Method>(*a.solver, "solver");
    cfg.validate();

    std::optional<std::string> out = a.out;
    if (!out && cfg.output) out = cfg.output->string();
    skelsc::ReportFormat format = skelsc::ReportFormat::json;
    if (a.format)
        format = format_for(*a.format);
    else if (out && std::filesystem::path(*out).extension() == ".csv")
        format = skelsc::ReportFormat::csv;

    const skelsc::Report report = skelsc::run_experiment(cfg);
    write_report(report, out, format);

    std::size_t failed = 0;
    for (const auto& r : report.records) failed += r.ok ? 0 : 1;
    if (failed > 0) {
        skelsc::log::error(std::to_string(failed) + " of " + std::to_string(report.records.size()) + " runs failed");
        return kRuntimeError;
    }
    skelsc::log::info("mean accuracy " + std::to_string(report.aggregate.mean) + "% over " +
                      std::to_string(report.aggregate.count) + " runs");
    return kOk;
}

int do_generate(const std::string& spec_path, const std::string& out) {
    std::ifstream in(spec_path);
    if (!in) throw skelsc::ConfigError("cannot open spec file " + spec_path);
    skelsc::SyntheticSpec spec;
    try {
        spec = skelsc::synthetic_spec_from_json(nlohmann::json::parse(in, nullptr, true, true));
        spec.validate();
    } catch (const nlohmann::json::exception& e) {
        throw skelsc::ConfigError(std::string("spec: ") + e.what());
    } catch (const skelsc::ParameterError& e) {
        throw skelsc::ConfigError(e.what());
    }
    const auto format = std::filesystem::path(out).extension() == ".csv" ? skelsc::DatasetFormat::csv
                                                                         : skelsc::DatasetFormat::json;
    skelsc::save_dataset(skelsc::generate_synthetic_dataset(spec), out, format);
    return kOk;
}

int do_report(const std::string& in, const std::string& format, const std::optional<std::string>& out) {
    const auto fmt = format_for(format);
    write_report(skelsc::load_report(in), out, fmt);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised skeleton-based action clustering"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run_cmd->add_option("--config", run.config, "Experiment config file")->required();
    run_cmd->add_option("--seed", run.seed, "Run a single seed instead of the configured list");
    run_cmd->add_option("--k", run.k, "Number of clusters");
    run_cmd->add_option("--variant", run.variant, "selfexpress | pruned_selfexpress | tsc");
    run_cmd->add_option("--solver", run.solver, "lsr | ssc_admm | ssc_omp | ensc | kmeans | spectral");
    run_cmd->add_option("--out", run.out, "Report path (defaults to the config's output, else stdout)");
    run_cmd->add_option("--format", run.format, "json | csv (default: from the output extension)");

    std::string spec_path, gen_out;
    auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset");
    gen_cmd->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
    gen_cmd->add_option("--out", gen_out, "Output dataset (.json or .csv)")->required();

    std::string report_in, report_format = "csv";
    std::optional<std::string> report_out;
    auto* rep_cmd = app.add_subcommand("report", "Convert a JSON report");
    rep_cmd->add_option("--in", report_in, "Report JSON")->required();
    rep_cmd->add_option("--format", report_format, "csv | json");
    rep_cmd->add_option("--out", report_out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) return do_run(run);
        if (*gen_cmd) return do_generate(spec_path, gen_out);
        if (*rep_cmd) return do_report(report_in, report_format, report_out);
    } catch (const skelsc::ConfigError& e) {
        skelsc::log::error(e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        skelsc::log::error(e.what());
        return kRuntimeError;
    }
    return kOk;
}
