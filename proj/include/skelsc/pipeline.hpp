#pragma once

#include "skelsc/common.hpp"
#include "skelsc/covariance.hpp"
#include "skelsc/graph_clustering.hpp"
#include "skelsc/metrics.hpp"
#include "skelsc/self_expressive.hpp"
#include "skelsc/skeleton_data.hpp"
#include "skelsc/temporal_pruning.hpp"
#include "skelsc/tsc.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace skelsc {

enum class PipelineVariant { selfexpress, pruned_selfexpress, tsc };
enum class Encoder { covariance, raw_stacked };
// Self-expressive solvers plus the two plain baselines (k-means, spectral
// clustering on cosine affinity) applied directly to the encoded features.
enum class Method { lsr, ssc_admm, ssc_omp, ensc, kmeans, spectral };

NLOHMANN_JSON_SERIALIZE_ENUM(PipelineVariant, {{PipelineVariant::selfexpress, "selfexpress"},
                                               {PipelineVariant::pruned_selfexpress, "pruned_selfexpress"},
                                               {PipelineVariant::tsc, "tsc"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Encoder, {{Encoder::covariance, "covariance"}, {Encoder::raw_stacked, "raw_stacked"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Method, {{Method::lsr, "lsr"},
                                      {Method::ssc_admm, "ssc_admm"},
                                      {Method::ssc_omp, "ssc_omp"},
                                      {Method::ensc, "ensc"},
                                      {Method::kmeans, "kmeans"},
                                      {Method::spectral, "spectral"}})
NLOHMANN_JSON_SERIALIZE_ENUM(PruneStrategy, {{PruneStrategy::min_phi, "min_phi"},
                                             {PruneStrategy::min_temporalssc, "min_temporalssc"},
                                             {PruneStrategy::percentage_temporalssc, "percentage_temporalssc"},
                                             {PruneStrategy::threshold_temporalssc, "threshold_temporalssc"},
                                             {PruneStrategy::tsc_min, "tsc_min"},
                                             {PruneStrategy::tsc_max, "tsc_max"},
                                             {PruneStrategy::temporal_sc, "temporal_sc"},
                                             {PruneStrategy::temporal_km, "temporal_km"}})
NLOHMANN_JSON_SERIALIZE_ENUM(LaplacianKind, {{LaplacianKind::symmetric, "symmetric"},
                                             {LaplacianKind::unnormalized, "unnormalized"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DictionaryUpdate, {{DictionaryUpdate::projected_gradient, "projected_gradient"},
                                                {DictionaryUpdate::multiplicative, "multiplicative"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DatasetFormat, {{DatasetFormat::json, "json"}, {DatasetFormat::csv, "csv"}})

struct DatasetFile {
    std::filesystem::path path;
    DatasetFormat format = DatasetFormat::json;
};

struct ExperimentConfig {
    // Where the samples come from. An in-memory Dataset is accepted for
    // embedding the pipeline in other programs; it is not serialized.
    std::variant<DatasetFile, SyntheticSpec, Dataset> source = SyntheticSpec{};
    // Regenerate synthetic data per seed (rng_seed mixed with the run seed).
    bool vary_data_with_seed = false;
    std::optional<Index> root_joint = 0;  // nullopt skips root-relative preprocessing
    PipelineVariant variant = PipelineVariant::selfexpress;
    Encoder encoder = Encoder::covariance;
    bool sqrt2_offdiag = false;
    bool standardize = true;
    Method method = Method::ssc_admm;
    SolverParams solver_params;
    LaplacianKind laplacian = LaplacianKind::symmetric;
    std::optional<PruneConfig> prune;
    std::optional<TscParams> tsc;
    std::optional<int> k;
    std::vector<std::uint64_t> seeds{0};
    std::optional<std::filesystem::path> output;

    void validate() const {
        if (seeds.empty()) throw ConfigError("config: at least one seed required");
        if (k && *k < 1) throw ConfigError("config: k must be positive");
        if (variant == PipelineVariant::pruned_selfexpress && !prune)
            throw ConfigError("config: variant pruned_selfexpress requires a prune section");
        if (variant == PipelineVariant::tsc && !tsc) throw ConfigError("config: variant tsc requires a tsc section");
        if (variant == PipelineVariant::selfexpress && prune)
            throw ConfigError("config: prune section only applies to pruned_selfexpress and tsc variants");
        if (prune) prune->validate();
        if (std::holds_alternative<SyntheticSpec>(source)) std::get<SyntheticSpec>(source).validate();
    }
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::string config_digest;
    bool ok = true;
    std::string failed_stage;
    std::string error;
    std::optional<double> accuracy_percent;
    bool converged = true;
    int iterations = 0;
    std::vector<double> objective_trace;
    std::vector<int> assignments;
    std::size_t resplit_samples = 0;
    double wall_time_ms = 0.0;

    bool operator==(const RunRecord&) const = default;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t count = 0;

    bool operator==(const Aggregate&) const = default;
};

struct Report {
    std::string config_digest;
    std::vector<RunRecord> records;
    Aggregate aggregate;

    bool operator==(const Report&) const = default;
};

inline Aggregate aggregate_records(const std::vector<RunRecord>& records) {
    Aggregate a;
    double sum = 0.0;
    for (const auto& r : records)
        if (r.accuracy_percent) {
            sum += *r.accuracy_percent;
            ++a.count;
        }
    if (a.count == 0) return a;
    a.mean = sum / static_cast<double>(a.count);
    double sq = 0.0;
    for (const auto& r : records)
        if (r.accuracy_percent) sq += (*r.accuracy_percent - a.mean) * (*r.accuracy_percent - a.mean);
    a.std = std::sqrt(sq / static_cast<double>(a.count));
    return a;
}

// ---------------------------------------------------------------------------
// Config (de)serialization

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

template <class E>
E read_enum(const nlohmann::json& j, const char* key, E fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j[key];
    const E e = v.get<E>();
    // nlohmann maps unknown strings to the first enumerator; reject those.
    if (nlohmann::json(e) != v) throw ConfigError(std::string("config: unknown value for '") + key + "': " + v.dump());
    return e;
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json solver_params_to_json(const SolverParams& p) {
    return {{"lambda", detail::opt_json(p.lambda)},     {"rho", detail::opt_json(p.rho)},
            {"alpha", p.alpha},                          {"max_iter", p.max_iter},
            {"tol", p.tol},                              {"omp_sparsity", detail::opt_json(p.omp_sparsity)},
            {"ensc_mix", p.ensc_mix}};
}

inline SolverParams solver_params_from_json(const nlohmann::json& j) {
    SolverParams p;
    detail::read_opt(j, "lambda", p.lambda);
    detail::read_opt(j, "rho", p.rho);
    detail::read(j, "alpha", p.alpha);
    detail::read(j, "max_iter", p.max_iter);
    detail::read(j, "tol", p.tol);
    detail::read_opt(j, "omp_sparsity", p.omp_sparsity);
    detail::read(j, "ensc_mix", p.ensc_mix);
    return p;
}

inline nlohmann::json tsc_params_to_json(const TscParams& p) {
    return {{"atoms", detail::opt_json(p.atoms)},
            {"lambda1", p.lambda1},
            {"lambda2", p.lambda2},
            {"neighbor_window", p.neighbor_window},
            {"max_iter", p.max_iter},
            {"tol", p.tol},
            {"admm_iter", p.admm_iter},
            {"dictionary_iter", p.dictionary_iter},
            {"dictionary_update", p.dictionary_update}};
}

inline TscParams tsc_params_from_json(const nlohmann::json& j) {
    TscParams p;
    detail::read_opt(j, "atoms", p.atoms);
    detail::read(j, "lambda1", p.lambda1);
    detail::read(j, "lambda2", p.lambda2);
    detail::read(j, "neighbor_window", p.neighbor_window);
    detail::read(j, "max_iter", p.max_iter);
    detail::read(j, "tol", p.tol);
    detail::read(j, "admm_iter", p.admm_iter);
    detail::read(j, "dictionary_iter", p.dictionary_iter);
    p.dictionary_update = detail::read_enum(j, "dictionary_update", p.dictionary_update);
    return p;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    if (const auto* f = std::get_if<DatasetFile>(&cfg.source))
        j["dataset"] = {{"path", f->path.string()}, {"format", f->format}};
    else if (const auto* s = std::get_if<SyntheticSpec>(&cfg.source))
        j["dataset"] = {{"synthetic", synthetic_spec_to_json(*s)}};
    else
        j["dataset"] = {{"inline", std::get<Dataset>(cfg.source).size()}};
    j["vary_data_with_seed"] = cfg.vary_data_with_seed;
    j["root_joint"] = detail::opt_json(cfg.root_joint);
    j["variant"] = cfg.variant;
    j["encoder"] = cfg.encoder;
    j["sqrt2_offdiag"] = cfg.sqrt2_offdiag;
    j["standardize"] = cfg.standardize;
    j["solver"] = cfg.method;
    j["solver_params"] = solver_params_to_json(cfg.solver_params);
    j["laplacian"] = cfg.laplacian;
    if (cfg.prune) {
        j["prune"] = {{"strategy", cfg.prune->strategy},
                      {"phi_percent", detail::opt_json(cfg.prune->phi_percent)},
                      {"solver_params", solver_params_to_json(cfg.prune->solver_params)}};
    }
    if (cfg.tsc) j["tsc"] = tsc_params_to_json(*cfg.tsc);
    j["k"] = detail::opt_json(cfg.k);
    j["seeds"] = cfg.seeds;
    j["output"] = cfg.output ? nlohmann::json(cfg.output->string()) : nlohmann::json(nullptr);
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        if (!j.is_object()) throw ConfigError("config: top level must be an object");
        if (!j.contains("dataset")) throw ConfigError("config: missing 'dataset' section");
        const auto& ds = j["dataset"];
        if (ds.contains("synthetic")) {
            cfg.source = synthetic_spec_from_json(ds["synthetic"]);
        } else if (ds.contains("path")) {
            cfg.source = DatasetFile{ds["path"].get<std::string>(), detail::read_enum(ds, "format", DatasetFormat::json)};
        } else {
            throw ConfigError("config: dataset needs 'path' or 'synthetic'");
        }
        detail::read(j, "vary_data_with_seed", cfg.vary_data_with_seed);
        if (j.contains("root_joint")) {
            if (j["root_joint"].is_null())
                cfg.root_joint.reset();
            else
                cfg.root_joint = j["root_joint"].get<Index>();
        }
        cfg.variant = detail::read_enum(j, "variant", cfg.variant);
        cfg.encoder = detail::read_enum(j, "encoder", cfg.encoder);
        detail::read(j, "sqrt2_offdiag", cfg.sqrt2_offdiag);
        detail::read(j, "standardize", cfg.standardize);
        cfg.method = detail::read_enum(j, "solver", cfg.method);
        if (j.contains("solver_params")) cfg.solver_params = solver_params_from_json(j["solver_params"]);
        cfg.laplacian = detail::read_enum(j, "laplacian", cfg.laplacian);
        if (j.contains("prune") && !j["prune"].is_null()) {
            const auto& p = j["prune"];
            PruneConfig pc;
            if (!p.contains("strategy")) throw ConfigError("config: prune.strategy missing");
            pc.strategy = detail::read_enum(p, "strategy", pc.strategy);
            detail::read_opt(p, "phi_percent", pc.phi_percent);
            if (p.contains("solver_params")) pc.solver_params = solver_params_from_json(p["solver_params"]);
            cfg.prune = pc;
        }
        if (j.contains("tsc") && !j["tsc"].is_null()) cfg.tsc = tsc_params_from_json(j["tsc"]);
        detail::read_opt(j, "k", cfg.k);
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("output") && !j["output"].is_null()) cfg.output = j["output"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg = config_from_json(j);
    // Relative paths inside a config file are taken relative to that file.
    const auto base = path.parent_path();
    if (auto* f = std::get_if<DatasetFile>(&cfg.source); f && f->path.is_relative()) f->path = base / f->path;
    if (cfg.output && cfg.output->is_relative()) cfg.output = base / *cfg.output;
    return cfg;
}

/// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
inline std::string config_digest(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config_to_json(cfg).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Running

struct FeatureClustering {
    ClusterLabels labels;
    bool converged = true;
    int iterations = 0;
    std::vector<double> trace;
};

/// Cluster the columns of a D x N feature matrix with `method` into k groups:
/// a self-expressive solver followed by spectral clustering of |C| + |C^T|,
/// or one of the baselines.
inline FeatureClustering cluster_features(const Matrix& X, Method method, const SolverParams& params, int k,
                                          std::uint64_t seed, LaplacianKind laplacian = LaplacianKind::symmetric) {
    FeatureClustering out;
    SpectralOptions spectral;
    spectral.laplacian = laplacian;
    switch (method) {
        case Method::kmeans: {
            auto km = kmeans_detailed(X.transpose(), k, seed);
            out.labels = std::move(km.labels);
            out.iterations = km.iterations;
            out.trace = std::move(km.wcss_trace);
            return out;
        }
        case Method::spectral:
            out.labels = spectral_clustering(build_affinity_cosine(X), k, seed, spectral);
            return out;
        default: break;
    }
    const Solver solver = method == Method::lsr        ? Solver::lsr
                          : method == Method::ssc_admm ? Solver::ssc_admm
                          : method == Method::ssc_omp  ? Solver::ssc_omp
                                                       : Solver::ensc;
    auto C = solve_self_expressive(solver, X, params);
    out.converged = C.converged;
    out.iterations = C.iterations;
    out.trace = std::move(C.trace);
    out.labels = spectral_clustering(build_affinity_selfexpress(C.coeffs), k, seed, spectral);
    return out;
}

namespace detail {

struct StageError : Error {
    std::string stage;
    StageError(std::string s, const std::string& what) : Error(what), stage(std::move(s)) {}
};

template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

inline Dataset acquire_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (const auto* f = std::get_if<DatasetFile>(&cfg.source)) return load_dataset(f->path, f->format);
    if (const auto* d = std::get_if<Dataset>(&cfg.source)) return *d;
    SyntheticSpec spec = std::get<SyntheticSpec>(cfg.source);
    if (cfg.vary_data_with_seed) spec.rng_seed = mix_seed(spec.rng_seed, seed);
    return generate_synthetic_dataset(spec);
}

// Everything between data loading and evaluation. Never sees labels.
inline RunRecord cluster_unlabeled(const ExperimentConfig& cfg, Dataset work, int k, std::uint64_t seed) {
    RunRecord rec;
    if (cfg.root_joint) work = stage("preprocess", [&] { return to_relative_displacements(work, *cfg.root_joint); });
    if (cfg.prune) {
        work = stage("prune", [&] {
            PruneConfig pc = *cfg.prune;
            pc.rng_seed = seed;
            auto r = apply_strategy_detailed(work, pc);
            rec.resplit_samples = r.resplit_samples;
            return std::move(r.dataset);
        });
    }
    Matrix X = stage("encode", [&] {
        Matrix m = cfg.encoder == Encoder::covariance ? encode_covariance(work.samples, cfg.sqrt2_offdiag)
                                                      : encode_raw_stacked(work.samples);
        return cfg.standardize ? standardize_rows(m) : m;
    });
    if (cfg.variant == PipelineVariant::tsc) {
        stage("cluster", [&] {
            TscParams tp = *cfg.tsc;
            tp.rng_seed = seed;
            TscModel model;
            rec.assignments = tsc_cluster(X, tp, k, &model).labels;
            rec.converged = model.converged || k == 1;
            rec.iterations = model.iterations;
            rec.objective_trace = std::move(model.objective_trace);
            return 0;
        });
    } else {
        stage("cluster", [&] {
            auto fc = cluster_features(X, cfg.method, cfg.solver_params, k, seed, cfg.laplacian);
            rec.assignments = std::move(fc.labels.labels);
            rec.converged = fc.converged;
            rec.iterations = fc.iterations;
            rec.objective_trace = std::move(fc.trace);
            return 0;
        });
    }
    return rec;
}

}  // namespace detail

/// Run the configured pipeline once per seed. Stage failures are recorded in
/// the run's record and do not stop the remaining seeds.
inline Report run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Report report;
    report.config_digest = config_digest(cfg);
    for (std::uint64_t seed : cfg.seeds) {
        const auto start = std::chrono::steady_clock::now();
        RunRecord rec;
        try {
            Dataset data = detail::stage("load", [&] {
                Dataset d = detail::acquire_dataset(cfg, seed);
                d.validate();
                if (d.samples.empty()) throw ParseError("empty dataset");
                return d;
            });
            const int k = cfg.k.value_or(data.num_classes);
            if (!cfg.k && !data.labels) throw detail::StageError("load", "k not configured and dataset has no labels");
            std::optional<std::vector<int>> truth = std::move(data.labels);
            data.labels.reset();
            rec = detail::cluster_unlabeled(cfg, std::move(data), k, seed);
            if (truth)
                rec.accuracy_percent = detail::stage("evaluate", [&] { return accuracy(rec.assignments, *truth).accuracy_percent; });
        } catch (const detail::StageError& e) {
            rec.ok = false;
            rec.failed_stage = e.stage;
            rec.error = e.what();
            log::warn("seed " + std::to_string(seed) + " failed in stage " + e.stage + ": " + e.what());
        }
        rec.seed = seed;
        rec.config_digest = report.config_digest;
        rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        report.records.push_back(std::move(rec));
    }
    report.aggregate = aggregate_records(report.records);
    return report;
}

// ---------------------------------------------------------------------------
// Report I/O

enum class ReportFormat { json, csv };

inline nlohmann::json report_to_json(const Report& r) {
    nlohmann::json j;
    j["config_digest"] = r.config_digest;
    j["std_convention"] = "population";
    auto& recs = j["records"] = nlohmann::json::array();
    for (const auto& rec : r.records) {
        recs.push_back({{"seed", rec.seed},
                        {"config_digest", rec.config_digest},
                        {"ok", rec.ok},
                        {"failed_stage", rec.failed_stage},
                        {"error", rec.error},
                        {"accuracy_percent", detail::opt_json(rec.accuracy_percent)},
                        {"converged", rec.converged},
                        {"iterations", rec.iterations},
                        {"objective_trace", rec.objective_trace},
                        {"assignments", rec.assignments},
                        {"resplit_samples", rec.resplit_samples},
                        {"wall_time_ms", rec.wall_time_ms}});
    }
    j["aggregate"] = {{"mean", r.aggregate.mean}, {"std", r.aggregate.std}, {"count", r.aggregate.count}};
    return j;
}

inline Report report_from_json(const nlohmann::json& j) {
    Report r;
    try {
        r.config_digest = j.at("config_digest").get<std::string>();
        for (const auto& e : j.at("records")) {
            RunRecord rec;
            rec.seed = e.at("seed").get<std::uint64_t>();
            rec.config_digest = e.at("config_digest").get<std::string>();
            rec.ok = e.at("ok").get<bool>();
            rec.failed_stage = e.at("failed_stage").get<std::string>();
            rec.error = e.at("error").get<std::string>();
            detail::read_opt(e, "accuracy_percent", rec.accuracy_percent);
            rec.converged = e.at("converged").get<bool>();
            rec.iterations = e.at("iterations").get<int>();
            rec.objective_trace = e.at("objective_trace").get<std::vector<double>>();
            rec.assignments = e.at("assignments").get<std::vector<int>>();
            rec.resplit_samples = e.at("resplit_samples").get<std::size_t>();
            rec.wall_time_ms = e.at("wall_time_ms").get<double>();
            r.records.push_back(std::move(rec));
        }
        const auto& a = j.at("aggregate");
        r.aggregate = {a.at("mean").get<double>(), a.at("std").get<double>(), a.at("count").get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return r;
}

inline Report load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("report: invalid JSON: ") + e.what());
    }
}

namespace detail {

inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/// One row per record followed by one aggregate row; accuracies rendered
/// with two decimals.
inline void report_to_csv(const Report& r, std::ostream& out) {
    out << "seed,status,failed_stage,accuracy_percent,accuracy_std,converged,iterations,wall_time_ms,config_digest\n";
    for (const auto& rec : r.records) {
        out << rec.seed << ',' << (rec.ok ? "ok" : "failed") << ',' << rec.failed_stage << ','
            << (rec.accuracy_percent ? detail::fixed2(*rec.accuracy_percent) : "") << ",," << (rec.converged ? 1 : 0)
            << ',' << rec.iterations << ',' << detail::fixed2(rec.wall_time_ms) << ',' << rec.config_digest << '\n';
    }
    out << "aggregate,,," << detail::fixed2(r.aggregate.mean) << ',' << detail::fixed2(r.aggregate.std) << ",,,,"
        << r.config_digest << '\n';
}

inline void emit_report(const Report& r, const std::filesystem::path& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    if (format == ReportFormat::csv)
        report_to_csv(r, out);
    else
        out << report_to_json(r).dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace skelsc
