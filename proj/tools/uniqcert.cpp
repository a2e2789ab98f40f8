#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "uniqcert/uniqcert.hpp"

namespace fs = std::filesystem;
using namespace uniqcert;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitSoftware = 70;
constexpr int kExitIo = 74;
constexpr int kExitChecksFailed = 1;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

// Run record written next to outputs: command line, effective configuration,
// digests of inputs and outputs, tool version. No timestamps, so reruns are
// byte-identical.
struct Manifest {
    std::string command;
    std::string config;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest

    void input(const std::string& path) { inputs.emplace_back(path, sha256_hex(read_file(path))); }
    void output(const std::string& path, const std::string& content) {
        write_file(path, content);
        outputs.emplace_back(path, sha256_hex(content));
    }

    std::string text() const {
        std::ostringstream s;
        s << "tool=uniqcert " << UNIQCERT_VERSION << "\n";
        s << "command=" << command << "\n";
        for (const auto& [p, d] : inputs) s << "input=" << p << " sha256=" << d << "\n";
        for (const auto& [p, d] : outputs) s << "output=" << p << " sha256=" << d << "\n";
        s << "[config]\n" << config;
        return s.str();
    }
};

std::string sidecar(const std::string& path) { return path + ".manifest"; }

std::string svg_path_for(const std::string& csv) {
    fs::path p(csv);
    if (p.extension() == ".csv") return p.replace_extension(".svg").string();
    return csv + ".svg";
}

std::vector<std::size_t> parse_counts(const std::string& s) {
    std::vector<std::size_t> out;
    for (auto part : detail::split(s, ',')) out.push_back(detail::parse_count(part, "count"));
    return out;
}

std::vector<FeatureInput> parse_inputs(const std::string& s, const std::vector<Axis>& axes) {
    std::vector<FeatureInput> out;
    for (auto part : detail::split(s, ',')) out.push_back(parse_input(part, axes));
    return out;
}

// "i,j;i,j" -> explicit grid indices
std::vector<std::vector<std::size_t>> parse_points(const std::string& s) {
    std::vector<std::vector<std::size_t>> out;
    for (auto pt : detail::split(s, ';')) {
        if (detail::trim(pt).empty()) continue;
        std::vector<std::size_t> idx;
        for (auto c : detail::split(pt, ',')) idx.push_back(detail::parse_count(c, "point index"));
        out.push_back(std::move(idx));
    }
    return out;
}

int report_error(const std::exception& e, int code) {
    std::cerr << "uniqcert: error: " << e.what() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certify whether gridded samples of u determine a unique governing differential equation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("uniqcert ") + UNIQCERT_VERSION);

    std::string config_path;
    int threads = 0;
    app.add_option("--config", config_path, "threshold configuration file (INI sections)")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "worker threads (overrides UNIQCERT_THREADS)")->check(CLI::PositiveNumber);

    std::string command;
    for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(i ? argv[i] : "uniqcert");

    // generate
    auto* gen = app.add_subcommand("generate", "sample a registered analytic case to a grid CSV");
    std::string gen_case, gen_counts, gen_out;
    std::vector<std::string> gen_params;
    std::optional<double> pa, pb, pc;
    gen->add_option("--case", gen_case, "case name")->required();
    gen->add_option("--a", pa, "parameter a");
    gen->add_option("--b", pb, "parameter b");
    gen->add_option("--c", pc, "parameter c");
    gen->add_option("--param", gen_params, "extra parameter key=value");
    gen->add_option("--counts", gen_counts, "samples per axis, e.g. 200,300");
    gen->add_option("--out", gen_out, "output grid CSV")->required();

    // differentiate
    auto* dif = app.add_subcommand("differentiate", "finite-difference derivative of a grid CSV");
    std::string dif_in, dif_deriv, dif_out, dif_boundary = "trim";
    int dif_order = 2;
    dif->add_option("--in", dif_in, "input grid CSV")->required()->check(CLI::ExistingFile);
    dif->add_option("--deriv", dif_deriv, "derivative label, e.g. u_x or u_txx")->required();
    dif->add_option("--order", dif_order, "accuracy order (2, 4, 6, 8, 10)");
    dif->add_option("--boundary", dif_boundary, "trim or one_sided")->check(CLI::IsMember({"trim", "one_sided"}));
    dif->add_option("--out", dif_out, "output grid CSV")->required();

    // sfranco
    auto* sfr = app.add_subcommand("sfranco", "smallest singular value across accuracy orders");
    std::string sfr_in, sfr_features, sfr_features_file, sfr_out;
    std::optional<int> sfr_max;
    sfr->add_option("--in", sfr_in, "input grid CSV")->required()->check(CLI::ExistingFile);
    sfr->add_option("--features", sfr_features, "feature config, e.g. 'kind=linear; inputs=u,u_x'");
    sfr->add_option("--features-file", sfr_features_file, "file holding the feature config")->check(CLI::ExistingFile);
    sfr->add_option("--max-order", sfr_max, "largest accuracy order d (default from config, 8)");
    sfr->add_option("--out", sfr_out, "series CSV (an SVG plot is written alongside)")->required();

    // jrc
    auto* jr = app.add_subcommand("jrc", "Jacobian smallest singular values at two accuracy orders");
    std::string jr_in, jr_inputs, jr_out, jr_points;
    std::optional<int> jr_d1, jr_d2;
    std::optional<std::size_t> jr_stride;
    jr->add_option("--in", jr_in, "input grid CSV")->required()->check(CLI::ExistingFile);
    jr->add_option("--inputs", jr_inputs, "feature inputs, e.g. u,u_x")->required();
    jr->add_option("--d1", jr_d1, "low accuracy order (default 2)");
    jr->add_option("--d2", jr_d2, "high accuracy order (default 8; odd values round up)");
    jr->add_option("--stride", jr_stride, "use every s-th interior point");
    jr->add_option("--points", jr_points, "explicit grid indices 'i,j;i,j'");
    jr->add_option("--out", jr_out, "heat-map CSV (an SVG is written alongside)")->required();

    // certify
    auto* cer = app.add_subcommand("certify", "uniqueness verdict for a function class");
    std::string cer_in, cer_class, cer_inputs, cer_report, cer_features;
    unsigned cer_degree = 0;
    bool cer_alg = false, cer_tvc = false;
    cer->add_option("--in", cer_in, "input grid CSV")->required()->check(CLI::ExistingFile);
    cer->add_option("--class", cer_class, "linear, polynomial, algebraic, analytic or smooth")->required();
    cer->add_option("--inputs", cer_inputs, "feature inputs, e.g. u,u_x")->required();
    cer->add_option("--degree", cer_degree, "degree bound p (polynomial, algebraic)");
    cer->add_flag("--u-algebraic", cer_alg, "assert that the inputs are algebraic functions");
    cer->add_flag("--time-varying-coefficients", cer_tvc, "F has arbitrary t-dependent coefficients");
    cer->add_option("--fallback-features", cer_features, "feature config for the analytic fallback library");
    cer->add_option("--report", cer_report, "also write the report to this file");

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "run one of the six canned experiments");
    std::string rep_id, rep_dir;
    rep->add_option("id", rep_id, "experiment id: 5.1.1, 5.1.2, 5.2.1, 5.2.2, 5.3.1, 5.3.2")
        ->required()
        ->check(CLI::IsMember({"5.1.1", "5.1.2", "5.2.1", "5.2.2", "5.3.1", "5.3.1b", "5.3.2"}));
    rep->add_option("--out-dir", rep_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (threads > 0) setenv("UNIQCERT_THREADS", std::to_string(threads).c_str(), 1);
        CertifyConfig cfg = config_path.empty() ? CertifyConfig{} : load_config(config_path);
        Manifest man{command, config_block(cfg), {}, {}};
        if (!config_path.empty()) man.input(config_path);

        if (*gen) {
            Parameters params;
            if (pa) params["a"] = *pa;
            if (pb) params["b"] = *pb;
            if (pc) params["c"] = *pc;
            for (const auto& kv : gen_params) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ParameterError("--param expects key=value, got '" + kv + "'");
                params[kv.substr(0, eq)] = detail::parse_real(kv.substr(eq + 1), "parameter value");
            }
            const AnalyticCase c = make_case(gen_case, params);
            const auto counts = gen_counts.empty() ? c.default_counts : parse_counts(gen_counts);
            std::ostringstream csv;
            export_csv_stream(sample(c, counts), csv);
            man.output(gen_out, csv.str());
            write_file(sidecar(gen_out), man.text());
            std::cout << "wrote " << gen_out << "\n";
            return 0;
        }

        if (*dif) {
            const SampledField f = ingest_csv(dif_in);
            man.input(dif_in);
            const MultiIndex idx = parse_derivative_label(dif_deriv, f.axes());
            idx.check_order();
            const Boundary b = dif_boundary == "one_sided" ? Boundary::OneSided : Boundary::Trim;
            std::ostringstream csv;
            export_csv_stream(differentiate(f, idx, static_cast<unsigned>(dif_order), b), csv);
            man.output(dif_out, csv.str());
            write_file(sidecar(dif_out), man.text());
            std::cout << "wrote " << dif_out << "\n";
            return 0;
        }

        if (*sfr) {
            const SampledField f = ingest_csv(sfr_in);
            man.input(sfr_in);
            std::string text = sfr_features;
            if (!sfr_features_file.empty()) {
                if (!text.empty()) throw ConfigError("give either --features or --features-file, not both");
                text = read_file(sfr_features_file);
                man.input(sfr_features_file);
            }
            if (text.empty()) throw ConfigError("sfranco needs --features or --features-file");
            const std::string defaults = std::string("normalize=") + (cfg.normalize ? "true" : "false") +
                                         "; boundary=" + (cfg.boundary == Boundary::Trim ? "trim" : "one_sided") +
                                         "; zero_tolerance=" + detail::format_real(cfg.zero_tolerance) + "; ";
            const FeatureSpec spec = parse_feature_spec(defaults + text, f.axes());
            const auto series = sfranco(f, spec, sfr_max.value_or(cfg.max_order));
            man.config += "[features]\nspec=" + to_config_string(spec, f.axes()) + "\n";
            man.output(sfr_out, series_csv(series));
            man.output(svg_path_for(sfr_out), svg::series_plot(series, f.label() + ": " + to_config_string(spec, f.axes())));
            write_file(sidecar(sfr_out), man.text());
            for (const auto& n : series.notes) std::cout << "note: " << n << "\n";
            for (std::size_t i = 0; i < series.orders.size(); ++i)
                std::cout << "order " << series.orders[i] << " sigma_min " << detail::format_real(series.sigma_min[i])
                          << " shape " << series.matrix_shape_per_order[i].first << "x"
                          << series.matrix_shape_per_order[i].second << "\n";
            if (series.orders.size() < 3) {
                std::cout << "summary: decaying=n/a (the decay rule needs at least three orders; use max-order >= 6)\n";
                return 0;
            }
            const auto d = diagnose_decay(series, cfg.slope_threshold, cfg.floor_threshold);
            std::cout << "summary: decaying=" << (d.decaying ? "true" : "false")
                      << " slope=" << detail::format_real(d.slope) << " final=" << detail::format_real(d.final_sigma)
                      << " slope_threshold=" << detail::format_real(d.slope_threshold)
                      << " floor_threshold=" << detail::format_real(d.floor_threshold) << "\n";
            return 0;
        }

        if (*jr) {
            const SampledField f = ingest_csv(jr_in);
            man.input(jr_in);
            PointSelector sel = PointSelector::interior();
            if (!jr_points.empty()) {
                if (jr_stride) throw ConfigError("give either --stride or --points, not both");
                sel = PointSelector::explicit_points(parse_points(jr_points));
            } else {
                const std::size_t s = jr_stride.value_or(cfg.jrc_stride);
                if (s == 0) throw SelectorError("stride must be positive");
                if (s > 1) sel = PointSelector::strided(s);
            }
            const auto map = jrc(f, parse_inputs(jr_inputs, f.axes()), jr_d1.value_or(cfg.jrc_d1),
                                 jr_d2.value_or(cfg.jrc_d2), sel);
            const auto cls = classify_map(map, cfg.drop_factor, cfg.jacobian_floor);
            man.output(jr_out, heatmap_csv(map));
            man.output(svg_path_for(jr_out), svg::heatmap(map, f.label() + ": smallest singular value of the Jacobian"));
            write_file(sidecar(jr_out), man.text());
            for (const auto& n : map.notes) std::cout << "note: " << n << "\n";
            std::cout << "points " << map.size() << " d1 " << map.d1 << " d2 " << map.d2 << "\n";
            std::cout << "median sigma_min low " << detail::format_real(median(map.sigma_min_low)) << " high "
                      << detail::format_real(median(map.sigma_min_high)) << "\n";
            std::cout << "summary: classification=" << to_string(cls.kind)
                      << " collapsed_fraction=" << detail::format_real(cls.collapsed_fraction)
                      << " full_rank_fraction=" << detail::format_real(cls.full_rank_fraction) << "\n";
            return 0;
        }

        if (*cer) {
            const SampledField f = ingest_csv(cer_in);
            man.input(cer_in);
            FunctionClassAssumption a;
            a.cls = parse_function_class(cer_class);
            a.degree = cer_degree;
            a.u_is_algebraic = cer_alg;
            a.time_varying_coefficients = cer_tvc;
            a.inputs = parse_inputs(cer_inputs, f.axes());
            if (!cer_features.empty()) cfg.fallback_features = parse_feature_spec(cer_features, f.axes());
            const auto v = certify(f, a, cfg);
            const std::string text = verdict_report(v, f.axes()) + "\n" + verdict_key_values(v, f.axes());
            std::cout << text;
            if (!cer_report.empty()) {
                man.output(cer_report, text);
                write_file(sidecar(cer_report), man.text());
            }
            return exit_code(v.outcome);
        }

        if (*rep) {
            const ExperimentResult r = run_experiment(rep_id);
            fs::create_directories(rep_dir);
            for (const auto& [name, content] : r.files) man.output((fs::path(rep_dir) / name).string(), content);
            const std::string checks = checks_text(r);
            man.output((fs::path(rep_dir) / "checks.txt").string(), checks);
            write_file((fs::path(rep_dir) / "manifest.txt").string(), man.text());
            std::cout << checks;
            return r.passed() ? 0 : kExitChecksFailed;
        }
    } catch (const IoError& e) {
        return report_error(e, kExitIo);
    } catch (const UnknownCaseError& e) {
        return report_error(e, kExitUsage);
    } catch (const ParameterError& e) {
        return report_error(e, kExitUsage);
    } catch (const ConfigError& e) {
        return report_error(e, kExitUsage);
    } catch (const SelectorError& e) {
        return report_error(e, kExitUsage);
    } catch (const OrderError& e) {
        return report_error(e, kExitUsage);
    } catch (const Error& e) {
        return report_error(e, kExitData);
    } catch (const std::exception& e) {
        return report_error(e, kExitSoftware);
    }
    return kExitSoftware;
}
