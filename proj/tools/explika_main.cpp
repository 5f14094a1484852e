// explika command line: run the full pipeline, generate planted-truth
// synthetic datasets, or replay a single stage on serialized intermediates.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "explika/explika.hpp"

namespace {

explika::PipelineConfig load_config(const std::string& path, const std::string& out_override,
                                    bool has_seed_override, std::uint64_t seed_override,
                                    bool quiet) {
    std::string text;
    try {
        text = explika::read_file(path);
    } catch (const explika::data_error& e) {
        throw explika::config_error(std::string("cannot read config: ") + e.what());
    }
    explika::PipelineConfig cfg = explika::PipelineConfig::from_json_text(text);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (has_seed_override) cfg.seed = seed_override;
    cfg.quiet = quiet;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explika: targeted indicators of an outcome from tabular survey data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string in_dir;
    std::uint64_t seed_override = 0;
    bool quiet = false;
    std::string stage_name;

    auto* run = app.add_subcommand("run", "execute the full pipeline from a JSON config");
    run->add_option("--config", config_path, "pipeline config JSON")->required();
    run->add_option("--out", out_dir, "output directory (overrides config out_dir)");
    auto* run_seed = run->add_option("--seed", seed_override, "override the config master seed");
    run->add_flag("--quiet", quiet, "suppress progress logging");

    auto* gen = app.add_subcommand("generate", "write a planted-truth synthetic dataset");
    gen->add_option("--config", config_path, "synthetic spec JSON")->required();
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_flag("--quiet", quiet, "suppress progress logging");

    auto* stage = app.add_subcommand("stage", "run one pipeline stage on serialized intermediates");
    stage->add_option("name", stage_name, "preprocess|impute|select|model|explain|cluster|report")
        ->required();
    stage->add_option("--config", config_path, "pipeline config JSON")->required();
    stage->add_option("--in", in_dir, "directory holding the upstream intermediates");
    stage->add_option("--out", out_dir, "output directory (defaults to --in)");
    auto* stage_seed = stage->add_option("--seed", seed_override, "override the config master seed");
    stage->add_flag("--quiet", quiet, "suppress progress logging");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            explika::PipelineConfig cfg =
                load_config(config_path, out_dir, !run_seed->empty(), seed_override, quiet);
            explika::run_pipeline(cfg);
        } else if (gen->parsed()) {
            nlohmann::json spec_json;
            try {
                spec_json = nlohmann::json::parse(explika::read_file(config_path));
            } catch (const explika::data_error& e) {
                throw explika::config_error(std::string("cannot read spec: ") + e.what());
            } catch (const nlohmann::json::exception& e) {
                throw explika::config_error(std::string("spec is not valid JSON: ") + e.what());
            }
            const explika::SyntheticSpec spec = explika::SyntheticSpec::from_json(spec_json);
            std::filesystem::create_directories(out_dir);
            const explika::SyntheticData data = explika::generate_synthetic(spec);
            explika::write_synthetic_dataset(data, out_dir);
            if (!quiet)
                std::cerr << "[explika] generated " << spec.rows << "x" << spec.features
                          << " dataset in " << out_dir << "\n";
        } else if (stage->parsed()) {
            explika::PipelineConfig cfg =
                load_config(config_path, "", !stage_seed->empty(), seed_override, quiet);
            std::string in = in_dir;
            std::string out = out_dir;
            if (in.empty()) in = cfg.out_dir;
            if (out.empty()) out = in;
            if (in.empty() || out.empty())
                throw explika::config_error("stage needs --in/--out or an out_dir in the config");
            explika::run_stage(stage_name, cfg, in, out);
        }
    } catch (const explika::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const explika::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const explika::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
