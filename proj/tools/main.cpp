#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqadapt/errors.hpp"
#include "seqadapt/experiment.hpp"

namespace {

struct CliOptions {
    std::string preset = "desk";
    std::string config_file;
    std::string run_dir;
    std::string output_dir;
    std::string run_label;
    std::string cohort_file;
    std::string checkpoint_file;
    std::vector<std::string> variants;
    std::uint64_t seed = 0;
    int threads = 0;
    int patients = 0;
    int embed_dim = 0;
    int hidden_dim = 0;
    int train_epochs = 0;
    double gamma = 0.0;
    double epsilon = 0.0;
    bool warm_start = false;
};

void add_common_options(CLI::App& cmd, CliOptions& opt) {
    cmd.add_option("--preset", opt.preset, "Base preset: desk or paper")
        ->capture_default_str();
    cmd.add_option("--config", opt.config_file, "JSON config overlaid on the preset");
    cmd.add_option("--run-dir", opt.run_dir,
                   "Run directory (default: <output-dir>/<UTC stamp>-<config hash>)");
    cmd.add_option("--output-dir", opt.output_dir, "Parent directory for run directories");
    cmd.add_option("--label", opt.run_label, "Fixed run-directory name under --output-dir");
    cmd.add_option("--seed", opt.seed, "Master seed; re-derives the per-stage seeds");
    cmd.add_option("--threads", opt.threads, "Evaluation worker threads");
    cmd.add_option("--variants", opt.variants, "Comma-separated model variants")
        ->delimiter(',');
    cmd.add_option("--patients", opt.patients, "Synthetic cohort size");
    cmd.add_option("--embed-dim", opt.embed_dim, "Event embedding width");
    cmd.add_option("--hidden-dim", opt.hidden_dim, "Recurrent state width");
    cmd.add_option("--train-epochs", opt.train_epochs, "Training epoch cap");
    cmd.add_option("--gamma", opt.gamma, "Recency-kernel bandwidth for adaptation");
    cmd.add_option("--epsilon", opt.epsilon, "Adaptation convergence threshold");
    cmd.add_flag("--warm-start", opt.warm_start,
                 "Adapt from the previous step's fine-tuned model");
}

// Precedence: flags > config file > preset defaults.
seqadapt::ExperimentConfig resolve_config(const CLI::App& cmd, const CliOptions& opt) {
    seqadapt::ExperimentConfig config = seqadapt::preset_config(opt.preset);
    if (!opt.config_file.empty()) {
        config = seqadapt::load_config_file(opt.config_file, std::move(config));
    }
    if (cmd.count("--seed")) config.apply_master_seed(opt.seed);
    if (cmd.count("--threads")) config.threads = opt.threads;
    if (cmd.count("--output-dir")) config.output_dir = opt.output_dir;
    if (cmd.count("--label")) config.run_label = opt.run_label;
    if (cmd.count("--variants")) config.variants = opt.variants;
    if (cmd.count("--patients")) config.synth.num_patients = opt.patients;
    if (cmd.count("--embed-dim")) config.training.embed_dim = opt.embed_dim;
    if (cmd.count("--hidden-dim")) config.training.hidden_dim = opt.hidden_dim;
    if (cmd.count("--train-epochs")) config.training.max_epochs = opt.train_epochs;
    if (cmd.count("--gamma")) config.adapt.gamma = opt.gamma;
    if (cmd.count("--epsilon")) config.adapt.epsilon = opt.epsilon;
    if (cmd.count("--warm-start")) config.warm_start = true;
    return config;
}

// prepare may invent a stamped directory; the later stages must be pointed
// at an existing run (explicitly or via a fixed label).
std::string run_dir_for(const CliOptions& opt, const seqadapt::ExperimentConfig& config,
                        bool allow_fresh) {
    if (!opt.run_dir.empty()) return opt.run_dir;
    if (!allow_fresh && config.run_label.empty()) {
        throw seqadapt::ConfigError(
            "this command needs --run-dir (or a fixed run label) to locate its inputs");
    }
    return seqadapt::resolve_run_dir(config);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clinical event-sequence prediction with per-patient online adaptation"};
    app.set_version_flag("--version", std::string("seqadapt ") + seqadapt::kToolVersion);
    app.require_subcommand(1);

    CliOptions prepare_opt, train_opt, evaluate_opt, report_opt;
    CLI::App* prepare =
        app.add_subcommand("prepare", "Ingest or synthesize a cohort and archive it");
    add_common_options(*prepare, prepare_opt);
    CLI::App* train = app.add_subcommand("train", "Train the population model");
    add_common_options(*train, train_opt);
    train->add_option("--cohort", train_opt.cohort_file,
                      "Cohort archive (default: <run-dir>/cohort.json)");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Run the model variants over the test split");
    add_common_options(*evaluate, evaluate_opt);
    evaluate->add_option("--cohort", evaluate_opt.cohort_file,
                         "Cohort archive (default: <run-dir>/cohort.json)");
    evaluate->add_option("--model", evaluate_opt.checkpoint_file,
                         "Model checkpoint (default: <run-dir>/model.bin)");
    CLI::App* report =
        app.add_subcommand("report", "Rebuild report tables from saved predictions");
    add_common_options(*report, report_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? 0 : 2;
    }

    try {
        if (prepare->parsed()) {
            const auto config = resolve_config(*prepare, prepare_opt);
            const std::string run_dir = run_dir_for(prepare_opt, config, true);
            seqadapt::cmd_prepare(config, run_dir);
            std::cout << "run directory: " << run_dir << '\n';
        } else if (train->parsed()) {
            const auto config = resolve_config(*train, train_opt);
            const std::string run_dir = run_dir_for(train_opt, config, false);
            const std::string cohort = train_opt.cohort_file.empty()
                                           ? seqadapt::cohort_path(run_dir)
                                           : train_opt.cohort_file;
            seqadapt::cmd_train(config, run_dir, cohort);
            std::cout << "checkpoint: " << seqadapt::checkpoint_path(run_dir) << '\n';
        } else if (evaluate->parsed()) {
            const auto config = resolve_config(*evaluate, evaluate_opt);
            const std::string run_dir = run_dir_for(evaluate_opt, config, false);
            const std::string cohort = evaluate_opt.cohort_file.empty()
                                           ? seqadapt::cohort_path(run_dir)
                                           : evaluate_opt.cohort_file;
            const std::string model = evaluate_opt.checkpoint_file.empty()
                                          ? seqadapt::checkpoint_path(run_dir)
                                          : evaluate_opt.checkpoint_file;
            seqadapt::cmd_evaluate(config, run_dir, cohort, model);
            std::cout << "report tables: " << run_dir << '\n';
        } else if (report->parsed()) {
            const auto config = resolve_config(*report, report_opt);
            const std::string run_dir = run_dir_for(report_opt, config, false);
            seqadapt::cmd_report(config, run_dir);
            std::cout << "report tables: " << run_dir << '\n';
        }
        return 0;
    } catch (const seqadapt::ConfigError& error) {
        std::cerr << "config error: " << error.what() << '\n';
        return 2;
    } catch (const seqadapt::DimensionError& error) {
        std::cerr << "validation error: " << error.what() << '\n';
        return 3;
    } catch (const seqadapt::ValidationError& error) {
        std::cerr << "validation error: " << error.what() << '\n';
        return 3;
    } catch (const seqadapt::NumericError& error) {
        std::cerr << "numeric error: " << error.what() << '\n';
        return 4;
    } catch (const seqadapt::IoError& error) {
        std::cerr << "io error: " << error.what() << '\n';
        return 5;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 1;
    }
}
