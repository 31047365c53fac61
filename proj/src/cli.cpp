#include "dbrn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbrn/episodes.hpp"
#include "dbrn/features_io.hpp"
#include "dbrn/heatmap.hpp"
#include "dbrn/pnm.hpp"
#include "dbrn/run_config.hpp"

namespace dbrn {

namespace {

namespace fs = std::filesystem;

// Flag/path problems detected after parsing; mapped to exit status 2 like
// CLI11's own parse errors.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty()) throw UsageError(what + " is required");
    if (!fs::exists(path)) throw UsageError(what + ": no such path: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) throw IoError("cannot write " + path);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Dataset load_dataset(const RunConfig& cfg, const std::string& cmd) {
    require_exists(cfg.data, cmd + ": --data");
    if (fs::is_directory(cfg.data)) return load_image_dataset(cfg.data);
    const std::string labels = cfg.labels.empty() ? cfg.data + ".labels" : cfg.labels;
    require_exists(labels, cmd + ": labels sidecar");
    return load_feature_dataset(cfg.data, labels);
}

int cmd_gen_data(const RunConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("gen-data: --out is required");
    const Dataset ds =
        generate_toy_dataset(cfg.seed, cfg.classes, cfg.samples, cfg.resolution);
    for (int c = 0; c < ds.num_classes(); ++c) {
        const fs::path cdir = fs::path(cfg.out) / ds.class_names[c];
        fs::create_directories(cdir);
        for (std::size_t i = 0; i < ds.class_items[c].size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "sample_%03zu.pgm", i);
            write_pgm(ds.images[ds.class_items[c][i]], (cdir / name).string());
        }
    }
    std::cout << "wrote " << ds.num_items() << " images (" << ds.num_classes() << " classes x "
              << cfg.samples << ") to " << cfg.out << "\n";
    return 0;
}

int cmd_extract(const RunConfig& cfg) {
    require_exists(cfg.data, "extract: --data");
    if (!fs::is_directory(cfg.data)) {
        throw UsageError("extract: --data must be an image dataset directory");
    }
    if (cfg.out.empty()) throw UsageError("extract: --out is required");

    const Dataset ds = load_image_dataset(cfg.data);
    const ExtractorConfig ext = cfg.extractor();
    std::vector<FeatureMap> maps;
    maps.reserve(ds.num_items());
    for (const Image& img : ds.images) {
        maps.push_back(
            extract(cfg.resize > 0 ? resize_image(img, cfg.resize, cfg.resize) : img, ext));
    }
    save_features(maps, cfg.out);

    const std::string labels_path = cfg.labels.empty() ? cfg.out + ".labels" : cfg.labels;
    std::string names;
    for (int label : ds.labels) names += ds.class_names[label] + "\n";
    write_text_file(labels_path, names);

    std::cout << "extracted " << maps.size() << " feature maps to " << cfg.out
              << " (labels: " << labels_path << ")\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg, "eval");
    const EvalReport report =
        evaluate(ds, cfg.head(), cfg.scale_set(), cfg.extractor(), cfg.n_way, cfg.k_shot,
                 cfg.q_queries, cfg.num_episodes, cfg.seed, cfg.query_multiscale);
    char line[128];
    std::snprintf(line, sizeof(line), "%s: %d-way %d-shot mean accuracy %.4f +/- %.4f\n",
                  report.label.c_str(), report.n_way, report.k_shot, report.mean_accuracy,
                  report.ci95);
    if (cfg.out.empty()) {
        std::cout << report.to_text();
    } else {
        write_text_file(cfg.out, report.to_text());
        std::cout << line << "wrote report to " << cfg.out << "\n";
    }
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg, "ablate");
    const std::vector<EvalReport> rows =
        ablation_run(ds, cfg.head(), cfg.scale_set(), cfg.extractor(), cfg.n_way, cfg.k_shot,
                     cfg.q_queries, cfg.num_episodes, cfg.seed);
    const std::string text = ablation_to_text(rows);
    if (cfg.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(cfg.out, text);
        for (const EvalReport& r : rows) {
            char line[128];
            std::snprintf(line, sizeof(line), "%-11s mean accuracy %.4f +/- %.4f\n",
                          r.label.c_str(), r.mean_accuracy, r.ci95);
            std::cout << line;
        }
        std::cout << "wrote ablation report to " << cfg.out << "\n";
    }
    return 0;
}

int cmd_fit_tau(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg, "fit-tau");
    const std::vector<FeatureEpisode> episodes =
        make_feature_episodes(ds, cfg.head(), cfg.scale_set(), cfg.extractor(), cfg.n_way,
                              cfg.k_shot, cfg.q_queries, cfg.num_episodes, cfg.seed);
    const TauFit fit = fit_tau(episodes, cfg.head(), cfg.lr, cfg.steps);

    std::ostringstream out;
    out << "[fit_tau]\n";
    out << "tau_initial = " << format_double(cfg.tau) << "\n";
    out << "tau_final = " << format_double(fit.tau) << "\n";
    out << "loss_initial = " << format_double(fit.loss_trace.front()) << "\n";
    out << "loss_final = " << format_double(fit.loss_trace.back()) << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "lr = " << format_double(cfg.lr) << "\n";
    out << "num_episodes = " << cfg.num_episodes << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "loss_trace =";
    for (double v : fit.loss_trace) out << " " << format_double(v);
    out << "\n[/fit_tau]\n";

    char line[160];
    std::snprintf(line, sizeof(line), "tau %.6g -> %.6g, mean cross-entropy %.6g -> %.6g\n",
                  cfg.tau, fit.tau, fit.loss_trace.front(), fit.loss_trace.back());
    std::cout << line;
    if (!cfg.out.empty()) {
        write_text_file(cfg.out, out.str());
        std::cout << "wrote fit report to " << cfg.out << "\n";
    } else {
        std::cout << out.str();
    }
    return 0;
}

int cmd_heatmap(const RunConfig& cfg, const std::string& query_path,
                std::vector<std::string> support_paths) {
    require_exists(query_path, "heatmap: --query");
    if (support_paths.empty()) throw UsageError("heatmap: --support is required");
    if (cfg.out.empty()) throw UsageError("heatmap: --out is required");

    // A single directory argument means "all images in it".
    if (support_paths.size() == 1 && fs::is_directory(support_paths[0])) {
        std::vector<std::string> expanded;
        for (const auto& entry : fs::directory_iterator(support_paths[0])) {
            if (entry.is_regular_file()) expanded.push_back(entry.path().string());
        }
        std::sort(expanded.begin(), expanded.end());
        if (expanded.empty()) {
            throw UsageError("heatmap: --support directory is empty: " + support_paths[0]);
        }
        support_paths = std::move(expanded);
    }
    for (const std::string& p : support_paths) require_exists(p, "heatmap: --support");

    const Image query = read_pnm(query_path);
    std::vector<Image> support;
    support.reserve(support_paths.size());
    for (const std::string& p : support_paths) support.push_back(read_pnm(p));

    const ScaleSet scales = cfg.scale_set();
    const ExtractorConfig ext = cfg.extractor();
    const int base = scales.base();

    Prototype proto;
    if (cfg.use_protoaug) {
        proto = augmented_prototype(support, 0, scales, ext);
    } else {
        std::vector<FeatureMap> maps;
        maps.reserve(support.size());
        for (const Image& img : support) maps.push_back(extract(resize_image(img, base, base), ext));
        proto = compute_prototype(maps, 0);
    }

    const FeatureMap qmap = extract(resize_image(query, base, base), ext);
    const RectifyWeights weights = cfg.use_weight
                                       ? rectify_weights(qmap, proto, cfg.omega, cfg.use_pow)
                                       : RectifyWeights::uniform(qmap.cells());

    render_weight_heatmap(query, weights, qmap.width, qmap.height, cfg.out);
    std::cout << "wrote heatmap to " << cfg.out << " (weight grid " << qmap.width << "x"
              << qmap.height << ", " << support.size() << " support images)\n";
    return 0;
}

void add_extractor_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--ext-seed", cfg.ext_seed, "extractor filter seed")
        ->capture_default_str();
    cmd->add_option("--ext-dim", cfg.ext_dim, "descriptor dimension")->capture_default_str();
    cmd->add_option("--ext-strides", cfg.ext_strides, "per-layer stride schedule")
        ->delimiter(',')
        ->capture_default_str();
}

void add_head_flags(CLI::App* cmd, RunConfig& cfg, bool with_toggles) {
    cmd->add_option("-k,--k", cfg.k, "top-k matches per query descriptor")
        ->capture_default_str();
    cmd->add_option("--tau", cfg.tau, "cosine temperature")->capture_default_str();
    cmd->add_option("--omega", cfg.omega, "rectify dispersion exponent")->capture_default_str();
    cmd->add_option("--scales", cfg.scales, "augmentation resolutions (base first)")
        ->delimiter(',')
        ->capture_default_str();
    if (with_toggles) {
        cmd->add_flag("--weight,!--no-weight", cfg.use_weight, "bias rectify weighting");
        cmd->add_flag("--pow,!--no-pow", cfg.use_pow, "dispersion exponent in weights");
        cmd->add_flag("--protoaug,!--no-protoaug", cfg.use_protoaug,
                      "multi-scale prototype augmentation");
    }
}

void add_episode_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--n-way", cfg.n_way, "classes per episode")->capture_default_str();
    cmd->add_option("--k-shot", cfg.k_shot, "support items per class")->capture_default_str();
    cmd->add_option("--q-queries", cfg.q_queries, "query items per class")
        ->capture_default_str();
    cmd->add_option("--episodes", cfg.num_episodes, "number of episodes")
        ->capture_default_str();
}

CLI::Option* add_seed_flag(CLI::App* cmd, RunConfig& cfg) {
    return cmd->add_option("--seed", cfg.seed, "run seed (env DBRN_SEED; flag wins)")
        ->envname("DBRN_SEED")
        ->capture_default_str();
}

void add_data_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--data", cfg.data, "dataset directory or feature file");
    cmd->add_option("--labels", cfg.labels, "labels sidecar (default <data>.labels)");
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    RunConfig cfg;

    // The config file seeds the defaults; any explicit flag overrides it.
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                cfg = load_run_config(argv[i + 1]);
                break;
            }
            if (arg.rfind("--config=", 0) == 0) {
                cfg = load_run_config(arg.substr(9));
                break;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"DBRN few-shot classification engine"};
    app.require_subcommand(1);
    std::string config_path; // consumed by the pre-scan above
    app.add_option("--config", config_path, "config file of key = value defaults");

    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic toy dataset");
    gen->add_option("--out", cfg.out, "output dataset directory");
    gen->add_option("--classes", cfg.classes, "number of classes")->capture_default_str();
    gen->add_option("--samples", cfg.samples, "samples per class")->capture_default_str();
    gen->add_option("--resolution", cfg.resolution, "image resolution")->capture_default_str();
    add_seed_flag(gen, cfg);
    gen->add_option("--config", config_path, "config file of key = value defaults");

    CLI::App* ext = app.add_subcommand("extract", "extract features for an image dataset");
    add_data_flags(ext, cfg);
    ext->add_option("--out", cfg.out, "output feature file");
    ext->add_option("--resize", cfg.resize, "square resize before extraction (0 = native)")
        ->capture_default_str();
    add_extractor_flags(ext, cfg);
    ext->add_option("--config", config_path, "config file of key = value defaults");

    CLI::App* ev = app.add_subcommand("eval", "episodic evaluation");
    add_data_flags(ev, cfg);
    ev->add_option("--out", cfg.out, "report file (default: print to stdout)");
    add_episode_flags(ev, cfg);
    add_seed_flag(ev, cfg);
    add_head_flags(ev, cfg, true);
    ev->add_flag("--query-multiscale", cfg.query_multiscale,
                 "fuse query features over all scales too");
    add_extractor_flags(ev, cfg);
    ev->add_option("--config", config_path, "config file of key = value defaults");

    CLI::App* ab = app.add_subcommand("ablate", "paired ablation over the component toggles");
    add_data_flags(ab, cfg);
    ab->add_option("--out", cfg.out, "report file (default: print to stdout)");
    add_episode_flags(ab, cfg);
    add_seed_flag(ab, cfg);
    add_head_flags(ab, cfg, false);
    add_extractor_flags(ab, cfg);
    ab->add_option("--config", config_path, "config file of key = value defaults");

    CLI::App* ft = app.add_subcommand("fit-tau", "fit the temperature by gradient descent");
    add_data_flags(ft, cfg);
    ft->add_option("--out", cfg.out, "report file (default: print to stdout)");
    add_episode_flags(ft, cfg);
    add_seed_flag(ft, cfg);
    add_head_flags(ft, cfg, true);
    ft->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
    ft->add_option("--steps", cfg.steps, "gradient steps")->capture_default_str();
    ft->add_option("--config", config_path, "config file of key = value defaults");

    CLI::App* hm = app.add_subcommand("heatmap", "render rectify weights over a query image");
    std::string query_path;
    std::vector<std::string> support_paths;
    hm->add_option("--query", query_path, "query image (P5/P6)");
    hm->add_option("--support", support_paths,
                   "support images of one class (files or one directory)");
    hm->add_option("--out", cfg.out, "output P5 image");
    add_head_flags(hm, cfg, true);
    add_extractor_flags(hm, cfg);
    hm->add_option("--config", config_path, "config file of key = value defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(gen)) return cmd_gen_data(cfg);
        if (app.got_subcommand(ext)) return cmd_extract(cfg);
        if (app.got_subcommand(ev)) return cmd_eval(cfg);
        if (app.got_subcommand(ab)) return cmd_ablate(cfg);
        if (app.got_subcommand(ft)) return cmd_fit_tau(cfg);
        if (app.got_subcommand(hm)) return cmd_heatmap(cfg, query_path, support_paths);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace dbrn
