// mapd: metadata archaeology over training dynamics.
//
// Subcommands wire the library into reproducible file-to-file workflows:
//   curate      build a probe suite from a dataset and a manifest
//   train       train the synthetic harness and record loss trajectories
//   classify    k-NN posteriors for recorded curves against a reference set
//   audit       rank examples by posterior probability of one category
//   correct     label-noise correction experiment over a noise grid
//   prioritize  online batch-selection experiment (uniform/high-loss/MAP-D)
//   demo        seeded end-to-end pipeline producing every artifact
//
// Every command is a pure function of (inputs, flags, seed): reruns write
// byte-identical files.

#include <charconv>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mapd/mapd.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw mapd::Error(mapd::ErrorCode::io, "cannot create directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------------------
// Shared artifact writers.
// ---------------------------------------------------------------------------

std::string labels_csv(const std::map<mapd::ExampleId, int>& labels) {
    std::string out = "example_id,label\n";
    for (const auto& [id, label] : labels)
        out += std::to_string(id) + "," + std::to_string(label) + "\n";
    return out;
}

std::map<mapd::ExampleId, int> labels_from_csv(const std::string& text) {
    std::map<mapd::ExampleId, int> out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        ++line_no;
        if (!header) {
            if (line != "example_id,label")
                throw mapd::Error(mapd::ErrorCode::parse, "bad labels header");
            header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = mapd::detail::split_fields(line);
        if (fields.size() != 2)
            throw mapd::Error(mapd::ErrorCode::parse,
                              "labels line " + std::to_string(line_no) + ": expected 2 fields");
        const auto id =
            mapd::detail::parse_number<mapd::ExampleId>(fields[0], line_no, "example_id");
        out[id] = mapd::detail::parse_number<int>(fields[1], line_no, "label");
    }
    return out;
}

std::string truth_csv(const std::map<mapd::ExampleId, mapd::ProbeCategory>& truth) {
    std::string out = "example_id,category\n";
    for (const auto& [id, cat] : truth) out += std::to_string(id) + "," + cat + "\n";
    return out;
}

std::map<mapd::ExampleId, mapd::ProbeCategory> truth_from_csv(const std::string& text) {
    std::map<mapd::ExampleId, mapd::ProbeCategory> out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        ++line_no;
        if (!header) {
            if (line != "example_id,category")
                throw mapd::Error(mapd::ErrorCode::parse, "bad truth header");
            header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = mapd::detail::split_fields(line);
        if (fields.size() != 2)
            throw mapd::Error(mapd::ErrorCode::parse,
                              "truth line " + std::to_string(line_no) + ": expected 2 fields");
        const auto id =
            mapd::detail::parse_number<mapd::ExampleId>(fields[0], line_no, "example_id");
        out[id] = std::string(fields[1]);
    }
    return out;
}

std::string posterior_table_csv(const std::map<mapd::ExampleId, mapd::MetadataPosterior>& posts,
                                const std::vector<mapd::ProbeCategory>& categories) {
    std::string out = "example_id,assigned_category";
    for (const auto& c : categories) out += ",p_" + c;
    out += '\n';
    for (const auto& [id, post] : posts) {
        out += std::to_string(id) + "," + mapd::assign(post);
        for (const auto& c : categories) out += "," + fmt(post.prob(c));
        out += '\n';
    }
    return out;
}

std::string confusion_text(const mapd::ConfusionMatrix& cm) {
    std::string out = "true\\assigned";
    for (const auto& name : cm.names()) out += "," + name;
    out += '\n';
    for (std::size_t r = 0; r < cm.names().size(); ++r) {
        out += cm.names()[r];
        for (std::size_t c = 0; c < cm.names().size(); ++c)
            out += "," + std::to_string(cm.at(r, c));
        out += '\n';
    }
    out += "accuracy," + fmt(cm.accuracy()) + '\n';
    return out;
}

/// Per-epoch per-category convergence statistics (probe accuracy, percent
/// first-learned, percent consistently-learned).
std::string probe_stats_csv(const mapd::CurveStore& store, const mapd::ProbeSuite& suite) {
    std::string out = "category,epoch,accuracy,first_learned,consistently_learned\n";
    for (const auto& cat : suite.entries) {
        std::vector<mapd::ExampleId> ids;
        for (const auto* half : {&cat.train, &cat.test})
            for (const mapd::Example& e : *half) ids.push_back(e.id);
        if (ids.empty()) continue;
        for (std::size_t e = 0; e < store.epoch_count(); ++e) {
            out += cat.name + "," + std::to_string(e);
            out += "," + fmt(store.accuracy_at(ids, e));
            out += "," + fmt(store.percent_first_learned(ids, e + 1));
            out += "," + fmt(store.percent_consistently_learned(ids, e + 1));
            out += '\n';
        }
    }
    return out;
}

std::string model_summary(const mapd::ModelState& m, const mapd::CurveStore& store) {
    std::string out;
    out += "num_classes " + std::to_string(m.num_classes) + "\n";
    out += "dim " + std::to_string(m.dim) + "\n";
    out += "layers " + std::to_string(m.layers.size()) + "\n";
    for (std::size_t l = 0; l < m.layers.size(); ++l)
        out += "layer" + std::to_string(l) + " " + std::to_string(m.layers[l].out) + "x" +
               std::to_string(m.layers[l].in) + "\n";
    out += "epochs_recorded " + std::to_string(store.epoch_count()) + "\n";
    out += "curves " + std::to_string(store.size()) + "\n";
    if (store.epoch_count() > 0 && !store.empty()) {
        const auto ids = store.ids();
        const auto mean = store.mean_curve(ids, store.epoch_count());
        out += "mean_loss_first_epoch " + fmt(mean.front()) + "\n";
        out += "mean_loss_final_epoch " + fmt(mean.back()) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Train-style runs share this assembly: dataset (synthetic or file), optional
// planted noise, suite (manifest or default clean/random-label pair).
// ---------------------------------------------------------------------------

struct PreparedRun {
    mapd::Dataset dataset;
    mapd::ProbeSuite suite;
    std::set<mapd::ExampleId> planted;
};

PreparedRun prepare_run(const mapd::ExperimentConfig& cfg) {
    PreparedRun run;
    if (cfg.dataset_path) {
        run.dataset = mapd::load_dataset(*cfg.dataset_path);
    } else {
        run.dataset = mapd::generate(cfg.data);
    }
    if (cfg.noise_rate > 0.0) {
        const auto changed = mapd::plant_label_noise(run.dataset, cfg.noise_rate, cfg.data.seed);
        run.planted.insert(changed.begin(), changed.end());
    }
    if (cfg.suite_manifest) {
        run.suite = mapd::assemble_from_manifest(run.dataset,
                                                 mapd::load_manifest(*cfg.suite_manifest));
    } else {
        std::vector<mapd::ProbeSpec> specs(2);
        specs[0].category = mapd::categories::clean_random_sample;
        specs[0].generator = mapd::GeneratorKind::clean_random_sample;
        specs[1].category = mapd::categories::random_labels;
        specs[1].generator = mapd::GeneratorKind::random_labels;
        for (auto& s : specs) {
            s.train_n = cfg.probe_n;
            s.test_n = cfg.probe_test_n;
        }
        run.suite = mapd::assemble_suite(run.dataset, specs,
                                         mapd::derive_seed(cfg.data.seed, "suite"));
    }
    return run;
}

void write_train_artifacts(const std::string& out_dir, const mapd::ProbeSuite& suite,
                           const mapd::Dataset& dataset, const mapd::TrainResult& result) {
    mapd::save_curves(result.store, join(out_dir, "curves.csv"));
    mapd::save_trajectories(result.reference, join(out_dir, "probe_ref.csv"));
    mapd::write_file(join(out_dir, "probe_test_truth.csv"),
                     truth_csv(result.test_probe_truth));
    mapd::write_file(join(out_dir, "probe_train_truth.csv"),
                     truth_csv(result.train_probe_truth));
    std::map<mapd::ExampleId, int> labels;
    for (const mapd::Example& e : dataset.examples) labels[e.id] = e.label;
    for (const auto& cat : suite.entries)
        for (const auto* half : {&cat.train, &cat.test})
            for (const mapd::Example& e : *half) labels[e.id] = e.label;
    mapd::write_file(join(out_dir, "labels.csv"), labels_csv(labels));
    mapd::write_file(join(out_dir, "model_summary.txt"),
                     model_summary(result.model, result.store));
    if (result.store.has_correct())
        mapd::write_file(join(out_dir, "probe_stats.csv"),
                         probe_stats_csv(result.store, suite));
}

// ---------------------------------------------------------------------------
// Subcommand implementations.
// ---------------------------------------------------------------------------

void cmd_curate(const std::string& dataset_path, const std::string& manifest_path,
                const std::string& out_dir, const std::optional<std::string>& scores_path,
                std::optional<std::uint64_t> seed_override) {
    const mapd::Dataset ds = mapd::load_dataset(dataset_path);
    mapd::SuiteManifest manifest = mapd::load_manifest(manifest_path);
    if (seed_override) manifest.seed = *seed_override;
    if (scores_path) manifest.scores_file = *scores_path;
    const mapd::ProbeSuite suite = mapd::assemble_from_manifest(ds, manifest);
    ensure_dir(out_dir);
    mapd::save_suite(suite, join(out_dir, "suite.json"));
    mapd::save_manifest(manifest, join(out_dir, "manifest.json"));
    std::cout << "curated " << suite.entries.size() << " categories -> "
              << join(out_dir, "suite.json") << "\n";
}

void cmd_train(const mapd::ExperimentConfig& cfg, const std::string& out_dir) {
    PreparedRun run = prepare_run(cfg);
    const mapd::TrainResult result = mapd::train_and_record(run.dataset, run.suite, cfg.train);
    ensure_dir(out_dir);
    write_train_artifacts(out_dir, run.suite, run.dataset, result);
    std::cout << "trained " << cfg.train.epochs << " epochs, " << result.store.size()
              << " curves -> " << out_dir << "\n";
}

void cmd_classify(const std::string& curves_path, const std::string& ref_path, std::size_t k,
                  std::size_t t, const std::optional<std::string>& truth_path,
                  const std::string& out_path) {
    const mapd::CurveStore store = mapd::load_curves(curves_path);
    const mapd::ProbeTrajectoryDataset ref = mapd::load_trajectories(ref_path);
    const std::size_t effective_t = t == 0 ? ref.epoch_len() : t;
    const mapd::ClassifyResult result = mapd::classify_all(store, ref, k, effective_t);
    mapd::write_file(out_path, posterior_table_csv(result.posteriors, ref.category_names()));
    for (const auto& [id, reason] : result.skipped)
        std::cerr << "skipped id " << id << ": " << reason << "\n";
    std::cout << "classified " << result.posteriors.size() << " curves -> " << out_path << "\n";
    if (truth_path) {
        const auto truth = truth_from_csv(mapd::read_file(*truth_path));
        std::map<mapd::ExampleId, mapd::MetadataPosterior> restricted;
        for (const auto& [id, cat] : truth) {
            auto it = result.posteriors.find(id);
            if (it == result.posteriors.end())
                throw mapd::Error(mapd::ErrorCode::precondition,
                                  "truth id " + std::to_string(id) + " has no posterior");
            restricted[id] = it->second;
        }
        const mapd::ConfusionMatrix cm = mapd::confusion_matrix(restricted, truth);
        const std::string text = confusion_text(cm);
        mapd::write_file(out_path + ".confusion.csv", text);
        std::cout << text;
    }
}

void cmd_audit(const std::string& curves_path, const std::string& ref_path,
               const std::string& category, std::optional<int> class_filter, std::size_t top_n,
               std::size_t k, std::size_t t, const std::optional<std::string>& labels_path,
               const std::string& out_path) {
    const mapd::CurveStore store = mapd::load_curves(curves_path);
    const mapd::ProbeTrajectoryDataset ref = mapd::load_trajectories(ref_path);
    const std::size_t effective_t = t == 0 ? ref.epoch_len() : t;
    const mapd::ClassifyResult result = mapd::classify_all(store, ref, k, effective_t);

    std::map<mapd::ExampleId, int> labels;
    if (labels_path) {
        const auto loaded = labels_from_csv(mapd::read_file(*labels_path));
        for (const auto& [id, post] : result.posteriors) {
            auto it = loaded.find(id);
            labels[id] = it == loaded.end() ? -1 : it->second;
        }
    } else {
        if (class_filter)
            throw mapd::Error(mapd::ErrorCode::precondition,
                              "--class-filter requires --labels");
        for (const auto& [id, post] : result.posteriors) labels[id] = -1;
    }

    const auto categories = ref.category_names();
    const auto entries =
        mapd::audit_rank(result.posteriors, labels, category, class_filter, top_n, categories);
    mapd::write_file(out_path, mapd::audit_report_csv(entries));

    nlohmann::json query{{"curves", curves_path}, {"reference", ref_path},
                         {"category", category},  {"top_n", top_n},
                         {"k", k},                {"t", effective_t}};
    if (class_filter) query["class_filter"] = *class_filter;
    if (labels_path) query["labels"] = *labels_path;
    mapd::write_file(out_path + ".query.json", query.dump(1));
    std::cout << "audit: " << entries.size() << " entries -> " << out_path << "\n";
}

void cmd_correct(const mapd::ExperimentConfig& cfg, const std::vector<double>& noise_grid,
                 bool include_binary, const std::string& out_dir) {
    ensure_dir(out_dir);
    std::string csv = include_binary
                          ? "noise_rate,uncorrected,corrected,binary\n"
                          : "noise_rate,uncorrected,corrected\n";
    for (double rate : noise_grid) {
        const mapd::NoiseCorrectionResult r = mapd::run_noise_correction_experiment(
            cfg.data, cfg.train, rate, cfg.test_per_class, cfg.probe_n, include_binary);
        csv += fmt(rate) + "," + fmt(r.accuracy_uncorrected) + "," + fmt(r.accuracy_corrected);
        if (include_binary) csv += "," + fmt(r.accuracy_binary.value_or(0.0));
        csv += '\n';
        std::cout << "noise " << fmt(rate) << ": uncorrected " << fmt(r.accuracy_uncorrected)
                  << ", corrected " << fmt(r.accuracy_corrected);
        if (r.accuracy_binary) std::cout << ", binary " << fmt(*r.accuracy_binary);
        std::cout << "\n";
    }
    mapd::write_file(join(out_dir, "correction_results.csv"), csv);
}

void cmd_prioritize(const mapd::ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    const mapd::PrioritizedResult result = mapd::run_prioritized_experiment(
        cfg.data, cfg.train, cfg.noise_rate, cfg.test_per_class, cfg.probe_n);

    std::string csv = "policy,epoch,steps,test_accuracy\n";
    for (const mapd::PrioritizedTrace* trace :
         {&result.uniform, &result.high_loss, &result.mapd}) {
        for (std::size_t e = 0; e < trace->accuracy_per_epoch.size(); ++e) {
            csv += std::string(mapd::to_string(trace->policy)) + "," + std::to_string(e) + "," +
                   std::to_string((e + 1) * trace->steps_per_epoch) + "," +
                   fmt(trace->accuracy_per_epoch[e]) + '\n';
        }
    }
    mapd::write_file(join(out_dir, "prioritize_trace.csv"), csv);

    std::string summary;
    summary += "uniform_final " + fmt(result.uniform.accuracy_per_epoch.back()) + "\n";
    summary += "high_loss_final " + fmt(result.high_loss.accuracy_per_epoch.back()) + "\n";
    summary += "mapd_final " + fmt(result.mapd.accuracy_per_epoch.back()) + "\n";
    const double target = result.uniform.accuracy_per_epoch.back();
    std::size_t reach = result.mapd.accuracy_per_epoch.size();
    for (std::size_t e = 0; e < result.mapd.accuracy_per_epoch.size(); ++e)
        if (result.mapd.accuracy_per_epoch[e] >= target) {
            reach = e + 1;
            break;
        }
    summary += "mapd_epochs_to_uniform_final " + std::to_string(reach) + "\n";
    mapd::write_file(join(out_dir, "summary.txt"), summary);
    std::cout << summary;
}

void cmd_demo(std::uint64_t seed, std::size_t epochs, const std::string& out_dir) {
    ensure_dir(out_dir);

    const mapd::SyntheticConfig data_cfg =
        mapd::two_scale_config(8, 12, 0.35, 0.05, 0.025, 100, seed);
    const mapd::Dataset dataset = mapd::generate(data_cfg);
    mapd::save_dataset(dataset, join(out_dir, "dataset.json"));

    mapd::SuiteManifest manifest;
    manifest.seed = mapd::derive_seed(seed, "suite");
    const char* names[] = {mapd::categories::clean_random_sample,
                           mapd::categories::random_labels,
                           mapd::categories::random_inputs_outputs, mapd::categories::corrupted};
    const mapd::GeneratorKind kinds[] = {
        mapd::GeneratorKind::clean_random_sample, mapd::GeneratorKind::random_labels,
        mapd::GeneratorKind::random_inputs_outputs, mapd::GeneratorKind::corrupted};
    for (int i = 0; i < 4; ++i) {
        mapd::ProbeSpec spec;
        spec.category = names[i];
        spec.generator = kinds[i];
        spec.train_n = 40;
        spec.test_n = 15;
        spec.sigma = 0.1;
        manifest.specs.push_back(spec);
    }
    mapd::save_manifest(manifest, join(out_dir, "manifest.json"));
    const mapd::ProbeSuite suite = mapd::assemble_from_manifest(dataset, manifest);
    mapd::save_suite(suite, join(out_dir, "suite.json"));

    mapd::TrainConfig train_cfg;
    train_cfg.epochs = epochs;
    train_cfg.lr = 0.3;
    train_cfg.weight_decay = 0.001;
    train_cfg.batch_size = 64;
    train_cfg.seed = seed;
    train_cfg.knn_k = 20;
    const mapd::TrainResult result = mapd::train_and_record(dataset, suite, train_cfg);
    write_train_artifacts(out_dir, suite, dataset, result);

    // classify the held-out probe test halves against the reference
    const mapd::ClassifyResult classified =
        mapd::classify_all(result.store, result.reference, train_cfg.knn_k,
                           result.store.epoch_count());
    mapd::write_file(join(out_dir, "posteriors.csv"),
                     posterior_table_csv(classified.posteriors,
                                         result.reference.category_names()));
    std::map<mapd::ExampleId, mapd::MetadataPosterior> test_posts;
    for (const auto& [id, cat] : result.test_probe_truth)
        test_posts[id] = classified.posteriors.at(id);
    const mapd::ConfusionMatrix cm = mapd::confusion_matrix(test_posts, result.test_probe_truth);
    mapd::write_file(join(out_dir, "confusion.csv"), confusion_text(cm));

    // audit: most random-label-like examples of the base dataset
    std::map<mapd::ExampleId, mapd::MetadataPosterior> base_posts;
    std::map<mapd::ExampleId, int> base_labels;
    for (const mapd::Example& e : dataset.examples) {
        base_posts[e.id] = classified.posteriors.at(e.id);
        base_labels[e.id] = e.label;
    }
    const auto entries =
        mapd::audit_rank(base_posts, base_labels, mapd::categories::random_labels, std::nullopt,
                         50, result.reference.category_names());
    mapd::write_file(join(out_dir, "audit.csv"), mapd::audit_report_csv(entries));

    std::cout << "demo complete -> " << out_dir << " (probe test accuracy "
              << fmt(cm.accuracy()) << ")\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"metadata archaeology via probe dynamics"};
    app.require_subcommand(1);

    // curate
    std::string curate_dataset, curate_manifest, curate_out;
    std::optional<std::string> curate_scores;
    std::optional<std::uint64_t> curate_seed;
    auto* curate = app.add_subcommand("curate", "build a probe suite from a manifest");
    curate->add_option("--dataset", curate_dataset, "dataset json")->required();
    curate->add_option("--manifest", curate_manifest, "suite manifest json")->required();
    curate->add_option("--out", curate_out, "output directory")->required();
    curate->add_option("--scores", curate_scores, "typicality score csv");
    curate->add_option("--seed", curate_seed, "override the manifest seed");

    // shared config-driven options
    struct ConfigArgs {
        std::string config_path;
        std::string out_dir;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> epochs;
        std::optional<double> noise_rate;
        std::optional<std::size_t> k;
        std::optional<std::size_t> select_n;
        std::optional<std::size_t> class_floor;
        std::optional<std::string> include_probes;
    };
    auto add_config_options = [](CLI::App* cmd, ConfigArgs& args) {
        cmd->add_option("--config", args.config_path, "key = value experiment config")
            ->required();
        cmd->add_option("--out", args.out_dir, "output directory")->required();
        cmd->add_option("--seed", args.seed, "override the config seed");
        cmd->add_option("--epochs", args.epochs, "override epochs");
        cmd->add_option("--noise-rate", args.noise_rate, "override planted noise rate");
        cmd->add_option("--k", args.k, "override k for k-NN");
        cmd->add_option("--select-n", args.select_n, "override per-batch selection count");
        cmd->add_option("--class-floor", args.class_floor, "override per-class floor");
        cmd->add_option("--include-probes", args.include_probes,
                        "probe inclusion: suite|all|none");
    };
    auto resolve_config = [](const ConfigArgs& args) {
        mapd::ExperimentConfig cfg = mapd::load_experiment_config(args.config_path);
        if (args.seed) {
            cfg.data.seed = *args.seed;
            cfg.train.seed = *args.seed;
        }
        if (args.epochs) cfg.train.epochs = *args.epochs;
        if (args.noise_rate) cfg.noise_rate = *args.noise_rate;
        if (args.k) cfg.train.knn_k = *args.k;
        if (args.select_n) cfg.train.select_n = *args.select_n;
        if (args.class_floor) cfg.train.class_floor = *args.class_floor;
        if (args.include_probes) {
            if (*args.include_probes == "suite")
                cfg.train.probe_inclusion = mapd::ProbeInclusion::follow_suite;
            else if (*args.include_probes == "all")
                cfg.train.probe_inclusion = mapd::ProbeInclusion::include_all;
            else if (*args.include_probes == "none")
                cfg.train.probe_inclusion = mapd::ProbeInclusion::exclude_all;
            else
                throw mapd::Error(mapd::ErrorCode::parse,
                                  "bad --include-probes value '" + *args.include_probes + "'");
        }
        return cfg;
    };

    ConfigArgs train_args;
    auto* train = app.add_subcommand("train", "train the harness and record trajectories");
    add_config_options(train, train_args);

    // classify
    std::string cls_curves, cls_ref, cls_out;
    std::size_t cls_k = 20, cls_t = 0;
    std::optional<std::string> cls_truth;
    auto* classify = app.add_subcommand("classify", "k-NN posteriors for recorded curves");
    classify->add_option("--curves", cls_curves, "curve store")->required();
    classify->add_option("--ref", cls_ref, "probe reference csv")->required();
    classify->add_option("--out", cls_out, "posterior table path")->required();
    classify->add_option("--k", cls_k, "neighbor count (default 20)");
    classify->add_option("--t", cls_t, "prefix length (default: full curves)");
    classify->add_option("--truth", cls_truth, "id,category truth csv for a confusion matrix");

    // audit
    std::string audit_curves, audit_ref, audit_category, audit_out;
    std::optional<int> audit_class;
    std::size_t audit_top = 50, audit_k = 20, audit_t = 0;
    std::optional<std::string> audit_labels;
    auto* audit = app.add_subcommand("audit", "rank examples by one category's posterior");
    audit->add_option("--curves", audit_curves, "curve store")->required();
    audit->add_option("--ref", audit_ref, "probe reference csv")->required();
    audit->add_option("--category", audit_category, "probe category to rank by")->required();
    audit->add_option("--out", audit_out, "report path")->required();
    audit->add_option("--class-filter", audit_class, "restrict to one class label");
    audit->add_option("--top-n", audit_top, "entries to keep (default 50)");
    audit->add_option("--k", audit_k, "neighbor count (default 20)");
    audit->add_option("--t", audit_t, "prefix length (default: full curves)");
    audit->add_option("--labels", audit_labels, "example_id,label csv");

    // correct
    ConfigArgs correct_args;
    std::vector<double> noise_grid{0.0, 0.2, 0.5, 0.8};
    bool correct_binary = false;
    auto* correct = app.add_subcommand("correct", "label-noise correction experiment");
    add_config_options(correct, correct_args);
    correct->add_option("--noise-grid", noise_grid, "noise rates to sweep");
    correct->add_flag("--binary", correct_binary, "also run the binary-correction ablation");

    // prioritize
    ConfigArgs prio_args;
    auto* prioritize = app.add_subcommand("prioritize", "online batch-selection experiment");
    add_config_options(prioritize, prio_args);

    // demo
    std::uint64_t demo_seed = 1;
    std::size_t demo_epochs = 30;
    std::string demo_out;
    auto* demo = app.add_subcommand("demo", "seeded end-to-end pipeline");
    demo->add_option("--seed", demo_seed, "root seed (default 1)");
    demo->add_option("--epochs", demo_epochs, "training epochs (default 30)");
    demo->add_option("--out", demo_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (curate->parsed())
            cmd_curate(curate_dataset, curate_manifest, curate_out, curate_scores, curate_seed);
        else if (train->parsed())
            cmd_train(resolve_config(train_args), train_args.out_dir);
        else if (classify->parsed())
            cmd_classify(cls_curves, cls_ref, cls_k, cls_t, cls_truth, cls_out);
        else if (audit->parsed())
            cmd_audit(audit_curves, audit_ref, audit_category, audit_class, audit_top, audit_k,
                      audit_t, audit_labels, audit_out);
        else if (correct->parsed()) {
            mapd::ExperimentConfig cfg = resolve_config(correct_args);
            std::vector<double> grid = noise_grid;
            if (correct_args.noise_rate) grid = {*correct_args.noise_rate};
            cmd_correct(cfg, grid, correct_binary, correct_args.out_dir);
        } else if (prioritize->parsed())
            cmd_prioritize(resolve_config(prio_args), prio_args.out_dir);
        else if (demo->parsed())
            cmd_demo(demo_seed, demo_epochs, demo_out);
    } catch (const mapd::Error& e) {
        std::cerr << "error: " << mapd::to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
