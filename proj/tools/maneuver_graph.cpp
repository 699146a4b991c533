#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgraph/rng.hpp"
#include "mgraph/sim.hpp"
#include "mgraph/train.hpp"

namespace fs = std::filesystem;
using namespace mgraph;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

void append_run_manifest(const std::string& out_dir, nlohmann::json entry) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "runs.jsonl", std::ios::app);
    if (!out) throw Error("cannot append run manifest in " + out_dir);
    out << entry.dump() << '\n';
}

void write_text_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

struct LoadedDataset {
    std::vector<SceneSequence> all;
    DatasetManifest manifest;

    std::vector<SceneSequence> subset(const std::vector<int>& idx) const {
        std::vector<SceneSequence> out;
        out.reserve(idx.size());
        for (int i : idx) {
            if (i < 0 || static_cast<size_t>(i) >= all.size())
                throw ParseError("dataset manifest: split index out of range");
            out.push_back(all[static_cast<size_t>(i)]);
        }
        return out;
    }
};

LoadedDataset load_with_manifest(const std::string& path) {
    LoadedDataset ds;
    ds.all = load_dataset(path);
    if (ds.all.empty()) throw ParseError("dataset is empty: " + path);
    const std::string mpath = path + ".manifest.json";
    if (fs::exists(mpath)) {
        ds.manifest = DatasetManifest::from_file(mpath);
    } else {
        // no manifest: everything is one split
        for (size_t i = 0; i < ds.all.size(); ++i)
            ds.manifest.train.push_back(static_cast<int>(i));
        ds.manifest.val = ds.manifest.test = ds.manifest.train;
    }
    return ds;
}

int dataset_max_nodes(const std::vector<SceneSequence>& seqs) {
    int n = 2;
    for (const auto& s : seqs) n = std::max(n, s.n());
    return n;
}

ModelConfig make_model_config(const std::string& config_path,
                              const std::string& variant, uint64_t seed,
                              const std::vector<SceneSequence>& data) {
    ModelConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw Error("cannot open model config: " + config_path);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        cfg = ModelConfig::from_json(text);
        if (!variant.empty()) {
            ModelConfig def = ModelConfig::defaults(variant_from_name(variant), seed);
            cfg.variant = def.variant;
            cfg.heads = def.heads;
            cfg.d_k = def.d_k;
            cfg.d_v = def.d_v;
        }
    } else {
        cfg = ModelConfig::defaults(
            variant_from_name(variant.empty() ? "G+L+MA" : variant), seed);
    }
    cfg.seed = seed;
    cfg.T = data.front().T;
    cfg.n_max = dataset_max_nodes(data);
    cfg.validate();
    return cfg;
}

std::vector<Behavior> parse_classes(const std::string& csv) {
    std::vector<Behavior> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(behavior_from_name(item));
    }
    if (out.empty()) throw ConfigError("--classes: no classes given");
    return out;
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
    std::vector<uint64_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoull(item));
    if (out.empty()) throw ConfigError("--seeds: no seeds given");
    return out;
}

std::vector<double> parse_fractions(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    if (out.empty()) throw ConfigError("--fractions: no fractions given");
    return out;
}

std::vector<SceneSequence> apply_dropout(const std::vector<SceneSequence>& seqs,
                                         double fraction, uint64_t seed) {
    std::vector<SceneSequence> out;
    out.reserve(seqs.size());
    for (size_t i = 0; i < seqs.size(); ++i)
        out.push_back(landmark_dropout(
            seqs[i], fraction, derive_seed(seed, "landmark-dropout", i)));
    return out;
}

// --- subcommand state ---------------------------------------------------

struct Args {
    std::string config_path, dataset, checkpoint, out, classes;
    std::string variant;
    std::string split = "test";
    std::string fractions = "0.5,0.75,1.0";
    std::string seeds = "1,2,3";
    std::string variants;
    std::string train_dist = "apollo_like";
    std::string eval_dists = "kitti_like,indian_like";
    uint64_t seed = 0;
    int epochs = 60;
    int count = 600;
    bool json = false;
};

int cmd_generate(const Args& a) {
    const auto start = std::chrono::steady_clock::now();
    WorldConfig cfg = a.config_path.empty() ? WorldConfig::preset("apollo_like")
                                            : WorldConfig::from_file(a.config_path);
    if (a.out.empty()) throw ConfigError("generate: --out is required");
    DatasetManifest m = generate_dataset(a.count, cfg, a.seed, a.out);
    std::cout << "wrote " << a.count << " sequences to " << a.out << " (train/val/test "
              << m.train.size() << "/" << m.val.size() << "/" << m.test.size()
              << ")\n";
    append_run_manifest(fs::path(a.out).parent_path().string(),
                        {{"command", "generate"},
                         {"seed", a.seed},
                         {"count", a.count},
                         {"config_hash", m.config_hash},
                         {"dataset", a.out},
                         {"wall_clock_s", seconds_since(start)}});
    return 0;
}

int cmd_train(const Args& a) {
    const auto start = std::chrono::steady_clock::now();
    if (a.dataset.empty() || a.out.empty())
        throw ConfigError("train: --dataset and --out are required");
    LoadedDataset ds = load_with_manifest(a.dataset);
    auto train_set = ds.subset(ds.manifest.train);
    auto val_set = ds.subset(ds.manifest.val);
    auto test_set = ds.subset(ds.manifest.test);

    ModelConfig cfg = make_model_config(a.config_path, a.variant, a.seed, ds.all);
    TrainOptions opt;
    opt.max_epochs = a.epochs;
    opt.seed = a.seed;

    TrainResult result;
    try {
        result = train_model(train_set, val_set, cfg, opt);
    } catch (const NonFiniteError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 2;
    }

    Model model(cfg);
    model.restore(result.best_params);
    fs::create_directories(a.out);
    const std::string ckpt =
        a.checkpoint.empty() ? (fs::path(a.out) / "checkpoint.json").string()
                             : a.checkpoint;
    const auto ckpt_dir = fs::path(ckpt).parent_path();
    if (!ckpt_dir.empty()) fs::create_directories(ckpt_dir);
    save_model(ckpt, model);

    MetricsReport test_report = evaluate_model(model, test_set);
    test_report.loss_curve = result.train_loss;
    write_text_file(fs::path(a.out) / "metrics.json", test_report.to_json());
    std::cout << "best val accuracy: " << result.best_val_accuracy << " after "
              << result.epochs_run << " epoch(s)\n"
              << "test set:\n"
              << test_report.to_text();
    if (a.json) std::cout << test_report.to_json() << "\n";

    append_run_manifest(a.out, {{"command", "train"},
                                {"seed", a.seed},
                                {"dataset", a.dataset},
                                {"variant", variant_name(cfg.variant)},
                                {"epochs", result.epochs_run},
                                {"checkpoint", ckpt},
                                {"best_val_accuracy", result.best_val_accuracy},
                                {"test_accuracy", test_report.overall_accuracy},
                                {"wall_clock_s", seconds_since(start)}});
    return 0;
}

int cmd_eval(const Args& a) {
    const auto start = std::chrono::steady_clock::now();
    if (a.dataset.empty() || a.checkpoint.empty())
        throw ConfigError("eval: --dataset and --checkpoint are required");
    LoadedDataset ds = load_with_manifest(a.dataset);
    std::vector<SceneSequence> data;
    if (a.split == "train")
        data = ds.subset(ds.manifest.train);
    else if (a.split == "val")
        data = ds.subset(ds.manifest.val);
    else if (a.split == "test")
        data = ds.subset(ds.manifest.test);
    else if (a.split == "all")
        data = ds.all;
    else
        throw ConfigError("eval: --split must be train|val|test|all");

    Model model = load_model(a.checkpoint);
    std::vector<Behavior> subset;
    MetricsReport report;
    if (!a.classes.empty()) {
        subset = parse_classes(a.classes);
        report = evaluate_model(model, data, &subset);
    } else {
        report = evaluate_model(model, data);
    }
    std::cout << report.to_text();
    if (a.json) std::cout << report.to_json() << "\n";
    if (!a.out.empty()) {
        write_text_file(fs::path(a.out) / "metrics.json", report.to_json());
        append_run_manifest(a.out, {{"command", "eval"},
                                    {"dataset", a.dataset},
                                    {"checkpoint", a.checkpoint},
                                    {"split", a.split},
                                    {"classes", a.classes},
                                    {"overall_accuracy", report.overall_accuracy},
                                    {"wall_clock_s", seconds_since(start)}});
    }
    return 0;
}

// one training + test evaluation, shared by the ablation/transfer commands
MetricsReport train_and_eval(const std::vector<SceneSequence>& train_set,
                             const std::vector<SceneSequence>& val_set,
                             const std::vector<SceneSequence>& test_set,
                             const ModelConfig& cfg, int epochs, uint64_t seed,
                             const std::vector<Behavior>* subset = nullptr) {
    TrainOptions opt;
    opt.max_epochs = epochs;
    opt.seed = seed;
    TrainResult result = train_model(train_set, val_set, cfg, opt);
    Model model(cfg);
    model.restore(result.best_params);
    return evaluate_model(model, test_set, subset);
}

int cmd_ablate_landmarks(const Args& a) {
    const auto start = std::chrono::steady_clock::now();
    if (a.dataset.empty() || a.out.empty())
        throw ConfigError("ablate-landmarks: --dataset and --out are required");
    LoadedDataset ds = load_with_manifest(a.dataset);
    const auto fractions = parse_fractions(a.fractions);
    const auto seeds = parse_seeds(a.seeds);

    nlohmann::json table;
    table["schema_version"] = 1;
    table["fractions"] = fractions;
    table["seeds"] = seeds;
    nlohmann::json cells = nlohmann::json::object();

    std::vector<std::vector<double>> per_class_mean(
        fractions.size(), std::vector<double>(kNumClasses, 0.0));
    std::vector<double> overall_mean(fractions.size(), 0.0);

    for (size_t fi = 0; fi < fractions.size(); ++fi) {
        const double f = fractions[fi];
        for (uint64_t seed : seeds) {
            auto dropped = apply_dropout(ds.all, f, seed);
            LoadedDataset view{std::move(dropped), ds.manifest};
            auto train_set = view.subset(view.manifest.train);
            auto val_set = view.subset(view.manifest.val);
            auto test_set = view.subset(view.manifest.test);
            ModelConfig cfg = make_model_config(a.config_path, a.variant.empty() ? "G+L+MA" : a.variant,
                                                seed, view.all);
            MetricsReport rep =
                train_and_eval(train_set, val_set, test_set, cfg, a.epochs, seed);
            for (int c = 0; c < kNumClasses; ++c) {
                const double acc = rep.per_class_accuracy(static_cast<Behavior>(c));
                if (acc >= 0)
                    per_class_mean[fi][static_cast<size_t>(c)] += acc / seeds.size();
            }
            overall_mean[fi] += rep.overall_accuracy / seeds.size();
        }
    }

    std::ostringstream text;
    text << "class  ";
    for (double f : fractions) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "  ours (%s)", f >= 1.0 ? "full" : (std::to_string(static_cast<int>(f * 100)) + "%").c_str());
        text << buf;
    }
    text << "\n";
    for (int c = 0; c < kNumClasses; ++c) {
        text << behavior_name(static_cast<Behavior>(c)) << "   ";
        nlohmann::json row = nlohmann::json::object();
        for (size_t fi = 0; fi < fractions.size(); ++fi) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "  %10.3f", per_class_mean[fi][static_cast<size_t>(c)]);
            text << buf;
            row[std::to_string(fractions[fi])] = per_class_mean[fi][static_cast<size_t>(c)];
        }
        text << "\n";
        cells[behavior_name(static_cast<Behavior>(c))] = row;
    }
    table["per_class_accuracy"] = cells;
    nlohmann::json overall = nlohmann::json::object();
    for (size_t fi = 0; fi < fractions.size(); ++fi)
        overall[std::to_string(fractions[fi])] = overall_mean[fi];
    table["overall_accuracy"] = overall;

    std::cout << text.str();
    if (a.json) std::cout << table.dump() << "\n";
    write_text_file(fs::path(a.out) / "ablate_landmarks.json", table.dump());
    append_run_manifest(a.out, {{"command", "ablate-landmarks"},
                                {"dataset", a.dataset},
                                {"fractions", fractions},
                                {"seeds", seeds},
                                {"wall_clock_s", seconds_since(start)}});
    return 0;
}

int cmd_ablate_model(const Args& a) {
    const auto start = std::chrono::steady_clock::now();
    if (a.dataset.empty() || a.out.empty())
        throw ConfigError("ablate-model: --dataset and --out are required");
    LoadedDataset ds = load_with_manifest(a.dataset);
    auto train_set = ds.subset(ds.manifest.train);
    auto val_set = ds.subset(ds.manifest.val);
    auto test_set = ds.subset(ds.manifest.test);
    const auto seeds = parse_seeds(a.seeds);

    std::vector<std::string> variant_names;
    if (a.variants.empty()) {
        for (Variant v : all_variants()) variant_names.push_back(variant_name(v));
    } else {
        std::stringstream ss(a.variants);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) variant_names.push_back(item);
    }

    nlohmann::json table;
    table["schema_version"] = 1;
    table["variants"] = variant_names;
    table["seeds"] = seeds;
    nlohmann::json cells = nlohmann::json::object();
    nlohmann::json means = nlohmann::json::object();

    std::ostringstream text;
    text << "variant      mean ";
    for (int c = 0; c < kNumClasses; ++c)
        text << "   " << behavior_name(static_cast<Behavior>(c));
    text << "\n";

    for (const std::string& vn : variant_names) {
        std::vector<double> per_class(kNumClasses, 0.0);
        double mean_acc = 0.0;
        for (uint64_t seed : seeds) {
            ModelConfig cfg = make_model_config(a.config_path, vn, seed, ds.all);
            MetricsReport rep =
                train_and_eval(train_set, val_set, test_set, cfg, a.epochs, seed);
            std::vector<Behavior> all_classes;
            for (int c = 0; c < kNumClasses; ++c)
                all_classes.push_back(static_cast<Behavior>(c));
            mean_acc += rep.mean_class_accuracy(all_classes) / seeds.size();
            for (int c = 0; c < kNumClasses; ++c) {
                const double acc = rep.per_class_accuracy(static_cast<Behavior>(c));
                if (acc >= 0) per_class[static_cast<size_t>(c)] += acc / seeds.size();
            }
        }
        nlohmann::json row = nlohmann::json::object();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%-10s %7.3f", vn.c_str(), mean_acc);
        text << buf;
        for (int c = 0; c < kNumClasses; ++c) {
            std::snprintf(buf, sizeof buf, " %5.3f", per_class[static_cast<size_t>(c)]);
            text << buf;
            row[behavior_name(static_cast<Behavior>(c))] = per_class[static_cast<size_t>(c)];
        }
        text << "\n";
        cells[vn] = row;
        means[vn] = mean_acc;
    }
    table["per_class_accuracy"] = cells;
    table["mean_class_accuracy"] = means;

    std::cout << text.str();
    if (a.json) std::cout << table.dump() << "\n";
    write_text_file(fs::path(a.out) / "ablate_model.json", table.dump());
    append_run_manifest(a.out, {{"command", "ablate-model"},
                                {"dataset", a.dataset},
                                {"variants", variant_names},
                                {"seeds", seeds},
                                {"wall_clock_s", seconds_since(start)}});
    return 0;
}

int cmd_transfer(const Args& a) {
    const auto start = std::chrono::steady_clock::now();
    if (a.out.empty()) throw ConfigError("transfer: --out is required");
    const auto seeds = parse_seeds(a.seeds);
    std::vector<std::string> eval_dists;
    {
        std::stringstream ss(a.eval_dists);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) eval_dists.push_back(item);
    }
    const std::vector<Behavior> transfer_classes = {Behavior::MVA, Behavior::MTU,
                                                    Behavior::PRK};

    fs::create_directories(a.out);
    auto dataset_for = [&](const std::string& dist) {
        const std::string path = (fs::path(a.out) / ("dataset_" + dist + ".jsonl")).string();
        if (!fs::exists(path))
            generate_dataset(a.count, WorldConfig::preset(dist),
                             derive_seed(a.seed, "transfer-dataset-" + dist), path);
        return load_with_manifest(path);
    };

    LoadedDataset train_ds = dataset_for(a.train_dist);
    auto train_set = train_ds.subset(train_ds.manifest.train);
    auto val_set = train_ds.subset(train_ds.manifest.val);

    nlohmann::json table;
    table["schema_version"] = 1;
    table["train_dist"] = a.train_dist;
    table["eval_dists"] = eval_dists;
    table["seeds"] = seeds;
    table["classes"] = {"MVA", "MTU", "PRK"};

    std::vector<std::string> all_dists = {a.train_dist};
    all_dists.insert(all_dists.end(), eval_dists.begin(), eval_dists.end());
    std::map<std::string, double> mean_acc;
    nlohmann::json cells = nlohmann::json::object();

    for (uint64_t seed : seeds) {
        ModelConfig cfg = make_model_config(a.config_path,
                                            a.variant.empty() ? "G+L+MA" : a.variant,
                                            seed, train_ds.all);
        TrainOptions opt;
        opt.max_epochs = a.epochs;
        opt.seed = seed;
        TrainResult result = train_model(train_set, val_set, cfg, opt);
        Model model(cfg);
        model.restore(result.best_params);
        for (const std::string& dist : all_dists) {
            LoadedDataset ds = dataset_for(dist);
            auto test_set = ds.subset(ds.manifest.test);
            MetricsReport rep = evaluate_model(model, test_set, &transfer_classes);
            mean_acc[dist] += rep.overall_accuracy / seeds.size();
        }
    }

    std::ostringstream text;
    text << "3-class accuracy (MVA/MTU/PRK), trained on " << a.train_dist << ":\n";
    for (const std::string& dist : all_dists) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "  %-12s %7.3f", dist.c_str(), mean_acc[dist]);
        text << buf;
        if (dist != a.train_dist && mean_acc[a.train_dist] > 0) {
            std::snprintf(buf, sizeof buf, "  (retention %5.3f)",
                          mean_acc[dist] / mean_acc[a.train_dist]);
            text << buf;
        }
        text << "\n";
        cells[dist] = mean_acc[dist];
    }
    table["three_class_accuracy"] = cells;

    std::cout << text.str();
    if (a.json) std::cout << table.dump() << "\n";
    write_text_file(fs::path(a.out) / "transfer.json", table.dump());
    append_run_manifest(a.out, {{"command", "transfer"},
                                {"train_dist", a.train_dist},
                                {"eval_dists", eval_dists},
                                {"seeds", seeds},
                                {"wall_clock_s", seconds_since(start)}});
    return 0;
}

int cmd_gradcheck(const Args& a) {
    std::vector<Variant> variants;
    if (a.variant.empty() || a.variant == "all") {
        variants = all_variants();
    } else {
        variants.push_back(variant_from_name(a.variant));
    }
    bool ok = true;
    for (Variant v : variants) {
        GradCheckReport rep = gradcheck_variant(v, a.seed);
        std::cout << variant_name(v) << ": " << (rep.passed ? "PASS" : "FAIL")
                  << " (max rel err " << rep.max_rel_err << ")\n";
        if (a.json) {
            nlohmann::json j;
            j["variant"] = variant_name(v);
            j["passed"] = rep.passed;
            j["max_rel_err"] = rep.max_rel_err;
            nlohmann::json tensors = nlohmann::json::object();
            for (const auto& t : rep.tensors) tensors[t.name] = t.max_rel_err;
            j["tensors"] = tensors;
            std::cout << j.dump() << "\n";
        } else {
            for (const auto& t : rep.tensors)
                std::cout << "  " << t.name << ": " << t.max_rel_err << "\n";
        }
        ok = ok && rep.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vehicle maneuver classification from quadrant scene graphs"};
    app.require_subcommand(1);
    Args a;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", a.seed, "master seed");
        cmd->add_option("--out", a.out, "output directory/file");
        cmd->add_flag("--json", a.json, "also print machine-readable JSON");
        cmd->add_option("--config", a.config_path, "config file (JSON)");
    };

    CLI::App* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    add_common(gen);
    gen->add_option("--count", a.count, "number of sequences");

    CLI::App* train = app.add_subcommand("train", "train a model");
    add_common(train);
    train->add_option("--dataset", a.dataset, "dataset path (JSON Lines)");
    train->add_option("--epochs", a.epochs, "max training epochs");
    train->add_option("--variant", a.variant, "architecture variant");
    train->add_option("--checkpoint", a.checkpoint,
                      "checkpoint output path (default <out>/checkpoint.json)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval);
    eval->add_option("--dataset", a.dataset, "dataset path");
    eval->add_option("--checkpoint", a.checkpoint, "checkpoint path");
    eval->add_option("--classes", a.classes, "restrict to a class subset (csv)");
    eval->add_option("--split", a.split, "train|val|test|all");

    CLI::App* abl = app.add_subcommand("ablate-landmarks",
                                       "landmark-dropout ablation table");
    add_common(abl);
    abl->add_option("--dataset", a.dataset, "dataset path");
    abl->add_option("--epochs", a.epochs, "max training epochs");
    abl->add_option("--fractions", a.fractions, "landmark keep fractions (csv)");
    abl->add_option("--seeds", a.seeds, "training seeds (csv)");
    abl->add_option("--variant", a.variant, "architecture variant");

    CLI::App* ablm = app.add_subcommand("ablate-model", "architecture ablation table");
    add_common(ablm);
    ablm->add_option("--dataset", a.dataset, "dataset path");
    ablm->add_option("--epochs", a.epochs, "max training epochs");
    ablm->add_option("--variants", a.variants, "variants to run (csv)");
    ablm->add_option("--seeds", a.seeds, "training seeds (csv)");

    CLI::App* tr = app.add_subcommand("transfer", "cross-distribution transfer table");
    add_common(tr);
    tr->add_option("--epochs", a.epochs, "max training epochs");
    tr->add_option("--count", a.count, "sequences per generated dataset");
    tr->add_option("--seeds", a.seeds, "training seeds (csv)");
    tr->add_option("--train-dist", a.train_dist, "training distribution preset");
    tr->add_option("--eval-dists", a.eval_dists, "evaluation presets (csv)");
    tr->add_option("--variant", a.variant, "architecture variant");

    CLI::App* gc = app.add_subcommand("gradcheck",
                                      "finite-difference gradient check");
    add_common(gc);
    gc->add_option("--variant", a.variant, "variant, or 'all'");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(a);
        if (train->parsed()) return cmd_train(a);
        if (eval->parsed()) return cmd_eval(a);
        if (abl->parsed()) return cmd_ablate_landmarks(a);
        if (ablm->parsed()) return cmd_ablate_model(a);
        if (tr->parsed()) return cmd_transfer(a);
        if (gc->parsed()) return cmd_gradcheck(a);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
