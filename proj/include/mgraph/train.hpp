#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgraph/model.hpp"
#include "mgraph/scene_graph.hpp"

namespace mgraph {

struct MetricsReport {
    int schema_version = 1;
    // rows: ground truth, cols: prediction; 6x6 even in subset mode
    std::array<std::array<long, kNumClasses>, kNumClasses> confusion{};
    std::vector<Behavior> classes;  // classes included in the evaluation
    double overall_accuracy = 0.0;
    std::vector<double> loss_curve;

    long row_total(int cls) const;
    // diagonal / row total (recall); -1 when the class has no samples
    double per_class_accuracy(Behavior b) const;
    double mean_class_accuracy(const std::vector<Behavior>& subset) const;

    std::string to_json() const;
    std::string to_text() const;
};

struct TrainOptions {
    int max_epochs = 60;
    int batch_size = 8;
    double learning_rate = 1e-3;
    int patience = 10;  // epochs without val-accuracy improvement
    uint64_t seed = 0;
    bool verbose = false;
};

struct TrainResult {
    ModelConfig config;
    std::vector<Matrix> best_params;
    double best_val_accuracy = 0.0;
    int epochs_run = 0;
    std::vector<double> train_loss;
    std::vector<double> val_accuracy;
};

TrainResult train_model(std::span<const SceneSequence> train,
                        std::span<const SceneSequence> val,
                        const ModelConfig& config, const TrainOptions& options);

MetricsReport evaluate_model(const Model& model,
                             std::span<const SceneSequence> data,
                             const std::vector<Behavior>* class_subset = nullptr);

// Self-describing checkpoint: parameters plus the model config.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

// --- gradient checking --------------------------------------------------

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> tensors;
    double max_rel_err = 0.0;
    bool passed = false;
};

// Builds a small fixed sequence (4 nodes, T = 3) and compares analytic
// gradients against central finite differences on sampled coordinates.
// corrupt_grads, when set, perturbs the analytic grads before comparison
// (negative-control hook for tests).
GradCheckReport gradcheck_variant(
    Variant variant, uint64_t seed, int samples_per_tensor = 30,
    double eps = 1e-5, double tol = 1e-4,
    const std::function<void(NamedParams&)>& corrupt_grads = nullptr);

// small deterministic sequence used by the gradient checker
SceneSequence make_toy_sequence(int n_vehicles, int n_landmarks, int T,
                                uint64_t seed);

}  // namespace mgraph
