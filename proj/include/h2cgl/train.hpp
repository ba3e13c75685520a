#pragma once

#include "h2cgl/contrastive.hpp"
#include "h2cgl/encoder.hpp"
#include "h2cgl/graph.hpp"
#include "h2cgl/optim.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace h2cgl {

struct Ablations {
    bool no_text = false;       // random node features
    bool no_hier = false;       // snapshot self-attention instead of weighted GIN
    bool no_cgin_rgat = false;  // plain GIN / GATv2
    bool no_cl = false;         // beta forced to 0, no views encoded
    bool generic_aug = false;   // edge drop + attribute mask views
    bool no_hard_neg = false;   // other batch members as negatives
};

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch = 32;
    std::size_t epochs = 30;
    double alpha = 0.5;
    double beta = 0.5;
    std::uint64_t seed = 1;
    EncoderConfig encoder;
    AugmentConfig augment;
    Ablations ablations;

    void validate() const;
    // Encoder settings with the ablation switches applied.
    EncoderConfig effective_encoder() const;
    double effective_beta() const { return ablations.no_cl ? 0.0 : beta; }

    std::vector<std::pair<std::string, std::string>> entries() const;
    // Throws std::invalid_argument on an unknown key or unparsable value.
    void set(const std::string& key, const std::string& value);
    std::string hash() const;
};

// Regression head d -> d -> 1 (log count) and classification head d -> d -> 3.
struct Heads {
    Mlp regression;
    Mlp classification;

    static Heads create(ParamSet& params, std::size_t dim, std::mt19937_64& rng);
};

class Model {
public:
    explicit Model(const TrainConfig& config);

    const TrainConfig& config() const { return config_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const Encoder& encoder() const { return encoder_; }
    const Heads& heads() const { return heads_; }
    const ProjectionHead& projection() const { return projection_; }

    GraphBatch collate(std::span<const HierHetGraph* const> graphs, const FeatureStore& features) const;

    struct Output {
        ad::Var log_count;  // n x 1
        ad::Var logits;     // n x 3
    };
    Output heads_forward(ParamVars& pv, ad::Var embedding) const;

private:
    TrainConfig config_;
    ParamSet params_;
    std::mt19937_64 init_rng_;
    Encoder encoder_;
    Heads heads_;
    ProjectionHead projection_;
};

struct Prediction {
    double log_count = 0.0;
    std::array<double, 3> probabilities{};
    int interval = 0;

    // max(0, exp(log_count) - 1)
    double count() const;
};

// Augmentation-free, deterministic. Graphs are encoded `chunk` at a time.
std::vector<Prediction> predict(const Model& model, const Dataset& data, std::size_t chunk = 8,
                                std::vector<std::vector<AttentionRecord>>* attention = nullptr);

// --- metrics (natural log scale) --------------------------------------------------

double male(std::span<const double> truth, std::span<const double> predicted);
// 1 - SS_res / SS_tot; with constant truth it is 1 for a perfect fit and 0 otherwise.
double log_r2(std::span<const double> truth, std::span<const double> predicted);
double accuracy(std::span<const int> truth, std::span<const int> predicted);
// Mean per-class F1; a class with no true and no predicted members scores 0.
double macro_f1(std::span<const int> truth, std::span<const int> predicted, std::size_t classes = 3);

struct PartitionMetrics {
    std::size_t count = 0;
    double male = 0.0;
    double log_r2 = 0.0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

PartitionMetrics compute_metrics(std::span<const double> truth, std::span<const double> predicted,
                                 std::span<const int> truth_class, std::span<const int> predicted_class);

struct EvalReport {
    std::string split;
    std::string config_hash;  // of the evaluated sample cache
    std::optional<PartitionMetrics> previous;
    std::optional<PartitionMetrics> fresh;
    std::optional<PartitionMetrics> total;

    void write_csv(std::ostream& out) const;
    void write_json(std::ostream& out) const;
};

// Fresh = published after the dataset's training observation year; previous = the rest.
EvalReport evaluate(const Dataset& data, std::span<const Prediction> predictions);

// --- training -----------------------------------------------------------------------

struct LossParts {
    double mse = 0.0;
    double ce = 0.0;
    double cl = 0.0;
    double total = 0.0;
};

// L = mse + alpha * ce + beta * cl on one tape; `cl` may be invalid (treated as 0).
// `parts` receives the component values.
ad::Var total_loss(ad::Tape& tape, ad::Var log_count, ad::Var logits, std::span<const double> label_log,
                   std::span<const int> label_interval, ad::Var cl, double alpha, double beta,
                   LossParts* parts = nullptr);

struct EpochRecord {
    std::size_t epoch = 0;
    LossParts train;
    PartitionMetrics val;
    double seconds = 0.0;
};

struct History {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based, as in EpochRecord::epoch
    double best_val_male = 0.0;

    // One CSV row per epoch (wall-clock time is left out so seeded runs write identical files).
    void write(std::ostream& out) const;
};

// Gradient of the mean loss over `anchors` (indices into data.samples). Views and negatives are
// drawn from `rng`; `parts` receives the batch loss components.
Gradients batch_gradients(const Model& model, const Dataset& data, std::span<const std::size_t> anchors,
                          std::mt19937_64& rng, LossParts* parts = nullptr);

// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Trains in place and leaves the model holding the parameters of the epoch with the lowest
// validation MALE. Throws NumericError when the loss or gradients stop being finite.
History train(Model& model, const Dataset& train_data, const Dataset& val_data,
              const EpochCallback& on_epoch = nullptr);

}  // namespace h2cgl
