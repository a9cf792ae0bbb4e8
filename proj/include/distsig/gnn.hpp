#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "distsig/graph.hpp"
#include "distsig/regularizer.hpp"
#include "distsig/rng.hpp"
#include "distsig/spectral.hpp"

namespace distsig {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr int kCoraFeatureDim = 1433;

/// Node-classification data: graph, row-normalized features, labels.
struct Dataset {
  Graph graph;
  SparseRows features;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;

  int num_nodes() const { return graph.num_nodes(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

/// Rows with a nonzero sum are scaled to sum 1.
SparseRows row_normalize(SparseRows features);

/// Raw Cora text format. content: "<id> <f binary features> <class>" per
/// line; cites: "<cited> <citing>" per line. Citations are symmetrized,
/// duplicates merged, self-citations dropped. Classes are indexed in sorted
/// order of their names.
Dataset load_cora(std::istream& content, std::istream& cites,
                  int feature_dim = kCoraFeatureDim);
Dataset load_cora(const std::filesystem::path& content_path,
                  const std::filesystem::path& cites_path,
                  int feature_dim = kCoraFeatureDim);

/// One-hot features of width `dim`: node i gets column perm(i) mod dim for
/// a seeded permutation perm.
SparseRows sbm_features(int num_nodes, int dim, std::uint64_t seed);

/// Dataset wrapping an SBM draw with sbm_features.
Dataset sbm_dataset(const std::vector<int>& block_sizes, double p_in, double p_out,
                    int feature_dim, std::uint64_t seed);

struct Split {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
  std::uint64_t seed = 0;
};

/// `per_class` training nodes per class in seeded shuffle order, then
/// `val_size` and `test_size` nodes from the remainder.
Split make_split(const std::vector<int>& labels, int num_classes, int per_class, int val_size,
                 int test_size, std::uint64_t seed);

enum class Variant { Gcn, R, R1, R2, R3, Lap };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
inline const std::vector<Variant> kAllVariants = {Variant::Gcn, Variant::R,  Variant::R1,
                                                  Variant::R2,  Variant::R3, Variant::Lap};

struct TrainConfig {
  Variant variant = Variant::R;
  double eta = 0.5;
  int hidden = 16;
  int epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GcnParams {
  Eigen::MatrixXd w1;  // f x h
  Eigen::MatrixXd w2;  // h x m
};

/// Glorot-uniform initialization.
GcnParams init_params(int features, int hidden, int classes, Rng& rng);

/// Everything the model needs about a fixed graph and feature set.
struct Problem {
  Graph graph;
  Eigen::SparseMatrix<double> a_hat;
  SparseRows features;
  std::vector<int> labels;
  int num_classes = 0;
  Split split;
  WeightDiag weights;

  int num_nodes() const { return graph.num_nodes(); }
};

Problem make_problem(const Dataset& data, Split split);

struct ForwardCache {
  SparseRows input;           // features after dropout
  Eigen::MatrixXd pre1;       // A_hat F W1
  Eigen::MatrixXd hidden;     // ReLU(pre1) after dropout
  Eigen::MatrixXd drop_mask;  // hidden dropout scale per entry, empty if off
};

struct ForwardResult {
  Eigen::MatrixXd logits;  // O
  Eigen::MatrixXd probs;   // X = softmax(O)
  ForwardCache cache;
};

/// O = A_hat ReLU(A_hat F W1) W2 and X = softmax(O). Inverted dropout with
/// rate `dropout` on the features and hidden activations when `rng` is given.
ForwardResult gcn_forward(const GcnParams& params, const Eigen::SparseMatrix<double>& a_hat,
                          const SparseRows& features, double dropout = 0.0,
                          Rng* rng = nullptr);

struct Objective {
  double loss = 0;            // cross_entropy + eta * regularizer / normalizer + decay
  double cross_entropy = 0;   // masked mean over training nodes
  double regularizer = 0;     // unscaled variant regularizer
  double decay = 0;           // weight_decay * |W1|^2 / 2
  GcnParams grad;
  ForwardResult forward;
};

/// Degree sum 2|E| (at least 1); the regularizer enters the loss as
/// eta * regularizer / normalizer.
double regularizer_normalizer(const Problem& p);

/// Variant regularizer of the output, before scaling.
double variant_regularizer(Variant v, const Problem& p, const Eigen::MatrixXd& logits,
                           const Eigen::MatrixXd& probs);

/// Training objective and its gradient. Dropout is applied when `rng` is
/// given.
Objective objective(const GcnParams& params, const Problem& p, const TrainConfig& cfg,
                    Rng* rng = nullptr);

struct EpochRecord {
  double loss;
  double regularizer;
  double train_acc;
  double val_loss;
  double val_acc;
};

struct TrainResult {
  GcnParams best;   // highest validation accuracy, earliest on ties
  GcnParams final;  // after the last epoch
  int best_epoch = 0;
  std::vector<EpochRecord> epochs;
  double test_acc = 0;  // of `best`
};

/// Adam on `objective`. Throws NumericError naming the epoch if the loss
/// becomes non-finite.
TrainResult train(const Problem& p, const TrainConfig& cfg);

/// Row argmax, lowest class on ties.
std::vector<int> predict(const Eigen::MatrixXd& probs);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                const std::vector<int>& nodes);

/// Evaluation-mode output X of `params`.
Eigen::MatrixXd predict_probs(const GcnParams& params, const Problem& p);

struct OutputAnalysis {
  double accuracy = 0;
  std::vector<double> hf_fraction;  // per class column, main component
  std::vector<NonuniformityRow> nonuniformity;
};

/// Main-component Laplacian spectrum used by analyze_output.
struct ComponentSpectrum {
  std::vector<int> nodes;
  Spectrum<double> spectrum;
};
ComponentSpectrum main_component_spectrum(const Graph& g);

/// Accuracy on `nodes`, high-frequency fraction (cut `cut`) of each class
/// column of X restricted to the main component, optionally mean-centered
/// and normalized, and the non-uniformity sweep.
OutputAnalysis analyze_output(const Eigen::MatrixXd& probs, const std::vector<int>& labels,
                              const std::vector<int>& nodes, const ComponentSpectrum& spec,
                              const std::string& model_tag, bool normalize = true,
                              double cut = 0.5);

inline const std::vector<double> kEtaGrid = {0.1, 0.2, 0.5, 1.0};

struct TuneResult {
  double eta;
  double val_acc;
};

/// Best eta on the grid by best-epoch validation accuracy, smaller eta on
/// ties. Grid points are trained on up to `jobs` threads.
TuneResult tune_eta(const Problem& p, const TrainConfig& cfg,
                    const std::vector<double>& grid = kEtaGrid, int jobs = 1);

}  // namespace distsig
