#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "sdgnn/hin.hpp"
#include "sdgnn/matrix.hpp"

namespace sdgnn {

enum class Activation { relu, linear };
enum class RelationAggregation { sum, mean };

struct ModelConfig {
  int gnn_layers = 3;
  int lstm_layers = 10;
  int input_dim = 216;
  int output_dim = 216;
  int hidden_dim = 32;
  int horizon = 1;  ///< Q
  RelationAggregation aggregation = RelationAggregation::sum;
  Activation activation = Activation::relu;
  /// Use the proximity and destination weights; false keeps only their sparsity.
  bool weighted_edges = true;
  std::uint64_t weight_seed = 1;

  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct LstmLayer {
  Matrix w_x;  ///< in x 4H, gate blocks i, f, g, o
  Matrix w_h;  ///< H x 4H
  std::vector<double> bias;  ///< 4H

  friend bool operator==(const LstmLayer&, const LstmLayer&) = default;
};

struct WeightSet {
  std::vector<std::array<Matrix, 3>> gnn;  ///< gnn[l][relation], in x hidden
  std::vector<LstmLayer> lstm;
  Matrix head;  ///< hidden x (Q * output_dim)
  std::vector<double> head_bias;

  friend bool operator==(const WeightSet&, const WeightSet&) = default;
};

/// Xavier-uniform weights drawn from a seeded 64-bit Mersenne twister; biases 0.
WeightSet init_weights(const ModelConfig& config);
void check_shapes(const WeightSet& weights, const ModelConfig& config);

nlohmann::json to_json(const WeightSet& weights);
WeightSet weights_from_json(const nlohmann::json& j);
void save_weights(const WeightSet& weights, const std::filesystem::path& path);
WeightSet load_weights(const std::filesystem::path& path);

/// Symmetrically normalised adjacency with self loops, per relation:
/// coefficient(i, j) = w_ij / sqrt(deg_i deg_j), deg_i = 1 + sum_j w_ij.
struct NormalizedHin {
  struct Entry {
    int index = 0;
    double coef = 0.0;
  };
  int size = 0;
  std::array<std::vector<double>, 3> self;
  std::array<std::vector<std::vector<Entry>>, 3> neighbors;
};

NormalizedHin normalize(const HinSnapshot& snapshot, bool weighted_edges);

/// Computes output rows `rows` of one hetGNN layer from H_in. Only the rows of
/// H_in reachable from `rows` are read. Per-relation contributions are summed
/// in ascending value order so the result does not depend on node order.
void layer_rows(const NormalizedHin& graph, const Matrix& h_in, const std::array<Matrix, 3>& weights,
                const ModelConfig& config, std::span<const int> rows, Matrix& h_out);

Matrix hetgnn_layer(const NormalizedHin& graph, const Matrix& h_in, const std::array<Matrix, 3>& weights,
                    const ModelConfig& config);

/// All L layers over the whole graph.
Matrix gnn_embed(const NormalizedHin& graph, const Matrix& features, const WeightSet& weights,
                 const ModelConfig& config);

/// Final embedding of `root`, computed only over its L-hop ball.
std::vector<double> local_embedding(const NormalizedHin& graph, const Matrix& features, const WeightSet& weights,
                                    const ModelConfig& config, int root);

/// Stacked LSTM over the per-slot embeddings of one node, then the linear head.
/// Returns Q * output_dim values, horizon-major.
std::vector<double> lstm_head(std::span<const std::vector<double>> sequence, const WeightSet& weights,
                              const ModelConfig& config);

/// Predictions (Q, N, output_dim) for the window, rows in the last snapshot's node order.
Tensor3 forward(std::span<const HinSnapshot> window, const ModelConfig& config, const WeightSet& weights);

/// Node ids in the last snapshot's order after checking every slot holds the same set.
std::vector<NodeId> window_node_ids(std::span<const HinSnapshot> window);

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;  ///< percent
  std::size_t mape_excluded = 0;  ///< zero truths left out of MAPE
};

Metrics metrics(std::span<const double> truth, std::span<const double> prediction);

}  // namespace sdgnn
