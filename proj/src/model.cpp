#include "sdgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace sdgnn {

namespace {

using nlohmann::json;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Matrix xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  Matrix m(fan_in, fan_out);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : m.values()) v = (2.0 * unit_uniform(rng) - 1.0) * limit;
  return m;
}

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

json matrix_json(const std::string& name, const Matrix& m) {
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

json vector_json(const std::string& name, const std::vector<double>& v) {
  return {{"name", name}, {"shape", {v.size()}}, {"data", v}};
}

Matrix matrix_from(const json& t) {
  auto shape = t.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw std::invalid_argument("tensor " + t.at("name").get<std::string>() + ": expected 2-D");
  auto data = t.at("data").get<std::vector<double>>();
  if (data.size() != shape[0] * shape[1]) throw std::invalid_argument("tensor " + t.at("name").get<std::string>() + ": size mismatch");
  Matrix m(shape[0], shape[1]);
  std::copy(data.begin(), data.end(), m.values().begin());
  return m;
}

std::vector<double> vector_from(const json& t) {
  auto shape = t.at("shape").get<std::vector<std::size_t>>();
  auto data = t.at("data").get<std::vector<double>>();
  if (shape.size() != 1 || data.size() != shape[0]) {
    throw std::invalid_argument("tensor " + t.at("name").get<std::string>() + ": size mismatch");
  }
  return data;
}

void require_shape(const Matrix& m, std::size_t r, std::size_t c, const std::string& what) {
  if (m.rows() != r || m.cols() != c) {
    throw std::invalid_argument(what + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (gnn_layers < 1) throw std::invalid_argument("model.gnn_layers must be >= 1");
  if (lstm_layers < 1) throw std::invalid_argument("model.lstm_layers must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("model.input_dim must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("model.output_dim must be >= 1");
  if (hidden_dim < 1) throw std::invalid_argument("model.hidden_dim must be >= 1");
  if (horizon < 1) throw std::invalid_argument("model.horizon must be >= 1");
}

json to_json(const ModelConfig& c) {
  return {{"gnn_layers", c.gnn_layers},
          {"lstm_layers", c.lstm_layers},
          {"input_dim", c.input_dim},
          {"output_dim", c.output_dim},
          {"hidden_dim", c.hidden_dim},
          {"horizon", c.horizon},
          {"aggregation", c.aggregation == RelationAggregation::sum ? "sum" : "mean"},
          {"activation", c.activation == Activation::relu ? "relu" : "linear"},
          {"weighted_edges", c.weighted_edges},
          {"weight_seed", c.weight_seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  const auto defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("model." + key + ": unknown key");
  }
  auto read_int = [&](const char* key, int& field) {
    if (j.contains(key)) field = j.at(key).get<int>();
  };
  read_int("gnn_layers", c.gnn_layers);
  read_int("lstm_layers", c.lstm_layers);
  read_int("input_dim", c.input_dim);
  read_int("output_dim", c.output_dim);
  read_int("hidden_dim", c.hidden_dim);
  read_int("horizon", c.horizon);
  if (j.contains("aggregation")) {
    auto a = j.at("aggregation").get<std::string>();
    if (a == "sum") c.aggregation = RelationAggregation::sum;
    else if (a == "mean") c.aggregation = RelationAggregation::mean;
    else throw std::invalid_argument("model.aggregation: expected sum or mean");
  }
  if (j.contains("activation")) {
    auto a = j.at("activation").get<std::string>();
    if (a == "relu") c.activation = Activation::relu;
    else if (a == "linear") c.activation = Activation::linear;
    else throw std::invalid_argument("model.activation: expected relu or linear");
  }
  if (j.contains("weighted_edges")) c.weighted_edges = j.at("weighted_edges").get<bool>();
  if (j.contains("weight_seed")) c.weight_seed = j.at("weight_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

WeightSet init_weights(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.weight_seed);
  const auto H = static_cast<std::size_t>(config.hidden_dim);
  WeightSet w;
  for (int l = 0; l < config.gnn_layers; ++l) {
    const std::size_t in = l == 0 ? static_cast<std::size_t>(config.input_dim) : H;
    std::array<Matrix, 3> layer;
    for (auto& m : layer) m = xavier(in, H, rng);
    w.gnn.push_back(std::move(layer));
  }
  for (int l = 0; l < config.lstm_layers; ++l) {
    LstmLayer layer;
    layer.w_x = xavier(H, 4 * H, rng);
    layer.w_h = xavier(H, 4 * H, rng);
    layer.bias.assign(4 * H, 0.0);
    w.lstm.push_back(std::move(layer));
  }
  const auto out = static_cast<std::size_t>(config.horizon) * static_cast<std::size_t>(config.output_dim);
  w.head = xavier(H, out, rng);
  w.head_bias.assign(out, 0.0);
  return w;
}

void check_shapes(const WeightSet& w, const ModelConfig& config) {
  config.validate();
  const auto H = static_cast<std::size_t>(config.hidden_dim);
  if (w.gnn.size() != static_cast<std::size_t>(config.gnn_layers)) throw std::invalid_argument("weights: GNN layer count mismatch");
  if (w.lstm.size() != static_cast<std::size_t>(config.lstm_layers)) throw std::invalid_argument("weights: LSTM layer count mismatch");
  for (std::size_t l = 0; l < w.gnn.size(); ++l) {
    const std::size_t in = l == 0 ? static_cast<std::size_t>(config.input_dim) : H;
    for (const auto& m : w.gnn[l]) require_shape(m, in, H, "gnn." + std::to_string(l));
  }
  for (std::size_t l = 0; l < w.lstm.size(); ++l) {
    require_shape(w.lstm[l].w_x, H, 4 * H, "lstm." + std::to_string(l) + ".w_x");
    require_shape(w.lstm[l].w_h, H, 4 * H, "lstm." + std::to_string(l) + ".w_h");
    if (w.lstm[l].bias.size() != 4 * H) throw std::invalid_argument("lstm bias size mismatch");
  }
  const auto out = static_cast<std::size_t>(config.horizon) * static_cast<std::size_t>(config.output_dim);
  require_shape(w.head, H, out, "head");
  if (w.head_bias.size() != out) throw std::invalid_argument("head bias size mismatch");
  auto finite = [](std::span<const double> v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  for (const auto& layer : w.gnn) {
    for (const auto& m : layer) {
      if (!finite(m.values())) throw std::invalid_argument("weights: non-finite entry");
    }
  }
  for (const auto& l : w.lstm) {
    if (!finite(l.w_x.values()) || !finite(l.w_h.values()) || !finite(l.bias)) throw std::invalid_argument("weights: non-finite entry");
  }
  if (!finite(w.head.values()) || !finite(w.head_bias)) throw std::invalid_argument("weights: non-finite entry");
}

json to_json(const WeightSet& w) {
  json tensors = json::array();
  for (std::size_t l = 0; l < w.gnn.size(); ++l) {
    for (auto r : kRelations) {
      tensors.push_back(matrix_json("gnn." + std::to_string(l) + "." + std::string(to_string(r)),
                                    w.gnn[l][static_cast<std::size_t>(r)]));
    }
  }
  for (std::size_t l = 0; l < w.lstm.size(); ++l) {
    const std::string p = "lstm." + std::to_string(l);
    tensors.push_back(matrix_json(p + ".w_x", w.lstm[l].w_x));
    tensors.push_back(matrix_json(p + ".w_h", w.lstm[l].w_h));
    tensors.push_back(vector_json(p + ".bias", w.lstm[l].bias));
  }
  tensors.push_back(matrix_json("head", w.head));
  tensors.push_back(vector_json("head.bias", w.head_bias));
  return {{"format", "sdgnn-weights-1"}, {"tensors", tensors}};
}

WeightSet weights_from_json(const json& j) {
  if (j.value("format", "") != "sdgnn-weights-1") throw std::invalid_argument("weights: unsupported format");
  std::map<std::string, const json*> by_name;
  for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
  auto get = [&](const std::string& name) -> const json& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::invalid_argument("weights: missing tensor " + name);
    return *it->second;
  };
  WeightSet w;
  for (std::size_t l = 0; by_name.contains("gnn." + std::to_string(l) + ".connectivity"); ++l) {
    std::array<Matrix, 3> layer;
    for (auto r : kRelations) {
      layer[static_cast<std::size_t>(r)] = matrix_from(get("gnn." + std::to_string(l) + "." + std::string(to_string(r))));
    }
    w.gnn.push_back(std::move(layer));
  }
  for (std::size_t l = 0; by_name.contains("lstm." + std::to_string(l) + ".w_x"); ++l) {
    const std::string p = "lstm." + std::to_string(l);
    w.lstm.push_back({matrix_from(get(p + ".w_x")), matrix_from(get(p + ".w_h")), vector_from(get(p + ".bias"))});
  }
  w.head = matrix_from(get("head"));
  w.head_bias = vector_from(get("head.bias"));
  return w;
}

void save_weights(const WeightSet& weights, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(weights).dump() << '\n';
}

WeightSet load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return weights_from_json(json::parse(in));
}

NormalizedHin normalize(const HinSnapshot& snapshot, bool weighted_edges) {
  NormalizedHin g;
  g.size = snapshot.size();
  const auto n = static_cast<std::size_t>(g.size);
  for (auto r : kRelations) {
    const auto& adj = snapshot.adjacency(r);
    const auto ri = static_cast<std::size_t>(r);
    std::vector<double> deg(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> w{1.0};
      for (const auto& nb : adj.neighbors(static_cast<int>(i))) w.push_back(weighted_edges ? nb.weight : 1.0);
      deg[i] = sorted_sum(w);
    }
    g.self[ri].resize(n);
    g.neighbors[ri].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.self[ri][i] = 1.0 / deg[i];
      for (const auto& nb : adj.neighbors(static_cast<int>(i))) {
        double w = weighted_edges ? nb.weight : 1.0;
        g.neighbors[ri][i].push_back({nb.index, w / std::sqrt(deg[i] * deg[static_cast<std::size_t>(nb.index)])});
      }
    }
  }
  return g;
}

void layer_rows(const NormalizedHin& graph, const Matrix& h_in, const std::array<Matrix, 3>& weights,
                const ModelConfig& config, std::span<const int> rows, Matrix& h_out) {
  if (h_in.rows() != static_cast<std::size_t>(graph.size)) throw std::invalid_argument("layer input rows do not match the graph");
  for (const auto& w : weights) {
    if (w.rows() != h_in.cols()) throw std::invalid_argument("layer weight rows do not match the input width");
  }
  const std::size_t out_dim = weights[0].cols();
  if (h_out.rows() != h_in.rows() || h_out.cols() != out_dim) h_out = Matrix(h_in.rows(), out_dim);

  std::vector<double> xw(out_dim), acc(out_dim);
  std::vector<std::vector<double>> terms(out_dim);
  for (int i : rows) {
    const auto iu = static_cast<std::size_t>(i);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (auto r : kRelations) {
      const auto ri = static_cast<std::size_t>(r);
      for (auto& t : terms) t.clear();
      auto add = [&](int j, double coef) {
        row_times(h_in.row(static_cast<std::size_t>(j)), weights[ri], xw);
        for (std::size_t k = 0; k < out_dim; ++k) terms[k].push_back(coef * xw[k]);
      };
      add(i, graph.self[ri][iu]);
      for (const auto& e : graph.neighbors[ri][iu]) add(e.index, e.coef);
      for (std::size_t k = 0; k < out_dim; ++k) {
        double v = sorted_sum(terms[k]);
        if (config.activation == Activation::relu) v = std::max(0.0, v);
        acc[k] += v;
      }
    }
    auto dst = h_out.row(iu);
    for (std::size_t k = 0; k < out_dim; ++k) {
      dst[k] = config.aggregation == RelationAggregation::mean ? acc[k] / 3.0 : acc[k];
    }
  }
}

Matrix hetgnn_layer(const NormalizedHin& graph, const Matrix& h_in, const std::array<Matrix, 3>& weights,
                    const ModelConfig& config) {
  std::vector<int> rows(static_cast<std::size_t>(graph.size));
  for (int i = 0; i < graph.size; ++i) rows[static_cast<std::size_t>(i)] = i;
  Matrix out;
  layer_rows(graph, h_in, weights, config, rows, out);
  return out;
}

Matrix gnn_embed(const NormalizedHin& graph, const Matrix& features, const WeightSet& weights,
                 const ModelConfig& config) {
  Matrix h = features;
  for (const auto& layer : weights.gnn) h = hetgnn_layer(graph, h, layer, config);
  return h;
}

std::vector<double> local_embedding(const NormalizedHin& graph, const Matrix& features, const WeightSet& weights,
                                    const ModelConfig& config, int root) {
  const int L = static_cast<int>(weights.gnn.size());
  std::vector<int> dist(static_cast<std::size_t>(graph.size), -1);
  std::deque<int> queue{root};
  dist[static_cast<std::size_t>(root)] = 0;
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    if (dist[static_cast<std::size_t>(x)] == L) continue;
    std::set<int> next;
    for (const auto& rel : graph.neighbors) {
      for (const auto& e : rel[static_cast<std::size_t>(x)]) next.insert(e.index);
    }
    for (int y : next) {
      if (dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
        queue.push_back(y);
      }
    }
  }
  // Rows outside the ball stay zero and are never read.
  Matrix h(features.rows(), features.cols());
  for (int i = 0; i < graph.size; ++i) {
    if (dist[static_cast<std::size_t>(i)] >= 0) {
      auto src = features.row(static_cast<std::size_t>(i));
      std::copy(src.begin(), src.end(), h.row(static_cast<std::size_t>(i)).begin());
    }
  }
  for (int l = 1; l <= L; ++l) {
    std::vector<int> rows;
    for (int i = 0; i < graph.size; ++i) {
      int d = dist[static_cast<std::size_t>(i)];
      if (d >= 0 && d <= L - l) rows.push_back(i);
    }
    Matrix next;
    layer_rows(graph, h, weights.gnn[static_cast<std::size_t>(l) - 1], config, rows, next);
    h = std::move(next);
  }
  auto r = h.row(static_cast<std::size_t>(root));
  return {r.begin(), r.end()};
}

std::vector<double> lstm_head(std::span<const std::vector<double>> sequence, const WeightSet& weights,
                              const ModelConfig& config) {
  const auto H = static_cast<std::size_t>(config.hidden_dim);
  std::vector<std::vector<double>> seq(sequence.begin(), sequence.end());
  std::vector<double> gx(4 * H), gh(4 * H);
  for (const auto& layer : weights.lstm) {
    std::vector<double> h(H, 0.0), c(H, 0.0);
    std::vector<std::vector<double>> next;
    for (const auto& x : seq) {
      if (x.size() != H) throw std::invalid_argument("LSTM input width mismatch");
      row_times(x, layer.w_x, gx);
      row_times(h, layer.w_h, gh);
      for (std::size_t k = 0; k < H; ++k) {
        double gi = sigmoid(gx[k] + gh[k] + layer.bias[k]);
        double gf = sigmoid(gx[H + k] + gh[H + k] + layer.bias[H + k]);
        double gg = std::tanh(gx[2 * H + k] + gh[2 * H + k] + layer.bias[2 * H + k]);
        double go = sigmoid(gx[3 * H + k] + gh[3 * H + k] + layer.bias[3 * H + k]);
        c[k] = gf * c[k] + gi * gg;
        h[k] = go * std::tanh(c[k]);
      }
      next.push_back(h);
    }
    seq = std::move(next);
  }
  std::vector<double> out(weights.head.cols());
  std::vector<double> last = seq.empty() ? std::vector<double>(H, 0.0) : seq.back();
  row_times(last, weights.head, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += weights.head_bias[k];
  return out;
}

std::vector<NodeId> window_node_ids(std::span<const HinSnapshot> window) {
  if (window.empty()) throw std::invalid_argument("empty snapshot window");
  const auto& last = window.back();
  std::vector<NodeId> ids;
  for (const auto& n : last.nodes()) ids.push_back(n.id);
  std::vector<NodeId> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& s : window) {
    std::vector<NodeId> other;
    for (const auto& n : s.nodes()) other.push_back(n.id);
    std::sort(other.begin(), other.end());
    if (other != sorted) throw std::invalid_argument("snapshot window has inconsistent node sets");
  }
  return ids;
}

Tensor3 forward(std::span<const HinSnapshot> window, const ModelConfig& config, const WeightSet& weights) {
  check_shapes(weights, config);
  const auto ids = window_node_ids(window);
  const std::size_t n = ids.size();
  std::vector<std::vector<std::vector<double>>> seq(n);
  for (const auto& snap : window) {
    if (snap.feature_width() != static_cast<std::size_t>(config.input_dim) && n > 0) {
      throw std::invalid_argument("feature width " + std::to_string(snap.feature_width()) + " does not match input_dim " +
                                  std::to_string(config.input_dim));
    }
    Matrix emb = gnn_embed(normalize(snap, config.weighted_edges), snap.features(), weights, config);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = emb.row(static_cast<std::size_t>(snap.require_index(ids[i])));
      seq[i].emplace_back(row.begin(), row.end());
    }
  }
  const auto Q = static_cast<std::size_t>(config.horizon);
  const auto D = static_cast<std::size_t>(config.output_dim);
  Tensor3 out(Q, n, D);
  for (std::size_t i = 0; i < n; ++i) {
    auto y = lstm_head(seq[i], weights, config);
    for (std::size_t q = 0; q < Q; ++q) {
      for (std::size_t k = 0; k < D; ++k) out(q, i, k) = y[q * D + k];
    }
  }
  return out;
}

Metrics metrics(std::span<const double> truth, std::span<const double> prediction) {
  if (truth.size() != prediction.size()) throw std::invalid_argument("metrics: length mismatch");
  if (truth.empty()) throw std::invalid_argument("metrics: empty input");
  Metrics m;
  double se = 0.0, ae = 0.0, pe = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double e = truth[i] - prediction[i];
    se += e * e;
    ae += std::abs(e);
    if (truth[i] == 0.0) {
      ++m.mape_excluded;
    } else {
      pe += std::abs(e / truth[i]);
      ++counted;
    }
  }
  const double n = static_cast<double>(truth.size());
  m.rmse = std::sqrt(se / n);
  m.mae = ae / n;
  m.mape = counted ? 100.0 * pe / static_cast<double>(counted) : 0.0;
  return m;
}

}  // namespace sdgnn
