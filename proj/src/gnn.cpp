#include "distsig/gnn.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "distsig/error.hpp"

namespace distsig {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(std::move(tok));
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

double parse_number(const std::string& tok, int line) {
  double v = 0;
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError("invalid feature value '" + tok + "'", line);
  return v;
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double peak = row.maxCoeff();
  return peak + std::log((row.array() - peak).exp().sum());
}

double masked_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                            const std::vector<int>& nodes) {
  if (nodes.empty()) return 0;
  double ce = 0;
  for (int i : nodes) ce += log_sum_exp(logits.row(i)) - logits(i, labels[i]);
  return ce / static_cast<double>(nodes.size());
}

Eigen::MatrixXd one_hot(const std::vector<int>& classes, int m) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), m);
  for (std::size_t i = 0; i < classes.size(); ++i) x(static_cast<Eigen::Index>(i), classes[i]) = 1;
  return x;
}

double edge_energy(const Graph& g, const Eigen::MatrixXd& x) {
  double e = 0;
  for (auto [u, v] : g.edges()) e += (x.row(u) - x.row(v)).squaredNorm();
  return e;
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int t = 0;
  GcnParams m, v;

  Adam(const GcnParams& shape, double learning_rate) : lr(learning_rate) {
    m.w1 = Eigen::MatrixXd::Zero(shape.w1.rows(), shape.w1.cols());
    m.w2 = Eigen::MatrixXd::Zero(shape.w2.rows(), shape.w2.cols());
    v = m;
  }

  void step(GcnParams& p, const GcnParams& g) {
    ++t;
    const double scale =
        lr * std::sqrt(1 - std::pow(beta2, t)) / (1 - std::pow(beta1, t));
    update(p.w1, g.w1, m.w1, v.w1, scale);
    update(p.w2, g.w2, m.w2, v.w2, scale);
  }

  void update(Eigen::MatrixXd& w, const Eigen::MatrixXd& g, Eigen::MatrixXd& m1,
              Eigen::MatrixXd& m2, double scale) const {
    m1 = beta1 * m1 + (1 - beta1) * g;
    m2 = beta2 * m2 + (1 - beta2) * g.cwiseProduct(g);
    w.array() -= scale * m1.array() / (m2.array().sqrt() + eps);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Data

SparseRows row_normalize(SparseRows features) {
  for (Eigen::Index i = 0; i < features.outerSize(); ++i) {
    double sum = 0;
    for (SparseRows::InnerIterator it(features, i); it; ++it) sum += it.value();
    if (sum == 0) continue;
    for (SparseRows::InnerIterator it(features, i); it; ++it) it.valueRef() /= sum;
  }
  return features;
}

Dataset load_cora(std::istream& content, std::istream& cites, int feature_dim) {
  if (feature_dim < 1) throw InvalidArgument("feature dimension must be positive");
  std::vector<std::string> ids, classes;
  std::unordered_map<std::string, int> index;
  std::vector<Eigen::Triplet<double>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(content, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto tok = split_ws(line);
    const int found = static_cast<int>(tok.size()) - 2;
    if (found != feature_dim)
      throw ParseError("expected " + std::to_string(feature_dim) + " features, found " +
                           std::to_string(std::max(found, 0)),
                       line_no);
    const int node = static_cast<int>(ids.size());
    if (!index.emplace(tok.front(), node).second)
      throw ParseError("duplicate paper id " + tok.front(), line_no);
    for (int k = 0; k < feature_dim; ++k) {
      const double v = parse_number(tok[k + 1], line_no);
      if (v != 0) entries.emplace_back(node, k, v);
    }
    ids.push_back(tok.front());
    classes.push_back(tok.back());
  }
  if (ids.empty()) throw ParseError("content file has no nodes", line_no);

  std::set<Edge> edges;
  int self_citations = 0;
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto tok = split_ws(line);
    if (tok.size() != 2) throw ParseError("expected '<cited> <citing>'", line_no);
    int ends[2];
    for (int k = 0; k < 2; ++k) {
      auto it = index.find(tok[k]);
      if (it == index.end()) throw ParseError("unknown paper id " + tok[k], line_no);
      ends[k] = it->second;
    }
    if (ends[0] == ends[1]) {
      ++self_citations;
      continue;
    }
    edges.insert({std::min(ends[0], ends[1]), std::max(ends[0], ends[1])});
  }

  Dataset d{build_graph(static_cast<int>(ids.size()), {edges.begin(), edges.end()}),
            SparseRows(static_cast<Eigen::Index>(ids.size()), feature_dim),
            {},
            {},
            {}};
  d.features.setFromTriplets(entries.begin(), entries.end());
  d.features = row_normalize(std::move(d.features));
  std::set<std::string> names(classes.begin(), classes.end());
  d.class_names.assign(names.begin(), names.end());
  for (const auto& c : classes)
    d.labels.push_back(static_cast<int>(
        std::lower_bound(d.class_names.begin(), d.class_names.end(), c) -
        d.class_names.begin()));
  if (edges.empty()) d.warnings.push_back("citation file has no edges; graph is edgeless");
  if (self_citations > 0)
    d.warnings.push_back("dropped " + std::to_string(self_citations) + " self-citations");
  return d;
}

Dataset load_cora(const std::filesystem::path& content_path,
                  const std::filesystem::path& cites_path, int feature_dim) {
  std::ifstream content(content_path), cites(cites_path);
  if (!content) throw IoError("cannot open " + content_path.string());
  if (!cites) throw IoError("cannot open " + cites_path.string());
  try {
    return load_cora(content, cites, feature_dim);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " in " + content_path.filename().string() +
                         "/" + cites_path.filename().string(),
                     e.line());
  }
}

SparseRows sbm_features(int num_nodes, int dim, std::uint64_t seed) {
  if (dim < 1) throw InvalidArgument("feature dimension must be positive");
  std::vector<int> perm(num_nodes);
  for (int i = 0; i < num_nodes; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < num_nodes; ++i) t.emplace_back(i, perm[i] % dim, 1.0);
  SparseRows f(num_nodes, dim);
  f.setFromTriplets(t.begin(), t.end());
  return f;
}

Dataset sbm_dataset(const std::vector<int>& block_sizes, double p_in, double p_out,
                    int feature_dim, std::uint64_t seed) {
  auto lg = sbm_generate(block_sizes, p_in, p_out, seed);
  const int n = lg.graph.num_nodes();
  Dataset d{std::move(lg.graph), sbm_features(n, feature_dim, seed ^ 0x9e3779b97f4a7c15ULL),
            std::move(lg.labels), {}, {}};
  for (std::size_t b = 0; b < block_sizes.size(); ++b)
    d.class_names.push_back("block" + std::to_string(b));
  return d;
}

Split make_split(const std::vector<int>& labels, int num_classes, int per_class, int val_size,
                 int test_size, std::uint64_t seed) {
  if (per_class < 0 || val_size < 0 || test_size < 0)
    throw InvalidArgument("split sizes must be nonnegative");
  std::vector<int> available(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw InvalidArgument("label out of range");
    ++available[y];
  }
  for (int c = 0; c < num_classes; ++c)
    if (available[c] < per_class)
      throw InvalidArgument("insufficient nodes: class " + std::to_string(c) + " has " +
                            std::to_string(available[c]) + ", need " +
                            std::to_string(per_class));
  std::vector<int> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);

  Split s;
  s.seed = seed;
  std::vector<int> taken(num_classes, 0), rest;
  for (int i : order) {
    if (taken[labels[i]] < per_class) {
      ++taken[labels[i]];
      s.train.push_back(i);
    } else {
      rest.push_back(i);
    }
  }
  if (static_cast<int>(rest.size()) < val_size + test_size)
    throw InvalidArgument("insufficient nodes: " + std::to_string(rest.size()) +
                          " left for validation and test");
  s.val.assign(rest.begin(), rest.begin() + val_size);
  s.test.assign(rest.begin() + val_size, rest.begin() + val_size + test_size);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------
// Model

Variant parse_variant(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static const std::map<std::string, Variant> table = {
      {"gcn", Variant::Gcn}, {"r", Variant::R},   {"r1", Variant::R1},
      {"r2", Variant::R2},   {"r3", Variant::R3}, {"lap", Variant::Lap}};
  auto it = table.find(lower);
  if (it == table.end()) throw InvalidArgument("unknown variant '" + name + "'");
  return it->second;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Gcn: return "gcn";
    case Variant::R: return "r";
    case Variant::R1: return "r1";
    case Variant::R2: return "r2";
    case Variant::R3: return "r3";
    case Variant::Lap: return "lap";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (!(eta >= 0) || !std::isfinite(eta)) throw InvalidArgument("eta must be >= 0");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (hidden < 1) throw InvalidArgument("hidden size must be >= 1");
  if (!(learning_rate > 0)) throw InvalidArgument("learning rate must be > 0");
  if (!(weight_decay >= 0)) throw InvalidArgument("weight decay must be >= 0");
  if (!(dropout >= 0 && dropout < 1)) throw InvalidArgument("dropout must lie in [0,1)");
}

GcnParams init_params(int features, int hidden, int classes, Rng& rng) {
  auto glorot = [&](int rows, int cols) {
    const double r = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd w(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) w(i, j) = rng.uniform(-r, r);
    return w;
  };
  GcnParams p;
  p.w1 = glorot(features, hidden);
  p.w2 = glorot(hidden, classes);
  return p;
}

Problem make_problem(const Dataset& data, Split split) {
  const int n = data.num_nodes();
  if (static_cast<int>(data.labels.size()) != n || data.features.rows() != n)
    throw DimensionError("dataset labels/features do not match node count");
  for (const auto* set : {&split.train, &split.val, &split.test})
    for (int i : *set)
      if (i < 0 || i >= n) throw InvalidArgument("split index out of range");
  return Problem{data.graph,
                 sparse_normalized_adjacency(data.graph),
                 data.features,
                 data.labels,
                 data.num_classes(),
                 std::move(split),
                 default_weight_diag(data.graph)};
}

ForwardResult gcn_forward(const GcnParams& params, const Eigen::SparseMatrix<double>& a_hat,
                          const SparseRows& features, double dropout, Rng* rng) {
  const Eigen::Index n = a_hat.rows();
  if (a_hat.cols() != n || features.rows() != n || params.w1.rows() != features.cols() ||
      params.w2.rows() != params.w1.cols())
    throw DimensionError("gcn_forward: shape mismatch");
  const bool drop = rng != nullptr && dropout > 0;
  const double keep = 1.0 - dropout;

  ForwardResult r;
  r.cache.input = features;
  if (drop) {
    for (Eigen::Index i = 0; i < r.cache.input.outerSize(); ++i)
      for (SparseRows::InnerIterator it(r.cache.input, i); it; ++it)
        it.valueRef() = rng->bernoulli(keep) ? it.value() / keep : 0.0;
    r.cache.input.prune(0.0);
  }
  const Eigen::MatrixXd z1 = r.cache.input * params.w1;
  r.cache.pre1 = a_hat * z1;
  r.cache.hidden = r.cache.pre1.cwiseMax(0.0);
  if (drop) {
    r.cache.drop_mask.resize(r.cache.hidden.rows(), r.cache.hidden.cols());
    for (Eigen::Index i = 0; i < r.cache.hidden.rows(); ++i)
      for (Eigen::Index j = 0; j < r.cache.hidden.cols(); ++j)
        r.cache.drop_mask(i, j) = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    r.cache.hidden.array() *= r.cache.drop_mask.array();
  }
  const Eigen::MatrixXd z2 = r.cache.hidden * params.w2;
  r.logits = a_hat * z2;
  if (!r.logits.allFinite()) throw NumericError("gcn_forward: non-finite activations");
  r.probs = softmax_rows(r.logits).matrix();
  return r;
}

double variant_regularizer(Variant v, const Problem& p, const Eigen::MatrixXd& logits,
                           const Eigen::MatrixXd& probs) {
  switch (v) {
    case Variant::Gcn: return 0.0;
    case Variant::R: return loss_components(probs, p.graph, p.weights).l0;
    case Variant::R1: return edge_energy(p.graph, probs);
    case Variant::R2: return p.weights.values().dot(probs.rowwise().squaredNorm());
    case Variant::R3: return edge_energy(p.graph, logits);
    case Variant::Lap:
      return loss_components(one_hot(predict(probs), p.num_classes), p.graph, p.weights).l0;
  }
  return 0.0;
}

double regularizer_normalizer(const Problem& p) {
  return std::max(1.0, 2.0 * static_cast<double>(p.graph.num_edges()));
}

Objective objective(const GcnParams& params, const Problem& p, const TrainConfig& cfg,
                    Rng* rng) {
  Objective o;
  o.forward = gcn_forward(params, p.a_hat, p.features, cfg.dropout, rng);
  const Eigen::MatrixXd& x = o.forward.probs;
  const Eigen::MatrixXd& logits = o.forward.logits;

  o.cross_entropy = masked_cross_entropy(logits, p.labels, p.split.train);
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  if (!p.split.train.empty()) {
    const double inv = 1.0 / static_cast<double>(p.split.train.size());
    for (int i : p.split.train) {
      d_logits.row(i) = x.row(i) * inv;
      d_logits(i, p.labels[i]) -= inv;
    }
  }

  o.regularizer = variant_regularizer(cfg.variant, p, logits, x);
  const double scale = cfg.eta / regularizer_normalizer(p);
  if (scale != 0) {
    switch (cfg.variant) {
      case Variant::R:
        d_logits += softmax_rows_backward(x, scale * grad_loss0(x, p.graph, p.weights));
        break;
      case Variant::R1:
        d_logits += softmax_rows_backward(x, scale * grad_loss1(x, p.graph));
        break;
      case Variant::R2:
        d_logits += softmax_rows_backward(x, scale * grad_loss2(x, p.weights));
        break;
      case Variant::R3: d_logits += scale * grad_loss1(logits, p.graph); break;
      case Variant::Gcn:
      case Variant::Lap: break;
    }
  }
  const bool penalized = cfg.variant != Variant::Gcn && cfg.variant != Variant::Lap;
  o.decay = 0.5 * cfg.weight_decay * params.w1.squaredNorm();
  o.loss = o.cross_entropy + o.decay + (penalized ? scale * o.regularizer : 0.0);

  const auto& c = o.forward.cache;
  const Eigen::MatrixXd d_z2 = p.a_hat * d_logits;
  o.grad.w2 = c.hidden.transpose() * d_z2;
  Eigen::MatrixXd d_hidden = d_z2 * params.w2.transpose();
  if (c.drop_mask.size() > 0) d_hidden.array() *= c.drop_mask.array();
  d_hidden.array() *= (c.pre1.array() > 0.0).cast<double>();
  const Eigen::MatrixXd d_z1 = p.a_hat * d_hidden;
  o.grad.w1 = c.input.transpose() * d_z1 + cfg.weight_decay * params.w1;
  return o;
}

std::vector<int> predict(const Eigen::MatrixXd& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < probs.cols(); ++j)
      if (probs(i, j) > probs(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                const std::vector<int>& nodes) {
  if (nodes.empty()) return 0.0;
  int hits = 0;
  for (int i : nodes) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

Eigen::MatrixXd predict_probs(const GcnParams& params, const Problem& p) {
  return gcn_forward(params, p.a_hat, p.features).probs;
}

TrainResult train(const Problem& p, const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  GcnParams params = init_params(static_cast<int>(p.features.cols()), cfg.hidden,
                                 p.num_classes, rng);
  Adam adam(params, cfg.learning_rate);
  TrainResult result;
  double best_val = -1;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec{};
    try {
      Objective o = objective(params, p, cfg, &rng);
      if (!std::isfinite(o.loss) || !o.grad.w1.allFinite() || !o.grad.w2.allFinite())
        throw NumericError("non-finite loss");
      rec.loss = o.loss;
      rec.regularizer = o.regularizer;
      rec.train_acc = accuracy(predict(o.forward.probs), p.labels, p.split.train);
      adam.step(params, o.grad);

      const ForwardResult eval = gcn_forward(params, p.a_hat, p.features);
      rec.val_loss = masked_cross_entropy(eval.logits, p.labels, p.split.val);
      rec.val_acc = accuracy(predict(eval.probs), p.labels, p.split.val);
    } catch (const NumericError&) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    result.epochs.push_back(rec);
    if (rec.val_acc > best_val) {
      best_val = rec.val_acc;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  result.final = params;
  result.test_acc = accuracy(predict(predict_probs(result.best, p)), p.labels, p.split.test);
  return result;
}

ComponentSpectrum main_component_spectrum(const Graph& g) {
  ComponentSpectrum cs;
  const Graph sub = g.main_component(&cs.nodes);
  cs.spectrum = eig_sym(laplacian(sub));
  return cs;
}

OutputAnalysis analyze_output(const Eigen::MatrixXd& probs, const std::vector<int>& labels,
                              const std::vector<int>& nodes, const ComponentSpectrum& spec,
                              const std::string& model_tag, bool normalize, double cut) {
  OutputAnalysis a;
  a.accuracy = accuracy(predict(probs), labels, nodes);
  const auto k = static_cast<Eigen::Index>(spec.nodes.size());
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    Eigen::VectorXd x(k);
    for (Eigen::Index i = 0; i < k; ++i) x[i] = probs(spec.nodes[i], c);
    if (normalize) x = normalize_signal(x);
    a.hf_fraction.push_back(x.squaredNorm() == 0 ? 0.0
                                                 : high_freq_fraction(gft(spec.spectrum, x), cut));
  }
  a.nonuniformity = nonuniformity_sweep(probs, model_tag);
  return a;
}

TuneResult tune_eta(const Problem& p, const TrainConfig& cfg, const std::vector<double>& grid,
                    int jobs) {
  if (grid.empty()) throw InvalidArgument("empty eta grid");
  std::vector<double> val(grid.size());
  std::vector<std::exception_ptr> failures(grid.size());
  auto work = [&](std::size_t k) {
    try {
      TrainConfig c = cfg;
      c.eta = grid[k];
      const auto r = train(p, c);
      val[k] = r.epochs[r.best_epoch - 1].val_acc;
    } catch (...) {
      failures[k] = std::current_exception();
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, grid.size()); ++t)
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < grid.size(); k += threads) work(k);
    });
  for (auto& th : pool) th.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  TuneResult best{grid.front(), -1};
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (val[k] > best.val_acc) best = {grid[k], val[k]};
  return best;
}

}  // namespace distsig
