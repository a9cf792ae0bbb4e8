#include "distsig/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "distsig/dist_signal.hpp"
#include "distsig/gnn.hpp"
#include "distsig/spectral.hpp"

namespace distsig::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

const std::vector<int> kDefaultBlocks = {50, 50, 50, 50};
constexpr int kSbmFeatureDim = 64;

// ---------------------------------------------------------------------------
// Argument parsing

void add_data_flags(CLI::App* sub, Command& c, std::string& blocks) {
  sub->add_option("--dataset", c.dataset, "cora, sbm or file")
      ->check(CLI::IsMember({"cora", "sbm", "file"}));
  sub->add_option("--graph", c.graph, "graph file (dataset file)");
  sub->add_option("--features", c.features, "dense feature matrix file (dataset file)");
  sub->add_option("--labels", c.labels, "label file (dataset file)");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--blocks", blocks, "SBM block sizes, comma separated");
  sub->add_option("--p-in", c.p_in, "SBM within-block edge probability");
  sub->add_option("--p-out", c.p_out, "SBM cross-block edge probability");
  sub->add_option("--per-class", c.per_class, "training nodes per class");
  sub->add_option("--val", c.val, "validation nodes");
  sub->add_option("--test", c.test, "test nodes");
}

void add_model_flags(CLI::App* sub, Command& c) {
  sub->add_option("--variant", c.variant, "gcn, r, r1, r2, r3 or lap");
  sub->add_option("--eta", c.eta, "regularization weight");
  sub->add_option("--epochs", c.epochs, "training epochs");
}

std::vector<int> parse_blocks(const std::string& text, const std::string& usage) {
  std::vector<int> out;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ',');) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(part, &used);
      if (used != part.size() || v < 1) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--blocks: invalid block size '" + part + "'", usage);
    }
  }
  if (out.empty()) throw UsageError("--blocks: no block sizes", usage);
  return out;
}

// ---------------------------------------------------------------------------
// Data

std::string data_dir() {
  const char* env = std::getenv("DISTSIG_DATA_DIR");
  return env ? env : "data";
}

SparseRows read_dense_features(const std::string& path, int rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<Eigen::Triplet<double>> t;
  std::string line;
  int row = 0, line_no = 0, cols = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int c = 0;
    for (double v; ls >> v; ++c)
      if (v != 0) t.emplace_back(row, c, v);
    if (!ls.eof()) throw ParseError("invalid feature value in '" + path + "'", line_no);
    if (cols >= 0 && c != cols)
      throw ParseError("feature row has " + std::to_string(c) + " values, expected " +
                           std::to_string(cols),
                       line_no);
    cols = c;
    ++row;
  }
  if (row != rows)
    throw ParseError("feature file '" + path + "' has " + std::to_string(row) + " rows, expected " +
                         std::to_string(rows),
                     line_no);
  SparseRows f(rows, std::max(cols, 0));
  f.setFromTriplets(t.begin(), t.end());
  return row_normalize(std::move(f));
}

Dataset load_dataset(const Command& c, std::ostream& err) {
  Dataset d;
  if (c.dataset == "cora") {
    fs::path dir = data_dir();
    if (!fs::exists(dir / "cora.content") && fs::exists(dir / "cora" / "cora.content"))
      dir /= "cora";
    d = load_cora(dir / "cora.content", dir / "cora.cites");
  } else if (c.dataset == "sbm") {
    d = sbm_dataset(c.blocks.empty() ? kDefaultBlocks : c.blocks, c.p_in, c.p_out,
                    kSbmFeatureDim, c.seed);
  } else {
    if (c.graph.empty() || c.labels.empty())
      throw InvalidArgument("dataset file needs --graph and --labels");
    Graph g = read_graph_file(c.graph);
    auto labels = read_labels_file(c.labels, g.num_nodes());
    const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (!labels.empty() && *std::min_element(labels.begin(), labels.end()) < 0)
      throw ParseError("negative label in '" + c.labels + "'", 0);
    SparseRows f = c.features.empty() ? sbm_features(g.num_nodes(), kSbmFeatureDim, c.seed)
                                      : read_dense_features(c.features, g.num_nodes());
    d = Dataset{std::move(g), std::move(f), std::move(labels), {}, {}};
    for (int k = 0; k < classes; ++k) d.class_names.push_back(std::to_string(k));
  }
  for (const auto& w : d.warnings) err << "warning: " << w << '\n';
  return d;
}

Split split_for(const Command& c, const Dataset& d) {
  const bool cora = c.dataset == "cora";
  const int per_class = c.per_class >= 0 ? c.per_class : (cora ? 20 : 5);
  const int train = per_class * d.num_classes();
  const int val = c.val >= 0 ? c.val : (cora ? 500 : std::min(50, (d.num_nodes() - train) / 4));
  const int test = c.test >= 0 ? c.test : (cora ? 1000 : d.num_nodes() - train - val);
  return make_split(d.labels, d.num_classes(), per_class, val, test, c.seed);
}

TrainConfig train_config(const Command& c, Variant v) {
  TrainConfig cfg;
  cfg.variant = v;
  cfg.eta = c.eta;
  cfg.epochs = c.epochs;
  cfg.seed = c.seed;
  return cfg;
}

// ---------------------------------------------------------------------------
// Output

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

Json matrix_json(const Eigen::MatrixXd& x) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json graph_json(const Graph& g) {
  Json edges = Json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  return {{"n", g.num_nodes()}, {"edges", std::move(edges)}};
}

Json sweep_json(const std::vector<NonuniformityRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"epsilon", r.epsilon}, {"kind", r.kind}, {"count", r.count}});
  return out;
}

template <typename F>
void parallel_for(int count, int jobs, F&& body) {
  const int threads = std::clamp(jobs, 1, std::max(1, count));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int k = t; k < count; k += threads) body(k);
      } catch (...) {
        failures[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

// ---------------------------------------------------------------------------
// Subcommands

int run_bounds(const Command& c, std::ostream& out) {
  std::vector<Json> records(static_cast<std::size_t>(c.trials));
  std::vector<BoundReport> reports(static_cast<std::size_t>(c.trials));
  parallel_for(c.trials, c.jobs, [&](int k) {
    Rng rng(c.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k) + 1);
    auto inst = random_bound_instance(rng, c.n, c.m);
    auto r = check_bounds(inst.graph, inst.marginals);
    records[static_cast<std::size_t>(k)] = {
        {"graph", graph_json(inst.graph)},
        {"marginals", matrix_json(inst.marginals.matrix())},
        {"tg1", r.tg1},
        {"tg2", r.tg2},
        {"tg_exact", r.tg_exact},
        {"tcov", r.tcov},
        {"tghv_min", r.tghv_min},
        {"c1", r.c1},
        {"c3", r.c3},
        {"violations", r.violations}};
    reports[static_cast<std::size_t>(k)] = std::move(r);
  });
  int violations = 0, vertex_c3 = 0;
  double min_margin = 0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    violations += static_cast<int>(reports[k].violations.size());
    vertex_c3 += reports[k].vertex_c3_holds;
    min_margin = k == 0 ? reports[k].min_margin() : std::min(min_margin, reports[k].min_margin());
  }
  Json doc = {{"config", {{"trials", c.trials}, {"max_nodes", c.n}, {"max_labels", c.m},
                          {"seed", c.seed}}},
              {"instances", records},
              {"summary",
               {{"violations", violations},
                {"min_margin", min_margin},
                {"vertex_c3_pass_rate",
                 c.trials > 0 ? static_cast<double>(vertex_c3) / c.trials : 1.0}}}};
  write_text(c.out, doc.dump(2) + "\n", out);
  return violations == 0 ? kOk : kViolation;
}

int run_spectrum(const Command& c, std::ostream& out, std::ostream& err) {
  if (c.out.empty()) throw InvalidArgument("spectrum needs --out DIR");
  const Dataset d = load_dataset(c, err);
  const auto cs = main_component_spectrum(d.graph);
  std::vector<int> sub_labels;
  for (int v : cs.nodes) sub_labels.push_back(d.labels[v]);

  std::vector<std::pair<std::string, Eigen::VectorXd>> signals = {
      {"label", label_signal(sub_labels)},
      {"random", random_label_signal(sub_labels, c.seed)}};
  if (c.epochs > 0) {
    const Problem p = make_problem(d, split_for(c, d));
    const auto r = train(p, train_config(c, parse_variant(c.variant)));
    const Eigen::MatrixXd x = predict_probs(r.final, p);
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      Eigen::VectorXd col(static_cast<Eigen::Index>(cs.nodes.size()));
      for (std::size_t i = 0; i < cs.nodes.size(); ++i)
        col[static_cast<Eigen::Index>(i)] = x(cs.nodes[i], k);
      signals.emplace_back("output_" + std::to_string(k + 1), std::move(col));
    }
  }

  fs::create_directories(c.out);
  std::ostringstream summary;
  summary << "signal,hf_fraction\n";
  for (auto& [name, x] : signals) {
    if (c.normalize) x = normalize_signal(x);
    const Eigen::VectorXd xhat = gft(cs.spectrum, x);
    const double hf = xhat.squaredNorm() == 0 ? 0.0 : high_freq_fraction(xhat, 0.5);
    write_spectrum_csv_file((fs::path(c.out) / (name + ".csv")).string(), cs.spectrum, xhat);
    summary << name << ',' << hf << '\n';
  }
  write_text((fs::path(c.out) / "summary.csv").string(), summary.str(), out);
  out << summary.str();
  return kOk;
}

int run_train(const Command& c, std::ostream& out, std::ostream& err) {
  const Dataset d = load_dataset(c, err);
  const Problem p = make_problem(d, split_for(c, d));
  TrainConfig cfg = train_config(c, parse_variant(c.variant));
  if (c.tune) cfg.eta = tune_eta(p, cfg, kEtaGrid, c.jobs).eta;
  const auto r = train(p, cfg);
  const auto cs = main_component_spectrum(d.graph);
  const auto analysis = analyze_output(predict_probs(r.final, p), p.labels, p.split.test, cs,
                                       variant_name(cfg.variant), c.normalize);

  Json epochs = Json::array();
  for (const auto& e : r.epochs) epochs.push_back({{"loss", e.loss}, {"acc_val", e.val_acc}});
  Json doc = {{"config",
               {{"dataset", c.dataset},
                {"variant", variant_name(cfg.variant)},
                {"eta", cfg.eta},
                {"tuned", c.tune},
                {"hidden", cfg.hidden},
                {"epochs", cfg.epochs},
                {"learning_rate", cfg.learning_rate},
                {"weight_decay", cfg.weight_decay},
                {"dropout", cfg.dropout},
                {"seed", cfg.seed},
                {"train_nodes", p.split.train.size()},
                {"val_nodes", p.split.val.size()},
                {"test_nodes", p.split.test.size()}}},
              {"per_epoch", epochs},
              {"best_epoch", r.best_epoch},
              {"test_acc", r.test_acc},
              {"hf_fraction_per_class", analysis.hf_fraction},
              {"nonuniformity_sweep", sweep_json(analysis.nonuniformity)}};
  write_text(c.out, doc.dump(2) + "\n", out);
  return kOk;
}

int run_analyze(const Command& c, std::ostream& out, std::ostream& err) {
  const Dataset d = load_dataset(c, err);
  const Problem p = make_problem(d, split_for(c, d));
  const auto cs = main_component_spectrum(d.graph);
  std::vector<NonuniformityRow> rows;
  std::ostringstream summary;
  for (Variant v : {Variant::Gcn, parse_variant(c.variant)}) {
    TrainConfig cfg = train_config(c, v);
    if (c.tune && v != Variant::Gcn) cfg.eta = tune_eta(p, cfg, kEtaGrid, c.jobs).eta;
    const auto r = train(p, cfg);
    const auto a = analyze_output(predict_probs(r.final, p), p.labels, p.split.test, cs,
                                  variant_name(v), c.normalize);
    rows.insert(rows.end(), a.nonuniformity.begin(), a.nonuniformity.end());
    summary << variant_name(v) << ": test_acc " << r.test_acc << ", hf_fraction(class 1) "
            << a.hf_fraction.front() << '\n';
    if (v == Variant::Gcn && parse_variant(c.variant) == Variant::Gcn) break;
  }
  std::ostringstream csv;
  write_nonuniformity_csv(csv, rows);
  write_text(c.out, csv.str(), out);
  if (!c.out.empty()) out << summary.str();
  return kOk;
}

int run_gen_sbm(const Command& c, std::ostream& out) {
  if (c.out.empty()) throw InvalidArgument("gen-sbm needs --out PREFIX");
  const auto lg = sbm_generate(c.blocks.empty() ? kDefaultBlocks : c.blocks, c.p_in, c.p_out,
                               c.seed);
  write_graph_file(c.out + ".graph", lg.graph);
  write_labels_file(c.out + ".labels", lg.labels);
  out << "wrote " << c.out << ".graph (" << lg.graph.num_nodes() << " nodes, "
      << lg.graph.num_edges() << " edges) and " << c.out << ".labels\n";
  return kOk;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  Command c;
  std::string blocks;
  bool no_normalize = false;
  CLI::App app{"Distributional graph signals: spectra, bounds and regularized GCN training",
               "distsig"};
  app.require_subcommand(1);

  auto* spectrum = app.add_subcommand("spectrum", "graph Fourier spectra of label, random and output signals");
  add_data_flags(spectrum, c, blocks);
  add_model_flags(spectrum, c);
  spectrum->add_option("--out", c.out, "output directory")->required();
  spectrum->add_flag("--no-normalize", no_normalize, "skip centering and normalization");

  auto* bounds = app.add_subcommand("bounds", "verify the total-variation inequalities on random instances");
  bounds->add_option("--n", c.n, "maximum node count (2..6)")->check(CLI::Range(2, 6));
  bounds->add_option("--m", c.m, "maximum label count (2..6)")->check(CLI::Range(2, 6));
  bounds->add_option("--trials", c.trials, "number of instances")->check(CLI::NonNegativeNumber);
  bounds->add_option("--seed", c.seed, "random seed");
  bounds->add_option("--out", c.out, "JSON report path (default stdout)");
  bounds->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "train a GCN variant and write metrics JSON");
  auto* analyze = app.add_subcommand("analyze", "non-uniformity sweep of GCN against a variant");
  for (auto* sub : {train_cmd, analyze}) {
    add_data_flags(sub, c, blocks);
    add_model_flags(sub, c);
    sub->add_option("--out", c.out, "output path (default stdout)");
    sub->add_flag("--tune", c.tune, "choose eta on the validation set");
    sub->add_option("--jobs", c.jobs, "worker threads for tuning")->check(CLI::PositiveNumber);
    sub->add_flag("--no-normalize", no_normalize, "skip centering and normalization");
  }

  auto* gen = app.add_subcommand("gen-sbm", "write a stochastic block model graph and labels");
  gen->add_option("--blocks", blocks, "block sizes, comma separated");
  gen->add_option("--p-in", c.p_in, "within-block edge probability");
  gen->add_option("--p-out", c.p_out, "cross-block edge probability");
  gen->add_option("--seed", c.seed, "random seed");
  gen->add_option("--out", c.out, "output prefix")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw UsageError("", app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what(), app.help());
  }

  if (spectrum->parsed()) c.sub = Subcommand::Spectrum;
  else if (bounds->parsed()) c.sub = Subcommand::Bounds;
  else if (train_cmd->parsed()) c.sub = Subcommand::Train;
  else if (analyze->parsed()) c.sub = Subcommand::Analyze;
  else c.sub = Subcommand::GenSbm;

  c.normalize = !no_normalize;
  if (!blocks.empty()) c.blocks = parse_blocks(blocks, app.help());
  try {
    parse_variant(c.variant);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--variant: ") + e.what(), app.help());
  }
  if (c.eta < 0) throw UsageError("--eta must be >= 0", app.help());
  if (c.epochs < 0) throw UsageError("--epochs must be >= 0", app.help());
  return c;
}

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    switch (cmd.sub) {
      case Subcommand::Bounds: return run_bounds(cmd, out);
      case Subcommand::Spectrum: return run_spectrum(cmd, out, err);
      case Subcommand::Train: return run_train(cmd, out, err);
      case Subcommand::Analyze: return run_analyze(cmd, out, err);
      case Subcommand::GenSbm: return run_gen_sbm(cmd, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const UsageError& e) {
    if (std::string(e.what()).empty()) {
      std::cout << e.usage();
      return kOk;
    }
    std::cerr << "error: " << e.what() << "\n\n" << e.usage();
    return kUsage;
  }
  return execute(cmd, std::cout, std::cerr);
}

}  // namespace distsig::cli
