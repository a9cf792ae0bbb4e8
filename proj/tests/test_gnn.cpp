#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "distsig/error.hpp"
#include "distsig/gnn.hpp"
#include "oracles.hpp"

using namespace distsig;

namespace {

const char* kContent =
    "31336\t0\t1\t1\tNeural_Networks\n"
    "1061127\t1\t0\t0\tRule_Learning\n"
    "1106406\t0\t0\t0\tNeural_Networks\n"
    "13195\t1\t1\t1\tCase_Based\n";

Dataset tiny_cora(const std::string& cites) {
  std::istringstream content(kContent), c(cites);
  return load_cora(content, c, 3);
}

// 6-node toy instance with random features.
Problem toy_problem(std::uint64_t seed) {
  Rng rng(seed);
  auto g = build_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 4; ++k)
      if (rng.bernoulli(0.6)) t.emplace_back(i, k, rng.uniform(0.1, 1.0));
  SparseRows f(6, 4);
  f.setFromTriplets(t.begin(), t.end());
  Dataset d{g, row_normalize(f), {0, 1, 2, 0, 1, 2}, {"a", "b", "c"}, {}};
  Split s{{0, 1, 2}, {3}, {4, 5}, 0};
  return make_problem(d, s);
}

Problem sbm_problem(const std::vector<int>& blocks, double p_in, double p_out,
                    std::uint64_t seed, int per_class, int val, int test) {
  auto d = sbm_dataset(blocks, p_in, p_out, 64, seed);
  return make_problem(d, make_split(d.labels, d.num_classes(), per_class, val, test, seed + 1));
}

}  // namespace

TEST_CASE("load_cora") {
  auto d = tiny_cora("31336 1061127\n1061127 31336\n13195 1106406\n13195 13195\n");
  CHECK(d.num_nodes() == 4);
  CHECK(d.feature_dim() == 3);
  CHECK(d.num_classes() == 3);
  CHECK(d.class_names == std::vector<std::string>{"Case_Based", "Neural_Networks", "Rule_Learning"});
  CHECK(d.labels == std::vector<int>{1, 2, 1, 0});
  CHECK(d.graph.edges() == std::vector<Edge>{{0, 1}, {2, 3}});
  CHECK(d.warnings.size() == 1);  // self-citation
  Eigen::MatrixXd f(d.features);
  CHECK(f.row(0).sum() == doctest::Approx(1.0));
  CHECK(f(3, 2) == doctest::Approx(1.0 / 3));
  CHECK(f.row(2).isZero());

  auto empty = tiny_cora("");
  CHECK(empty.graph.num_edges() == 0);
  CHECK(empty.warnings.size() == 1);

  try {
    tiny_cora("31336 999\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream bad_content("1 0 1 1 A\n2 0 1 B\n"), cites("");
  try {
    load_cora(bad_content, cites, 3);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream dup("1 0 1 1 A\n1 0 1 0 B\n"), none("");
  CHECK_THROWS_AS(load_cora(dup, none, 3), ParseError);
  CHECK_THROWS_AS(load_cora(std::filesystem::path("/nonexistent/cora.content"),
                            std::filesystem::path("/nonexistent/cora.cites")),
                  IoError);
}

TEST_CASE("make_split") {
  std::vector<int> labels;
  for (int i = 0; i < 70; ++i) labels.push_back(i % 7);
  auto s = make_split(labels, 7, 2, 20, 30, 5);
  CHECK(s.train.size() == 14);
  CHECK(s.val.size() == 20);
  CHECK(s.test.size() == 30);
  std::vector<int> per(7, 0);
  for (int i : s.train) ++per[labels[i]];
  CHECK(std::all_of(per.begin(), per.end(), [](int c) { return c == 2; }));
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 64);

  auto again = make_split(labels, 7, 2, 20, 30, 5);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK(make_split(labels, 7, 2, 20, 30, 6).train != s.train);

  CHECK_THROWS_AS(make_split(labels, 7, 11, 0, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_split(labels, 7, 2, 40, 30, 1), InvalidArgument);
}

TEST_CASE("variant names") {
  for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
  CHECK(parse_variant("R") == Variant::R);
  CHECK_THROWS_AS(parse_variant("r4"), InvalidArgument);
}

TEST_CASE("gcn_forward") {
  auto p = toy_problem(1);
  GcnParams zero{Eigen::MatrixXd::Zero(4, 5), Eigen::MatrixXd::Zero(5, 3)};
  auto r = gcn_forward(zero, p.a_hat, p.features);
  CHECK(r.logits.isZero());
  CHECK((r.probs.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);

  Eigen::SparseMatrix<double> one(1, 1);
  one.insert(0, 0) = 1;
  SparseRows f(1, 1);
  f.insert(0, 0) = 1;
  auto single = gcn_forward({Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)}, one, f);
  CHECK(single.logits(0, 0) == 1.0);

  CHECK_THROWS_AS(gcn_forward({Eigen::MatrixXd::Zero(3, 5), zero.w2}, p.a_hat, p.features),
                  DimensionError);
}

TEST_CASE("gcn_forward is permutation equivariant") {
  auto p = toy_problem(2);
  Rng rng(3);
  auto params = init_params(4, 5, 3, rng);
  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};  // new node k is old perm[k]
  std::vector<int> inverse(6);
  for (int k = 0; k < 6; ++k) inverse[perm[k]] = k;
  std::vector<Edge> edges;
  for (auto [u, v] : p.graph.edges()) edges.emplace_back(inverse[u], inverse[v]);
  auto g2 = build_graph(6, edges);
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(6);
  for (int k = 0; k < 6; ++k) pm.indices()[k] = perm[k];
  SparseRows f2 = pm.transpose() * p.features;
  auto a = gcn_forward(params, p.a_hat, p.features);
  auto b = gcn_forward(params, sparse_normalized_adjacency(g2), f2);
  for (int k = 0; k < 6; ++k)
    CHECK((b.logits.row(k) - a.logits.row(perm[k])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout is seeded and inverted") {
  auto p = toy_problem(4);
  Rng init(5);
  auto params = init_params(4, 5, 3, init);
  Rng r1(9), r2(9);
  auto a = gcn_forward(params, p.a_hat, p.features, 0.5, &r1);
  auto b = gcn_forward(params, p.a_hat, p.features, 0.5, &r2);
  CHECK(a.logits == b.logits);
  for (Eigen::Index i = 0; i < a.cache.drop_mask.size(); ++i) {
    const double v = a.cache.drop_mask.data()[i];
    CHECK((v == 0.0 || v == 2.0));
  }
}

TEST_CASE("full-model gradient matches finite differences") {
  for (Variant v : {Variant::Gcn, Variant::R, Variant::R1, Variant::R2, Variant::R3, Variant::Lap}) {
    auto p = toy_problem(7);
    Rng rng(11);
    auto params = init_params(4, 5, 3, rng);
    TrainConfig cfg;
    cfg.variant = v;
    cfg.eta = 0.8;
    auto o = objective(params, p, cfg);
    auto f1 = [&](const Eigen::MatrixXd& w) { return objective({w, params.w2}, p, cfg).loss; };
    auto f2 = [&](const Eigen::MatrixXd& w) { return objective({params.w1, w}, p, cfg).loss; };
    CAPTURE(variant_name(v));
    CHECK(oracle::relative_error(o.grad.w1, oracle::finite_difference(f1, params.w1)) < 1e-4);
    CHECK(oracle::relative_error(o.grad.w2, oracle::finite_difference(f2, params.w2)) < 1e-4);
  }
}

TEST_CASE("variant regularizers") {
  auto p = toy_problem(8);
  Rng rng(12);
  auto params = init_params(4, 5, 3, rng);
  TrainConfig cfg;
  cfg.variant = Variant::R;
  auto o = objective(params, p, cfg);
  auto l = loss_components(o.forward.probs, p.graph, default_weight_diag(p.graph));
  CHECK(std::abs(o.regularizer - (l.l1 + l.l2)) < 1e-9);
  CHECK(variant_regularizer(Variant::R1, p, o.forward.logits, o.forward.probs) ==
        doctest::Approx(l.l1));
  CHECK(variant_regularizer(Variant::R2, p, o.forward.logits, o.forward.probs) ==
        doctest::Approx(l.l2));
  CHECK(variant_regularizer(Variant::R3, p, o.forward.logits, o.forward.probs) ==
        doctest::Approx((o.forward.logits.transpose() * laplacian(p.graph) * o.forward.logits)
                            .trace()));
  CHECK(variant_regularizer(Variant::Gcn, p, o.forward.logits, o.forward.probs) == 0);
}

TEST_CASE("training determinism and eta = 0") {
  auto p = sbm_problem({20, 20}, 0.3, 0.02, 3, 3, 10, 20);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 5;
  cfg.variant = Variant::R;
  auto a = train(p, cfg);
  auto b = train(p, cfg);
  REQUIRE(a.epochs.size() == 40);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].loss == b.epochs[e].loss);
    CHECK(a.epochs[e].val_acc == b.epochs[e].val_acc);
  }
  CHECK(a.final.w1 == b.final.w1);
  CHECK(a.test_acc == b.test_acc);

  cfg.eta = 0;
  auto r0 = train(p, cfg);
  cfg.variant = Variant::Gcn;
  auto gcn = train(p, cfg);
  for (std::size_t e = 0; e < gcn.epochs.size(); ++e) {
    CHECK(r0.epochs[e].loss == gcn.epochs[e].loss);
    CHECK(r0.epochs[e].val_acc == gcn.epochs[e].val_acc);
  }
  CHECK(r0.final.w1 == gcn.final.w1);
  CHECK(r0.final.w2 == gcn.final.w2);
}

TEST_CASE("training reduces the loss for every variant") {
  auto p = sbm_problem({50, 50, 50, 50}, 0.1, 0.01, 21, 5, 50, 130);
  for (Variant v : kAllVariants) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.seed = 2;
    auto r = train(p, cfg);
    CAPTURE(variant_name(v));
    CHECK(r.epochs.back().loss < r.epochs.front().loss);
    CHECK(r.best_epoch >= 1);
    CHECK(r.test_acc >= 0);
    CHECK(r.test_acc <= 1);
  }
}

TEST_CASE("two-block SBM is learned") {
  auto p = sbm_problem({100, 100}, 0.2, 0.01, 31, 5, 50, 140);
  for (Variant v : {Variant::Gcn, Variant::R}) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.seed = 1;
    CAPTURE(variant_name(v));
    CHECK(train(p, cfg).test_acc > 0.9);
  }
}

TEST_CASE("divergence reports the epoch") {
  auto p = toy_problem(9);
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.dropout = 0;
  CHECK_THROWS_WITH_AS(train(p, cfg), doctest::Contains("training diverged at epoch"),
                       NumericError);
  cfg.learning_rate = 0.01;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(p, cfg), InvalidArgument);
}

TEST_CASE("predict and accuracy") {
  Eigen::MatrixXd x(3, 3);
  x << 0.2, 0.5, 0.3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 1;
  CHECK(predict(x) == std::vector<int>{1, 0, 2});
  CHECK(accuracy({1, 0, 2}, {1, 0, 2}, {0, 1, 2}) == 1.0);
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 3, 1.0 / 3);
  CHECK(accuracy(predict(uniform), {0, 1, 0, 2}, {0, 1, 2, 3}) == 0.5);
}

TEST_CASE("analyze_output") {
  auto d = sbm_dataset({10, 10}, 1.0, 0.0, 8, 4);
  // two components of equal size; the first is the main one
  auto spec = main_component_spectrum(d.graph);
  CHECK(spec.nodes.size() == 10);
  Eigen::MatrixXd perfect = Eigen::MatrixXd::Zero(20, 2);
  for (int i = 0; i < 20; ++i) perfect(i, d.labels[i]) = 1;
  std::vector<int> all(20);
  for (int i = 0; i < 20; ++i) all[i] = i;
  auto a = analyze_output(perfect, d.labels, all, spec, "gcn");
  CHECK(a.accuracy == 1.0);
  REQUIRE(a.hf_fraction.size() == 2);
  CHECK(a.hf_fraction[0] == 0);  // constant on the component
  CHECK(a.nonuniformity.size() == 2 * kNonuniformityEpsilons.size());
  CHECK(a.nonuniformity[1].count == 20);

  auto g = random_connected_graph(12, 0.3, 5);
  auto gs = main_component_spectrum(g);
  Eigen::MatrixXd rough(12, 2);
  rough.col(0) = (gs.spectrum.eigenvectors.col(11).array() * 0.1 + 0.5).matrix();
  rough.col(1) = Eigen::VectorXd::Ones(12) - rough.col(0);
  auto ra = analyze_output(rough, std::vector<int>(12, 0), {}, gs, "r");
  CHECK(ra.hf_fraction[0] == doctest::Approx(1.0));
}

TEST_CASE("tune_eta picks from the grid") {
  auto p = sbm_problem({20, 20}, 0.3, 0.02, 41, 3, 10, 20);
  TrainConfig cfg;
  cfg.epochs = 30;
  auto t = tune_eta(p, cfg);
  CHECK(std::find(kEtaGrid.begin(), kEtaGrid.end(), t.eta) != kEtaGrid.end());
  CHECK(tune_eta(p, cfg, {0.3}).eta == 0.3);
}
