// Acceptance gate: one status line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "distsig/dist_signal.hpp"
#include "distsig/gnn.hpp"
#include "distsig/regularizer.hpp"
#include "distsig/spectral.hpp"
#include "oracles.hpp"

using namespace distsig;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kLpTolerance = 1e-9;
constexpr double kMarginTolerance = 1e-9;
constexpr double kEigenTvTolerance = 1e-8;
constexpr double kGradientTolerance = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kCrossCheckTolerance = 1e-12;
constexpr int kWassersteinPairs = 1000;
constexpr int kBoundInstances = 500;
constexpr int kBoundMatrices = 1000;
constexpr int kSpectrumGraphs = 50;
constexpr int kSbmSeeds = 10;
constexpr int kSbmMinWins = 8;
constexpr int kCoraSeeds = 5;
constexpr int kCoraMinWins = 4;
constexpr double kCoraGcnLow = 0.79, kCoraGcnHigh = 0.83;
constexpr double kCoraMinGain = 0.01;
constexpr int kCoraEntries = 18956;
constexpr double kSeconds1 = 10, kSeconds2 = 120, kSecondsSbm = 120, kSecondsCora = 900;

enum class Status { Pass, Fail, Skip };

int failures = 0;

void report(const std::string& id, Status s, const std::string& what, const std::string& detail) {
  const char* tag = s == Status::Pass ? "PASS" : s == Status::Fail ? "FAIL" : "SKIP";
  if (s == Status::Fail) ++failures;
  std::printf("[%s] %-3s %s: %s\n", tag, id.c_str(), what.c_str(), detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

void wasserstein_vs_lp() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0;
  bool diagonal_exact = true;
  for (int k = 0; k < kWassersteinPairs; ++k) {
    const int m = 2 + static_cast<int>(rng.below(4));
    DiscreteDistribution mu(rng.dirichlet_flat(m)), nu(rng.dirichlet_flat(m));
    worst = std::max(worst, std::abs(wasserstein_sq(mu, nu) - coupling_lp_oracle(mu, nu)));
    const auto c = optimal_coupling(mu, nu);
    diagonal_exact = diagonal_exact && c.plan.diagonal() == mu.weights().cwiseMin(nu.weights());
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= kLpTolerance && diagonal_exact && secs < kSeconds1;
  report("1", ok ? Status::Pass : Status::Fail, "closed-form Wasserstein equals coupling LP",
         fmt("%d pairs, max |W2 - LP| = %.2e, diagonal = min exactly: %s, %.2f s",
             kWassersteinPairs, worst, diagonal_exact ? "yes" : "no", secs));
}

struct Corpus {
  std::vector<BoundInstance> instances;
  std::vector<BoundReport> reports;
  double seconds = 0;
};

Corpus bound_corpus() {
  const auto t0 = std::chrono::steady_clock::now();
  Corpus c;
  Rng rng(202);
  for (int k = 0; k < kBoundInstances; ++k) {
    auto inst = random_bound_instance(rng, 6, 3);
    c.reports.push_back(check_bounds(inst.graph, inst.marginals));
    c.instances.push_back(std::move(inst));
  }
  c.seconds = seconds_since(t0);
  return c;
}

// Edge sums of the marginal weights, evaluated directly.
std::pair<double, double> direct_tv(const BoundInstance& inst) {
  const auto& x = inst.marginals.matrix();
  double l1 = 0, l2 = 0;
  for (auto [u, v] : inst.graph.edges()) {
    l1 += (x.row(u) - x.row(v)).cwiseAbs().sum();
    l2 += (x.row(u) - x.row(v)).squaredNorm();
  }
  return {l1, l2};
}

void tree_chain(const Corpus& c) {
  double worst = 0;
  int violations = 0, trees = 0;
  bool consistent = true;
  for (std::size_t k = 0; k < c.reports.size(); ++k) {
    const auto& r = c.reports[k];
    for (int idx : {0, 5, 6}) {
      worst = std::min(worst, r.checks[idx].margin());
      violations += r.checks[idx].margin() < -kMarginTolerance;
    }
    const auto [l1, l2] = direct_tv(c.instances[k]);
    consistent = consistent && std::abs(l1 - r.tg1) < kCrossCheckTolerance &&
                 std::abs(l2 - r.tg2) < kCrossCheckTolerance;
    trees += r.tree_count;
  }
  const bool ok = violations == 0 && consistent && c.seconds < kSeconds2;
  report("2", ok ? Status::Pass : Status::Fail, "T2 <= T1 <= 2 TG <= T_{G,H,v0} for all H, v0",
         fmt("%d instances, %d spanning trees x all roots, %d violations, min margin %.2e, "
             "direct T1/T2 agree: %s, %.2f s",
             kBoundInstances, trees, violations, worst, consistent ? "yes" : "no", c.seconds));
}

void cover_chain(const Corpus& c) {
  double worst = 0;
  int violations = 0, vertex_ok = 0;
  bool c1_exact = true;
  for (std::size_t k = 0; k < c.reports.size(); ++k) {
    const auto& r = c.reports[k];
    for (int idx : {0, 1, 2, 3, 4}) {
      worst = std::min(worst, r.checks[idx].margin());
      violations += r.checks[idx].margin() < -kMarginTolerance;
    }
    const auto& g = c.instances[k].graph;
    c1_exact = c1_exact && r.c1 == g.num_nodes() - oracle::complement_clique_number(g);
    vertex_ok += r.vertex_c3_holds;
  }
  const bool ok = violations == 0 && c1_exact;
  report("3", ok ? Status::Pass : Status::Fail,
         "T2 <= T1 <= 2 min(Tc, TG) <= c1 T1 <= c1 c3 sqrt(T2), c3 = sqrt(|S||E|)",
         fmt("%d instances, %d violations, min margin %.2e, c1 matches brute force: %s; "
             "c3 = sqrt(|S| n) holds on %.1f%%",
             kBoundInstances, violations, worst, c1_exact ? "yes" : "no",
             100.0 * vertex_ok / kBoundInstances));
}

void nonuniformity_bound() {
  Rng rng(303);
  double worst = 1e300;
  for (int k = 0; k < kBoundMatrices; ++k) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const int m = 2 + static_cast<int>(rng.below(6));
    Eigen::MatrixXd x(n, m);
    for (int i = 0; i < n; ++i) x.row(i) = rng.dirichlet_flat(m).transpose();
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a[i] = -5.0 * rng.uniform();
    worst = std::min(worst, nonuniformity_bound_check(x, WeightDiag(a)).margin());
  }
  report("4", worst >= -kMarginTolerance ? Status::Pass : Status::Fail,
         "Tr(X^T D X) + C >= 2 sum a_i W(mu_i, U)^2 with one-hot/uniform sandwich",
         fmt("%d matrices, min margin %.2e", kBoundMatrices, worst));
}

void eigen_tv() {
  Rng rng(404);
  double worst = 0;
  for (int k = 0; k < kSpectrumGraphs; ++k) {
    const int n = 1 + static_cast<int>(rng.below(12));
    auto g = random_connected_graph(n, rng.uniform(), rng.next());
    auto s = eig_sym(laplacian(g));
    for (int i = 0; i < n; ++i) {
      double tv = 0;
      for (auto [u, v] : g.edges())
        tv += std::pow(s.eigenvectors(u, i) - s.eigenvectors(v, i), 2);
      worst = std::max(worst, std::abs(tv - s.eigenvalues[i]));
    }
  }
  report("5", worst <= kEigenTvTolerance ? Status::Pass : Status::Fail,
         "total variation of eigenvector u_i equals lambda_i",
         fmt("%d graphs (n <= 12), max error %.2e", kSpectrumGraphs, worst));
}

void gradients() {
  Rng rng(505);
  auto g = build_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {0, 3}});
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 5; ++k)
      if (rng.bernoulli(0.5)) t.emplace_back(i, k, rng.uniform(0.1, 1.0));
  SparseRows f(6, 5);
  f.setFromTriplets(t.begin(), t.end());
  Dataset d{g, row_normalize(f), {0, 1, 2, 1, 0, 2}, {"a", "b", "c"}, {}};
  const Problem p = make_problem(d, Split{{0, 1, 2, 3}, {4}, {5}, 0});
  const GcnParams params = init_params(5, 4, 3, rng);
  double worst = 0;
  std::string per_variant;
  for (Variant v : {Variant::R, Variant::R1, Variant::R2, Variant::R3}) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.eta = 0.7;
    const auto o = objective(params, p, cfg);
    auto f1 = [&](const Eigen::MatrixXd& w) { return objective({w, params.w2}, p, cfg).loss; };
    auto f2 = [&](const Eigen::MatrixXd& w) { return objective({params.w1, w}, p, cfg).loss; };
    const double e = std::max(
        oracle::relative_error(o.grad.w1,
                               oracle::finite_difference(f1, params.w1, kFiniteDifferenceStep)),
        oracle::relative_error(o.grad.w2,
                               oracle::finite_difference(f2, params.w2, kFiniteDifferenceStep)));
    worst = std::max(worst, e);
    per_variant += fmt(" %s %.1e", variant_name(v).c_str(), e);
  }
  report("6", worst <= kGradientTolerance ? Status::Pass : Status::Fail,
         "full-model gradient matches central finite differences",
         "6-node instance, relative error" + per_variant);
}

void sbm_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  int wins = 0;
  double gcn_sum = 0, r_sum = 0;
  for (int s = 0; s < kSbmSeeds; ++s) {
    const auto d = sbm_dataset({50, 50, 50, 50}, 0.1, 0.01, 64, 1000 + s);
    const Problem p = make_problem(d, make_split(d.labels, 4, 5, 50, 130, 2000 + s));
    TrainConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.variant = Variant::Gcn;
    const double gcn = train(p, cfg).test_acc;
    cfg.variant = Variant::R;
    const double r = train(p, cfg).test_acc;
    gcn_sum += gcn;
    r_sum += r;
    wins += r >= gcn;
  }
  const double secs = seconds_since(t0);
  const bool ok = r_sum >= gcn_sum && wins >= kSbmMinWins && secs < kSecondsSbm;
  report("7a", ok ? Status::Pass : Status::Fail, "R >= GCN on 4-block SBM",
         fmt("mean test acc GCN %.4f, R %.4f (eta 0.5), R >= GCN in %d/%d seeds, %.1f s",
             gcn_sum / kSbmSeeds, r_sum / kSbmSeeds, wins, kSbmSeeds, secs));
}

// ---------------------------------------------------------------------------
// Cora suite

std::optional<fs::path> cora_dir() {
  const char* env = std::getenv("DISTSIG_DATA_DIR");
  const fs::path root = env ? env : "data";
  for (const fs::path& dir : {root, root / "cora"})
    if (fs::exists(dir / "cora.content") && fs::exists(dir / "cora.cites")) return dir;
  return std::nullopt;
}

struct CoraRun {
  double test_acc;
  double hf_first;
  long near_uniform;
  long near_one;
  long total;
};

void cora_suite() {
  const auto dir = cora_dir();
  if (!dir) {
    const std::string why =
        "unverifiable: raw Cora files (cora.content, cora.cites) not found under "
        "$DISTSIG_DATA_DIR or ./data";
    report("7b", Status::Skip, "Cora GCN accuracy and R gain", "conditional on Cora files; " + why);
    report("7c", Status::Fail, "Cora ablation R >= R1, R2 and R3 worst", why);
    report("8", Status::Fail, "high-frequency shrinkage of output column 1 on Cora", why);
    report("9", Status::Fail, "non-uniformity counts on Cora", why);
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset d = load_cora(*dir / "cora.content", *dir / "cora.cites");
  const auto cs = main_component_spectrum(d.graph);
  const std::vector<Variant> variants = {Variant::Gcn, Variant::R, Variant::R1, Variant::R2,
                                         Variant::R3};
  std::vector<std::vector<CoraRun>> runs(variants.size());
  for (int s = 0; s < kCoraSeeds; ++s) {
    const Problem p = make_problem(d, make_split(d.labels, d.num_classes(), 20, 500, 1000, s));
    for (std::size_t v = 0; v < variants.size(); ++v) {
      TrainConfig cfg;
      cfg.variant = variants[v];
      cfg.seed = static_cast<std::uint64_t>(s);
      const auto r = train(p, cfg);
      const Eigen::MatrixXd x = predict_probs(r.final, p);
      const auto a = analyze_output(x, p.labels, p.split.test, cs, variant_name(variants[v]));
      const auto counts = nonuniformity_counts(x, 0.01, 0.01);
      runs[v].push_back({r.test_acc, a.hf_fraction.front(), counts.near_uniform,
                         counts.near_one, counts.total});
    }
  }
  const double secs = seconds_since(t0);
  auto mean_acc = [&](std::size_t v) {
    double s = 0;
    for (const auto& r : runs[v]) s += r.test_acc;
    return s / kCoraSeeds;
  };
  const double gcn = mean_acc(0), r = mean_acc(1), r1 = mean_acc(2), r2 = mean_acc(3),
               r3 = mean_acc(4);
  bool gcn_in_band = true;
  for (const auto& run : runs[0])
    gcn_in_band = gcn_in_band && run.test_acc >= kCoraGcnLow && run.test_acc <= kCoraGcnHigh;
  const bool ok_b = gcn_in_band && r - gcn >= kCoraMinGain && secs < kSecondsCora;
  report("7b", ok_b ? Status::Pass : Status::Fail, "Cora GCN accuracy and R gain",
         fmt("GCN %.4f (all seeds in [%.2f, %.2f]: %s), R %.4f, gain %+.2f points, %.0f s", gcn,
             kCoraGcnLow, kCoraGcnHigh, gcn_in_band ? "yes" : "no", r, 100 * (r - gcn), secs));
  const bool ok_c = r >= r2 && r >= r1 && r3 < std::min({r, r1, r2});
  report("7c", ok_c ? Status::Pass : Status::Fail, "Cora ablation R >= R1, R2 and R3 worst",
         fmt("mean acc R %.4f, R1 %.4f, R2 %.4f, R3 %.4f", r, r1, r2, r3));

  int hf_wins = 0, nu_wins = 0;
  bool totals = true;
  for (int s = 0; s < kCoraSeeds; ++s) {
    const auto& g = runs[0][static_cast<std::size_t>(s)];
    const auto& rr = runs[1][static_cast<std::size_t>(s)];
    hf_wins += rr.hf_first < g.hf_first;
    nu_wins += rr.near_uniform < g.near_uniform && rr.near_one > g.near_one;
    totals = totals && g.total == kCoraEntries && rr.total == kCoraEntries;
  }
  report("8", hf_wins >= kCoraMinWins ? Status::Pass : Status::Fail,
         "high-frequency shrinkage of output column 1 on Cora",
         fmt("R < GCN in %d/%d seeds", hf_wins, kCoraSeeds));
  report("9", nu_wins >= kCoraMinWins && totals ? Status::Pass : Status::Fail,
         "non-uniformity counts on Cora",
         fmt("fewer near 1/7 and more near 1 for R in %d/%d seeds, entry count %d: %s", nu_wins,
             kCoraSeeds, kCoraEntries, totals ? "yes" : "no"));
}

}  // namespace

int main() {
  wasserstein_vs_lp();
  const Corpus corpus = bound_corpus();
  tree_chain(corpus);
  cover_chain(corpus);
  nonuniformity_bound();
  eigen_tv();
  gradients();
  sbm_trend();
  cora_suite();
  std::printf("%s (%d failing)\n", failures == 0 ? "ACCEPTED" : "NOT ACCEPTED", failures);
  return failures == 0 ? 0 : 1;
}
