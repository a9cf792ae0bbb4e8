#include "distsig/spectral.hpp"

#include <fstream>
#include <map>
#include <ostream>

#include "distsig/rng.hpp"

namespace distsig {

Eigen::VectorXd normalize_signal(const Eigen::VectorXd& x) {
  if (x.size() == 0) return x;
  Eigen::VectorXd centred = x.array() - x.mean();
  const double norm = centred.norm();
  if (norm <= 1e-14 * std::max(1.0, x.cwiseAbs().maxCoeff()))
    return Eigen::VectorXd::Zero(x.size());
  return centred / norm;
}

Eigen::VectorXd label_signal(const std::vector<int>& labels) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) x[i] = labels[i];
  return x;
}

Eigen::VectorXd random_label_signal(const std::vector<int>& labels,
                                    std::uint64_t seed) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  std::vector<int> values;
  std::vector<std::size_t> cumulative;
  std::size_t running = 0;
  for (auto [label, c] : counts) {
    running += c;
    values.push_back(label);
    cumulative.push_back(running);
  }
  Rng rng(seed);
  Eigen::VectorXd r(static_cast<Eigen::Index>(labels.size()));
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const std::size_t u = static_cast<std::size_t>(rng.below(labels.size()));
    const auto k = std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                   cumulative.begin();
    r[i] = values[static_cast<std::size_t>(k)];
  }
  return r;
}

void write_spectrum_csv(std::ostream& out, const Spectrum<double>& s,
                        const Eigen::VectorXd& xhat) {
  if (xhat.size() != s.size()) throw DimensionError("spectrum csv: length mismatch");
  const auto old = out.precision(17);
  out << "index,eigenvalue,coefficient\n";
  for (int i = 0; i < s.size(); ++i)
    out << (i + 1) << ',' << s.eigenvalues[i] << ',' << xhat[i] << '\n';
  out.precision(old);
}

void write_spectrum_csv_file(const std::string& path, const Spectrum<double>& s,
                             const Eigen::VectorXd& xhat) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write_spectrum_csv(f, s, xhat);
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace distsig
