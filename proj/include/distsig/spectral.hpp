#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "distsig/error.hpp"
#include "distsig/graph.hpp"

namespace distsig {

/// Eigendecomposition L = U diag(lambda) U^T of a symmetric matrix with
/// ascending eigenvalues and orthonormal eigenvector columns.
template <typename Scalar = double>
struct Spectrum {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector eigenvalues;
  Matrix eigenvectors;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

enum class EigMethod {
  Auto,         // Jacobi up to kJacobiMaxDim, tridiagonal QR above
  Jacobi,       // cyclic Jacobi rotations
  Tridiagonal,  // Eigen::SelfAdjointEigenSolver
};

inline constexpr int kJacobiMaxDim = 200;

struct EigOptions {
  EigMethod method = EigMethod::Auto;
  double tolerance = 1e-12;   // relative off-diagonal Frobenius norm
  int max_sweeps = 100;
  double symmetry_tolerance = 1e-10;
};

namespace detail {

// Sign convention: the largest-magnitude entry of each column is positive;
// near-ties (within 1e-12 relative) go to the lowest index.
template <typename Matrix>
void canonicalize_signs(Matrix& u) {
  using Scalar = typename Matrix::Scalar;
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    const Scalar peak = u.col(c).cwiseAbs().maxCoeff();
    Eigen::Index pick = 0;
    for (Eigen::Index r = 0; r < u.rows(); ++r)
      if (std::abs(u(r, c)) >= peak * Scalar(1 - 1e-12)) {
        pick = r;
        break;
      }
    if (u(pick, c) < Scalar(0)) u.col(c) = -u.col(c);
  }
}

template <typename Scalar>
void sort_ascending(Spectrum<Scalar>& s) {
  const auto n = s.eigenvalues.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return s.eigenvalues[a] < s.eigenvalues[b];
  });
  Spectrum<Scalar> sorted;
  sorted.eigenvalues.resize(n);
  sorted.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    sorted.eigenvalues[k] = s.eigenvalues[order[k]];
    sorted.eigenvectors.col(k) = s.eigenvectors.col(order[k]);
  }
  s = std::move(sorted);
}

template <typename Scalar>
Spectrum<Scalar> jacobi_eigen(
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a,
    const EigOptions& opt) {
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = a.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> v =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n);
  const Scalar scale = std::max(Scalar(1), a.norm());
  auto off_norm = [&] {
    Scalar s(0);
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += 2 * a(p, q) * a(p, q);
    return sqrt(s);
  };
  bool converged = false;
  for (int sweep = 0; sweep <= opt.max_sweeps; ++sweep) {
    if (off_norm() <= Scalar(opt.tolerance) * scale) {
      converged = true;
      break;
    }
    if (sweep == opt.max_sweeps) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Rotation angle annihilating a(p,q), small-angle root for stability.
        const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
        Scalar t = Scalar(1) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        if (theta < Scalar(0)) t = -t;
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged)
    throw NumericError("Jacobi eigensolver: no convergence after " +
                       std::to_string(opt.max_sweeps) + " sweeps");
  Spectrum<Scalar> out{a.diagonal(), std::move(v)};
  return out;
}

}  // namespace detail

/// Symmetric eigendecomposition with ascending eigenvalues and the
/// deterministic sign convention of detail::canonicalize_signs.
template <typename Derived>
Spectrum<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& m,
                                           const EigOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) throw DimensionError("eig_sym: matrix not square");
  Matrix a = m;
  if (a.size() > 0 &&
      (a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(opt.symmetry_tolerance))
    throw InvalidArgument("eig_sym: matrix not symmetric");
  a = (a + a.transpose()) / Scalar(2);

  const bool use_jacobi =
      opt.method == EigMethod::Jacobi ||
      (opt.method == EigMethod::Auto && a.rows() <= kJacobiMaxDim);
  Spectrum<Scalar> s;
  if (use_jacobi) {
    s = detail::jacobi_eigen<Scalar>(std::move(a), opt);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success)
      throw NumericError("eig_sym: tridiagonal QR did not converge");
    s.eigenvalues = solver.eigenvalues();
    s.eigenvectors = solver.eigenvectors();
  }
  detail::sort_ascending(s);
  detail::canonicalize_signs(s.eigenvectors);
  return s;
}

/// Graph Fourier transform xhat = U^T x.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gft(const Spectrum<Scalar>& s,
                                             const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != s.size()) throw DimensionError("gft: signal length mismatch");
  return s.eigenvectors.transpose() * x;
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inverse_gft(
    const Spectrum<Scalar>& s, const Eigen::MatrixBase<Derived>& xhat) {
  if (xhat.size() != s.size()) throw DimensionError("inverse_gft: length mismatch");
  return s.eigenvectors * xhat;
}

/// T_G(x) = sum over edges (x_u - x_v)^2, equal to x^T L x.
template <typename Derived>
typename Derived::Scalar total_variation(const Graph& g,
                                         const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() != g.num_nodes())
    throw DimensionError("total_variation: signal length mismatch");
  Scalar tv(0);
  for (auto [u, v] : g.edges()) {
    const Scalar d = x[u] - x[v];
    tv += d * d;
  }
  return tv;
}

/// Quadratic-form route x^T L x, kept separate so the two can be compared.
template <typename Derived>
typename Derived::Scalar total_variation_quadratic(
    const Graph& g, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() != g.num_nodes())
    throw DimensionError("total_variation: signal length mismatch");
  const auto l = laplacian<Scalar>(g);
  return x.dot(l * x);
}

/// Share of spectral energy in components with 1-based index i > cut * n.
template <typename Derived>
typename Derived::Scalar high_freq_fraction(const Eigen::MatrixBase<Derived>& xhat,
                                            double cut) {
  using Scalar = typename Derived::Scalar;
  if (!(cut > 0.0 && cut < 1.0))
    throw InvalidArgument("high_freq_fraction: cut must be in (0,1)");
  const Scalar total = xhat.squaredNorm();
  if (!(total > Scalar(0)))
    throw InvalidArgument("high_freq_fraction: zero vector");
  const auto n = xhat.size();
  Scalar high(0);
  for (Eigen::Index k = 0; k < n; ++k)
    if (static_cast<double>(k + 1) > cut * static_cast<double>(n))
      high += xhat[k] * xhat[k];
  return high / total;
}

/// Mean-centre and scale to unit l2 norm. A constant signal maps to zero.
Eigen::VectorXd normalize_signal(const Eigen::VectorXd& x);

/// Labels cast to reals.
Eigen::VectorXd label_signal(const std::vector<int>& labels);

/// Signal drawn i.i.d. per node from the empirical label distribution.
Eigen::VectorXd random_label_signal(const std::vector<int>& labels,
                                    std::uint64_t seed);

/// CSV with header "index,eigenvalue,coefficient", 1-based index.
void write_spectrum_csv(std::ostream& out, const Spectrum<double>& s,
                        const Eigen::VectorXd& xhat);
void write_spectrum_csv_file(const std::string& path, const Spectrum<double>& s,
                             const Eigen::VectorXd& xhat);

}  // namespace distsig
