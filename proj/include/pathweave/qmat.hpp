#pragma once

// Dense complex matrices sized for few-qubit work (dimensions up to ~32).
// Row-major contiguous storage; all operations allocate their result. Eigen
// is used only behind eigh()/eigh_real() so callers never see Eigen types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pathweave {

using Cx = std::complex<double>;

inline constexpr double kHermTol = 1e-10;   // max |A - A^dag| accepted as Hermitian
inline constexpr double kEigFloor = 1e-12;  // eigenvalues below this count as 0

class CMat {
 public:
  CMat() = default;
  CMat(int rows, int cols) : rows_(rows), cols_(cols), a_(checked_extent(rows, cols)) {}
  CMat(int rows, int cols, std::initializer_list<Cx> vals) : CMat(rows, cols) {
    if (static_cast<int>(vals.size()) != rows * cols)
      throw std::invalid_argument("CMat: initializer size mismatch");
    std::copy(vals.begin(), vals.end(), a_.begin());
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  Cx& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
  const Cx& operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

  const std::vector<Cx>& data() const { return a_; }
  std::vector<Cx>& data() { return a_; }

 private:
  static size_t checked_extent(int rows, int cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("CMat: negative dimension");
    return static_cast<size_t>(rows) * static_cast<size_t>(cols);
  }

  int rows_ = 0, cols_ = 0;
  std::vector<Cx> a_;
};

inline CMat zeros(int rows, int cols) { return CMat(rows, cols); }

inline CMat identity(int n) {
  CMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline CMat operator+(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("CMat +: shape");
  CMat r(a.rows(), a.cols());
  for (size_t i = 0; i < r.data().size(); ++i) r.data()[i] = a.data()[i] + b.data()[i];
  return r;
}

inline CMat operator-(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("CMat -: shape");
  CMat r(a.rows(), a.cols());
  for (size_t i = 0; i < r.data().size(); ++i) r.data()[i] = a.data()[i] - b.data()[i];
  return r;
}

inline CMat operator*(Cx s, const CMat& a) {
  CMat r(a.rows(), a.cols());
  for (size_t i = 0; i < r.data().size(); ++i) r.data()[i] = s * a.data()[i];
  return r;
}

inline CMat operator*(const CMat& a, const CMat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("CMat *: shape");
  CMat r(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const Cx aik = a(i, k);
      if (aik == Cx{}) continue;
      for (int j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

inline CMat dagger(const CMat& a) {
  CMat r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = std::conj(a(i, j));
  return r;
}

inline Cx trace(const CMat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace: square required");
  Cx t{};
  for (int i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const Cx aij = a(i, j);
      if (aij == Cx{}) continue;
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return r;
}

inline double max_abs_diff(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("diff: shape");
  double m = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double frob_norm(const CMat& a) {
  double s = 0.0;
  for (const Cx& v : a.data()) s += std::norm(v);
  return std::sqrt(s);
}

inline bool is_hermitian(const CMat& a, double tol = kHermTol) {
  if (a.rows() != a.cols()) return false;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i; j < a.cols(); ++j)
      if (std::abs(a(i, j) - std::conj(a(j, i))) > tol) return false;
  return true;
}

// Symmetrize (A + A^dag)/2; rejects inputs that are not Hermitian to tol.
inline CMat hermitize(const CMat& a, double tol = kHermTol) {
  if (!is_hermitian(a, tol)) throw std::invalid_argument("hermitize: input exceeds tolerance");
  CMat r(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return r;
}

// Trace out the subsystems NOT listed in `keep`. `dims` are the tensor factor
// dimensions in row-major (leftmost = slowest) order; `keep` must be strictly
// increasing. The result orders kept factors as in the input.
inline CMat partial_trace(const CMat& rho, const std::vector<int>& dims,
                          const std::vector<int>& keep) {
  int total = 1;
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("partial_trace: bad factor dimension");
    total *= d;
  }
  if (rho.rows() != total || rho.cols() != total)
    throw std::invalid_argument("partial_trace: dims do not factor the matrix");
  for (size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] < 0 || keep[k] >= static_cast<int>(dims.size()))
      throw std::invalid_argument("partial_trace: keep index out of range");
    if (k > 0 && keep[k] <= keep[k - 1])
      throw std::invalid_argument("partial_trace: keep must be strictly increasing");
  }

  const int n = static_cast<int>(dims.size());
  std::vector<bool> kept(n, false);
  for (int k : keep) kept[k] = true;

  int keep_dim = 1, drop_dim = 1;
  for (int i = 0; i < n; ++i) (kept[i] ? keep_dim : drop_dim) *= dims[i];

  // strides of each factor inside the full index
  std::vector<int> stride(n, 1);
  for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];

  // enumerate kept and dropped multi-indices as offsets into the full index
  std::vector<int> keep_offsets(1, 0), drop_offsets(1, 0);
  for (int i = 0; i < n; ++i) {
    auto& offs = kept[i] ? keep_offsets : drop_offsets;
    std::vector<int> next;
    next.reserve(offs.size() * dims[i]);
    for (int base : offs)
      for (int v = 0; v < dims[i]; ++v) next.push_back(base + v * stride[i]);
    offs = std::move(next);
  }

  CMat out(keep_dim, keep_dim);
  for (int r = 0; r < keep_dim; ++r)
    for (int c = 0; c < keep_dim; ++c) {
      Cx acc{};
      for (int t : drop_offsets) acc += rho(keep_offsets[r] + t, keep_offsets[c] + t);
      out(r, c) = acc;
    }
  return out;
}

struct Eigh {
  std::vector<double> values;  // ascending
  CMat vectors;                // column k pairs with values[k]
};

// Hermitian eigendecomposition. Symmetrizes within kHermTol, rejects beyond.
inline Eigh eigh(const CMat& a) {
  const CMat h = hermitize(a);
  const int n = h.rows();
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = h(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigh: solver failed");
  Eigh out;
  out.values.resize(n);
  out.vectors = CMat(n, n);
  for (int i = 0; i < n; ++i) out.values[i] = solver.eigenvalues()(i);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.vectors(i, j) = solver.eigenvectors()(i, j);
  return out;
}

struct EighReal {
  std::vector<double> values;           // ascending
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Real symmetric eigendecomposition (used for quadrature nodes and the real
// part of magic-basis matrices).
inline EighReal eigh_real(const std::vector<std::vector<double>>& sym) {
  const int n = static_cast<int>(sym.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sym[i].size()) != n) throw std::invalid_argument("eigh_real: ragged");
    for (int j = 0; j < n; ++j) m(i, j) = 0.5 * (sym[i][j] + sym[j][i]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigh_real: solver failed");
  EighReal out;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) out.values[i] = solver.eigenvalues()(i);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) out.vectors[k][i] = solver.eigenvectors()(i, k);
  return out;
}

// Von Neumann entropy in nats. Requires a Hermitian matrix whose eigenvalues
// are >= -kHermTol; values in [-kHermTol, kEigFloor] contribute nothing.
inline double vn_entropy(const CMat& rho) {
  const Eigh e = eigh(rho);
  double s = 0.0;
  for (double lam : e.values) {
    if (lam < -kHermTol)
      throw std::invalid_argument("vn_entropy: negative eigenvalue " + std::to_string(lam));
    if (lam <= kEigFloor) continue;
    s -= lam * std::log(lam);
  }
  return s;
}

// tr(rho^2); for Hermitian rho this equals the squared Frobenius norm.
inline double purity(const CMat& rho) {
  if (!is_hermitian(rho)) throw std::invalid_argument("purity: non-Hermitian input");
  double s = 0.0;
  for (const Cx& v : rho.data()) s += std::norm(v);
  return s;
}

}  // namespace pathweave
