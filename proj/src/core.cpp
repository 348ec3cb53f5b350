#include "qftnmr/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qftnmr {

long dim_of(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    std::ostringstream msg;
    msg << "qubit count " << n_qubits << " outside supported range [1, " << kMaxQubits << "]";
    throw std::invalid_argument(msg.str());
  }
  return 1L << n_qubits;
}

// ---------------------------------------------------------------------------
// StateVector

StateVector StateVector::basis(int n, long index) {
  long d = dim_of(n);
  if (index < 0 || index >= d) {
    std::ostringstream msg;
    msg << "basis index " << index << " outside [0, " << d << ")";
    throw std::invalid_argument(msg.str());
  }
  StateVector psi;
  psi.n_qubits = n;
  psi.amplitudes = Vec::Zero(d);
  psi.amplitudes[index] = 1.0;
  return psi;
}

bool StateVector::is_normalized(double tol) const {
  return std::abs(norm() - 1.0) <= tol;
}

void StateVector::normalize() {
  double nrm = norm();
  if (nrm <= 0.0) throw std::invalid_argument("cannot normalize a zero state vector");
  amplitudes /= nrm;
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
  if (!psi.is_normalized(1e-10)) {
    throw std::invalid_argument("from_pure requires a normalized state vector");
  }
  DensityMatrix rho;
  rho.n_spins = psi.n_qubits;
  rho.matrix = psi.amplitudes * psi.amplitudes.adjoint();
  rho.kind = MatrixKind::physical;
  return rho;
}

DensityMatrix DensityMatrix::deviation_of_pure(const StateVector& psi) {
  DensityMatrix rho = from_pure(psi);
  long d = rho.matrix.rows();
  rho.matrix -= Mat::Identity(d, d) / static_cast<double>(d);
  rho.kind = MatrixKind::deviation;
  return rho;
}

void DensityMatrix::validate(double tol) const {
  long d = dim_of(n_spins);
  if (matrix.rows() != d || matrix.cols() != d) {
    throw std::invalid_argument("density matrix dimension does not match spin count");
  }
  double herm = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) {
    std::ostringstream msg;
    msg << "density matrix not Hermitian (residual " << herm << ")";
    throw std::invalid_argument(msg.str());
  }
  double tr = matrix.trace().real();
  double want = (kind == MatrixKind::physical) ? 1.0 : 0.0;
  if (std::abs(tr - want) > std::max(tol, 1e-10)) {
    std::ostringstream msg;
    msg << "density matrix trace " << tr << ", expected " << want;
    throw std::invalid_argument(msg.str());
  }
  if (kind == MatrixKind::physical) {
    Eigen::SelfAdjointEigenSolver<Mat> es(matrix, Eigen::EigenvaluesOnly);
    double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -1e-10) {
      std::ostringstream msg;
      msg << "physical density matrix has negative eigenvalue " << min_ev;
      throw std::invalid_argument(msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Elementary operators

Mat op_ix() {
  Mat m(2, 2);
  m << 0.0, 0.5, 0.5, 0.0;
  return m;
}

Mat op_iy() {
  Mat m(2, 2);
  m << 0.0, cx(0.0, -0.5), cx(0.0, 0.5), 0.0;
  return m;
}

Mat op_iz() {
  Mat m(2, 2);
  m << 0.5, 0.0, 0.0, -0.5;
  return m;
}

Mat op_proj_alpha() {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1.0;
  return m;
}

Mat op_proj_beta() {
  Mat m = Mat::Zero(2, 2);
  m(1, 1) = 1.0;
  return m;
}

Mat op_identity2() { return Mat::Identity(2, 2); }

SpinOperator embedded(const Mat& single, int spin, int n, const std::string& label) {
  long d = dim_of(n);
  if (spin < 1 || spin > n) {
    std::ostringstream msg;
    msg << "spin index " << spin << " outside [1, " << n << "]";
    throw std::invalid_argument(msg.str());
  }
  Mat out = Mat::Identity(1, 1);
  for (int q = 1; q <= n; ++q) {
    out = kron(out, q == spin ? single : op_identity2());
  }
  (void)d;
  return SpinOperator{n, std::move(out), label};
}

SpinOperator spin_iz(int spin, int n) { return embedded(op_iz(), spin, n, "Iz" + std::to_string(spin)); }
SpinOperator spin_ix(int spin, int n) { return embedded(op_ix(), spin, n, "Ix" + std::to_string(spin)); }
SpinOperator spin_iy(int spin, int n) { return embedded(op_iy(), spin, n, "Iy" + std::to_string(spin)); }
SpinOperator spin_alpha(int spin, int n) {
  return embedded(op_proj_alpha(), spin, n, "E+" + std::to_string(spin));
}

// ---------------------------------------------------------------------------
// Tensor products

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {
void check_capacity(long dim) {
  if (dim > (1L << kMaxQubits)) {
    std::ostringstream msg;
    msg << "tensor product dimension " << dim << " exceeds the 2^" << kMaxQubits << " cap";
    throw std::length_error(msg.str());
  }
}
}  // namespace

StateVector tensor(const std::vector<StateVector>& parts) {
  if (parts.empty()) throw std::invalid_argument("tensor of an empty list");
  StateVector out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    check_capacity(out.amplitudes.size() * parts[i].amplitudes.size());
    Vec next(out.amplitudes.size() * parts[i].amplitudes.size());
    for (long a = 0; a < out.amplitudes.size(); ++a)
      for (long b = 0; b < parts[i].amplitudes.size(); ++b)
        next[a * parts[i].amplitudes.size() + b] = out.amplitudes[a] * parts[i].amplitudes[b];
    out.amplitudes = std::move(next);
    out.n_qubits += parts[i].n_qubits;
  }
  return out;
}

SpinOperator tensor(const std::vector<SpinOperator>& parts) {
  if (parts.empty()) throw std::invalid_argument("tensor of an empty list");
  SpinOperator out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    check_capacity(out.matrix.rows() * parts[i].matrix.rows());
    out.matrix = kron(out.matrix, parts[i].matrix);
    out.n_spins += parts[i].n_spins;
    if (!parts[i].label.empty()) out.label += (out.label.empty() ? "" : "*") + parts[i].label;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unitary application

namespace {
void check_unitary(const Mat& u, long d) {
  if (u.rows() != d || u.cols() != d) {
    throw std::invalid_argument("operator dimension does not match state dimension");
  }
  double resid = (u.adjoint() * u - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  if (resid > kUnitaryTol) {
    std::ostringstream msg;
    msg << "operator is not unitary (residual " << resid << " > " << kUnitaryTol << ")";
    throw std::invalid_argument(msg.str());
  }
}
}  // namespace

StateVector apply_unitary(const StateVector& psi, const Mat& u) {
  check_unitary(u, psi.amplitudes.size());
  StateVector out = psi;
  out.amplitudes = u * psi.amplitudes;
  return out;
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const Mat& u) {
  check_unitary(u, rho.matrix.rows());
  DensityMatrix out = rho;
  out.matrix = u * rho.matrix * u.adjoint();
  return out;
}

// ---------------------------------------------------------------------------
// Measurement and sampling

Eigen::VectorXd measure_distribution(const StateVector& psi) {
  Eigen::VectorXd p = psi.amplitudes.cwiseAbs2();
  double total = p.sum();
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("state vector is not normalized");
  }
  return p / total;
}

Eigen::VectorXd measure_distribution(const DensityMatrix& rho) {
  if (rho.kind == MatrixKind::deviation) {
    throw std::invalid_argument("deviation-kind density matrices carry no probability distribution");
  }
  Eigen::VectorXd p = rho.matrix.diagonal().real();
  for (long i = 0; i < p.size(); ++i) {
    if (p[i] < -1e-10) throw std::invalid_argument("negative population in density matrix diagonal");
    p[i] = std::max(p[i], 0.0);
  }
  double total = p.sum();
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("density matrix populations do not sum to 1");
  }
  return p / total;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  if (keep.empty()) throw std::invalid_argument("partial trace onto an empty subsystem");
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate spin in partial trace subset");
  }
  int n = rho.n_spins;
  for (int s : sorted) {
    if (s < 1 || s > n) throw std::invalid_argument("partial trace spin index out of range");
  }
  int nk = static_cast<int>(sorted.size());
  long dk = dim_of(nk);
  std::vector<int> traced;
  for (int s = 1; s <= n; ++s) {
    if (!std::binary_search(sorted.begin(), sorted.end(), s)) traced.push_back(s);
  }
  long dt = traced.empty() ? 1 : (1L << traced.size());

  auto assemble = [&](long kept_bits, long traced_bits) {
    long x = 0;
    for (int i = 0; i < nk; ++i) {
      int bit = static_cast<int>((kept_bits >> (nk - 1 - i)) & 1);
      x |= static_cast<long>(bit) << (n - sorted[i]);
    }
    for (std::size_t i = 0; i < traced.size(); ++i) {
      int bit = static_cast<int>((traced_bits >> (traced.size() - 1 - i)) & 1);
      x |= static_cast<long>(bit) << (n - traced[i]);
    }
    return x;
  };

  DensityMatrix out;
  out.n_spins = nk;
  out.kind = rho.kind;
  out.matrix = Mat::Zero(dk, dk);
  for (long r = 0; r < dk; ++r)
    for (long c = 0; c < dk; ++c)
      for (long t = 0; t < dt; ++t) out.matrix(r, c) += rho.matrix(assemble(r, t), assemble(c, t));
  return out;
}

long sample_index(const Eigen::VectorXd& probs, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (long i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

std::vector<long> sample(const StateVector& psi, std::uint64_t seed, int shots) {
  Eigen::VectorXd p = measure_distribution(psi);
  Rng rng(seed);
  std::vector<long> out(shots);
  for (int i = 0; i < shots; ++i) out[i] = sample_index(p, rng);
  return out;
}

std::vector<long> sample(const DensityMatrix& rho, std::uint64_t seed, int shots) {
  Eigen::VectorXd p = measure_distribution(rho);
  Rng rng(seed);
  std::vector<long> out(shots);
  for (int i = 0; i < shots; ++i) out[i] = sample_index(p, rng);
  return out;
}

}  // namespace qftnmr
