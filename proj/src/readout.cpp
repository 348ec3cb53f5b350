#include "qftnmr/readout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qftnmr {

namespace {
constexpr double pi = std::numbers::pi;
using nlohmann::ordered_json;

// basis index with the observed spin's bit set to `bit` and the remaining
// spins (ascending order) set from `neighbors`
long assemble_index(int observe, int n, int bit, long neighbors) {
  long x = 0;
  int pos = 0;
  for (int s = 1; s <= n; ++s) {
    int b;
    if (s == observe) {
      b = bit;
    } else {
      b = static_cast<int>((neighbors >> (n - 2 - pos)) & 1);
      ++pos;
    }
    if (b) x |= 1L << (n - s);
  }
  return x;
}

double line_frequency(int observe, long neighbors, const MoleculeSpec& m) {
  int n = m.n_active();
  double f = m.shift(observe);
  int pos = 0;
  for (int s = 1; s <= n; ++s) {
    if (s == observe) continue;
    int b = static_cast<int>((neighbors >> (n - 2 - pos)) & 1);
    ++pos;
    f += m.coupling(observe, s) * (b ? -0.5 : 0.5);
  }
  return f;
}
}  // namespace

Spectrum synthesize_spectrum(const DensityMatrix& rho, int observe, const MoleculeSpec& m,
                             const PulseOp& readout_pulse) {
  int n = m.n_active();
  if (rho.n_spins != n) throw std::invalid_argument("state dimension does not match molecule");
  if (observe < 1 || observe > n) throw std::invalid_argument("observed spin out of range");
  DensityMatrix after = apply_pulse(rho, readout_pulse, m);
  Spectrum s;
  s.observed_spin = observe;
  s.observed_label = m.active_spin(observe).label;
  long configs = 1L << (n - 1);
  for (long nb = 0; nb < configs; ++nb) {
    long lo = assemble_index(observe, n, 0, nb);
    long hi = assemble_index(observe, n, 1, nb);
    cx coherence = after.matrix(hi, lo);
    SpectrumLine line;
    line.frequency_hz = line_frequency(observe, nb, m);
    line.amplitude = 2.0 * coherence.real();
    for (int pos = 0; pos < n - 1; ++pos) {
      line.neighbor_bits.push_back(static_cast<int>((nb >> (n - 2 - pos)) & 1));
    }
    s.lines.push_back(std::move(line));
  }
  std::sort(s.lines.begin(), s.lines.end(),
            [](const SpectrumLine& a, const SpectrumLine& b) { return a.frequency_hz < b.frequency_hz; });
  return s;
}

std::string Spectrum::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "frequency_hz,amplitude,assignment\n";
  for (const SpectrumLine& line : lines) {
    out << line.frequency_hz << "," << line.amplitude << "," << observed_label << ":";
    for (int b : line.neighbor_bits) out << b;
    out << "\n";
  }
  return out.str();
}

std::vector<std::pair<double, double>> render_lorentzian(const Spectrum& s, double linewidth_hz,
                                                         double f_min, double f_max, int points) {
  if (points < 2 || f_max <= f_min || linewidth_hz <= 0) {
    throw std::invalid_argument("bad lorentzian rendering parameters");
  }
  std::vector<std::pair<double, double>> out(points);
  double hw = linewidth_hz / 2.0;
  for (int i = 0; i < points; ++i) {
    double f = f_min + (f_max - f_min) * i / (points - 1);
    double v = 0.0;
    for (const SpectrumLine& line : s.lines) {
      double df = f - line.frequency_hz;
      v += line.amplitude * hw * hw / (df * df + hw * hw);
    }
    out[i] = {f, v};
  }
  return out;
}

std::vector<DecodedState> decode_observer_readout(const Spectrum& s, int observer,
                                                  const MoleculeSpec& m, double resolution_hz,
                                                  double rel_threshold) {
  if (s.observed_spin != observer) {
    throw std::invalid_argument("spectrum was not acquired on the requested observer spin");
  }
  int n = m.n_active();
  long configs = 1L << (n - 1);
  std::vector<double> expected(configs);
  for (long nb = 0; nb < configs; ++nb) expected[nb] = line_frequency(observer, nb, m);
  for (long a = 0; a < configs; ++a) {
    for (long b = a + 1; b < configs; ++b) {
      if (std::abs(expected[a] - expected[b]) < resolution_hz) {
        std::ostringstream msg;
        msg << "ambiguous line assignment: configurations " << a << " and " << b << " both map to ~"
            << expected[a] << " Hz (separation below " << resolution_hz << " Hz)";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  double max_amp = 0.0;
  for (const SpectrumLine& line : s.lines) max_amp = std::max(max_amp, std::abs(line.amplitude));
  std::vector<DecodedState> out;
  for (const SpectrumLine& line : s.lines) {
    if (max_amp == 0.0 || std::abs(line.amplitude) < rel_threshold * max_amp) continue;
    long best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (long nb = 0; nb < configs; ++nb) {
      double err = std::abs(line.frequency_hz - expected[nb]);
      if (err < best_err) {
        best_err = err;
        best = nb;
      }
    }
    if (best_err > resolution_hz / 2.0) {
      std::ostringstream msg;
      msg << "line at " << line.frequency_hz << " Hz matches no first-order position";
      throw std::invalid_argument(msg.str());
    }
    DecodedState d;
    d.basis_state = best;
    for (int pos = n - 2; pos >= 0; --pos) d.bits += ((best >> pos) & 1) ? '1' : '0';
    d.amplitude = line.amplitude;
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(),
            [](const DecodedState& a, const DecodedState& b) { return a.amplitude > b.amplitude; });
  return out;
}

// ---------------------------------------------------------------------------
// Tomography

namespace {

std::vector<Mat> traceless_hermitian_basis(long d) {
  std::vector<Mat> basis;
  for (long r = 0; r < d; ++r) {
    for (long c = r + 1; c < d; ++c) {
      Mat re = Mat::Zero(d, d);
      re(r, c) = 1.0;
      re(c, r) = 1.0;
      basis.push_back(re);
      Mat im = Mat::Zero(d, d);
      im(r, c) = cx(0, 1.0);
      im(c, r) = cx(0, -1.0);
      basis.push_back(im);
    }
  }
  for (long k = 1; k < d; ++k) {
    Mat diag = Mat::Zero(d, d);
    diag(0, 0) = 1.0;
    diag(k, k) = -1.0;
    basis.push_back(diag);
  }
  return basis;
}

struct ReadoutSetting {
  std::vector<PulseOp> pulses;  // at most one per spin
  std::string descriptor;
};

std::vector<ReadoutSetting> readout_settings(int n) {
  std::vector<ReadoutSetting> settings;
  int count = 1;
  for (int i = 0; i < n; ++i) count *= 3;
  for (int code = 0; code < count; ++code) {
    ReadoutSetting setting;
    int c = code;
    for (int s = 1; s <= n; ++s) {
      int choice = c % 3;
      c /= 3;
      if (!setting.descriptor.empty()) setting.descriptor += " ";
      if (choice == 0) {
        setting.descriptor += "-";
      } else {
        Axis ax = (choice == 1) ? Axis::x : Axis::y;
        setting.pulses.push_back(PulseOp::rf(s, ax, pi / 2));
        setting.descriptor += (choice == 1 ? "X" : "Y") + std::to_string(s);
      }
    }
    settings.push_back(std::move(setting));
  }
  return settings;
}

// line amplitudes produced by the full readout set on `rho`, both detection
// quadratures per line (real parts alone cannot see a lone I_y component)
Eigen::VectorXd measurement_vector(const DensityMatrix& rho, const MoleculeSpec& m,
                                   const std::vector<ReadoutSetting>& settings) {
  int n = m.n_active();
  long per_spin = 1L << (n - 1);
  Eigen::VectorXd v(static_cast<long>(settings.size()) * n * per_spin * 2);
  long row = 0;
  for (const ReadoutSetting& setting : settings) {
    DensityMatrix after = rho;
    for (const PulseOp& op : setting.pulses) after = apply_pulse(after, op, m);
    for (int observe = 1; observe <= n; ++observe) {
      for (long nb = 0; nb < per_spin; ++nb) {
        long lo = assemble_index(observe, n, 0, nb);
        long hi = assemble_index(observe, n, 1, nb);
        v[row++] = 2.0 * after.matrix(hi, lo).real();
        v[row++] = 2.0 * after.matrix(hi, lo).imag();
      }
    }
  }
  return v;
}

}  // namespace

TomogramResult tomograph(const DensityMatrix& rho_true, const MoleculeSpec& m) {
  int n = m.n_active();
  if (n > 3) throw std::invalid_argument("tomography supported for up to 3 spins");
  if (rho_true.n_spins != n) throw std::invalid_argument("state dimension does not match molecule");
  long d = dim_of(n);
  std::vector<Mat> basis = traceless_hermitian_basis(d);
  std::vector<ReadoutSetting> settings = readout_settings(n);

  Eigen::MatrixXd a(static_cast<long>(settings.size()) * n * (d / 2) * 2,
                    static_cast<long>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    DensityMatrix comp;
    comp.n_spins = n;
    comp.kind = MatrixKind::deviation;
    comp.matrix = basis[k];
    a.col(static_cast<long>(k)) = measurement_vector(comp, m, settings);
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double sv_min = svd.singularValues().minCoeff();
  double sv_max = svd.singularValues().maxCoeff();
  if (sv_max == 0.0 || sv_min < 1e-8 * sv_max) {
    std::ostringstream msg;
    msg << "tomography inversion is rank-deficient (singular values " << sv_min << " .. " << sv_max
        << "); the readout set does not determine all components";
    throw std::runtime_error(msg.str());
  }

  Eigen::VectorXd b = measurement_vector(rho_true, m, settings);
  Eigen::VectorXd coeff = svd.solve(b);

  TomogramResult result;
  result.reconstructed.n_spins = n;
  result.reconstructed.kind = MatrixKind::deviation;
  result.reconstructed.matrix = Mat::Zero(d, d);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    result.reconstructed.matrix += coeff[static_cast<long>(k)] * basis[k];
  }
  // the traceless basis cannot represent a trace; reinstate it for
  // physical-kind inputs
  if (rho_true.kind == MatrixKind::physical) {
    result.reconstructed.kind = MatrixKind::physical;
    result.reconstructed.matrix += Mat::Identity(d, d) / static_cast<double>(d);
  }
  for (const ReadoutSetting& setting : settings) result.readout_set.push_back(setting.descriptor);
  result.residual = (result.reconstructed.matrix - rho_true.matrix).cwiseAbs().maxCoeff();
  return result;
}

std::string TomogramResult::to_json() const {
  ordered_json j;
  j["n_spins"] = reconstructed.n_spins;
  j["kind"] = reconstructed.kind == MatrixKind::deviation ? "deviation" : "physical";
  ordered_json rows = ordered_json::array();
  for (long r = 0; r < reconstructed.matrix.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (long c = 0; c < reconstructed.matrix.cols(); ++c) {
      row.push_back({reconstructed.matrix(r, c).real(), reconstructed.matrix(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  j["readout_set"] = readout_set;
  j["residual"] = residual;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

double attenuated_correlation(const DensityMatrix& rho_th, const DensityMatrix& rho_exp) {
  if (rho_th.matrix.rows() != rho_exp.matrix.rows()) {
    throw std::invalid_argument("correlation of states with different dimensions");
  }
  double denom = (rho_th.matrix * rho_th.matrix).trace().real();
  if (std::abs(denom) < 1e-300) throw std::invalid_argument("reference state has zero norm");
  double num = (rho_th.matrix * rho_exp.matrix).trace().real();
  return num / denom;
}

PeriodInference infer_period_from_states(const std::vector<long>& states, int n) {
  if (states.empty()) throw std::invalid_argument("no states to infer a period from");
  long domain = dim_of(n);
  std::vector<long> sorted = states;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (long s : sorted) {
    if (s < 0 || s >= domain) throw std::invalid_argument("state index outside the register");
  }
  if (sorted.size() == 1) return {domain, 1};
  long k = sorted[1] - sorted[0];
  for (std::size_t i = 1; i + 1 < sorted.size(); ++i) {
    if (sorted[i + 1] - sorted[i] != k) {
      throw std::invalid_argument("state support is not an arithmetic progression");
    }
  }
  if (k <= 0 || domain % k != 0) {
    throw std::invalid_argument("state spacing does not divide the register size");
  }
  if (static_cast<long>(sorted.size()) != domain / k) {
    throw std::invalid_argument("state support does not span a full progression");
  }
  return {k, domain / k};
}

}  // namespace qftnmr
