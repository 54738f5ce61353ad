#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sensched/errors.hpp"
#include "sensched/linalg.hpp"

namespace sensched {

// Time-indexed matrix sequence; a single entry is broadcast over all steps.
class MatrixSequence {
 public:
  MatrixSequence() = default;
  explicit MatrixSequence(Matrix constant) : items_{std::move(constant)} {}
  explicit MatrixSequence(std::vector<Matrix> items) : items_(std::move(items)) {}

  const Matrix& at(int t) const {
    if (items_.size() == 1) return items_.front();
    return items_.at(static_cast<std::size_t>(t));
  }
  bool time_invariant() const { return items_.size() == 1; }
  std::size_t size() const { return items_.size(); }
  const std::vector<Matrix>& items() const { return items_; }

 private:
  std::vector<Matrix> items_;
};

/// Linear plant x_{t+1} = A_t x_t + w_t, w_t ~ N(0, W), x_0 ~ N(mu0, Sigma0).
struct SystemModel {
  int horizon = 0;            // time steps 0..horizon
  MatrixSequence dynamics;    // A_t, t = 0..horizon-1
  Matrix process_noise;       // W
  Vector prior_mean;          // mu0; carried along, no covariance computation uses it
  Matrix prior_cov;           // Sigma0

  int state_dim() const { return static_cast<int>(process_noise.rows()); }

  /// A_t.
  const Matrix& transition(int t) const { return dynamics.at(t); }

  void validate() const {
    const int n = state_dim();
    if (n < 1) throw ValidationError("process_noise: empty matrix");
    if (horizon < 0) throw ValidationError("T: horizon must be nonnegative");
    if (process_noise.cols() != n) throw ValidationError("W: not square");
    if (prior_cov.rows() != n || prior_cov.cols() != n)
      throw ValidationError("Sigma0: dimension mismatch with W");
    if (prior_mean.size() != n) throw ValidationError("mu0: dimension mismatch");
    if (dynamics.size() == 0) throw ValidationError("A: no dynamics matrices");
    if (!dynamics.time_invariant() && static_cast<int>(dynamics.size()) != std::max(horizon, 1))
      throw ValidationError("A: expected 1 or T matrices, got " + std::to_string(dynamics.size()));
    for (const auto& a : dynamics.items()) {
      if (a.rows() != n || a.cols() != n) throw ValidationError("A: dimension mismatch");
    }
    if (!is_positive_definite(process_noise)) throw ValidationError("W: not positive definite");
    if (!is_positive_definite(prior_cov)) throw ValidationError("Sigma0: not positive definite");
  }
};

/// y_t = C_t x_t + v_t, v_t ~ N(0, V).
struct Sensor {
  MatrixSequence observation;  // C_t, m x n
  Matrix noise_cov;            // V, m x m

  int output_dim() const { return static_cast<int>(noise_cov.rows()); }
  const Matrix& obs(int t) const { return observation.at(t); }
};

/// Ordered sensor list with cached information increments R = C' V^{-1} C.
class SensorSet {
 public:
  SensorSet() = default;
  explicit SensorSet(std::vector<Sensor> sensors) : sensors_(std::move(sensors)) {
    rebuild_cache();
  }

  int size() const { return static_cast<int>(sensors_.size()); }
  const Sensor& operator[](int i) const { return sensors_.at(static_cast<std::size_t>(i)); }
  const std::vector<Sensor>& sensors() const { return sensors_; }

  /// R^i_t, symmetrized.
  const Matrix& info_increment(int i, int t) const {
    const auto& seq = increments_.at(static_cast<std::size_t>(i));
    return seq.size() == 1 ? seq.front() : seq.at(static_cast<std::size_t>(t));
  }

  /// All R^i_t at one time step.
  std::vector<Matrix> info_increments(int t) const {
    std::vector<Matrix> out;
    out.reserve(sensors_.size());
    for (int i = 0; i < size(); ++i) out.push_back(info_increment(i, t));
    return out;
  }

  void validate(int n, int horizon) const {
    if (sensors_.empty()) throw ValidationError("sensors: at least one sensor required");
    for (int i = 0; i < size(); ++i) {
      const auto& s = sensors_[static_cast<std::size_t>(i)];
      const std::string tag = "sensors[" + std::to_string(i) + "]";
      const int m = s.output_dim();
      if (m < 1 || s.noise_cov.cols() != m) throw ValidationError(tag + ".V: not square");
      if (!is_positive_definite(s.noise_cov)) throw ValidationError(tag + ".V: not positive definite");
      if (s.observation.size() == 0) throw ValidationError(tag + ".C: missing");
      if (!s.observation.time_invariant() &&
          static_cast<int>(s.observation.size()) != horizon + 1)
        throw ValidationError(tag + ".C: expected 1 or T+1 matrices");
      for (const auto& c : s.observation.items()) {
        if (c.rows() != m || c.cols() != n) throw ValidationError(tag + ".C: dimension mismatch");
      }
    }
  }

 private:
  void rebuild_cache() {
    increments_.clear();
    for (const auto& s : sensors_) {
      std::vector<Matrix> seq;
      Eigen::LLT<Matrix> vllt(symmetrize(s.noise_cov));
      for (const auto& c : s.observation.items()) {
        // C' V^{-1} C without forming V^{-1}
        Matrix vinv_c = vllt.solve(c);
        seq.push_back(symmetrize(c.transpose() * vinv_c));
      }
      increments_.push_back(std::move(seq));
    }
  }

  std::vector<Sensor> sensors_;
  std::vector<std::vector<Matrix>> increments_;
};

struct Scenario {
  SystemModel system;
  SensorSet sensors;
  std::optional<std::uint64_t> seed;

  int state_dim() const { return system.state_dim(); }
  int horizon() const { return system.horizon; }
  int num_sensors() const { return sensors.size(); }

  void validate() const {
    system.validate();
    sensors.validate(system.state_dim(), system.horizon);
  }
};

/// Sensor choice per time step 0..T. Indices are zero-based in memory and
/// one-based in every serialized form.
struct Schedule {
  std::vector<int> choices;

  int length() const { return static_cast<int>(choices.size()); }
  int operator[](int t) const { return choices.at(static_cast<std::size_t>(t)); }
  bool operator==(const Schedule&) const = default;
  auto operator<=>(const Schedule&) const = default;

  void validate(int horizon, int num_sensors) const {
    if (length() != horizon + 1)
      throw ParameterError("schedule: length " + std::to_string(length()) + ", expected " +
                           std::to_string(horizon + 1));
    for (int c : choices) {
      if (c < 0 || c >= num_sensors)
        throw ParameterError("schedule: sensor index " + std::to_string(c + 1) + " out of range");
    }
  }

  static Schedule constant(int horizon, int sensor) {
    return Schedule{std::vector<int>(static_cast<std::size_t>(horizon + 1), sensor)};
  }
};

struct ScenarioParams {
  int state_dim = 4;
  int num_sensors = 4;
  int horizon = 100;
  std::uint64_t seed = 0;
  double eig_low = 1.0;
  double eig_high = 1.5;
  double noise_floor = 0.01;
};

/// Random benchmark scenario: symmetric A = U diag(lambda) U' with U Haar
/// orthogonal, W = Sigma0 = I, mu0 = 0, sensors with m_i ~ U{1..n} rows,
/// standard-normal C and diagonal V with entries in [noise_floor, 1].
inline Scenario generate_scenario(const ScenarioParams& p) {
  if (p.state_dim < 1) throw ParameterError("n must be >= 1");
  if (p.num_sensors < 1) throw ParameterError("num_sensors must be >= 1");
  if (p.horizon < 0) throw ParameterError("T must be >= 0");
  if (!(p.eig_low > 0.0) || !(p.eig_high >= p.eig_low) || !std::isfinite(p.eig_high))
    throw ParameterError("eig_range must be a nonempty interval inside (0, inf)");
  if (!(p.noise_floor > 0.0 && p.noise_floor < 1.0))
    throw ParameterError("noise_floor must lie in (0, 1)");

  const int n = p.state_dim;
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&rng](double lo, double hi) {
    if (lo == hi) {
      (void)rng();
      return lo;
    }
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  Vector eig(n);
  for (int i = 0; i < n; ++i) eig(i) = uniform(p.eig_low, p.eig_high);

  Matrix gauss(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) gauss(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix u = qr.householderQ() * Matrix::Identity(n, n);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) u.col(j) = -u.col(j);
  }
  Matrix a = symmetrize(u * eig.asDiagonal() * u.transpose());

  std::vector<Sensor> sensors;
  for (int s = 0; s < p.num_sensors; ++s) {
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    Matrix c(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = normal(rng);
    Matrix v = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) v(i, i) = uniform(p.noise_floor, 1.0);
    sensors.push_back(Sensor{MatrixSequence(std::move(c)), std::move(v)});
  }

  Scenario sc;
  sc.system.horizon = p.horizon;
  sc.system.dynamics = MatrixSequence(std::move(a));
  sc.system.process_noise = Matrix::Identity(n, n);
  sc.system.prior_cov = Matrix::Identity(n, n);
  sc.system.prior_mean = Vector::Zero(n);
  sc.sensors = SensorSet(std::move(sensors));
  sc.seed = p.seed;
  return sc;
}

}  // namespace sensched
