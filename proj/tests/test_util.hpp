#pragma once

#include <random>
#include <vector>

#include "sensched/sensched.hpp"

namespace testutil {

using sensched::Matrix;

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

// A = 1, W = 1, Sigma0 = 1, C = 1 for every sensor, noise variances as given.
inline sensched::Scenario scalar_scenario(int horizon, const std::vector<double>& noise) {
  sensched::Scenario sc;
  sc.system.horizon = horizon;
  sc.system.dynamics = sensched::MatrixSequence(scalar(1.0));
  sc.system.process_noise = scalar(1.0);
  sc.system.prior_mean = sensched::Vector::Zero(1);
  sc.system.prior_cov = scalar(1.0);
  std::vector<sensched::Sensor> sensors;
  for (double v : noise) sensors.push_back({sensched::MatrixSequence(scalar(1.0)), scalar(v)});
  sc.sensors = sensched::SensorSet(std::move(sensors));
  return sc;
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_pd(std::mt19937_64& rng, int n, double shift = 0.1) {
  const Matrix b = random_matrix(rng, n, n);
  return sensched::symmetrize(b * b.transpose() / n + shift * Matrix::Identity(n, n));
}

inline Matrix random_psd(std::mt19937_64& rng, int n, int rank) {
  const Matrix b = random_matrix(rng, n, rank);
  return sensched::symmetrize(b * b.transpose());
}

inline sensched::Sensor random_sensor(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix v = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) v(i, i) = u(rng);
  return {sensched::MatrixSequence(random_matrix(rng, m, n)), v};
}

inline sensched::Scenario small_scenario(int n, int sensors, int horizon, std::uint64_t seed) {
  sensched::ScenarioParams p;
  p.state_dim = n;
  p.num_sensors = sensors;
  p.horizon = horizon;
  p.seed = seed;
  return sensched::generate_scenario(p);
}

}  // namespace testutil
