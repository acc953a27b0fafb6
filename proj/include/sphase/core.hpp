#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sphase {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these to exit codes: configuration -> 1,
// anything raised while stepping -> 2, verify failures -> 3.
// ---------------------------------------------------------------------------

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class GeometryError : public std::runtime_error {
public:
  explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

class PhysicsError : public std::runtime_error {
public:
  explicit PhysicsError(const std::string& msg) : std::runtime_error(msg) {}
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& msg, std::vector<double> history = {})
      : std::runtime_error(msg), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

class StepError : public std::runtime_error {
public:
  explicit StepError(const std::string& msg) : std::runtime_error(msg) {}
};

class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// ---------------------------------------------------------------------------
// Parallel kernels. Results must not depend on the thread count: loops write
// disjoint slots, reductions go through a buffer summed in index order.
// ---------------------------------------------------------------------------

template <class F>
inline void parallel_for(std::ptrdiff_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}

// Deterministic sum of f(i), i = 0..n-1: partials evaluated in parallel,
// accumulated serially in index order.
template <class F>
inline double parallel_sum(std::ptrdiff_t n, F&& f) {
  std::vector<double> partial(static_cast<size_t>(n));
  parallel_for(n, [&](std::ptrdiff_t i) { partial[static_cast<size_t>(i)] = f(i); });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

inline int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------
// Real solid harmonics, unnormalized, restricted to directions: value of a
// degree-l harmonic polynomial at x/|x|.  -Delta_Gamma y_lm = l(l+1) y_lm on
// the unit sphere.  l <= 3.
// ---------------------------------------------------------------------------

double solid_harmonic(int l, int m, const Vec3& x);

// Tangential gradient of solid_harmonic(l, m, .) on the unit sphere at unit
// vector u: grad p(u) - l * p(u) * u, already tangential.
Vec3 solid_harmonic_surface_grad(int l, int m, const Vec3& u);

}  // namespace sphase
