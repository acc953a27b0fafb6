#include "sphase/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>

namespace sphase {

namespace {

// Edge-midpoint quadrature: barycentric weights of the three midpoints.
constexpr double kLambda[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

// Merge per-face local blocks into a sparse matrix in face order (entry
// values independent of the thread count).
template <class LocalBlock>
SpMat merge_blocks(int rows, int cols, const std::vector<LocalBlock>& blocks,
                   const std::function<void(int, const LocalBlock&, std::vector<Triplet>&)>& emit) {
  std::vector<Triplet> trips;
  trips.reserve(blocks.size() * 16);
  for (int f = 0; f < static_cast<int>(blocks.size()); ++f) emit(f, blocks[f], trips);
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

double face_mean_weight(const SurfaceState& state, const Weight& w, int f) {
  if (!w.field) return w.constant;
  const auto& fc = state.mesh->faces[f];
  return w.constant * ((*w.field)[fc[0]] + (*w.field)[fc[1]] + (*w.field)[fc[2]]) / 3.0;
}

}  // namespace

SparseOperator assemble_mass(const SurfaceState& state, const Weight& w, Arity arity,
                             bool lumped, double weight_min) {
  const int nv = state.n_vertices();
  const int nf = state.n_faces();

  if (weight_min > 0.0 && w.field) {
    for (int v = 0; v < nv; ++v)
      if (w.at(v) < weight_min)
        throw PhysicsError("assemble_mass: weight " + std::to_string(w.at(v)) +
                           " below floor " + std::to_string(weight_min) + " at vertex " +
                           std::to_string(v));
  }
  if (weight_min > 0.0 && !w.field && w.constant < weight_min)
    throw PhysicsError("assemble_mass: constant weight below floor");

  using Block = Eigen::Matrix3d;  // scalar local mass
  std::vector<Block> local(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    double wq[3];
    for (int q = 0; q < 3; ++q) {
      wq[q] = 0.0;
      for (int k = 0; k < 3; ++k) wq[q] += kLambda[q][k] * w.at(fc[k]);
      if (!w.field) wq[q] = w.constant;
    }
    Block m = Block::Zero();
    for (int q = 0; q < 3; ++q)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          m(i, j) += a3 * wq[q] * kLambda[q][i] * kLambda[q][j];
    local[f] = m;
  });

  const int dim = (arity == Arity::Scalar) ? nv : 3 * nv;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * (arity == Arity::Scalar ? 9 : 27));
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double val = local[f](i, j);
        if (lumped && i != j) {
          // row-sum lumping
          continue;
        }
        if (lumped) {
          val = local[f].row(i).sum();
        }
        if (arity == Arity::Scalar) {
          trips.emplace_back(fc[i], fc[j], val);
        } else {
          for (int c = 0; c < 3; ++c) trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + c, val);
        }
      }
  }
  SparseOperator op;
  op.mat = SpMat(dim, dim);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.symmetric = true;
  op.spd = true;
  return op;
}

SparseOperator assemble_stiffness(const SurfaceState& state, const Weight& w, Arity arity) {
  const int nv = state.n_vertices();
  const int nf = state.n_faces();
  using Block = Eigen::Matrix3d;
  std::vector<Block> local(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const double wa = face_mean_weight(state, w, f) * state.face_area[f];
    Block k;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) k(i, j) = wa * state.face_grad[f][i].dot(state.face_grad[f][j]);
    local[f] = k;
  });
  const int dim = (arity == Arity::Scalar) ? nv : 3 * nv;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * (arity == Arity::Scalar ? 9 : 27));
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (arity == Arity::Scalar)
          trips.emplace_back(fc[i], fc[j], local[f](i, j));
        else
          for (int c = 0; c < 3; ++c)
            trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + c, local[f](i, j));
      }
  }
  SparseOperator op;
  op.mat = SpMat(dim, dim);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.symmetric = true;
  op.spd = false;  // kernel: constants
  return op;
}

SparseOperator assemble_deformation(const SurfaceState& state, const Weight& viscosity,
                                    double penalty_beta, double nu_floor) {
  const int nv = state.n_vertices();
  const int nf = state.n_faces();
  if (nu_floor > 0.0) {
    for (int v = 0; v < nv; ++v)
      if (viscosity.at(v) < nu_floor)
        throw PhysicsError("assemble_deformation: viscosity below floor at vertex " +
                           std::to_string(v));
  }

  using Block = Eigen::Matrix<double, 9, 9>;
  std::vector<Block> local(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    const double area = state.face_area[f];
    const double nu = face_mean_weight(state, viscosity, f);
    const Mat3 P = state.face_proj(f);
    const auto& g = state.face_grad[f];
    Block m = Block::Zero();
    // 2 nu E_S(psi_ic) : E_S(psi_jd) integrates to
    // nu * area * (P_cd (g_i.g_j) + (g_j)_c (g_i)_d).
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double gij = g[i].dot(g[j]);
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            m(3 * i + c, 3 * j + d) = nu * area * (P(c, d) * gij + g[j](c) * g[i](d));
      }
    if (penalty_beta > 0.0) {
      const double a3 = area / 3.0;
      for (int q = 0; q < 3; ++q) {
        Vec3 nq = Vec3::Zero();
        for (int k = 0; k < 3; ++k) nq += kLambda[q][k] * state.normal[fc[k]];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const double s = penalty_beta * a3 * kLambda[q][i] * kLambda[q][j];
            if (s == 0.0) continue;
            for (int c = 0; c < 3; ++c)
              for (int d = 0; d < 3; ++d) m(3 * i + c, 3 * j + d) += s * nq(c) * nq(d);
          }
      }
    }
    local[f] = m;
  });

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * 81);
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + d, local[f](3 * i + c, 3 * j + d));
  }
  SparseOperator op;
  op.mat = SpMat(3 * nv, 3 * nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.symmetric = true;
  op.spd = false;  // kernel contains rigid rotations on symmetric surfaces
  return op;
}

SparseOperator assemble_div(const SurfaceState& state) {
  const int nv = state.n_vertices();
  const int nf = state.n_faces();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * 27);
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          trips.emplace_back(fc[i], 3 * fc[j] + c, a3 * state.face_grad[f][j](c));
  }
  SparseOperator op;
  op.mat = SpMat(nv, 3 * nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  return op;
}

SparseOperator assemble_grad_coupling(const SurfaceState& state) {
  const int nv = state.n_vertices();
  const int nf = state.n_faces();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * 27);
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          trips.emplace_back(fc[i], 3 * fc[j] + c, a3 * state.face_grad[f][i](c));
  }
  SparseOperator op;
  op.mat = SpMat(nv, 3 * nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  return op;
}

SparseOperator assemble_advection(const SurfaceState& state, const Field& wind,
                                  const Weight& coeff, Arity arity) {
  if (wind.arity != Arity::Vector3)
    throw ContractViolation("assemble_advection: wind must be a vector field");
  const int nv = state.n_vertices();
  const int nf = state.n_faces();

  if (arity == Arity::Scalar) {
    std::vector<Eigen::Matrix3d> local(nf);
    parallel_for(nf, [&](std::ptrdiff_t f) {
      const auto& fc = state.mesh->faces[f];
      const double a3 = state.face_area[f] / 3.0;
      Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
      for (int q = 0; q < 3; ++q) {
        Vec3 wq = Vec3::Zero();
        double cq = 0.0;
        for (int k = 0; k < 3; ++k) {
          wq += kLambda[q][k] * wind.at(fc[k]);
          cq += kLambda[q][k] * coeff.at(fc[k]);
        }
        if (!coeff.field) cq = coeff.constant;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            m(i, j) += a3 * cq * kLambda[q][i] * state.face_grad[f][j].dot(wq);
      }
      local[f] = m;
    });
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(nf) * 9);
    for (int f = 0; f < nf; ++f) {
      const auto& fc = state.mesh->faces[f];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trips.emplace_back(fc[i], fc[j], local[f](i, j));
    }
    SparseOperator op;
    op.mat = SpMat(nv, nv);
    op.mat.setFromTriplets(trips.begin(), trips.end());
    op.mat.makeCompressed();
    return op;
  }

  using Block = Eigen::Matrix<double, 9, 9>;
  std::vector<Block> local(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    const Mat3 P = state.face_proj(f);
    Block m = Block::Zero();
    for (int q = 0; q < 3; ++q) {
      Vec3 wq = Vec3::Zero();
      double cq = 0.0;
      for (int k = 0; k < 3; ++k) {
        wq += kLambda[q][k] * wind.at(fc[k]);
        cq += kLambda[q][k] * coeff.at(fc[k]);
      }
      if (!coeff.field) cq = coeff.constant;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double s = a3 * cq * kLambda[q][i] * state.face_grad[f][j].dot(wq);
          if (s == 0.0) continue;
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) m(3 * i + c, 3 * j + d) += s * P(c, d);
        }
    }
    local[f] = m;
  });
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * 81);
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + d, local[f](3 * i + c, 3 * j + d));
  }
  SparseOperator op;
  op.mat = SpMat(3 * nv, 3 * nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  return op;
}

SparseOperator assemble_tensor_mass(const SurfaceState& state,
                                    const std::vector<Mat3>& face_matrix, const Weight& w) {
  const int nv = state.n_vertices();
  const int nf = state.n_faces();
  using Block = Eigen::Matrix<double, 9, 9>;
  std::vector<Block> local(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    const Mat3& C = face_matrix[f];
    Block m = Block::Zero();
    for (int q = 0; q < 3; ++q) {
      double wq = 0.0;
      for (int k = 0; k < 3; ++k) wq += kLambda[q][k] * w.at(fc[k]);
      if (!w.field) wq = w.constant;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double s = a3 * wq * kLambda[q][i] * kLambda[q][j];
          if (s == 0.0) continue;
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) m(3 * i + c, 3 * j + d) += s * C(c, d);
        }
    }
    local[f] = m;
  });
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * 81);
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + d, local[f](3 * i + c, 3 * j + d));
  }
  SparseOperator op;
  op.mat = SpMat(3 * nv, 3 * nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  return op;
}

std::vector<Vec3> face_gradients(const SurfaceState& state, const VecX& scalar) {
  const int nf = state.n_faces();
  std::vector<Vec3> g(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    g[f] = scalar[fc[0]] * state.face_grad[f][0] + scalar[fc[1]] * state.face_grad[f][1] +
           scalar[fc[2]] * state.face_grad[f][2];
  });
  return g;
}

std::vector<Mat3> face_vector_gradients(const SurfaceState& state, const Field& u) {
  if (u.arity != Arity::Vector3)
    throw ContractViolation("face_vector_gradients: vector field expected");
  const int nf = state.n_faces();
  std::vector<Mat3> g(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    Mat3 grad_hat = Mat3::Zero();
    for (int k = 0; k < 3; ++k) grad_hat += u.at(fc[k]) * state.face_grad[f][k].transpose();
    const Mat3 P = state.face_proj(f);
    g[f] = P * grad_hat * P;
  });
  return g;
}

Field recover_gradient(const SurfaceState& state, const VecX& scalar, bool project) {
  const std::vector<Vec3> fg = face_gradients(state, scalar);
  Field out = Field::vector_zero(state.n_vertices(), project);
  parallel_for(state.n_vertices(), [&](std::ptrdiff_t v) {
    Vec3 acc = Vec3::Zero();
    for (int f : state.mesh->vertex_faces[v]) acc += (state.face_area[f] / 3.0) * fg[f];
    acc /= state.vertex_area[v];
    if (project) acc = state.projector[v] * acc;
    out.set(static_cast<int>(v), acc);
  });
  return out;
}

double integrate_lumped(const SurfaceState& state, const VecX& scalar) {
  return parallel_sum(state.n_vertices(),
                      [&](std::ptrdiff_t v) { return state.vertex_area[v] * scalar[v]; });
}

double l2_norm(const SurfaceState& state, const Field& f) {
  const int comp = (f.arity == Arity::Scalar) ? 1 : 3;
  double sq = parallel_sum(state.n_faces(), [&](std::ptrdiff_t fi) {
    const auto& fc = state.mesh->faces[fi];
    const double a3 = state.face_area[fi] / 3.0;
    double s = 0.0;
    for (int q = 0; q < 3; ++q) {
      for (int c = 0; c < comp; ++c) {
        double val = 0.0;
        for (int k = 0; k < 3; ++k) val += kLambda[q][k] * f.coeffs[comp * fc[k] + c];
        s += a3 * val * val;
      }
    }
    return s;
  });
  return std::sqrt(std::max(0.0, sq));
}

double weak_divergence_residual(const SurfaceState& state, const Field& w) {
  SparseOperator B = assemble_div(state);
  SparseOperator H1;
  H1.mat = assemble_stiffness(state, 1.0).mat + assemble_mass(state, 1.0, Arity::Scalar).mat;
  H1.symmetric = true;
  H1.spd = true;
  const VecX r = B.mat * w.coeffs;
  const VecX z = solve_linear(H1, r);
  return std::sqrt(std::max(0.0, r.dot(z))) / std::max(1e-30, l2_norm(state, w));
}

// ---------------------------------------------------------------------------
// Linear solves.
// ---------------------------------------------------------------------------

namespace {

VecX deflate(const VecX& x, const std::vector<VecX>& ns) {
  VecX out = x;
  for (const auto& v : ns) out -= (v.dot(out) / v.squaredNorm()) * v;
  return out;
}

VecX solve_direct(const SparseOperator& op, const VecX& rhs, const std::vector<VecX>* nullspace,
                  bool force_lu) {
  if (nullspace && !nullspace->empty()) {
    // Deflate the rhs against the (symmetric) kernel, pin one dof per kernel
    // vector, solve, deflate the solution. A Lagrange row would be dense and
    // destroy the sparse factorization's fill-in.
    const int n = op.rows();
    VecX b = deflate(rhs, *nullspace);
    std::vector<int> pins;
    for (const auto& v : *nullspace) {
      int p = 0;
      v.cwiseAbs().maxCoeff(&p);
      pins.push_back(p);
      b[p] = 0.0;
    }
    auto pinned = [&](int i) { return std::find(pins.begin(), pins.end(), i) != pins.end(); };
    std::vector<Triplet> trips;
    trips.reserve(op.mat.nonZeros() + pins.size());
    for (int col = 0; col < op.mat.outerSize(); ++col)
      for (SpMat::InnerIterator it(op.mat, col); it; ++it) {
        const int row = static_cast<int>(it.row());
        if (pinned(row) || pinned(col)) continue;
        trips.emplace_back(row, col, it.value());
      }
    for (int p : pins) trips.emplace_back(p, p, 1.0);
    SparseOperator pinned_op;
    pinned_op.mat = SpMat(n, n);
    pinned_op.mat.setFromTriplets(trips.begin(), trips.end());
    pinned_op.mat.makeCompressed();
    pinned_op.symmetric = op.symmetric;
    pinned_op.spd = op.symmetric;  // kernel removed by pinning
    VecX sol = solve_direct(pinned_op, b, nullptr, force_lu || !op.symmetric);
    return deflate(sol, *nullspace);
  }

  if (op.spd && !force_lu) {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(op.mat);
    if (ldlt.info() == Eigen::Success) {
      VecX x = ldlt.solve(rhs);
      if (ldlt.info() == Eigen::Success) return x;
    }
    // fall through to LU on breakdown
  }
  Eigen::SparseLU<SpMat> lu;
  lu.compute(op.mat);
  if (lu.info() != Eigen::Success) throw SolverError("direct solve: LU factorization failed");
  return lu.solve(rhs);
}

template <class Solver>
VecX solve_iterative(Solver& solver, const SparseOperator& op, const VecX& rhs,
                     const SolveOptions& opts, const std::vector<VecX>* nullspace) {
  solver.setMaxIterations(opts.max_iter);
  solver.setTolerance(opts.tol);
  solver.compute(op.mat);
  VecX b = rhs;
  if (nullspace) b = deflate(b, *nullspace);
  VecX x = solver.solve(b);
  if (nullspace) x = deflate(x, *nullspace);
  if (solver.info() != Eigen::Success && solver.error() > 10 * opts.tol)
    throw SolverError("iterative solve failed: error " + std::to_string(solver.error()) +
                          " after " + std::to_string(solver.iterations()) + " iterations",
                      {solver.error()});
  return x;
}

}  // namespace

VecX solve_linear(const SparseOperator& op, const VecX& rhs, const SolveOptions& opts,
                  const std::vector<VecX>* nullspace) {
  if (op.rows() != rhs.size())
    throw ContractViolation("solve_linear: dimension mismatch " + std::to_string(op.rows()) +
                            " vs " + std::to_string(rhs.size()));
  SolveMethod m = opts.method;
  if (m == SolveMethod::Auto) {
    if (op.rows() <= opts.direct_limit)
      m = op.spd ? SolveMethod::DirectLDLT : SolveMethod::DirectLU;
    else
      m = op.symmetric ? SolveMethod::MINRES : SolveMethod::DirectLU;
  }
  switch (m) {
    case SolveMethod::DirectLDLT:
      return solve_direct(op, rhs, nullspace, /*force_lu=*/false);
    case SolveMethod::DirectLU:
      return solve_direct(op, rhs, nullspace, /*force_lu=*/true);
    case SolveMethod::CG: {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      return solve_iterative(cg, op, rhs, opts, nullspace);
    }
    case SolveMethod::MINRES: {
      Eigen::MINRES<SpMat, Eigen::Lower | Eigen::Upper> minres;
      return solve_iterative(minres, op, rhs, opts, nullspace);
    }
    default:
      throw ContractViolation("solve_linear: unresolved method");
  }
}

}  // namespace sphase
