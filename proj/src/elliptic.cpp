#include "rte/elliptic.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace rte {

namespace {

struct BoundaryArm {
  double coef;
  double beta;
};

}  // namespace

struct PoissonSolver::Impl {
  std::vector<long> unknown_of;  // grid index -> unknown number, -1 for exterior
  std::vector<std::size_t> node_of;
  std::vector<std::vector<BoundaryArm>> arms;  // per unknown
  Eigen::SparseMatrix<double> matrix;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;

  Eigen::VectorXd rhs(const ScalarField& g, const BoundaryFunction& dirichlet) const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(node_of.size()));
    for (std::size_t r = 0; r < node_of.size(); ++r) {
      double v = g[node_of[r]];
      for (const BoundaryArm& arm : arms[r]) v -= arm.coef * dirichlet(arm.beta);
      b[static_cast<Eigen::Index>(r)] = v;
    }
    return b;
  }
};

PoissonSolver::PoissonSolver(GridPtr grid, double lin_tol)
    : grid_(std::move(grid)), lin_tol_(lin_tol), impl_(std::make_unique<Impl>()) {
  const Grid2& g = *grid_;
  const DiskDomain& dom = g.domain();
  const double h = g.h();
  Impl& im = *impl_;
  im.unknown_of.assign(g.size(), -1);
  for (std::size_t idx : g.active_nodes()) {
    im.unknown_of[idx] = static_cast<long>(im.node_of.size());
    im.node_of.push_back(idx);
  }
  const std::size_t n = im.node_of.size();
  im.arms.resize(n);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t idx = im.node_of[r];
    const int i = static_cast<int>(idx % g.nx());
    const int j = static_cast<int>(idx / g.nx());
    const Vec2 p = g.node(i, j);
    double arm_len[4];
    long nbr[4];
    double beta[4];
    for (int d = 0; d < 4; ++d) {
      const int ii = i + di[d];
      const int jj = j + dj[d];
      const std::size_t q = g.index(ii, jj);
      if (g.active(q)) {
        arm_len[d] = h;
        nbr[d] = im.unknown_of[q];
        beta[d] = 0.0;
      } else {
        const Vec2 e(di[d], dj[d]);
        const double b = (p - dom.center).dot(e);
        const double t = -b + std::sqrt(b * b - dom.level(p));
        arm_len[d] = t;
        nbr[d] = -1;
        beta[d] = dom.boundary_angle(p + t * e);
      }
    }
    double diag = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      const int fwd = 2 * axis;
      const int bwd = 2 * axis + 1;
      const double hf = arm_len[fwd];
      const double hb = arm_len[bwd];
      const double cf = 2.0 / (hf * (hf + hb));
      const double cb = 2.0 / (hb * (hf + hb));
      diag -= cf + cb;
      for (auto [d, c] : {std::pair{fwd, cf}, std::pair{bwd, cb}}) {
        if (nbr[d] >= 0) {
          trip.emplace_back(static_cast<int>(r), static_cast<int>(nbr[d]), c);
        } else {
          im.arms[r].push_back({c, beta[d]});
        }
      }
    }
    trip.emplace_back(static_cast<int>(r), static_cast<int>(r), diag);
  }
  im.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  im.matrix.setFromTriplets(trip.begin(), trip.end());
  im.matrix.makeCompressed();
  im.lu.compute(im.matrix);
  if (im.lu.info() != Eigen::Success) {
    throw SolverError("PoissonSolver: sparse factorization failed", 1.0);
  }
}

PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

ScalarField PoissonSolver::solve(const ScalarField& g, const BoundaryFunction& dirichlet) const {
  require_same_grid(*grid_, g.grid(), "PoissonSolver::solve");
  const Impl& im = *impl_;
  const Eigen::VectorXd b = im.rhs(g, dirichlet);
  ScalarField out(grid_);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    last_residual_ = 0.0;
    return out;
  }
  Eigen::VectorXd x = im.lu.solve(b);
  double rel = (im.matrix * x - b).norm() / bnorm;
  for (int refine = 0; refine < 3 && rel > lin_tol_; ++refine) {
    x += im.lu.solve(b - im.matrix * x);
    rel = (im.matrix * x - b).norm() / bnorm;
  }
  last_residual_ = rel;
  if (!(rel <= lin_tol_)) {
    std::ostringstream msg;
    msg << "PoissonSolver: relative residual " << rel << " above tolerance " << lin_tol_;
    throw SolverError(msg.str(), rel);
  }
  for (std::size_t r = 0; r < im.node_of.size(); ++r) out[im.node_of[r]] = x[static_cast<Eigen::Index>(r)];
  return out;
}

double PoissonSolver::residual(const ScalarField& phi, const ScalarField& g,
                               const BoundaryFunction& dirichlet) const {
  const Impl& im = *impl_;
  Eigen::VectorXd x(static_cast<Eigen::Index>(im.node_of.size()));
  for (std::size_t r = 0; r < im.node_of.size(); ++r) x[static_cast<Eigen::Index>(r)] = phi[im.node_of[r]];
  const Eigen::VectorXd res = im.matrix * x - im.rhs(g, dirichlet);
  return res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
}

ScalarField poisson_solve(const ScalarField& g, const BoundaryFunction& dirichlet, double lin_tol) {
  return PoissonSolver(g.grid_ptr(), lin_tol).solve(g, dirichlet);
}

}  // namespace rte
