#include "lt3d/meshless.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/QR>

#include "lt3d/error.hpp"
#include "lt3d/umeyama.hpp"

namespace lt3d {
namespace {

constexpr std::array<std::array<int, 2>, 3> kPairs{{{0, 1}, {1, 2}, {0, 2}}};
constexpr double kDistanceTolerance = 1e-6;  // relative, on the placed point distances

/// Largest t >= 0 with t * s inside [lb, ub] (componentwise, s != 0 parts).
double step_to_bound(const Eigen::VectorXd& s, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 0) t = std::min(t, ub(i) / s(i));
    if (s(i) < 0) t = std::min(t, lb(i) / s(i));
  }
  return std::max(t, 0.0);
}

bool in_box(const Eigen::VectorXd& p, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
  return (p.array() >= lb.array()).all() && (p.array() <= ub.array()).all();
}

struct DoglegStep {
  Eigen::VectorXd p;
  bool hits_boundary = false;
};

DoglegStep dogleg(const Eigen::VectorXd& gn, const Eigen::VectorXd& g, const Eigen::MatrixXd& j,
                  const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
  if (gn.allFinite() && in_box(gn, lb, ub)) return {gn, false};
  const double curvature = (j * g).squaredNorm();
  const Eigen::VectorXd cauchy =
      curvature > 0 ? Eigen::VectorXd(-(g.squaredNorm() / curvature) * g) : Eigen::VectorXd(-g);
  if (!in_box(cauchy, lb, ub) || curvature == 0 || !gn.allFinite()) {
    return {step_to_bound(cauchy, lb, ub) * cauchy, true};
  }
  // Walk from the Cauchy point towards Gauss-Newton until the box is hit.
  const Eigen::VectorXd dir = gn - cauchy;
  const double t = std::min(1.0, step_to_bound(dir, lb - cauchy, ub - cauchy));
  return {cauchy + t * dir, true};
}

}  // namespace

Eigen::Vector3d RayProblem::residual(const Eigen::Vector3d& u) const {
  Eigen::Vector3d f;
  for (int k = 0; k < 3; ++k) {
    const auto [i, j] = kPairs[k];
    f(k) = (rays.col(i) * u(i) - rays.col(j) * u(j)).squaredNorm() - distances(k) * distances(k);
  }
  return f;
}

Eigen::Matrix3d RayProblem::jacobian(const Eigen::Vector3d& u) const {
  Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) {
    const auto [i, j] = kPairs[k];
    const Eigen::Vector3d r = rays.col(i) * u(i) - rays.col(j) * u(j);
    jac(k, i) = 2 * r.dot(rays.col(i));
    jac(k, j) = -2 * r.dot(rays.col(j));
  }
  return jac;
}

RayProblem make_ray_problem(const Eigen::Vector3d& origin, const Eigen::Matrix3d& lifted_clicks,
                            const Eigen::Matrix3d& picks) {
  RayProblem p;
  p.origin = origin;
  p.rays = lifted_clicks.colwise() - origin;
  for (int k = 0; k < 3; ++k) {
    const auto [i, j] = kPairs[k];
    p.distances(k) = (picks.col(i) - picks.col(j)).norm();
    if (!(p.distances(k) > 0)) throw Error(ErrorCode::kDegenerate, "picked points coincide");
    if (!(p.rays.col(i).cross(p.rays.col(j)).norm() > 1e-12 * p.rays.col(i).norm() * p.rays.col(j).norm())) {
      throw Error(ErrorCode::kDegenerate, "clicked rays are parallel");
    }
  }
  return p;
}

DogboxResult solve_dogbox(const ResidualFn& fun, const JacobianFn& jac, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& lower, const SolverConfig& config) {
  Eigen::VectorXd x = x0.cwiseMax(lower);
  Eigen::VectorXd f = fun(x);
  double cost = 0.5 * f.squaredNorm();
  if (!std::isfinite(cost)) throw Error(ErrorCode::kSolverFailure, "residual is not finite at the starting point");
  double radius = config.initial_radius;
  DogboxResult out{x, cost, 0};

  for (int iter = 0; iter < config.max_iterations && cost > 0; ++iter) {
    const Eigen::MatrixXd j = jac(x);
    const Eigen::VectorXd g = j.transpose() * f;

    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!(x(i) <= lower(i) && g(i) > 0)) free.push_back(i);
    }
    if (free.empty()) break;
    const auto n = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd jf(j.rows(), n);
    Eigen::VectorXd gf(n), lo(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      jf.col(k) = j.col(free[k]);
      gf(k) = g(free[k]);
      lo(k) = lower(free[k]) - x(free[k]);
    }
    if (gf.cwiseAbs().maxCoeff() < config.gtol) break;
    const Eigen::VectorXd gn = jf.colPivHouseholderQr().solve(-f);

    double actual = 0;
    double step_norm = 0;
    bool converged = false;
    for (;;) {
      const Eigen::VectorXd lb = lo.cwiseMax(-radius);
      const Eigen::VectorXd ub = Eigen::VectorXd::Constant(n, radius);
      const DoglegStep step = dogleg(gn, gf, jf, lb, ub);
      const double predicted = -(gf.dot(step.p) + 0.5 * (jf * step.p).squaredNorm());

      Eigen::VectorXd x_new = x;
      for (Eigen::Index k = 0; k < n; ++k) x_new(free[k]) += step.p(k);
      x_new = x_new.cwiseMax(lower);
      const Eigen::VectorXd f_new = fun(x_new);
      const double cost_new = 0.5 * f_new.squaredNorm();
      actual = std::isfinite(cost_new) ? cost - cost_new : -std::numeric_limits<double>::infinity();
      const double rho = predicted > 0 && std::isfinite(actual) ? actual / predicted : -1.0;
      step_norm = step.p.cwiseAbs().maxCoeff();

      if (rho < 0.25) {
        radius = config.shrink * step_norm;
      } else if (rho > 0.75 && step.hits_boundary) {
        radius *= config.grow;
      }
      converged = (std::abs(actual) < config.ftol * cost && rho > 0.25) ||
                  step_norm < config.xtol * (config.xtol + x.cwiseAbs().maxCoeff());
      if (actual > 0) {
        x = x_new;
        f = f_new;
        cost = cost_new;
        break;
      }
      if (converged) break;
      if (!(radius >= config.min_radius)) {
        throw Error(ErrorCode::kSolverFailure, "trust region collapsed without progress");
      }
    }
    out.iterations = iter + 1;
    if (converged) break;
  }
  out.x = x;
  out.cost = cost;
  return out;
}

NewtonResult refine_newton(const ResidualFn& fun, const JacobianFn& jac, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const SolverConfig& config) {
  NewtonResult out{x0, 0, false, false};
  auto decline = [&](int iterations) {
    out.x = x0;
    out.iterations = iterations;
    out.declined = true;
    return out;
  };
  Eigen::VectorXd x = x0;
  Eigen::VectorXd f = fun(x);
  int growth = 0;
  for (int it = 0; it < config.newton_max_iterations; ++it) {
    if (f.cwiseAbs().maxCoeff() < config.newton_tolerance) {
      out.x = x;
      out.iterations = it;
      out.converged = true;
      return out;
    }
    const Eigen::MatrixXd j = jac(x);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return decline(it);
    const Eigen::VectorXd x_new = x - lu.solve(f);
    if (!x_new.allFinite() || (x_new.array() < lower.array()).any()) return decline(it + 1);
    const Eigen::VectorXd f_new = fun(x_new);
    growth = f_new.norm() > f.norm() ? growth + 1 : 0;
    if (growth >= 3) return decline(it + 1);
    x = x_new;
    f = f_new;
  }
  out.iterations = config.newton_max_iterations;
  out.converged = f.cwiseAbs().maxCoeff() < config.newton_tolerance;
  if (!out.converged && f.norm() >= fun(x0).norm()) return decline(out.iterations);
  out.x = x;
  return out;
}

RaySolution solve_rays(const RayProblem& problem, const SolverConfig& config) {
  const ResidualFn f = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return problem.residual(u); };
  const JacobianFn j = [&](const Eigen::VectorXd& u) -> Eigen::MatrixXd { return problem.jacobian(u); };
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(3, config.lower_bound);
  const DogboxResult coarse = solve_dogbox(f, j, config.initial_guess, lower, config);
  const NewtonResult fine = refine_newton(f, j, coarse.x, lower, config);
  RaySolution out;
  out.u = fine.x;
  out.dogbox_iterations = coarse.iterations;
  out.newton_iterations = fine.iterations;
  out.refinement_declined = fine.declined;
  return out;
}

Placement solve_placement(const Intrinsics& k, const Extrinsics& e, const Eigen::Matrix<double, 2, 3>& clicks,
                          const Eigen::Matrix3d& picks, const SolverConfig& config) {
  if (!clicks.allFinite() || !picks.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite input");
  const Eigen::Vector3d a = picks.col(1) - picks.col(0), b = picks.col(2) - picks.col(0);
  if (!(a.cross(b).norm() > 1e-9 * a.norm() * b.norm())) {
    throw Error(ErrorCode::kDegenerate, "picked points are collinear");
  }
  Eigen::Matrix3d lifted;
  for (int i = 0; i < 3; ++i) lifted.col(i) = back_project(k, e, Eigen::Vector2d(clicks.col(i)), 1.0);
  const Eigen::Vector3d origin = camera_center(e);
  const RayProblem problem = make_ray_problem(origin, lifted, picks);

  Placement out;
  out.solution = solve_rays(problem, config);
  for (int i = 0; i < 3; ++i) out.placed.col(i) = problem.point(i, out.solution.u(i));
  for (int k = 0; k < 3; ++k) {
    const auto [i, j] = kPairs[k];
    const double d = (out.placed.col(i) - out.placed.col(j)).norm();
    if (!(std::abs(d - problem.distances(k)) <= kDistanceTolerance * problem.distances(k))) {
      throw Error(ErrorCode::kSolverFailure, "solver stalled before the picked distances were met");
    }
  }
  out.transform = rigid_fit(picks, out.placed);
  return out;
}

Placement place_box(const LabelingElement& element, const Intrinsics& k, const Extrinsics& e,
                    const Eigen::Matrix<double, 2, 3>& clicks, const Eigen::Matrix3d& object_picks) {
  return solve_placement(k, e, clicks, transform_points(element.model_matrix(), object_picks));
}

}  // namespace lt3d
