#pragma once

#include <array>
#include <functional>

#include <Eigen/Core>

#include "lt3d/camera.hpp"
#include "lt3d/session.hpp"

namespace lt3d {

/// Three camera rays f_i(u_i) = O + t_i u_i and the pairwise distances the
/// points on them must keep: d(0) = |p1 p2|, d(1) = |p2 p3|, d(2) = |p1 p3|.
struct RayProblem {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rays = Eigen::Matrix3d::Identity();  // columns t_1..t_3
  Eigen::Vector3d distances = Eigen::Vector3d::Ones();

  Eigen::Vector3d point(int i, double u) const { return origin + rays.col(i) * u; }
  /// F_k(u) = |t_i u_i - t_j u_j|^2 - d_ij^2 over the pairs (1,2), (2,3), (1,3).
  Eigen::Vector3d residual(const Eigen::Vector3d& u) const;
  Eigen::Matrix3d jacobian(const Eigen::Vector3d& u) const;
};

/// Rays through three lifted clicks and the distances between three picks.
RayProblem make_ray_problem(const Eigen::Vector3d& origin, const Eigen::Matrix3d& lifted_clicks,
                            const Eigen::Matrix3d& picks);

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct SolverConfig {
  double lower_bound = 1e-6;
  Eigen::Vector3d initial_guess = Eigen::Vector3d::Ones();
  double initial_radius = 1.0;
  double shrink = 0.25;
  double grow = 2.0;
  int max_iterations = 500;
  double ftol = 1e-8;
  double xtol = 1e-8;
  double gtol = 1e-8;
  double min_radius = 1e-14;
  double newton_tolerance = 1e-10;
  int newton_max_iterations = 50;
};

struct DogboxResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // 0.5 |F|^2
  int iterations = 0;
};

/// Bound-constrained least squares with a rectangular trust region: the
/// Gauss-Newton step, the Cauchy step and the dogleg path between them are
/// clipped to the box formed by the region and the lower bounds. Variables
/// resting on a bound with the gradient pushing outward are frozen for the
/// step. Throws kSolverFailure if the region collapses without progress or
/// the starting residual is not finite.
DogboxResult solve_dogbox(const ResidualFn& f, const JacobianFn& jac, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& lower, const SolverConfig& config = {});

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  bool declined = false;  // singular Jacobian, divergence or bound violation
};

/// Plain Newton-Raphson from x0. Falls back to x0 with `declined` set when
/// the Jacobian turns singular, the residual grows three steps in a row or an
/// iterate drops below the lower bound.
NewtonResult refine_newton(const ResidualFn& f, const JacobianFn& jac, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const SolverConfig& config = {});

struct RaySolution {
  Eigen::Vector3d u = Eigen::Vector3d::Ones();
  int dogbox_iterations = 0;
  int newton_iterations = 0;
  bool refinement_declined = false;
};

/// dogbox followed by Newton refinement.
RaySolution solve_rays(const RayProblem& problem, const SolverConfig& config = {});

struct Placement {
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();  // rigid, maps picks onto their rays
  Eigen::Matrix3d placed = Eigen::Matrix3d::Zero();         // f_1..f_3
  RaySolution solution;
};

/// Moves three picked points so that they project onto three clicked pixels
/// (image coordinates with the origin at the bottom-left) while keeping their
/// mutual distances. Clicks are lifted to depth 1 along their rays. The result
/// is the rigid motion taking `picks` onto the solved points. Throws
/// kSolverFailure when the solver stalls away from a root.
Placement solve_placement(const Intrinsics& k, const Extrinsics& e, const Eigen::Matrix<double, 2, 3>& clicks,
                          const Eigen::Matrix3d& picks, const SolverConfig& config = {});

/// solve_placement for picks given in the element's object frame. Left-
/// multiplying the element pose by the returned transform places it.
Placement place_box(const LabelingElement& element, const Intrinsics& k, const Extrinsics& e,
                    const Eigen::Matrix<double, 2, 3>& clicks, const Eigen::Matrix3d& object_picks);

}  // namespace lt3d
