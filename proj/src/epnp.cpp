#include "feepe/pnp.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace feepe {

namespace {

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

constexpr std::array<std::pair<int, int>, 6> kPairs = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Horn's closed-form absolute orientation (no scale) from model points to
/// camera points.
Pose absolute_orientation(const Eigen::Matrix<double, Eigen::Dynamic, 3>& pw,
                          const Eigen::Matrix<double, Eigen::Dynamic, 3>& pc) {
  const Eigen::RowVector3d cw = pw.colwise().mean();
  const Eigen::RowVector3d cc = pc.colwise().mean();
  const Eigen::Matrix3d h =
      (pw.rowwise() - cw).transpose() * (pc.rowwise() - cc);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d v = svd.matrixV();
    v.col(2) *= -1.0;
    r = v * svd.matrixU().transpose();
  }
  const Eigen::Vector3d t = cc.transpose() - r * cw.transpose();
  return Pose(Rotation::from_matrix(r), t);
}

double reprojection_rmse(const Pose& pose,
                         std::span<const Eigen::Vector2d> us,
                         std::span<const Eigen::Vector3d> xs,
                         const CameraIntrinsics& k) {
  double sum = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const Eigen::Vector3d pc = pose * xs[i];
    if (pc.z() <= 1e-9) return 1e12;
    const Eigen::Vector2d u(k.fx * pc.x() / pc.z() + k.cx,
                            k.fy * pc.y() / pc.z() + k.cy);
    sum += (u - us[i]).squaredNorm();
  }
  return std::sqrt(sum / us.size());
}

/// betas(4) -> the 10 quadratic monomials in L's column order.
Eigen::Matrix<double, 10, 1> beta_monomials(const Eigen::Vector4d& b) {
  Eigen::Matrix<double, 10, 1> m;
  m << b[0] * b[0], b[0] * b[1], b[1] * b[1], b[0] * b[2], b[1] * b[2],
      b[2] * b[2], b[0] * b[3], b[1] * b[3], b[2] * b[3], b[3] * b[3];
  return m;
}

}  // namespace

double point_set_condition(std::span<const Eigen::Vector3d> points) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const double smax = std::sqrt(std::max(0.0, es.eigenvalues()[2]));
  const double smin = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
  if (smin <= 0.0) return 1e18;
  return smax / smin;
}

std::optional<Pose> epnp_solve(std::span<const Eigen::Vector2d> us,
                               std::span<const Eigen::Vector3d> xs,
                               const CameraIntrinsics& k) {
  const int n = static_cast<int>(us.size());
  if (n < 4 || us.size() != xs.size()) return std::nullopt;

  // Control points: centroid + principal directions scaled by the spread.
  Eigen::Matrix<double, Eigen::Dynamic, 3> pw(n, 3);
  for (int i = 0; i < n; ++i) pw.row(i) = xs[i];
  const Eigen::RowVector3d centroid = pw.colwise().mean();
  const Eigen::Matrix<double, Eigen::Dynamic, 3> centered =
      pw.rowwise() - centroid;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(centered.transpose() *
                                                    centered);
  if (es.eigenvalues()[0] < 1e-18 * std::max(1.0, es.eigenvalues()[2]))
    return std::nullopt;  // planar / collinear

  Eigen::Matrix<double, 4, 3> cw;
  cw.row(0) = centroid;
  for (int i = 0; i < 3; ++i) {
    const double s = std::sqrt(std::max(0.0, es.eigenvalues()[2 - i]) / n);
    cw.row(i + 1) = centroid + s * es.eigenvectors().col(2 - i).transpose();
  }

  // Barycentric coordinates of every point in the control-point basis.
  Eigen::Matrix3d basis;
  for (int i = 0; i < 3; ++i)
    basis.col(i) = (cw.row(i + 1) - cw.row(0)).transpose();
  const Eigen::Matrix3d basis_inv = basis.inverse();
  Eigen::MatrixXd alphas(n, 4);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d a123 =
        basis_inv * (pw.row(i) - cw.row(0)).transpose();
    alphas(i, 1) = a123[0];
    alphas(i, 2) = a123[1];
    alphas(i, 3) = a123[2];
    alphas(i, 0) = 1.0 - a123.sum();
  }

  // M x = 0, x = camera coordinates of the four control points.
  Eigen::MatrixXd m(2 * n, 12);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) {
      m(2 * i, 3 * j) = alphas(i, j) * k.fx;
      m(2 * i, 3 * j + 1) = 0.0;
      m(2 * i, 3 * j + 2) = alphas(i, j) * (k.cx - us[i].x());
      m(2 * i + 1, 3 * j) = 0.0;
      m(2 * i + 1, 3 * j + 1) = alphas(i, j) * k.fy;
      m(2 * i + 1, 3 * j + 2) = alphas(i, j) * (k.cy - us[i].y());
    }
  }
  const Mat12 mtm = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Mat12> mes(mtm);
  // v[0] = eigenvector of the smallest eigenvalue.
  std::array<Vec12, 4> v;
  for (int i = 0; i < 4; ++i) v[i] = mes.eigenvectors().col(i);

  // Distance constraints between control points.
  Eigen::Matrix<double, 6, 1> rho;
  Eigen::Matrix<double, 6, 10> L;
  for (int p = 0; p < 6; ++p) {
    const auto [a, b] = kPairs[p];
    rho[p] = (cw.row(a) - cw.row(b)).squaredNorm();
    std::array<Eigen::Vector3d, 4> dv;
    for (int i = 0; i < 4; ++i)
      dv[i] = v[i].segment<3>(3 * a) - v[i].segment<3>(3 * b);
    L(p, 0) = dv[0].dot(dv[0]);
    L(p, 1) = 2.0 * dv[0].dot(dv[1]);
    L(p, 2) = dv[1].dot(dv[1]);
    L(p, 3) = 2.0 * dv[0].dot(dv[2]);
    L(p, 4) = 2.0 * dv[1].dot(dv[2]);
    L(p, 5) = dv[2].dot(dv[2]);
    L(p, 6) = 2.0 * dv[0].dot(dv[3]);
    L(p, 7) = 2.0 * dv[1].dot(dv[3]);
    L(p, 8) = 2.0 * dv[2].dot(dv[3]);
    L(p, 9) = dv[3].dot(dv[3]);
  }

  // Three closed-form beta approximations (cases N=1, N=2, N=3).
  std::array<Eigen::Vector4d, 3> beta_candidates;
  {
    // N=1: betas = (b1, 0, 0, 0) from columns {b11, b12, b13, b14}.
    Eigen::Matrix<double, 6, 4> l4;
    l4 << L.col(0), L.col(1), L.col(3), L.col(6);
    const Eigen::Vector4d x =
        l4.colPivHouseholderQr().solve(rho);
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    b[0] = std::sqrt(std::abs(x[0]));
    if (b[0] > 1e-12) {
      b[1] = x[1] / b[0];
      b[2] = x[2] / b[0];
      b[3] = x[3] / b[0];
    }
    beta_candidates[0] = b;
  }
  {
    // N=2: columns {b11, b12, b22}.
    Eigen::Matrix<double, 6, 3> l3;
    l3 << L.col(0), L.col(1), L.col(2);
    const Eigen::Vector3d x = l3.colPivHouseholderQr().solve(rho);
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    b[0] = std::sqrt(std::abs(x[0]));
    b[1] = std::sqrt(std::abs(x[2]));
    if (x[1] < 0.0) b[1] = -b[1];
    beta_candidates[1] = b;
  }
  {
    // N=3: columns {b11, b12, b22, b13, b23}.
    Eigen::Matrix<double, 6, 5> l5;
    l5 << L.col(0), L.col(1), L.col(2), L.col(3), L.col(4);
    const Eigen::Matrix<double, 5, 1> x =
        l5.colPivHouseholderQr().solve(rho);
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    b[0] = std::sqrt(std::abs(x[0]));
    b[1] = std::sqrt(std::abs(x[2]));
    if (x[1] < 0.0) b[1] = -b[1];
    if (b[0] > 1e-12) b[2] = x[3] / b[0];
    beta_candidates[2] = b;
  }

  std::optional<Pose> best;
  double best_err = 1e11;
  for (auto betas : beta_candidates) {
    // Gauss-Newton refinement of the betas on the distance constraints.
    for (int iter = 0; iter < 8; ++iter) {
      Eigen::Matrix<double, 6, 4> jac;
      for (int p = 0; p < 6; ++p) {
        jac(p, 0) = 2.0 * L(p, 0) * betas[0] + L(p, 1) * betas[1] +
                    L(p, 3) * betas[2] + L(p, 6) * betas[3];
        jac(p, 1) = L(p, 1) * betas[0] + 2.0 * L(p, 2) * betas[1] +
                    L(p, 4) * betas[2] + L(p, 7) * betas[3];
        jac(p, 2) = L(p, 3) * betas[0] + L(p, 4) * betas[1] +
                    2.0 * L(p, 5) * betas[2] + L(p, 8) * betas[3];
        jac(p, 3) = L(p, 6) * betas[0] + L(p, 7) * betas[1] +
                    L(p, 8) * betas[2] + 2.0 * L(p, 9) * betas[3];
      }
      const Eigen::Matrix<double, 6, 1> res = rho - L * beta_monomials(betas);
      const Eigen::Vector4d step =
          jac.colPivHouseholderQr().solve(res);
      betas += step;
      if (step.norm() < 1e-12) break;
    }

    // Camera coordinates of control points, then of all points.
    Vec12 ccs_flat = Vec12::Zero();
    for (int i = 0; i < 4; ++i) ccs_flat += betas[i] * v[i];
    Eigen::Matrix<double, Eigen::Dynamic, 3> pc(n, 3);
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      for (int j = 0; j < 4; ++j) p += alphas(i, j) * ccs_flat.segment<3>(3 * j);
      pc.row(i) = p;
    }
    // Resolve the global sign so points are in front of the camera.
    int neg = 0;
    for (int i = 0; i < n; ++i)
      if (pc(i, 2) < 0.0) ++neg;
    if (2 * neg > n) pc = -pc;

    const Pose pose = absolute_orientation(pw, pc);
    const double err = reprojection_rmse(pose, us, xs, k);
    if (err < best_err) {
      best_err = err;
      best = pose;
    }
  }
  return best;
}

std::optional<Pose> dlt_solve(std::span<const Eigen::Vector2d> us,
                              std::span<const Eigen::Vector3d> xs,
                              const CameraIntrinsics& k) {
  const int n = static_cast<int>(us.size());
  if (n < 6 || us.size() != xs.size()) return std::nullopt;

  // Normalized coordinates remove the intrinsics.
  Eigen::MatrixXd a(2 * n, 12);
  for (int i = 0; i < n; ++i) {
    const double xn = (us[i].x() - k.cx) / k.fx;
    const double yn = (us[i].y() - k.cy) / k.fy;
    const Eigen::Vector3d& X = xs[i];
    a.row(2 * i) << X.x(), X.y(), X.z(), 1, 0, 0, 0, 0, -xn * X.x(),
        -xn * X.y(), -xn * X.z(), -xn;
    a.row(2 * i + 1) << 0, 0, 0, 0, X.x(), X.y(), X.z(), 1, -yn * X.x(),
        -yn * X.y(), -yn * X.z(), -yn;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const Vec12 p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> proj;
  proj << p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9], p[10],
      p[11];

  Eigen::Matrix3d r_raw = proj.leftCols<3>();
  const double det = r_raw.determinant();
  if (std::abs(det) < 1e-18) return std::nullopt;
  if (det < 0.0) proj = -proj;
  r_raw = proj.leftCols<3>();

  // Orthonormalize via SVD; scale recovered from the singular values.
  Eigen::JacobiSVD<Eigen::Matrix3d> rsvd(
      r_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = rsvd.matrixU() * rsvd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = rsvd.matrixU();
    u.col(2) *= -1.0;
    r = u * rsvd.matrixV().transpose();
  }
  const double scale = rsvd.singularValues().mean();
  if (scale < 1e-18) return std::nullopt;
  const Eigen::Vector3d t = proj.col(3) / scale;
  return Pose(Rotation::from_matrix(r), t);
}

}  // namespace feepe
