#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "tmsnet/core/solvers.hpp"

namespace tmsnet::core {

namespace {

double error_norm(const CVec& err, const CVec& y0, const CVec& y1, double atol, double rtol) {
  double acc = 0.0;
  for (Index i = 0; i < err.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = std::abs(err[i]) / scale;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Index>(err.size(), 1)));
}

// Dormand-Prince 5(4) (autonomous, so stage times are not needed); lands exactly on
// each output time.
using VecSink = std::function<void(std::size_t, const CVec&)>;

void integrate_dopri(const SparseMat& a, CVec y, const std::vector<double>& times,
                     const SolverConfig& cfg, const VecSink& sink) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double t = 0.0;
  // Initial step from the generator's scale.
  double norm_inf = 0.0;
  for (Index col = 0; col < a.outerSize(); ++col) {
    double s = 0.0;
    for (SparseMat::InnerIterator it(a, col); it; ++it) s += std::abs(it.value());
    norm_inf = std::max(norm_inf, s);
  }
  double h = norm_inf > 0.0 ? 0.5 / norm_inf : 1.0;
  int steps = 0;
  CVec k1 = a * y, k2, k3, k4, k5, k6, k7, ytmp, ynew;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double target = times[k];
    while (t < target) {
      if (++steps > cfg.max_steps) throw SolverError("evolve: max_steps exceeded");
      const bool last = t + h >= target;
      const double step = last ? target - t : h;
      ytmp = y + step * a21 * k1;
      k2 = a * ytmp;
      ytmp = y + step * (a31 * k1 + a32 * k2);
      k3 = a * ytmp;
      ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
      k4 = a * ytmp;
      ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      k5 = a * ytmp;
      ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      k6 = a * ytmp;
      ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = a * ynew;
      CVec err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, ynew, cfg.abs_tol, cfg.rel_tol);
      if (en <= 1.0) {
        t = last ? target : t + step;
        y.swap(ynew);
        k1.swap(k7);
      }
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      const double proposal = step * factor;
      // Do not let a short final hop shrink the step used afterwards.
      h = (en <= 1.0 && last) ? std::max(h, proposal) : proposal;
      if (h < 1e-14 * std::max(1.0, std::abs(target))) {
        throw SolverError("evolve: step size underflow");
      }
    }
    sink(k, y);
  }
}

// Krylov action of the exponential with Expokit-style local error control.
void integrate_krylov(const SparseMat& a, CVec y, const std::vector<double>& times,
                      const SolverConfig& cfg, const VecSink& sink) {
  const Index n = a.rows();
  const int m = static_cast<int>(std::min<Index>(cfg.krylov_dim, std::max<Index>(n, 1)));
  double t = 0.0;
  double h = 0.0;
  int steps = 0;
  DenseMat v(n, m + 1);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double target = times[k];
    while (t < target) {
      if (++steps > cfg.max_steps) throw SolverError("evolve: max_steps exceeded");
      const double beta = y.norm();
      if (beta == 0.0) {
        t = target;
        break;
      }
      v.col(0) = y / beta;
      DenseMat hess = DenseMat::Zero(m + 2, m + 2);
      int mm = m;
      bool happy = false;
      for (int j = 0; j < m; ++j) {
        CVec w = a * v.col(j);
        for (int i = 0; i <= j; ++i) {
          hess(i, j) = v.col(i).dot(w);
          w -= hess(i, j) * v.col(i);
        }
        const double s = w.norm();
        if (s < 1e-12 * beta) {
          mm = j + 1;
          happy = true;
          break;
        }
        hess(j + 1, j) = s;
        v.col(j + 1) = w / s;
      }
      const double h_next = happy ? 0.0 : std::abs(hess(m, m - 1));
      if (h == 0.0) {
        const double anorm = hess.topLeftCorner(mm, mm).cwiseAbs().colwise().sum().maxCoeff();
        h = anorm > 0.0 ? 1.0 / anorm : target - t;
      }
      const double tol = std::max(cfg.abs_tol, cfg.rel_tol * beta);
      for (int attempt = 0;; ++attempt) {
        const double step = std::min(h, target - t);
        DenseMat aug;
        if (happy) {
          aug = step * hess.topLeftCorner(mm, mm);
        } else {
          // One extra row carries the coefficient of v_{m+1}, the local error estimate.
          aug = DenseMat::Zero(mm + 1, mm + 1);
          aug.topLeftCorner(mm, mm) = step * hess.topLeftCorner(mm, mm);
          aug(mm, mm - 1) = step * h_next;
        }
        const DenseMat e = aug.exp();
        const double err = happy ? 0.0 : beta * std::abs(e(mm, 0));
        if (err <= tol || attempt > 40) {
          if (err > tol) throw SolverError("evolve: Krylov step failed to meet the tolerance");
          CVec ynew = CVec::Zero(n);
          for (int i = 0; i < mm; ++i) ynew += (beta * e(i, 0)) * v.col(i);
          if (!happy) ynew += (beta * e(mm, 0)) * v.col(mm);
          y = std::move(ynew);
          t = (step == target - t) ? target : t + step;
          const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 1.0 / (mm + 1)) : 2.0;
          h = step * std::clamp(grow, 0.2, 2.0);
          break;
        }
        h = step * std::clamp(0.9 * std::pow(tol / err, 1.0 / (mm + 1)), 0.1, 0.5);
        if (h < 1e-14 * std::max(1.0, std::abs(target))) {
          throw SolverError("evolve: step size underflow");
        }
      }
    }
    sink(k, y);
  }
}

}  // namespace

void propagate(const Superoperator& l, const DenseMat& x0, const std::vector<double>& times,
               const SolverConfig& cfg, const TrajectorySink& sink) {
  cfg.validate();
  const Index d = l.dim();
  if (x0.rows() != d || x0.cols() != d) throw ValidationError("propagate: initial operator shape");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0.0 || (k > 0 && times[k] < times[k - 1])) {
      throw ValidationError("propagate: times must be non-negative and non-decreasing");
    }
  }
  const CVec v0 = vec(x0);
  std::vector<Index> seeds;
  for (Index i = 0; i < v0.size(); ++i) {
    if (v0[i] != cplx(0.0)) seeds.push_back(i);
  }
  if (seeds.empty()) {
    const DenseMat zero = DenseMat::Zero(d, d);
    for (std::size_t k = 0; k < times.size(); ++k) sink(k, zero);
    return;
  }
  const auto sector = invariant_closure(l.mat(), seeds);
  const SparseMat a = restrict_to(l.mat(), sector);
  CVec y(static_cast<Index>(sector.size()));
  for (std::size_t k = 0; k < sector.size(); ++k) y[k] = v0[sector[k]];

  CVec full = CVec::Zero(d * d);
  const VecSink scatter = [&](std::size_t k, const CVec& yk) {
    for (std::size_t i = 0; i < sector.size(); ++i) full[sector[i]] = yk[i];
    sink(k, unvec(full, d));
  };
  if (cfg.ode == OdeMethod::krylov) {
    integrate_krylov(a, std::move(y), times, cfg, scatter);
  } else {
    integrate_dopri(a, std::move(y), times, cfg, scatter);
  }
}

std::vector<DenseMat> propagate(const Superoperator& l, const DenseMat& x0,
                                const std::vector<double>& times, const SolverConfig& cfg) {
  std::vector<DenseMat> out;
  out.reserve(times.size());
  propagate(l, x0, times, cfg, [&out](std::size_t, const DenseMat& x) { out.push_back(x); });
  return out;
}

std::vector<DensityMatrix> evolve(const Superoperator& l, const DensityMatrix& rho0,
                                  const std::vector<double>& times, const SolverConfig& cfg) {
  require_same_space(l.space(), rho0.space(), "evolve");
  const auto traj = propagate(l, rho0.mat(), times, cfg);
  StateTolerance tol;
  tol.trace = std::max(1e-10, cfg.rel_tol);
  tol.hermiticity = 1e-9;
  std::vector<DensityMatrix> out;
  out.reserve(traj.size());
  for (const auto& x : traj) {
    const double drift = std::abs(x.trace() - 1.0);
    if (drift > tol.trace) {
      std::ostringstream msg;
      msg << "evolve: trace drift " << drift << " exceeds rel_tol " << cfg.rel_tol;
      throw SolverError(msg.str());
    }
    out.emplace_back(l.space(), x, tol);
  }
  return out;
}

}  // namespace tmsnet::core
