// Copyright 2026 The vqu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file optimizer.hpp
 * @brief Bound-constrained derivative-free minimization with quadratic
 * interpolation models (BOBYQA family).
 *
 * The model interpolates f at 2n+1 points. Each time a point is replaced,
 * the change in the model Hessian has least Frobenius norm, using Powell's
 * update of the inverse of the interpolation KKT matrix
 *
 *     W = [ A   X^T ]     A_ij = (y_i . y_j)^2 / 2,   X = [1 ... 1; y_1 ... y_npt].
 *         [ X   0   ]
 *
 * Steps alternate between a truncated-CG trust-region step on the model and,
 * when the model is suspect, a geometry step that maximizes the magnitude of
 * the Lagrange function of the farthest interpolation point.
 */
#pragma once

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vqu/errors.hpp"
#include "vqu/linalg.hpp"

namespace vqu {

using LossFunction = std::function<double(const std::vector<double> &)>;

enum class Termination { TargetReached, BudgetExhausted, TrustRegionCollapsed, Stalled };

inline std::string to_string(Termination t) {
  switch (t) {
  case Termination::TargetReached:
    return "target-reached";
  case Termination::BudgetExhausted:
    return "budget-exhausted";
  case Termination::TrustRegionCollapsed:
    return "trust-region-collapsed";
  case Termination::Stalled:
    return "stalled";
  }
  return "unknown";
}

struct OptimizationProblem {
  std::size_t dimension = 0;
  LossFunction loss;
  std::vector<double> lower; ///< empty: -2 pi for every coordinate
  std::vector<double> upper; ///< empty: +2 pi for every coordinate
  std::vector<double> initial;
  std::size_t budget = 10000; ///< maximum evaluations per run
  double target = 1e-5;       ///< stop once loss <= target
  double rho_begin = 0.5;
  double rho_end = 1e-8;
  bool record_points = true; ///< keep every evaluated point in the trace
  /// Interpolation set size, in [dimension + 2, 2 dimension + 1]; 0 picks 2 dimension + 1.
  std::size_t interpolation_points = 0;
  /// Stop when the best loss has not fallen by 1% within this many evaluations; 0 never.
  std::size_t stall_window = 0;

  [[nodiscard]] std::size_t npt() const {
    return interpolation_points == 0 ? 2 * dimension + 1 : interpolation_points;
  }

  void validate() const {
    if (dimension == 0)
      throw InvalidDimensionError("optimization problem needs dimension >= 1");
    if (!loss)
      throw ValidationError("optimization problem has no loss function");
    if (initial.size() != dimension)
      throw ArityError("initial point has " + std::to_string(initial.size()) +
                       " coordinates, expected " + std::to_string(dimension));
    if ((!lower.empty() && lower.size() != dimension) ||
        (!upper.empty() && upper.size() != dimension))
      throw ArityError("bounds do not match the problem dimension");
    if (budget < 1)
      throw ValidationError("evaluation budget must be >= 1");
    for (std::size_t i = 0; i < dimension; ++i) {
      if (!(lower_bound(i) < upper_bound(i)))
        throw ValidationError("empty bound interval in coordinate " + std::to_string(i));
      if (initial[i] < lower_bound(i) || initial[i] > upper_bound(i))
        throw ValidationError("initial point outside the bounds in coordinate " +
                              std::to_string(i));
    }
    if (npt() < dimension + 2 || npt() > 2 * dimension + 1)
      throw ValidationError("interpolation_points must lie in [dimension + 2, 2 dimension + 1]");
    if (!(rho_end > 0.0 && rho_end <= rho_begin))
      throw ValidationError("need 0 < rho_end <= rho_begin");
  }

  [[nodiscard]] double lower_bound(std::size_t i) const {
    return lower.empty() ? -2.0 * kPi : lower[i];
  }
  [[nodiscard]] double upper_bound(std::size_t i) const {
    return upper.empty() ? 2.0 * kPi : upper[i];
  }
};

struct Evaluation {
  std::vector<double> point; ///< empty when the problem does not record points
  double loss = 0.0;
};

struct OptimizationTrace {
  std::vector<Evaluation> evaluations;
  std::vector<double> best_point;
  double best_loss = std::numeric_limits<double>::infinity();
  Termination termination = Termination::BudgetExhausted;
  /// Index into `evaluations` where each run starts. Always begins with 0.
  std::vector<std::size_t> run_starts{0};

  [[nodiscard]] std::size_t size() const { return evaluations.size(); }
  [[nodiscard]] std::size_t runs() const { return run_starts.size(); }
  [[nodiscard]] std::size_t restarts_used() const { return run_starts.size() - 1; }
};

/// A loss returned NaN or infinity. Carries everything evaluated so far.
class EvaluationError : public Error {
public:
  EvaluationError(const std::string &what, OptimizationTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  [[nodiscard]] const OptimizationTrace &trace() const { return trace_; }

private:
  OptimizationTrace trace_;
};

namespace detail {

class Bobyqa {
public:
  explicit Bobyqa(const OptimizationProblem &p)
      : prob_(p), n_(static_cast<Eigen::Index>(p.dimension)), npt_(static_cast<Eigen::Index>(p.npt())),
        nw_(npt_ + n_ + 1) {
    lo_.resize(n_);
    hi_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      lo_(i) = p.lower_bound(static_cast<std::size_t>(i));
      hi_(i) = p.upper_bound(static_cast<std::size_t>(i));
    }
    rho_beg_ = p.rho_begin;
    for (Eigen::Index i = 0; i < n_; ++i)
      rho_beg_ = std::min(rho_beg_, (hi_(i) - lo_(i)) / 3.0);
    rho_end_ = std::min(p.rho_end, rho_beg_);
  }

  OptimizationTrace run() {
    xbase_ = Eigen::Map<const Eigen::VectorXd>(prob_.initial.data(), n_);
    const double f0 = evaluate(xbase_);
    if (done(f0))
      return finish(Termination::TargetReached);

    if (!initialize())
      return finish(stop_reason_);

    double rho = rho_beg_;
    double delta = rho;
    double ratio = -1.0;
    double dnorm = 0.0;

    for (;;) {
      maybe_shift_base(delta);
      const Eigen::VectorXd xopt = y_.row(kopt_).transpose();
      const Eigen::VectorXd gopt = g_ + hess_vec(xopt);
      const Eigen::VectorXd d = trust_region_step(xopt, gopt, delta);
      dnorm = d.norm();

      bool check_geometry = false;
      if (dnorm < 0.5 * rho) {
        delta = 0.5 * delta;
        if (delta <= 1.5 * rho)
          delta = rho;
        ratio = -1.0;
        check_geometry = true;
      } else {
        const double predicted = -(gopt.dot(d) + 0.5 * d.dot(hess_vec(d)));
        const Eigen::VectorXd xnew = clamp(xopt + d);
        const double fnew = evaluate(xbase_ + xnew);
        if (done(fnew))
          return finish(stop_reason_);
        const double fopt = fval_(kopt_);
        ratio = predicted > 0.0 ? (fopt - fnew) / predicted : -1.0;

        if (ratio <= 0.1)
          delta = std::min(0.5 * delta, dnorm);
        else if (ratio <= 0.7)
          delta = std::max(0.5 * delta, dnorm);
        else
          delta = std::max(0.5 * delta, 2.0 * dnorm);
        if (delta <= 1.5 * rho)
          delta = rho;

        const Eigen::Index t = choose_replacement(xnew, fnew < fopt, delta);
        if (t >= 0)
          replace_point(t, xnew, fnew);
        if (ratio >= 0.1)
          continue;
        check_geometry = true;
      }

      if (check_geometry) {
        const Eigen::VectorXd xo = y_.row(kopt_).transpose();
        Eigen::Index far = -1;
        double far_sq = 0.0;
        for (Eigen::Index k = 0; k < npt_; ++k) {
          const double dsq = (y_.row(k).transpose() - xo).squaredNorm();
          if (dsq > far_sq) {
            far_sq = dsq;
            far = k;
          }
        }
        if (far >= 0 && far_sq > std::max(delta * delta, 4.0 * rho * rho)) {
          const double adelt = std::max(std::min(0.1 * std::sqrt(far_sq), delta), rho);
          const Eigen::VectorXd xg = geometry_step(far, adelt);
          const double fg = evaluate(xbase_ + xg);
          if (done(fg))
            return finish(stop_reason_);
          replace_point(far, xg, fg);
          continue;
        }
        if (ratio > 0.0 || std::max(delta, dnorm) > rho)
          continue;
      }

      if (rho <= rho_end_)
        return finish(Termination::TrustRegionCollapsed);
      const double old = rho;
      if (rho > 250.0 * rho_end_)
        rho *= 0.1;
      else if (rho > 16.0 * rho_end_)
        rho = std::sqrt(rho * rho_end_);
      else
        rho = rho_end_;
      delta = std::max(0.5 * old, rho);
    }
  }

  OptimizationTrace trace_;

private:
  // --- evaluation bookkeeping -------------------------------------------

  double evaluate(const Eigen::VectorXd &x) {
    std::vector<double> pt(x.data(), x.data() + x.size());
    for (std::size_t i = 0; i < pt.size(); ++i)
      pt[i] = std::clamp(pt[i], prob_.lower_bound(i), prob_.upper_bound(i));
    const double f = prob_.loss(pt);
    if (!std::isfinite(f)) {
      trace_.evaluations.push_back({pt, f});
      throw EvaluationError("loss returned a non-finite value at evaluation " +
                                std::to_string(trace_.evaluations.size()),
                            trace_);
    }
    if (f < trace_.best_loss) {
      trace_.best_loss = f;
      trace_.best_point = pt;
    }
    trace_.evaluations.push_back({prob_.record_points ? pt : std::vector<double>{}, f});
    return f;
  }

  /// Checks the stopping rules after an evaluation.
  bool done(double f) {
    if (f <= prob_.target) {
      stop_reason_ = Termination::TargetReached;
      return true;
    }
    if (evals_in_run() >= prob_.budget) {
      stop_reason_ = Termination::BudgetExhausted;
      return true;
    }
    if (trace_.best_loss < 0.99 * stall_ref_) {
      stall_ref_ = trace_.best_loss;
      stall_since_ = evals_in_run();
    } else if (prob_.stall_window > 0 && evals_in_run() - stall_since_ >= prob_.stall_window) {
      stop_reason_ = Termination::Stalled;
      return true;
    }
    return false;
  }

  std::size_t evals_in_run() const { return trace_.evaluations.size(); }

  OptimizationTrace finish(Termination t) {
    trace_.termination = t;
    return std::move(trace_);
  }

  // --- interpolation set ------------------------------------------------

  bool initialize() {
    y_ = Eigen::MatrixXd::Zero(npt_, n_);
    fval_ = Eigen::VectorXd::Zero(npt_);
    fval_(0) = trace_.evaluations.back().loss;
    const Eigen::VectorXd sl = lo_ - xbase_;
    const Eigen::VectorXd su = hi_ - xbase_;
    const double r = rho_beg_;
    for (Eigen::Index i = 0; i < n_; ++i) {
      double a = r;
      double b = -r;
      if (sl(i) > -r) { // near the lower bound: both points above
        a = r;
        b = 2.0 * r;
      } else if (su(i) < r) { // near the upper bound: both points below
        a = -r;
        b = -2.0 * r;
      }
      y_(1 + i, i) = a;
      if (1 + n_ + i < npt_)
        y_(1 + n_ + i, i) = b;
    }
    for (Eigen::Index k = 1; k < npt_; ++k) {
      const double f = evaluate(xbase_ + y_.row(k).transpose());
      fval_(k) = f;
      if (done(f))
        return false;
    }
    kopt_ = 0;
    for (Eigen::Index k = 1; k < npt_; ++k)
      if (fval_(k) < fval_(kopt_))
        kopt_ = k;

    rebuild_inverse();
    // Least-Frobenius-norm quadratic through the initial points.
    hq_ = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nw_);
    rhs.head(npt_) = fval_;
    const Eigen::VectorXd coef = h_ * rhs;
    pq_ = coef.head(npt_);
    g_ = coef.tail(n_);
    return true;
  }

  /// H = W^{-1}, inverted in coordinates scaled by the current spread so
  /// that the quartic and linear blocks are of comparable size.
  void rebuild_inverse() {
    double scale = 0.0;
    for (Eigen::Index k = 0; k < npt_; ++k)
      scale = std::max(scale, y_.row(k).norm());
    if (scale == 0.0)
      scale = 1.0;
    const Eigen::MatrixXd ys = y_ / scale;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nw_, nw_);
    const Eigen::MatrixXd gram = ys * ys.transpose();
    w.topLeftCorner(npt_, npt_) = 0.5 * gram.array().square().matrix();
    for (Eigen::Index k = 0; k < npt_; ++k) {
      w(k, npt_) = w(npt_, k) = 1.0;
      for (Eigen::Index i = 0; i < n_; ++i)
        w(k, npt_ + 1 + i) = w(npt_ + 1 + i, k) = ys(k, i);
    }
    const Eigen::MatrixXd hs = w.partialPivLu().inverse();
    // W = P Ws P with P = diag(s^2 (npt), 1/s^2, 1/s (n)); H = P^{-1} Hs P^{-1}.
    Eigen::VectorXd pinv(nw_);
    pinv.head(npt_).setConstant(1.0 / (scale * scale));
    pinv(npt_) = scale * scale;
    pinv.tail(n_).setConstant(scale);
    h_ = pinv.asDiagonal() * hs * pinv.asDiagonal();
  }

  Eigen::VectorXd hess_vec(const Eigen::VectorXd &v) const {
    const Eigen::VectorXd yv = y_ * v;
    return hq_ * v + y_.transpose() * (pq_.array() * yv.array()).matrix();
  }

  Eigen::VectorXd w_vector(const Eigen::VectorXd &x) const {
    Eigen::VectorXd w(nw_);
    const Eigen::VectorXd yx = y_ * x;
    w.head(npt_) = 0.5 * yx.array().square().matrix();
    w(npt_) = 1.0;
    w.tail(n_) = x;
    return w;
  }

  Eigen::Index choose_replacement(const Eigen::VectorXd &xnew, bool improved, double delta) {
    const Eigen::VectorXd w = w_vector(xnew);
    const Eigen::VectorXd hw = h_ * w;
    const double beta = 0.5 * std::pow(xnew.squaredNorm(), 2) - w.dot(hw);
    const Eigen::VectorXd centre = improved ? xnew : Eigen::VectorXd(y_.row(kopt_).transpose());
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index k = 0; k < npt_; ++k) {
      if (!improved && k == kopt_)
        continue;
      const double sigma = h_(k, k) * beta + hw(k) * hw(k);
      const double dsq = (y_.row(k).transpose() - centre).squaredNorm();
      const double weight = std::max(1.0, std::pow(dsq / (delta * delta), 2));
      const double score = weight * std::abs(sigma);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    return best;
  }

  void replace_point(Eigen::Index t, const Eigen::VectorXd &xnew, double fnew) {
    const Eigen::VectorXd xopt = y_.row(kopt_).transpose();
    const double fopt = fval_(kopt_);
    const Eigen::VectorXd d = xnew - xopt;
    const Eigen::VectorXd gopt = g_ + hess_vec(xopt);
    const double diff = fnew - (fopt + gopt.dot(d) + 0.5 * d.dot(hess_vec(d)));

    // H update for y_t -> xnew.
    const Eigen::VectorXd w = w_vector(xnew);
    const Eigen::VectorXd hw = h_ * w;
    const double alpha = h_(t, t);
    const double tau = hw(t);
    const double beta = 0.5 * std::pow(xnew.squaredNorm(), 2) - w.dot(hw);
    const double sigma = alpha * beta + tau * tau;

    // Old point's implicit Hessian term becomes explicit.
    const Eigen::VectorXd yt = y_.row(t).transpose();
    hq_.noalias() += pq_(t) * yt * yt.transpose();
    pq_(t) = 0.0;
    y_.row(t) = xnew.transpose();
    fval_(t) = fnew;

    const double scale = std::max(std::abs(alpha * beta), tau * tau);
    if (!(std::abs(sigma) > 1e-12 * scale) || !std::isfinite(sigma)) {
      rebuild_inverse();
    } else {
      Eigen::VectorXd u = -hw;
      u(t) += 1.0;
      const Eigen::VectorXd ht = h_.col(t);
      const double ca = alpha / sigma;
      const double cb = beta / sigma;
      const double ct = tau / sigma;
      for (Eigen::Index c = 0; c < nw_; ++c) {
        const double uc = ca * u(c) + ct * ht(c);
        const double hc = ct * u(c) - cb * ht(c);
        h_.col(c) += uc * u + hc * ht;
      }
    }

    // Model += diff * (Lagrange function of t).
    pq_ += diff * h_.col(t).head(npt_);
    g_ += diff * h_.col(t).tail(n_);

    if (fnew < fopt)
      kopt_ = t;
  }

  /// Move xbase to xopt when the iterate has drifted far from it.
  void maybe_shift_base(double delta) {
    const Eigen::VectorXd s = y_.row(kopt_).transpose();
    if (s.squaredNorm() <= 1e3 * delta * delta)
      return;
    // g at the new base; implicit Hessian terms change with y, fix in hq.
    g_ += hess_vec(s);
    const Eigen::VectorXd v = y_.transpose() * pq_;
    const double psum = pq_.sum();
    hq_.noalias() += v * s.transpose() + s * v.transpose() - psum * s * s.transpose();
    y_.rowwise() -= s.transpose();
    xbase_ += s;
    rebuild_inverse();
  }

  Eigen::VectorXd clamp(const Eigen::VectorXd &x) const {
    return x.cwiseMax(lo_ - xbase_).cwiseMin(hi_ - xbase_);
  }

  // --- steps -------------------------------------------------------------

  /// Truncated conjugate gradient on the model inside ||d|| <= delta and the box.
  /// Variables that hit a bound are fixed and CG restarts on the rest.
  Eigen::VectorXd trust_region_step(const Eigen::VectorXd &xopt, const Eigen::VectorXd &gopt,
                                    double delta) const {
    const Eigen::VectorXd sl = lo_ - xbase_ - xopt;
    const Eigen::VectorXd su = hi_ - xbase_ - xopt;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd freemask = Eigen::VectorXd::Ones(n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      if ((sl(i) >= 0.0 && gopt(i) > 0.0) || (su(i) <= 0.0 && gopt(i) < 0.0))
        freemask(i) = 0.0;

    const double dsq = delta * delta;
    double qred = 0.0; // total model reduction so far
    for (Eigen::Index restart = 0; restart <= n_; ++restart) {
      Eigen::VectorXd r = -(gopt + hess_vec(s)).cwiseProduct(freemask);
      Eigen::VectorXd p = r;
      double rr = r.squaredNorm();
      bool fixed = false;
      const double rr0 = rr;
      for (Eigen::Index it = 0; it < n_ && rr > 1e-30 * std::max(1.0, rr0); ++it) {
        // Stop once the gradient is too small to matter against the reduction made.
        if (qred > 0.0 && rr * dsq <= 1e-4 * qred * qred)
          return s;
        const Eigen::VectorXd hp = hess_vec(p).cwiseProduct(freemask);
        const double curv = p.dot(hp);
        // Distance to the trust-region boundary along p.
        const double ss = s.squaredNorm();
        const double sp = s.dot(p);
        const double pp = p.squaredNorm();
        const double rem = std::max(0.0, dsq - ss);
        const double t_tr = rem / (sp + std::sqrt(sp * sp + pp * rem));
        // Distance to the box along p.
        double t_box = std::numeric_limits<double>::infinity();
        Eigen::Index hit = -1;
        for (Eigen::Index i = 0; i < n_; ++i) {
          if (freemask(i) == 0.0 || p(i) == 0.0)
            continue;
          const double lim = p(i) > 0.0 ? (su(i) - s(i)) / p(i) : (sl(i) - s(i)) / p(i);
          if (lim < t_box) {
            t_box = std::max(0.0, lim);
            hit = i;
          }
        }
        const double t_cg = curv > 0.0 ? rr / curv : std::numeric_limits<double>::infinity();
        const double t = std::min({t_cg, t_tr, t_box});
        s += t * p;
        const double sdec = t * rr - 0.5 * t * t * curv;
        qred += sdec;
        if (t == t_box && hit >= 0 && t_box < t_tr && t_box <= t_cg) {
          s(hit) = p(hit) > 0.0 ? su(hit) : sl(hit);
          freemask(hit) = 0.0;
          fixed = true;
          break;
        }
        if (t >= t_tr || sdec <= 0.01 * qred)
          return s;
        const Eigen::VectorXd rnew = r - t * hp;
        const double rrnew = rnew.squaredNorm();
        p = rnew + (rrnew / rr) * p;
        r = rnew;
        rr = rrnew;
      }
      if (!fixed)
        break;
    }
    return s;
  }

  /// A point near xopt that makes the Lagrange function of point t large in
  /// magnitude: candidate lines through xopt and every other interpolation
  /// point, plus the projected gradient direction of that Lagrange function.
  Eigen::VectorXd geometry_step(Eigen::Index t, double adelt) const {
    const Eigen::VectorXd xopt = y_.row(kopt_).transpose();
    const Eigen::VectorXd sl = lo_ - xbase_ - xopt;
    const Eigen::VectorXd su = hi_ - xbase_ - xopt;
    const Eigen::VectorXd lam = h_.col(t).head(npt_);
    const Eigen::VectorXd lg = h_.col(t).tail(n_);
    // Gradient of the Lagrange function at xopt.
    const Eigen::VectorXd yx = y_ * xopt;
    const Eigen::VectorXd glag = lg + y_.transpose() * (lam.array() * yx.array()).matrix();

    Eigen::VectorXd best = Eigen::VectorXd::Zero(n_);
    double best_val = -1.0;

    for (Eigen::Index k = 0; k < npt_; ++k) {
      if (k == kopt_)
        continue;
      const Eigen::VectorXd dir = y_.row(k).transpose() - xopt;
      const double len = dir.norm();
      if (len == 0.0)
        continue;
      // Along xopt + a*dir the Lagrange function is dd*a + (delta_tk - dd)*a^2.
      const double dd = glag.dot(dir);
      const double endval = k == t ? 1.0 : 0.0;
      const double quad = endval - dd;
      double amax = adelt / len;
      double amin = -amax;
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (dir(i) > 0.0) {
          amax = std::min(amax, su(i) / dir(i));
          amin = std::max(amin, sl(i) / dir(i));
        } else if (dir(i) < 0.0) {
          amax = std::min(amax, sl(i) / dir(i));
          amin = std::max(amin, su(i) / dir(i));
        }
      }
      auto consider = [&](double a) {
        const double v = std::abs(dd * a + quad * a * a);
        if (v > best_val) {
          best_val = v;
          best = a * dir;
        }
      };
      consider(amax);
      consider(amin);
      if (quad != 0.0) {
        const double astar = -dd / (2.0 * quad);
        if (astar > amin && astar < amax)
          consider(astar);
      }
    }

    // Projected gradient direction, both signs.
    Eigen::VectorXd dir = glag;
    for (Eigen::Index i = 0; i < n_; ++i)
      if ((dir(i) > 0.0 && su(i) <= 0.0) || (dir(i) < 0.0 && sl(i) >= 0.0))
        dir(i) = 0.0;
    if (dir.norm() > 0.0) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd s = sign * adelt * dir / dir.norm();
        s = s.cwiseMax(sl).cwiseMin(su);
        const Eigen::VectorXd ys = y_ * s;
        const double v = std::abs(
            glag.dot(s) + 0.5 * (lam.array() * ys.array().square()).sum());
        if (v > best_val) {
          best_val = v;
          best = s;
        }
      }
    }
    return clamp(xopt + best);
  }

  const OptimizationProblem &prob_;
  Eigen::Index n_;
  Eigen::Index npt_;
  Eigen::Index nw_;
  Eigen::VectorXd lo_, hi_;
  double rho_beg_ = 0.5;
  double rho_end_ = 1e-8;

  Eigen::VectorXd xbase_;
  Eigen::MatrixXd y_; ///< interpolation points relative to xbase, one per row
  Eigen::VectorXd fval_;
  Eigen::Index kopt_ = 0;
  Eigen::MatrixXd h_;  ///< inverse KKT matrix
  Eigen::MatrixXd hq_; ///< explicit part of the model Hessian
  Eigen::VectorXd pq_; ///< implicit Hessian weights: sum_k pq_k y_k y_k^T
  Eigen::VectorXd g_;  ///< model gradient at xbase
  Termination stop_reason_ = Termination::BudgetExhausted;
  double stall_ref_ = std::numeric_limits<double>::infinity();
  std::size_t stall_since_ = 0;
};

} // namespace detail

/// One run of the trust-region method from problem.initial.
/// Deterministic: the same problem always yields the same trace.
inline OptimizationTrace minimize(const OptimizationProblem &problem) {
  problem.validate();
  detail::Bobyqa solver(problem);
  return solver.run();
}

/// The random source is not consumed by a single run; the overload exists so
/// that call sites read the same with and without restarts.
inline OptimizationTrace minimize(const OptimizationProblem &problem, Rng & /*rng*/) {
  return minimize(problem);
}

/// Runs minimize; while the best loss is above target, restarts from a point
/// drawn uniformly within the bounds, at most max_restarts times. Traces are
/// concatenated and run boundaries recorded.
inline OptimizationTrace minimize_with_restarts(const OptimizationProblem &problem, Rng &rng,
                                                std::size_t max_restarts) {
  problem.validate();
  OptimizationTrace total;
  total.run_starts.clear();
  OptimizationProblem current = problem;
  for (std::size_t run = 0;; ++run) {
    total.run_starts.push_back(total.evaluations.size());
    OptimizationTrace t;
    try {
      t = minimize(current);
    } catch (const EvaluationError &e) {
      OptimizationTrace partial = total;
      const auto &tail = e.trace().evaluations;
      partial.evaluations.insert(partial.evaluations.end(), tail.begin(), tail.end());
      if (e.trace().best_loss < partial.best_loss) {
        partial.best_loss = e.trace().best_loss;
        partial.best_point = e.trace().best_point;
      }
      throw EvaluationError(e.what(), std::move(partial));
    }
    total.evaluations.insert(total.evaluations.end(),
                             std::make_move_iterator(t.evaluations.begin()),
                             std::make_move_iterator(t.evaluations.end()));
    if (t.best_loss < total.best_loss) {
      total.best_loss = t.best_loss;
      total.best_point = t.best_point;
    }
    total.termination = t.termination;
    if (total.best_loss <= problem.target) {
      total.termination = Termination::TargetReached;
      return total;
    }
    if (run >= max_restarts)
      return total;
    for (std::size_t i = 0; i < problem.dimension; ++i) {
      std::uniform_real_distribution<double> u(problem.lower_bound(i), problem.upper_bound(i));
      current.initial[i] = u(rng);
    }
  }
}

/// Poisson counts with mean shots * p_k for each outcome, normalized by
/// their total. Returns all zeros when no event is drawn.
inline std::vector<double> sample_frequencies(const std::vector<double> &probs, double shots,
                                              Rng &rng) {
  std::vector<double> freq(probs.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double mean = std::max(0.0, probs[k]) * shots;
    if (mean <= 0.0)
      continue;
    std::poisson_distribution<long> pois(mean);
    freq[k] = static_cast<double>(pois(rng));
    total += freq[k];
  }
  if (total > 0.0)
    for (auto &f : freq)
      f /= total;
  return freq;
}

/// One JSON object per evaluation: {"eval", "run", "loss", "point"}.
inline void write_trace_jsonl(std::ostream &os, const OptimizationTrace &trace) {
  std::size_t run = 0;
  for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
    while (run + 1 < trace.run_starts.size() && trace.run_starts[run + 1] <= i)
      ++run;
    nlohmann::json j{{"eval", i}, {"run", run}, {"loss", trace.evaluations[i].loss}};
    if (!trace.evaluations[i].point.empty())
      j["point"] = trace.evaluations[i].point;
    os << j.dump() << '\n';
  }
}

inline void to_json(nlohmann::json &j, const OptimizationTrace &t) {
  std::vector<double> losses;
  losses.reserve(t.evaluations.size());
  for (const auto &e : t.evaluations)
    losses.push_back(e.loss);
  j = nlohmann::json{{"evaluations", t.evaluations.size()},
                     {"best_loss", t.best_loss},
                     {"best_point", t.best_point},
                     {"termination", to_string(t.termination)},
                     {"run_starts", t.run_starts},
                     {"losses", losses}};
}

} // namespace vqu
