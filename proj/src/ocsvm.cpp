#include "fired/detectors.hpp"
#include "fired/error.hpp"
#include "fired/stats.hpp"

#include <cmath>
#include <limits>
#include <list>

namespace fired {

double ocsvm_default_gamma(const Eigen::MatrixXd& data) {
  const double var = population_variance(data.reshaped());
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(data.cols()) * var);
}

namespace {

// LRU cache of RBF kernel rows. With a budget covering every row it degrades
// into a lazily filled full Gram matrix.
class KernelRows {
 public:
  KernelRows(const Eigen::MatrixXd& data, double gamma, double cache_mb)
      : data_(data), gamma_(gamma), slot_of_(static_cast<std::size_t>(data.rows()), -1) {
    const double row_bytes = static_cast<double>(data.rows()) * sizeof(double);
    capacity_ = std::max<Index>(2, static_cast<Index>(cache_mb * 1024.0 * 1024.0 / row_bytes));
    capacity_ = std::min(capacity_, data.rows());
  }

  const Eigen::VectorXd& row(Index i) {
    auto& slot = slot_of_[static_cast<std::size_t>(i)];
    if (slot >= 0) {
      lru_.splice(lru_.begin(), lru_, where_[static_cast<std::size_t>(slot)]);
      return rows_[static_cast<std::size_t>(slot)];
    }
    Index s;
    if (static_cast<Index>(rows_.size()) < capacity_) {
      s = static_cast<Index>(rows_.size());
      rows_.emplace_back(data_.rows());
      owner_.push_back(i);
      lru_.push_front(s);
      where_.push_back(lru_.begin());
    } else {
      s = lru_.back();
      slot_of_[static_cast<std::size_t>(owner_[static_cast<std::size_t>(s)])] = -1;
      owner_[static_cast<std::size_t>(s)] = i;
      lru_.splice(lru_.begin(), lru_, std::prev(lru_.end()));
    }
    slot = s;
    auto& r = rows_[static_cast<std::size_t>(s)];
    r = (-gamma_ * (data_.rowwise() - data_.row(i)).rowwise().squaredNorm().array()).exp().matrix();
    return r;
  }

 private:
  const Eigen::MatrixXd& data_;
  double gamma_;
  Index capacity_ = 2;
  std::vector<Index> slot_of_;
  std::vector<Eigen::VectorXd> rows_;
  std::vector<Index> owner_;
  std::list<Index> lru_;
  std::vector<std::list<Index>::iterator> where_;
};

}  // namespace

OcsvmModel ocsvm_fit(const Eigen::MatrixXd& data, double nu, double gamma, double tolerance,
                     Index max_iterations, double cache_mb) {
  const Index l = data.rows();
  if (l < 2) throw Error(ErrorCode::TooFewSamples, "one-class SVM needs at least 2 rows");
  if (!(nu > 0.0 && nu <= 1.0)) throw Error(ErrorCode::InvalidConfig, "nu must lie in (0,1]");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidConfig, "gamma must be positive");
  if (max_iterations <= 0) max_iterations = std::max<Index>(10'000'000, 100 * l);

  KernelRows kernel(data, gamma, cache_mb);
  // K(i,i) = 1 for the RBF kernel
  constexpr double diag = 1.0;
  constexpr double upper = 1.0;
  constexpr double tau = 1e-12;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
  const double total = nu * static_cast<double>(l);
  const auto full = static_cast<Index>(std::floor(total));
  for (Index i = 0; i < std::min(full, l); ++i) alpha(i) = upper;
  if (full < l) alpha(full) = total - static_cast<double>(full);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(l);
  for (Index i = 0; i < l; ++i) {
    if (alpha(i) > 0.0) grad += alpha(i) * kernel.row(i);
  }

  Index iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (; iter < max_iterations; ++iter) {
    // i: steepest ascent candidate among variables that can still grow
    double gmax = -std::numeric_limits<double>::infinity();
    Index i = -1;
    for (Index t = 0; t < l; ++t) {
      if (alpha(t) < upper && -grad(t) >= gmax) {
        gmax = -grad(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      const Eigen::VectorXd& qi = kernel.row(i);
      for (Index t = 0; t < l; ++t) {
        if (!(alpha(t) > 0.0)) continue;
        gmax2 = std::max(gmax2, grad(t));
        const double diff = gmax + grad(t);
        if (diff > 0.0) {
          double quad = diag + diag - 2.0 * qi(t);
          if (quad <= 0.0) quad = tau;
          const double obj = -diff * diff / quad;
          if (obj <= best) {
            best = obj;
            j = t;
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (i < 0 || j < 0 || gap < tolerance) break;

    const Eigen::VectorXd qi = kernel.row(i);
    const Eigen::VectorXd& qj = kernel.row(j);
    const double old_i = alpha(i);
    const double old_j = alpha(j);
    double quad = diag + diag - 2.0 * qi(j);
    if (quad <= 0.0) quad = tau;
    const double delta = (grad(i) - grad(j)) / quad;
    const double sum = alpha(i) + alpha(j);
    alpha(i) -= delta;
    alpha(j) += delta;
    if (sum > upper) {
      if (alpha(i) > upper) {
        alpha(i) = upper;
        alpha(j) = sum - upper;
      }
    } else if (alpha(j) < 0.0) {
      alpha(j) = 0.0;
      alpha(i) = sum;
    }
    if (sum > upper) {
      if (alpha(j) > upper) {
        alpha(j) = upper;
        alpha(i) = sum - upper;
      }
    } else if (alpha(i) < 0.0) {
      alpha(i) = 0.0;
      alpha(j) = sum;
    }
    grad += (alpha(i) - old_i) * qi + (alpha(j) - old_j) * qj;
  }
  if (iter >= max_iterations) {
    throw Error(ErrorCode::NumericalFailure, "one-class SVM did not reach KKT tolerance within " +
                                                 std::to_string(max_iterations) + " iterations");
  }

  // rho: mean gradient over free multipliers, else midpoint of the bounds
  double upper_bound = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  Index free_count = 0;
  for (Index t = 0; t < l; ++t) {
    if (alpha(t) >= upper) {
      lower_bound = std::max(lower_bound, grad(t));
    } else if (alpha(t) <= 0.0) {
      upper_bound = std::min(upper_bound, grad(t));
    } else {
      free_sum += grad(t);
      ++free_count;
    }
  }
  OcsvmModel model;
  model.rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper_bound + lower_bound) / 2.0;
  model.gamma = gamma;
  model.nu = nu;
  model.iterations = iter;
  model.kkt_gap = gap;
  model.train_decision = grad.array() - model.rho;

  Index n_support = 0;
  for (Index t = 0; t < l; ++t) n_support += alpha(t) > 0.0 ? 1 : 0;
  model.support.resize(n_support, data.cols());
  model.coefficient.resize(n_support);
  Index s = 0;
  for (Index t = 0; t < l; ++t) {
    if (alpha(t) > 0.0) {
      model.support.row(s) = data.row(t);
      model.coefficient(s) = alpha(t);
      ++s;
    }
  }
  return model;
}

Eigen::VectorXd ocsvm_decision(const OcsvmModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.support.cols()) throw Error(ErrorCode::ShapeMismatch, "feature count");
  Eigen::VectorXd out(data.rows());
  for (Index r = 0; r < data.rows(); ++r) {
    const Eigen::VectorXd k =
        (-model.gamma * (model.support.rowwise() - data.row(r)).rowwise().squaredNorm().array()).exp().matrix();
    out(r) = k.dot(model.coefficient) - model.rho;
  }
  return out;
}

}  // namespace fired
