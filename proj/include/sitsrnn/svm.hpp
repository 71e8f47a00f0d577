#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sitsrnn/error.hpp"
#include "sitsrnn/flat.hpp"
#include "sitsrnn/numerics.hpp"
#include "sitsrnn/parallel.hpp"

namespace sitsrnn {

struct SvmOptions {
  double c = 100.0;
  double gamma = 0.01;
  double tol = 1e-3;
  // 0 selects max(10^7, 100 * n) iterations per binary machine.
  std::size_t max_iterations = 0;
  // Kernel row cache budget per machine.
  std::size_t cache_bytes = std::size_t{256} << 20;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  // Keep the dual objective after every SMO step (diagnostics and tests).
  bool record_objective = false;
};

// One class pair. decision(x) = sum_i alpha_i y_i k(sv_i, x) + bias, with
// y = +1 for positive_class; decision > 0 votes for positive_class.
struct BinaryMachine {
  std::size_t positive_class = 0;
  std::size_t negative_class = 0;
  std::vector<std::size_t> support_indices;  // into the training set
  Vector alphas;                             // in [0, C]
  std::vector<int> signs;                    // +1 / -1
  std::vector<Vector> support_vectors;
  double bias = 0.0;
  std::size_t iterations = 0;
  // Dual objective sum(alpha) - 0.5 alpha^T Q alpha after each step.
  std::vector<double> objective_trace;

  friend bool operator==(const BinaryMachine&, const BinaryMachine&) = default;
};

struct SvmModel {
  std::vector<BinaryMachine> machines;
  double gamma = 0.0;
  double c = 0.0;
  std::size_t num_classes = 0;
  std::size_t num_features = 0;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

inline double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  double sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    sq += d * d;
  }
  return std::exp(-gamma * sq);
}

namespace detail {

// LRU cache of kernel rows K(i, .) for one binary problem.
class KernelCache {
 public:
  KernelCache(std::vector<const Vector*> points, double gamma, std::size_t budget_bytes)
      : points_(std::move(points)), gamma_(gamma) {
    const std::size_t row_bytes = std::max<std::size_t>(1, points_.size() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  const Vector& row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    Vector r(points_.size());
    for (std::size_t j = 0; j < points_.size(); ++j) r[j] = rbf_kernel(*points_[i], *points_[j], gamma_);
    lru_.emplace_front(i, std::move(r));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  std::vector<const Vector*> points_;
  double gamma_;
  std::size_t capacity_;
  std::list<std::pair<std::size_t, Vector>> lru_;
  std::unordered_map<std::size_t, std::list<std::pair<std::size_t, Vector>>::iterator> index_;
};

struct SmoResult {
  Vector alphas;
  double bias = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;
};

// Sequential minimal optimization on
//   min 0.5 a^T Q a - e^T a,  0 <= a <= C,  y^T a = 0,  Q_ij = y_i y_j k(x_i, x_j)
// with second-order working-set selection. Stops when the maximal violating
// pair gap drops below tol.
inline SmoResult solve_smo(const std::vector<const Vector*>& points, const std::vector<int>& y,
                           const SvmOptions& opt) {
  constexpr double tau = 1e-12;
  const std::size_t n = points.size();
  const double c = opt.c;
  KernelCache cache(points, opt.gamma, opt.cache_bytes);
  Vector alpha(n, 0.0), grad(n, -1.0);
  const std::size_t cap = opt.max_iterations ? opt.max_iterations
                                             : std::max<std::size_t>(10'000'000, 100 * n);

  // Scan order decides which index wins ties in working-set selection.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(opt.seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };

  SmoResult out;
  std::size_t iter = 0;
  for (;; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (auto t : order) {
      const double v = -y[t] * grad[t];
      if (((y[t] == 1 && !upper(t)) || (y[t] == -1 && !lower(t))) && v >= g_max) {
        g_max = v;
        i = t;
      }
    }
    if (i == n) break;
    const Vector& k_i = cache.row(i);
    double g_max2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (auto t : order) {
      if ((y[t] == 1 && !lower(t)) || (y[t] == -1 && !upper(t))) {
        const double v = y[t] * grad[t];
        g_max2 = std::max(g_max2, v);
        const double diff = g_max + v;
        if (diff > 0.0) {
          double quad = 2.0 - 2.0 * k_i[t];  // k(x,x) = 1 for the RBF kernel
          if (quad <= 0.0) quad = tau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
    }
    if (g_max + g_max2 < opt.tol || j == n) break;
    if (iter >= cap) {
      throw ConvergenceError("svm: SMO did not converge within " + std::to_string(cap) +
                             " iterations (gap " + std::to_string(g_max + g_max2) + ")");
    }

    const Vector& k_i_row = cache.row(i);
    const double q_ij = y[i] * y[j] * k_i_row[j];
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * q_ij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * q_ij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double d_i = alpha[i] - old_i, d_j = alpha[j] - old_j;
    // The cache may have evicted row i while fetching row j; refetch.
    const Vector& row_i = cache.row(i);
    const Vector& row_j = cache.row(j);
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * row_i[t] * d_i + y[j] * row_j[t] * d_j);
    }
    if (opt.record_objective) out.objective_trace.push_back(objective());
  }

  // Threshold: mean of y_t * grad_t over free vectors, else the midpoint of
  // the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  out.alphas = std::move(alpha);
  out.bias = -rho;
  out.iterations = iter;
  return out;
}

}  // namespace detail

// One-vs-one RBF SVM. Machines are built for every pair of classes present in
// the training data; each is solved independently.
inline SvmModel svm_fit(std::span<const FlatSample> samples, std::size_t num_classes,
                        const SvmOptions& opt = {}) {
  const std::size_t f = check_flat_samples(samples, num_classes, "svm");
  if (!(opt.c > 0.0) || !(opt.gamma > 0.0) || !(opt.tol > 0.0)) {
    throw InvalidArgument("svm: C, gamma and tol must be > 0");
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
  std::vector<std::size_t> present;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (!by_class[k].empty()) present.push_back(k);
  }
  if (present.size() < 2) {
    throw InvalidArgument("svm: need at least 2 populated classes, got " + std::to_string(present.size()));
  }

  SvmModel m;
  m.gamma = opt.gamma;
  m.c = opt.c;
  m.num_classes = num_classes;
  m.num_features = f;
  for (std::size_t a = 0; a < present.size(); ++a) {
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      BinaryMachine machine;
      machine.positive_class = present[a];
      machine.negative_class = present[b];
      m.machines.push_back(std::move(machine));
    }
  }

  parallel_for(m.machines.size(), opt.threads, [&](std::size_t p) {
    BinaryMachine& machine = m.machines[p];
    std::vector<std::size_t> members = by_class[machine.positive_class];
    members.insert(members.end(), by_class[machine.negative_class].begin(),
                   by_class[machine.negative_class].end());
    std::vector<const Vector*> points;
    std::vector<int> y;
    for (auto idx : members) {
      points.push_back(&samples[idx].features);
      y.push_back(samples[idx].label == machine.positive_class ? 1 : -1);
    }
    SvmOptions local = opt;
    local.seed = derive_seed(opt.seed, p);
    auto sol = detail::solve_smo(points, y, local);
    for (std::size_t t = 0; t < members.size(); ++t) {
      if (sol.alphas[t] > 0.0) {
        machine.support_indices.push_back(members[t]);
        machine.alphas.push_back(sol.alphas[t]);
        machine.signs.push_back(y[t]);
        machine.support_vectors.push_back(samples[members[t]].features);
      }
    }
    machine.bias = sol.bias;
    machine.iterations = sol.iterations;
    machine.objective_trace = std::move(sol.objective_trace);
  });
  return m;
}

inline double decision_value(const BinaryMachine& machine, std::span<const double> x, double gamma) {
  double s = machine.bias;
  for (std::size_t t = 0; t < machine.alphas.size(); ++t) {
    s += machine.alphas[t] * machine.signs[t] * rbf_kernel(machine.support_vectors[t], x, gamma);
  }
  return s;
}

// Majority vote over the pairwise machines; ties go to the lowest class index.
inline std::size_t svm_predict(const SvmModel& m, std::span<const double> x) {
  if (x.size() != m.num_features) {
    throw ShapeError("svm: sample has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(m.num_features));
  }
  std::vector<std::size_t> votes(m.num_classes, 0);
  for (const auto& machine : m.machines) {
    ++votes[decision_value(machine, x, m.gamma) > 0.0 ? machine.positive_class
                                                      : machine.negative_class];
  }
  return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

inline std::vector<std::size_t> svm_predict_all(const SvmModel& m, std::span<const FlatSample> samples,
                                                std::size_t threads = 1) {
  std::vector<std::size_t> out(samples.size());
  parallel_for(samples.size(), threads,
               [&](std::size_t i) { out[i] = svm_predict(m, samples[i].features); });
  return out;
}

}  // namespace sitsrnn
