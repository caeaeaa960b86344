#include "localhealth/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace localhealth::learn {

double CountModel::predict(std::span<const double> row) const {
  if (row.size() != weights.size()) throw ValidationError("count model: feature count mismatch");
  double y = intercept;
  for (std::size_t i = 0; i < row.size(); ++i) y += weights[i] * row[i];
  return y;
}

namespace {

// In-place Cholesky of a symmetric positive-definite matrix (row-major,
// lower triangle). Returns false on a non-positive pivot.
bool cholesky(std::vector<double>& a, std::size_t n, double* min_pivot) {
  *min_pivot = INFINITY;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    *min_pivot = std::min(*min_pivot, d);
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  return true;
}

std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * n + k] * b[k];
    b[i] /= l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= l[k * n + i] * b[k];
    b[i] /= l[i * n + i];
  }
  return b;
}

}  // namespace

CountModel fit_count_lr(const FeatureRows& rows, std::span<const double> targets,
                        std::vector<std::string> feature_names) {
  if (rows.size() != targets.size()) throw ValidationError("fit_count_lr: row/target count mismatch");
  if (rows.empty()) throw ValidationError("fit_count_lr: no rows");
  const std::size_t p = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != p) throw ValidationError("fit_count_lr: ragged feature rows");
  }
  if (rows.size() < p + 1) {
    throw ValidationError("fit_count_lr: need at least " + std::to_string(p + 1) + " rows for " +
                          std::to_string(p) + " features");
  }
  if (!feature_names.empty() && feature_names.size() != p) {
    throw ValidationError("fit_count_lr: feature name count mismatch");
  }

  // Design columns: features then the intercept.
  const std::size_t n = p + 1;
  std::vector<double> xtx(n * n, 0.0), xty(n, 0.0);
  std::vector<double> x(n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), x.begin());
    x[p] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      xty[i] += x[i] * targets[r];
      for (std::size_t j = 0; j <= i; ++j) xtx[i * n + j] += x[i] * x[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) xtx[i * n + j] = xtx[j * n + i];
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, xtx[i * n + i]);

  CountModel model;
  model.feature_names = std::move(feature_names);
  auto plain = xtx;
  double min_pivot = 0.0;
  const bool plain_ok = cholesky(plain, n, &min_pivot);
  if (!plain_ok || min_pivot <= 1e-10 * scale) model.rank_deficient = true;

  auto ridged = xtx;
  for (std::size_t i = 0; i < n; ++i) ridged[i * n + i] += kCountRidge;
  if (!cholesky(ridged, n, &min_pivot)) throw ValidationError("fit_count_lr: design matrix is rank deficient");
  const auto beta = cholesky_solve(ridged, n, xty);
  for (double b : beta) {
    if (!std::isfinite(b)) throw ValidationError("fit_count_lr: design matrix is rank deficient");
  }
  model.weights.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(p));
  model.intercept = beta[p];
  return model;
}

std::string_view to_string(ClassifierKind kind) { return kind == ClassifierKind::LogReg ? "LoR" : "SVM"; }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LinearClassifier::margin(std::span<const double> row) const {
  if (row.size() != weights.size()) throw ValidationError("classifier: feature count mismatch");
  double z = bias;
  for (std::size_t i = 0; i < row.size(); ++i) z += weights[i] * row[i];
  return z;
}

double LinearClassifier::probability(std::span<const double> row) const {
  const double m = margin(row);
  return kind == ClassifierKind::LogReg ? sigmoid(m) : sigmoid(platt_a * m + platt_b);
}

namespace {

double dot(std::span<const double> w, std::span<const double> x) {
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
  return z;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

template <typename LossFn>
LossAndGrad batch_loss(std::span<const double> w, double b, const FeatureRows& rows, std::span<const int> labels,
                       std::span<const std::size_t> idx, LossFn fn) {
  LossAndGrad out;
  out.grad_w.assign(w.size(), 0.0);
  for (auto i : idx) {
    const double z = dot(w, rows[i]) + b;
    auto [loss, dz] = fn(z, labels[i]);
    out.loss += loss;
    if (dz == 0.0) continue;
    for (std::size_t k = 0; k < w.size(); ++k) out.grad_w[k] += dz * rows[i][k];
    out.grad_b += dz;
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  out.loss *= inv;
  for (double& g : out.grad_w) g *= inv;
  out.grad_b *= inv;
  return out;
}

std::pair<double, double> bce_term(double z, int y) {
  // -[y log s + (1-y) log(1-s)] = softplus(z) - y z
  return {softplus(z) - (y ? z : 0.0), sigmoid(z) - (y ? 1.0 : 0.0)};
}

std::pair<double, double> hinge_term(double z, int y) {
  const double s = y ? 1.0 : -1.0;
  const double m = 1.0 - s * z;
  return m > 0 ? std::pair{m, -s} : std::pair{0.0, 0.0};
}

void check_rows(const FeatureRows& rows, std::span<const int> labels) {
  if (rows.size() != labels.size()) throw ValidationError("classifier: row/label count mismatch");
  if (rows.empty()) throw ValidationError("classifier: no rows");
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw ValidationError("classifier: ragged feature rows");
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

LossAndGrad logreg_loss_and_grad(std::span<const double> w, double b, const FeatureRows& rows,
                                 std::span<const int> labels) {
  check_rows(rows, labels);
  return batch_loss(w, b, rows, labels, all_indices(rows.size()), bce_term);
}

LossAndGrad hinge_loss_and_grad(std::span<const double> w, double b, const FeatureRows& rows,
                                std::span<const int> labels) {
  check_rows(rows, labels);
  return batch_loss(w, b, rows, labels, all_indices(rows.size()), hinge_term);
}

std::pair<double, double> fit_platt(std::span<const double> margins, std::span<const int> labels) {
  if (margins.size() != labels.size() || margins.empty()) throw ValidationError("platt: bad input");
  const auto n_pos = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
  const auto n_neg = static_cast<double>(labels.size()) - n_pos;
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double t = labels[i] ? hi : lo;
      const double z = a * margins[i] + b;
      f += softplus(z) - t * z;
    }
    return f;
  };

  double a = 0.0, b = std::log((n_pos + 1.0) / (n_neg + 1.0));
  double f = objective(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0, gb = 0, haa = 1e-12, hab = 0, hbb = 1e-12;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double t = labels[i] ? hi : lo;
      const double p = sigmoid(a * margins[i] + b);
      const double d = p - t, w = p * (1 - p);
      ga += d * margins[i];
      gb += d;
      haa += w * margins[i] * margins[i];
      hab += w * margins[i];
      hbb += w;
    }
    if (std::abs(ga) < 1e-10 && std::abs(gb) < 1e-10) break;
    const double det = haa * hbb - hab * hab;
    double da = -(hbb * ga - hab * gb) / det;
    double db = -(-hab * ga + haa * gb) / det;
    double step = 1.0;
    bool improved = false;
    while (step > 1e-10) {
      const double fn = objective(a + step * da, b + step * db);
      if (fn < f + 1e-4 * step * (ga * da + gb * db)) {
        a += step * da;
        b += step * db;
        f = fn;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return {a, b};
}

LinearClassifier fit_classifier(ClassifierKind kind, const FeatureRows& rows, std::span<const int> labels,
                                const TrainConfig& config, double threshold) {
  check_rows(rows, labels);
  config.validate();
  const auto pos = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
    throw ValidationError("fit_classifier: training labels contain a single class");
  }

  const std::size_t dim = rows.front().size();
  std::vector<double> params(dim + 1, 0.0);  // weights then bias
  const std::size_t n = rows.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  const std::int64_t total = steps_per_epoch * config.epochs;

  Engine rng(mix_seed(config.seed, {0xC1A55, static_cast<std::uint64_t>(kind)}));
  auto order = all_indices(n);
  AdamWState state;
  std::int64_t step = 0;
  std::vector<double> grads(dim + 1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(n, start + batch) - start);
      const std::span<const double> w(params.data(), dim);
      const auto lg = kind == ClassifierKind::LogReg ? batch_loss(w, params[dim], rows, labels, idx, bce_term)
                                                     : batch_loss(w, params[dim], rows, labels, idx, hinge_term);
      if (!std::isfinite(lg.loss)) throw Error("fit_classifier: non-finite loss");
      std::copy(lg.grad_w.begin(), lg.grad_w.end(), grads.begin());
      grads[dim] = lg.grad_b;
      adamw_step(params, grads, state, lr_schedule(step++, total, config), config);
    }
  }

  LinearClassifier clf;
  clf.kind = kind;
  clf.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(dim));
  clf.bias = params[dim];
  clf.threshold = threshold;
  if (kind == ClassifierKind::SVM) {
    std::vector<double> margins;
    margins.reserve(n);
    for (const auto& r : rows) margins.push_back(clf.margin(r));
    std::tie(clf.platt_a, clf.platt_b) = fit_platt(margins, labels);
  }
  return clf;
}

}  // namespace localhealth::learn
