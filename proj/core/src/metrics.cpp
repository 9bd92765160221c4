#include "softscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "softscore/parallel.hpp"
#include "softscore/recovery.hpp"

namespace softscore {

namespace {

void check_lengths(std::span<const double> xs, std::span<const double> ys, std::size_t min_len,
                   const char* what) {
  if (xs.size() != ys.size()) throw DomainError(std::string(what) + ": length mismatch");
  if (xs.size() < min_len)
    throw DomainError(std::string(what) + ": need at least " + std::to_string(min_len) + " values");
}

}  // namespace

double plcc(std::span<const double> xs, std::span<const double> ys) {
  check_lengths(xs, ys, 2, "plcc");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedCorrelationError("correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> xs, std::span<const double> ys) {
  check_lengths(xs, ys, 2, "srcc");
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return plcc(rx, ry);
}

ErrorPair l1_rmse(std::span<const double> xs, std::span<const double> ys) {
  check_lengths(xs, ys, 1, "l1_rmse");
  std::vector<double> abs_err(xs.size());
  std::vector<double> sq_err(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = xs[i] - ys[i];
    abs_err[i] = std::abs(e);
    sq_err[i] = e * e;
  }
  return {tree_mean(abs_err), std::sqrt(tree_mean(sq_err))};
}

double gaussian_kl(const ScoreDistribution& p, const ScoreDistribution& q) {
  if (!(p.sigma() > 0.0) || !(q.sigma() > 0.0))
    throw UndefinedDivergenceError("Gaussian KL is undefined for zero variance");
  const double dm = p.mu() - q.mu();
  const double kl = std::log(q.sigma() / p.sigma()) +
                    (p.variance() + dm * dm) / (2.0 * q.variance()) - 0.5;
  return std::max(kl, 0.0);
}

namespace {

double log_density(double x, const ScoreDistribution& d) {
  const double z = (x - d.mu()) / d.sigma();
  return -0.5 * z * z - std::log(d.sigma()) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Integrand of JS: 0.5 * (p log(p/m) + q log(q/m)), m = (p + q) / 2.
double js_integrand(double x, const ScoreDistribution& p, const ScoreDistribution& q) {
  const double lp = log_density(x, p);
  const double lq = log_density(x, q);
  const double lm = log_add_exp(lp, lq) - std::numbers::ln2;
  return 0.5 * (std::exp(lp) * (lp - lm) + std::exp(lq) * (lq - lm));
}

}  // namespace

double gaussian_js(const ScoreDistribution& p, const ScoreDistribution& q) {
  if (!(p.sigma() > 0.0) || !(q.sigma() > 0.0))
    throw UndefinedDivergenceError("Gaussian JS needs positive sigmas");
  const double wide = std::max(p.sigma(), q.sigma());
  const double narrow = std::min(p.sigma(), q.sigma());
  const double lo = std::min(p.mu(), q.mu()) - 8.0 * wide;
  const double hi = std::max(p.mu(), q.mu()) + 8.0 * wide;

  constexpr std::size_t kBaseIntervals = 8192;
  constexpr std::size_t kMaxIntervals = std::size_t{1} << 24;
  // At least 16 steps per narrow standard deviation.
  const double needed = std::ceil((hi - lo) * 16.0 / narrow);
  std::size_t intervals = kBaseIntervals;
  if (needed > static_cast<double>(intervals))
    intervals = static_cast<std::size_t>(std::min(needed, static_cast<double>(kMaxIntervals)));
  intervals += intervals % 2;

  const double h = (hi - lo) / static_cast<double>(intervals);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < intervals; ++i) {
    const double f = js_integrand(lo + h * static_cast<double>(i), p, q);
    (i % 2 ? odd : even) += f;
  }
  const double total = js_integrand(lo, p, q) + js_integrand(hi, p, q) + 4.0 * odd + 2.0 * even;
  return std::clamp(total * h / 3.0, 0.0, std::numbers::ln2);
}

double gaussian_wasserstein(const ScoreDistribution& p, const ScoreDistribution& q) {
  return std::hypot(p.mu() - q.mu(), p.sigma() - q.sigma());
}

std::string_view to_string(LabelMethod method) {
  return method == LabelMethod::soft ? "soft" : "onehot";
}

LabelMethod parse_label_method(std::string_view name) {
  if (name == "soft") return LabelMethod::soft;
  if (name == "onehot") return LabelMethod::onehot;
  throw DomainError("unknown label method '" + std::string(name) + "'");
}

PrecisionReport precision_report(const std::vector<Record>& records, LabelMethod method,
                                 const LevelScheme& scheme, const DiscretizeConfig& cfg,
                                 unsigned threads) {
  if (records.empty()) throw DomainError("precision_report: no records");
  cfg.validate();
  const std::size_t n = records.size();

  struct Row {
    double mu = 0.0;
    double mu_rec = 0.0;
    double js = 0.0;
    double w2 = 0.0;
    bool js_ok = false;
    bool adjusted = false;
    double alpha = 1.0;
    double beta = 0.0;
    bool clipped = false;
    bool interpolated = false;
  };
  std::vector<Row> rows(n);

  parallel_for(n, threads, [&](std::size_t i) {
    const Record& r = records[i];
    Row& row = rows[i];
    row.mu = r.mu;
    if (method == LabelMethod::onehot) {
      const auto label = SoftLabel::point_mass(scheme.size(), one_hot_index(r.mu, scheme));
      row.mu_rec = recover(label, scheme).mu();
      return;
    }
    const auto dist = r.dist();
    const auto detail = soft_label_detail(dist, scheme, cfg);
    const auto rec = recover(detail.label, scheme);
    row.mu_rec = rec.mu();
    row.w2 = gaussian_wasserstein(dist, rec);
    if (dist.sigma() > 0.0 && rec.sigma() > 0.0) {
      row.js = gaussian_js(dist, rec);
      row.js_ok = true;
    }
    row.clipped = detail.clipped;
    row.interpolated = detail.interpolated;
    if (detail.params) {
      row.adjusted = true;
      row.alpha = detail.params->alpha;
      row.beta = detail.params->beta;
    }
  });

  std::vector<double> mu(n), mu_rec(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = rows[i].mu;
    mu_rec[i] = rows[i].mu_rec;
  }

  PrecisionReport report;
  report.method = method;
  report.n_records = n;
  report.clip_policy = cfg.clip_policy;
  const auto err = l1_rmse(mu_rec, mu);
  report.l1 = err.l1;
  report.rmse = err.rmse;
  if (n >= 2) {
    try {
      report.plcc = plcc(mu_rec, mu);
      report.srcc = srcc(mu_rec, mu);
    } catch (const UndefinedCorrelationError&) {
      report.plcc = report.srcc = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    report.plcc = report.srcc = std::numeric_limits<double>::quiet_NaN();
  }

  if (method == LabelMethod::soft) {
    std::vector<double> js, w2, alpha, beta, clipped;
    for (const auto& row : rows) {
      w2.push_back(row.w2);
      if (row.js_ok) js.push_back(row.js);
      else ++report.js_excluded;
      if (row.adjusted) {
        alpha.push_back(row.alpha);
        beta.push_back(row.beta);
      }
      if (row.interpolated) ++report.n_interpolated;
      clipped.push_back(row.clipped ? 1.0 : 0.0);
    }
    if (!js.empty()) report.js = tree_mean(js);
    report.wdist = tree_mean(w2);
    if (!alpha.empty()) {
      report.mean_alpha = tree_mean(alpha);
      report.mean_beta = tree_mean(beta);
    }
    report.clip_rate = tree_mean(clipped);
  }
  return report;
}

std::string to_json(const PrecisionReport& report) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(report.method));
  j["l1"] = report.l1;
  j["rmse"] = report.rmse;
  j["plcc"] = report.plcc;
  j["srcc"] = report.srcc;
  if (report.js) j["js"] = *report.js;
  if (report.wdist) j["wdist"] = *report.wdist;
  j["mean_alpha"] = report.mean_alpha;
  j["mean_beta"] = report.mean_beta;
  j["clip_rate"] = report.clip_rate;
  j["n_records"] = report.n_records;
  j["n_interpolated"] = report.n_interpolated;
  j["js_excluded"] = report.js_excluded;
  j["clip_policy"] = std::string(to_string(report.clip_policy));
  j["wasserstein_order"] = report.wasserstein_order;
  j["js_log_base"] = report.js_log_base;
  return j.dump(2) + "\n";
}

}  // namespace softscore
