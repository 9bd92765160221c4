#include "softscore/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "softscore/csv.hpp"
#include "softscore/ingest.hpp"
#include "softscore/metrics.hpp"
#include "softscore/parallel.hpp"
#include "softscore/simulator.hpp"

namespace softscore {

LinearHead::LinearHead(std::size_t levels, std::size_t dims)
    : LinearHead(levels, dims, std::vector<double>(levels * dims, 0.0), std::vector<double>(levels, 0.0)) {}

LinearHead::LinearHead(std::size_t levels, std::size_t dims, std::vector<double> weights,
                       std::vector<double> bias)
    : levels_(levels), dims_(dims), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (levels_ < 1 || dims_ < 1) throw DomainError("LinearHead: dimensions must be >= 1");
  if (weights_.size() != levels_ * dims_ || bias_.size() != levels_)
    throw DomainError("LinearHead: parameter sizes do not match dimensions");
  for (double w : weights_)
    if (!std::isfinite(w)) throw DomainError("LinearHead: non-finite weight");
  for (double b : bias_)
    if (!std::isfinite(b)) throw DomainError("LinearHead: non-finite bias");
}

LevelLogits forward(const LinearHead& head, std::span<const double> features) {
  if (features.size() != head.dims()) {
    throw DomainError("forward: expected " + std::to_string(head.dims()) + " features, got " +
                      std::to_string(features.size()));
  }
  const auto w = head.weights();
  const auto b = head.bias();
  std::vector<double> logits(head.levels());
  for (std::size_t l = 0; l < head.levels(); ++l) {
    double acc = b[l];
    for (std::size_t f = 0; f < head.dims(); ++f) acc += w[l * head.dims() + f] * features[f];
    if (!std::isfinite(acc)) throw NumericError("forward: logit overflow");
    logits[l] = acc;
  }
  return LevelLogits(std::move(logits));
}

LinearHead initialize_head(std::size_t dims, std::size_t levels, std::uint64_t seed) {
  LinearHead head(levels, dims);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims));
  Rng rng(seed);
  for (auto& w : head.weights()) w = rng.uniform(-bound, bound);
  return head;
}

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::soft_kl ? "soft_kl" : "onehot_ce";
}

LabelMode parse_label_mode(std::string_view name) {
  if (name == "soft_kl" || name == "soft") return LabelMode::soft_kl;
  if (name == "onehot_ce" || name == "onehot") return LabelMode::onehot_ce;
  throw DomainError("unknown label mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DomainError("learning_rate must be > 0");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be finite and >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw DomainError("validation_fraction must lie in [0, 1)");
}

BatchGradient batch_gradient(const LinearHead& head, std::span<const TrainItem> batch,
                             std::span<const std::pair<std::size_t, std::size_t>> pairs,
                             const TrainConfig& cfg, const LevelScheme& scheme,
                             const LossConfig& loss_cfg) {
  if (batch.empty()) throw DomainError("batch_gradient: empty batch");
  const std::size_t n = batch.size();
  const std::size_t levels = head.levels();
  const double label_weight = cfg.use_fidelity ? cfg.gamma : 1.0;

  std::vector<LevelLogits> logits;
  logits.reserve(n);
  for (const auto& item : batch) logits.push_back(forward(head, item.features));

  std::vector<double> label_losses(n);
  std::vector<std::vector<double>> grad_logits(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const auto& item = batch[i];
    std::vector<double> g;
    if (cfg.label_mode == LabelMode::onehot_ce) {
      label_losses[i] = cross_entropy_loss(item.target_index, logits[i]);
      g = cross_entropy_grad_logits(item.target_index, logits[i]);
    } else {
      label_losses[i] = kl_loss(item.target, probabilities_from_logits(logits[i]), loss_cfg);
      g = kl_grad_logits(item.target, logits[i]);
    }
    for (auto& v : g) v *= label_weight / static_cast<double>(n);
    grad_logits[i] = std::move(g);
  });

  BatchGradient out{0.0, 0.0, 0.0, LinearHead(levels, head.dims()), false};
  out.label_loss = tree_mean(label_losses);

  if (cfg.use_fidelity && !pairs.empty()) {
    const std::size_t p = pairs.size();
    std::vector<FidelityGradient> fids(p);
    parallel_for(p, cfg.threads, [&](std::size_t k) {
      const auto [a, b] = pairs[k];
      fids[k] = fidelity_grad_logits({batch[a].annotation, batch[b].annotation}, logits[a], logits[b], scheme);
    });
    std::vector<double> fid_losses(p);
    for (std::size_t k = 0; k < p; ++k) {
      const auto [a, b] = pairs[k];
      fid_losses[k] = fids[k].loss;
      out.floored = out.floored || fids[k].floored;
      for (std::size_t l = 0; l < levels; ++l) {
        grad_logits[a][l] += fids[k].grad_a[l] / static_cast<double>(p);
        grad_logits[b][l] += fids[k].grad_b[l] / static_cast<double>(p);
      }
    }
    out.fidelity_loss = tree_mean(fid_losses);
  }
  out.total = (cfg.use_fidelity ? out.fidelity_loss : 0.0) + label_weight * out.label_loss;

  auto gw = out.grad.weights();
  auto gb = out.grad.bias();
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = batch[i].features;
    for (std::size_t l = 0; l < levels; ++l) {
      const double g = grad_logits[i][l];
      gb[l] += g;
      for (std::size_t f = 0; f < head.dims(); ++f) gw[l * head.dims() + f] += g * x[f];
    }
  }
  return out;
}

EvalMetrics evaluate(const LinearHead& head, std::span<const FeatureRecord> dataset, const LevelScheme& scheme) {
  if (dataset.empty()) throw DomainError("evaluate: empty dataset");
  EvalMetrics m;
  m.n = dataset.size();
  std::vector<double> pred(dataset.size()), truth(dataset.size());
  std::vector<double> js;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& fr = dataset[i];
    const auto p = predict_score(forward(head, fr.features), scheme);
    pred[i] = p.mu();
    truth[i] = fr.record.mu;
    if (fr.record.sigma && *fr.record.sigma > 0.0 && p.sigma() > 0.0) {
      js.push_back(gaussian_js(p, fr.record.dist()));
    } else {
      ++m.js_excluded;
    }
  }
  m.plcc = plcc(pred, truth);
  m.srcc = srcc(pred, truth);
  if (!js.empty()) m.mean_js = tree_mean(js);
  return m;
}

DatasetSplit split_dataset(const FeatureDataset& dataset, double validation_fraction, std::uint64_t seed) {
  const std::size_t n = dataset.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  n_val = std::min(n_val, n > 0 ? n - 1 : 0);
  DatasetSplit split;
  split.tag = dataset.tag;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<FeatureRecord> validation_records(const FeatureDataset& dataset, const DatasetSplit& split) {
  std::vector<FeatureRecord> out;
  out.reserve(split.validation.size());
  for (auto i : split.validation) out.push_back(dataset.records.at(i));
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Unordered same-dataset pairs within the batch, `want` of them drawn
// uniformly without replacement.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::span<const TrainItem> batch,
                                                              std::size_t want, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t a = 0; a < batch.size(); ++a)
    for (std::size_t b = a + 1; b < batch.size(); ++b)
      if (batch[a].dataset == batch[b].dataset) all.emplace_back(a, b);
  const std::size_t take = std::min(want, all.size());
  for (std::size_t i = 0; i < take; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
  all.resize(take);
  return all;
}

}  // namespace

TrainResult train(const std::vector<FeatureDataset>& datasets, const TrainConfig& cfg,
                  const LevelScheme& scheme, const LossConfig& loss_cfg, const DiscretizeConfig& disc_cfg) {
  cfg.validate();
  loss_cfg.validate();
  disc_cfg.validate();
  if (datasets.empty()) throw DomainError("train: no datasets");
  std::size_t dims = 0;
  for (const auto& ds : datasets) {
    if (ds.records.empty()) throw DomainError("train: dataset '" + ds.tag + "' is empty");
    for (const auto& r : ds.records) {
      if (dims == 0) dims = r.features.size();
      if (r.features.size() != dims || dims == 0)
        throw DomainError("train: inconsistent feature dimension in dataset '" + ds.tag + "'");
    }
  }

  TrainResult result{initialize_head(dims, scheme.size(), derive_seed(cfg.seed, 0)), {}, {}};

  std::vector<TrainItem> items;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto split = split_dataset(datasets[d], cfg.validation_fraction, derive_seed(cfg.seed, 100 + d));
    for (auto i : split.train) {
      const auto& fr = datasets[d].records[i];
      const bool need_sigma = cfg.label_mode == LabelMode::soft_kl || cfg.use_fidelity;
      const ScoreDistribution annotation = need_sigma ? fr.record.dist() : ScoreDistribution(fr.record.mu, 0.0);
      if (cfg.label_mode == LabelMode::soft_kl) {
        items.push_back({fr.features, soft_label(annotation, scheme, disc_cfg), 0, annotation, d});
      } else {
        const auto k = one_hot_index(fr.record.mu, scheme);
        items.push_back({fr.features, SoftLabel::point_mass(scheme.size(), k), k, annotation, d});
      }
    }
    result.splits.push_back(split);
  }

  std::vector<std::vector<FeatureRecord>> val_sets;
  for (std::size_t d = 0; d < datasets.size(); ++d)
    val_sets.push_back(validation_records(datasets[d], result.splits[d]));

  const std::size_t pairs_wanted = cfg.pairs_per_batch ? cfg.pairs_per_batch : cfg.batch_size;
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  LinearHead& head = result.head;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<double> label_losses, fid_losses, totals;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<TrainItem> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) batch.push_back(items[order[k]]);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      if (cfg.use_fidelity) pairs = sample_pairs(batch, pairs_wanted, rng);

      const auto where = [&] {
        return " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no) + " (learning rate " +
               std::to_string(cfg.learning_rate) + ")";
      };
      std::optional<BatchGradient> computed;
      try {
        computed.emplace(batch_gradient(head, batch, pairs, cfg, scheme, loss_cfg));
      } catch (const NumericError& e) {
        throw NumericError(e.what() + where());
      }
      const auto& g = *computed;
      if (!std::isfinite(g.total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + " (learning rate " + std::to_string(cfg.learning_rate) + ")");
      }
      auto w = head.weights();
      auto b = head.bias();
      const auto gw = g.grad.weights();
      const auto gb = g.grad.bias();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * gw[k];
      for (std::size_t k = 0; k < b.size(); ++k) b[k] -= cfg.learning_rate * gb[k];
      for (double v : w)
        if (!std::isfinite(v)) {
          throw NumericError("non-finite weight at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_no) + " (learning rate " +
                             std::to_string(cfg.learning_rate) + ")");
        }
      label_losses.push_back(g.label_loss);
      fid_losses.push_back(g.fidelity_loss);
      totals.push_back(g.total);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.label_loss = tree_mean(label_losses);
    stats.fidelity_loss = tree_mean(fid_losses);
    stats.total_loss = tree_mean(totals);
    std::vector<double> plccs, srccs, jss;
    bool undefined = false;
    for (const auto& val : val_sets) {
      if (val.size() < 2) {
        undefined = true;
        continue;
      }
      try {
        if (cfg.history_js) {
          const auto m = evaluate(head, val, scheme);
          plccs.push_back(m.plcc);
          srccs.push_back(m.srcc);
          if (m.mean_js) jss.push_back(*m.mean_js);
        } else {
          std::vector<double> pred, truth;
          for (const auto& fr : val) {
            pred.push_back(predict_score(forward(head, fr.features), scheme).mu());
            truth.push_back(fr.record.mu);
          }
          plccs.push_back(plcc(pred, truth));
          srccs.push_back(srcc(pred, truth));
        }
      } catch (const UndefinedCorrelationError&) {
        undefined = true;
      }
    }
    stats.val_plcc = undefined || plccs.empty() ? kNaN : tree_mean(plccs);
    stats.val_srcc = undefined || srccs.empty() ? kNaN : tree_mean(srccs);
    stats.val_js = jss.empty() ? kNaN : tree_mean(jss);
    result.history.push_back(stats);
  }
  return result;
}

FeatureWorld synth_feature_world(const FeatureWorldConfig& cfg) {
  if (cfg.n_records < 1) throw DomainError("feature world: n_records must be >= 1");
  if (!(cfg.latent_hi > cfg.latent_lo)) throw DomainError("feature world: empty latent range");
  if (!(cfg.raw_scale > 0.0)) throw DomainError("feature world: raw_scale must be > 0");
  const double norm_lo = cfg.norm_lo.value_or(cfg.latent_lo);
  const double norm_hi = cfg.norm_hi.value_or(cfg.latent_hi);
  const SourceRange range(cfg.raw_scale * norm_lo + cfg.raw_offset, cfg.raw_scale * norm_hi + cfg.raw_offset);

  FeatureWorld world;
  world.dataset.tag = cfg.tag;
  std::vector<Record> raw;
  std::vector<std::vector<double>> features;
  const int width = static_cast<int>(std::to_string(cfg.n_records - 1).size());
  for (std::size_t i = 0; i < cfg.n_records; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const double q = rng.uniform(cfg.latent_lo, cfg.latent_hi);
    const double sigma = rng.uniform(cfg.sigma_lo, cfg.sigma_hi);
    std::vector<double> f{(q - 3.0) / 2.0};
    for (std::size_t k = 0; k < cfg.noise_dims; ++k) f.push_back(cfg.noise_shift + rng.normal());
    std::string index = std::to_string(i);
    index.insert(0, static_cast<std::size_t>(width) - index.size(), '0');
    // sigma is given in normalized units; carry it to raw units.
    raw.emplace_back(cfg.tag + "_" + index, cfg.tag, cfg.raw_scale * q + cfg.raw_offset,
                     sigma * range.span() / 4.0);
    features.push_back(std::move(f));
    world.latent.push_back(q);
  }
  auto normalized = normalize(raw, range);
  for (std::size_t i = 0; i < normalized.size(); ++i)
    world.dataset.records.push_back({std::move(normalized[i]), std::move(features[i])});
  return world;
}

void write_feature_dataset(std::ostream& out, const FeatureDataset& dataset) {
  const std::size_t dims = dataset.records.empty() ? 0 : dataset.records.front().features.size();
  out << "id,mu,sigma";
  for (std::size_t f = 0; f < dims; ++f) out << ",f" << f;
  out << '\n';
  for (const auto& fr : dataset.records) {
    out << fr.record.id << ',' << csv::fixed(fr.record.mu) << ','
        << (fr.record.sigma ? csv::fixed(*fr.record.sigma) : std::string());
    for (double v : fr.features) out << ',' << csv::fixed(v);
    out << '\n';
  }
}

FeatureDataset read_feature_dataset(std::istream& in, const std::string& tag) {
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError("missing CSV header");
  const auto header = csv::split_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "mu" || header[2] != "sigma")
    throw ParseError("feature CSV header must be 'id,mu,sigma,f0,...'");
  for (std::size_t k = 3; k < header.size(); ++k)
    if (header[k] != "f" + std::to_string(k - 3)) throw ParseError("feature columns must be named f0, f1, ...");

  FeatureDataset ds;
  ds.tag = tag;
  std::unordered_set<std::string> ids;
  std::size_t row = 0;
  while (csv::next_line(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()), row);
    if (f[0].empty()) throw ParseError("empty id", row);
    if (!ids.insert(f[0]).second) throw ParseError("duplicate id '" + f[0] + "'", row);
    std::optional<double> sigma;
    if (!f[2].empty()) sigma = csv::parse_real(f[2], row, "sigma");
    FeatureRecord fr{Record(f[0], tag, csv::parse_real(f[1], row, "mu"), sigma), {}};
    for (std::size_t k = 3; k < f.size(); ++k) fr.features.push_back(csv::parse_real(f[k], row, header[k]));
    ds.records.push_back(std::move(fr));
  }
  return ds;
}

std::vector<FeatureDataset> load_feature_datasets(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParseError("data directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ParseError("no .csv files in '" + dir.string() + "'");
  std::vector<FeatureDataset> out;
  for (const auto& p : files) {
    std::ifstream in(p);
    if (!in) throw ParseError("cannot open input file '" + p.string() + "'");
    try {
      out.push_back(read_feature_dataset(in, p.stem().string()));
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  }
  return out;
}

std::string head_to_json(const LinearHead& head, const LevelScheme& scheme) {
  nlohmann::ordered_json j;
  j["levels"] = head.levels();
  j["dims"] = head.dims();
  j["level_names"] = std::vector<std::string>(scheme.names().begin(), scheme.names().end());
  j["centers"] = std::vector<double>(scheme.centers().begin(), scheme.centers().end());
  j["weights"] = std::vector<double>(head.weights().begin(), head.weights().end());
  j["bias"] = std::vector<double>(head.bias().begin(), head.bias().end());
  return j.dump(2) + "\n";
}

LinearHead head_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return LinearHead(j.at("levels").get<std::size_t>(), j.at("dims").get<std::size_t>(),
                      j.at("weights").get<std::vector<double>>(), j.at("bias").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("head JSON: ") + e.what());
  }
}

void write_history(std::ostream& out, const std::vector<EpochStats>& history) {
  auto cell = [](double v) { return std::isfinite(v) ? csv::fixed(v) : std::string("nan"); };
  out << "epoch,label_loss,fidelity_loss,total_loss,val_plcc,val_srcc,val_js\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << cell(h.label_loss) << ',' << cell(h.fidelity_loss) << ',' << cell(h.total_loss)
        << ',' << cell(h.val_plcc) << ',' << cell(h.val_srcc) << ',' << cell(h.val_js) << '\n';
  }
}

}  // namespace softscore
