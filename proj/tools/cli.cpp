#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "softscore/csv.hpp"
#include "softscore/errors.hpp"
#include "softscore/ingest.hpp"
#include "softscore/metrics.hpp"
#include "softscore/parallel.hpp"
#include "softscore/recovery.hpp"
#include "softscore/simulator.hpp"
#include "softscore/trainer.hpp"

namespace softscore::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& f : csv::split_line(text)) {
    const auto b = f.find_first_not_of(' ');
    const auto e = f.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_reals(const std::string& text, std::string_view what) {
  std::vector<double> out;
  for (const auto& f : split_list(text)) out.push_back(csv::parse_real(f, 0, what));
  return out;
}

std::string join_reals(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += shortest(values[i]);
  }
  return out;
}

}  // namespace

std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw DomainError("cannot format number");
  return std::string(buf, ptr);
}

FlatConfig GlobalConfig::to_flat() const {
  FlatConfig f;
  std::string names;
  for (std::size_t i = 0; i < level_names.size(); ++i) names += (i ? "," : "") + level_names[i];
  f.set("level_names", names);
  f.set("level_centers", join_reals(level_centers));
  f.set("small_variance_threshold", shortest(discretize.small_variance_threshold));
  f.set("degeneracy_epsilon", shortest(discretize.degeneracy_epsilon));
  f.set("clip_policy", std::string(to_string(discretize.clip_policy)));
  f.set("gamma", shortest(loss.gamma));
  f.set("epsilon_log", shortest(loss.epsilon_log));
  f.set("verbosity", std::to_string(verbosity));
  f.set("json_indent", std::to_string(json_indent));
  return f;
}

GlobalConfig GlobalConfig::from_flat(const FlatConfig& flat) {
  flat.require_known({"level_names", "level_centers", "small_variance_threshold", "degeneracy_epsilon",
                      "clip_policy", "gamma", "epsilon_log", "verbosity", "json_indent"});
  GlobalConfig g;
  if (auto v = flat.get("level_names")) g.level_names = split_list(*v);
  if (auto v = flat.get("level_centers")) g.level_centers = parse_reals(*v, "level_centers");
  g.discretize.small_variance_threshold =
      flat.get_double("small_variance_threshold", g.discretize.small_variance_threshold);
  g.discretize.degeneracy_epsilon = flat.get_double("degeneracy_epsilon", g.discretize.degeneracy_epsilon);
  if (auto v = flat.get("clip_policy")) g.discretize.clip_policy = parse_clip_policy(*v);
  g.loss.gamma = flat.get_double("gamma", g.loss.gamma);
  g.loss.epsilon_log = flat.get_double("epsilon_log", g.loss.epsilon_log);
  g.verbosity = static_cast<int>(flat.get_double("verbosity", g.verbosity));
  g.json_indent = static_cast<int>(flat.get_double("json_indent", g.json_indent));
  g.discretize.validate();
  g.loss.validate();
  return g;
}

bool operator==(const GlobalConfig& a, const GlobalConfig& b) {
  return a.level_names == b.level_names && a.level_centers == b.level_centers &&
         a.discretize.small_variance_threshold == b.discretize.small_variance_threshold &&
         a.discretize.degeneracy_epsilon == b.discretize.degeneracy_epsilon &&
         a.discretize.clip_policy == b.discretize.clip_policy && a.loss.gamma == b.loss.gamma &&
         a.loss.epsilon_log == b.loss.epsilon_log && a.verbosity == b.verbosity &&
         a.json_indent == b.json_indent;
}

LevelScheme load_scheme_file(const std::string& path) {
  const auto flat = FlatConfig::load(path);
  flat.require_known({"names", "centers"});
  const auto names = flat.get("names");
  const auto centers = flat.get("centers");
  if (!names || !centers) throw ParseError(path + ": scheme needs 'names' and 'centers'");
  return LevelScheme(split_list(*names), parse_reals(*centers, "centers"));
}

namespace {

// Options every subcommand accepts.
struct Common {
  unsigned threads = 1;
  std::string scheme = "default5";
  std::string scheme_file;
  std::string settings;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "Worker threads (default: SOFTSCORE_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--scheme", c.scheme, "Built-in level scheme")->check(CLI::IsMember({"default5"}));
  cmd->add_option("--scheme-file", c.scheme_file, "Level scheme file with 'names' and 'centers'");
  cmd->add_option("--settings", c.settings, "Flat key/value file of shared settings");
  cmd->add_flag("-v,--verbose", c.verbose, "Report progress on the error stream");
  cmd->add_flag("--quiet", c.quiet, "Suppress warnings");
}

class Context {
 public:
  Context(const Common& common, std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    if (!common.settings.empty()) global = GlobalConfig::from_flat(FlatConfig::load(common.settings));
    if (!common.scheme_file.empty()) {
      const auto s = load_scheme_file(common.scheme_file);
      global.level_names.assign(s.names().begin(), s.names().end());
      global.level_centers.assign(s.centers().begin(), s.centers().end());
    }
    if (common.quiet) global.verbosity = -1;
    if (common.verbose) global.verbosity = 1;
    threads = common.threads;
  }

  GlobalConfig global;
  unsigned threads = 1;

  void warn(const std::string& msg) const {
    if (global.verbosity >= 0) err_ << "warning: " << msg << '\n';
  }
  void info(const std::string& msg) const {
    if (global.verbosity >= 1) err_ << msg << '\n';
  }

  // Writes the whole payload at once so a failure leaves no partial file.
  void emit(const std::string& path, const std::string& payload) const {
    if (path.empty() || path == "-") {
      out_ << payload;
      out_.flush();
      return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot open output file '" + path + "'");
    f << payload;
    if (!f.flush()) throw ParseError("cannot write output file '" + path + "'");
  }

  std::string dump(const ordered_json& j) const { return j.dump(global.json_indent) + "\n"; }

 private:
  std::ostream& out_;
  std::ostream& err_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScoreDistribution parse_dist(const std::string& text, const char* flag) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw CLI::ValidationError(flag, "expected MU,SIGMA");
  try {
    return ScoreDistribution(csv::parse_real(parts[0], 0, "mu"), csv::parse_real(parts[1], 0, "sigma"));
  } catch (const Error& e) {
    throw CLI::ValidationError(flag, e.what());
  }
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out;
  bool clamp = false;
};

void do_simulate(const Context& ctx, const SimulateArgs& a) {
  const auto c = FlatConfig::load(a.config);
  const auto kind = c.get_string("kind", "ratings");
  std::ostringstream payload;
  if (kind == "ratings") {
    c.require_known({"kind", "n_records", "mu_lo", "mu_hi", "sigma_lo", "sigma_hi", "raters_per_image", "seed",
                     "dataset_tag", "transform_scale", "transform_offset", "clamp"});
    CorpusConfig cfg;
    cfg.n_records = c.get_uint("n_records", cfg.n_records);
    cfg.mu_lo = c.get_double("mu_lo", cfg.mu_lo);
    cfg.mu_hi = c.get_double("mu_hi", cfg.mu_hi);
    cfg.sigma_lo = c.get_double("sigma_lo", cfg.sigma_lo);
    cfg.sigma_hi = c.get_double("sigma_hi", cfg.sigma_hi);
    cfg.raters_per_image = c.get_uint("raters_per_image", cfg.raters_per_image);
    cfg.seed = c.get_uint("seed", cfg.seed);
    cfg.dataset_tag = c.get_string("dataset_tag", cfg.dataset_tag);
    cfg.transform_scale = c.get_double("transform_scale", cfg.transform_scale);
    cfg.transform_offset = c.get_double("transform_offset", cfg.transform_offset);
    cfg.clamp = a.clamp || c.get_bool("clamp", cfg.clamp);
    write_raw(payload, synth_corpus(cfg, ctx.threads));
    ctx.info("simulated " + std::to_string(cfg.n_records) + " records");
  } else if (kind == "features") {
    c.require_known({"kind", "dataset_tag", "n_records", "latent_lo", "latent_hi", "norm_lo", "norm_hi",
                     "raw_scale", "raw_offset", "sigma_lo", "sigma_hi", "noise_dims", "noise_shift", "seed"});
    FeatureWorldConfig cfg;
    cfg.tag = c.get_string("dataset_tag", cfg.tag);
    cfg.n_records = c.get_uint("n_records", cfg.n_records);
    cfg.latent_lo = c.get_double("latent_lo", cfg.latent_lo);
    cfg.latent_hi = c.get_double("latent_hi", cfg.latent_hi);
    if (c.contains("norm_lo")) cfg.norm_lo = c.get_double("norm_lo", 0.0);
    if (c.contains("norm_hi")) cfg.norm_hi = c.get_double("norm_hi", 0.0);
    cfg.raw_scale = c.get_double("raw_scale", cfg.raw_scale);
    cfg.raw_offset = c.get_double("raw_offset", cfg.raw_offset);
    cfg.sigma_lo = c.get_double("sigma_lo", cfg.sigma_lo);
    cfg.sigma_hi = c.get_double("sigma_hi", cfg.sigma_hi);
    cfg.noise_dims = c.get_uint("noise_dims", cfg.noise_dims);
    cfg.noise_shift = c.get_double("noise_shift", cfg.noise_shift);
    cfg.seed = c.get_uint("seed", cfg.seed);
    write_feature_dataset(payload, synth_feature_world(cfg).dataset);
  } else {
    throw ParseError(a.config + ": kind must be \"ratings\" or \"features\"");
  }
  ctx.emit(a.out, payload.str());
}

// ---- discretize -------------------------------------------------------------

struct InputArgs {
  std::string input;
  std::optional<double> min_score;
  std::optional<double> max_score;
  double pseudo_sigma_ratio = kDefaultPseudoSigmaRatio;
};

void add_input(CLI::App* cmd, InputArgs& a, const char* name = "--input") {
  cmd->add_option(name, a.input, "Records CSV (id,mos,std / id,mos / id,dataset,mu,sigma)")->required();
  cmd->add_option("--min-score", a.min_score, "Lower end of the raw score range");
  cmd->add_option("--max-score", a.max_score, "Upper end of the raw score range");
  cmd->add_option("--pseudo-sigma-ratio", a.pseudo_sigma_ratio,
                  "Pseudo std as a fraction of the score range, for files without std");
}

std::vector<Record> load_input(const InputArgs& a) {
  IngestOptions opts;
  opts.pseudo_sigma_ratio = a.pseudo_sigma_ratio;
  if (a.min_score.has_value() != a.max_score.has_value())
    throw CLI::ValidationError("--min-score/--max-score", "give both or neither");
  if (a.min_score) opts.range = SourceRange(*a.min_score, *a.max_score);
  return load_any(a.input, opts);
}

struct DiscretizeArgs {
  InputArgs in;
  std::string out;
  std::string mode = "soft";
  std::optional<std::string> clip_policy;
};

void do_discretize(Context& ctx, const DiscretizeArgs& a) {
  if (a.clip_policy) ctx.global.discretize.clip_policy = parse_clip_policy(*a.clip_policy);
  const auto scheme = ctx.global.scheme();
  const auto records = load_input(a.in);
  const auto method = parse_label_method(a.mode);
  const auto& cfg = ctx.global.discretize;

  std::vector<std::string> rows(records.size());
  std::vector<char> clamped(records.size(), 0);
  parallel_for(records.size(), ctx.threads, [&](std::size_t i) {
    const Record& r = records[i];
    std::vector<std::string> f{r.id};
    std::string alpha, beta, degenerate = "0", clipped = "0";
    std::optional<SoftLabel> label;
    if (method == LabelMethod::onehot) {
      label = SoftLabel::point_mass(scheme.size(), one_hot_index(r.mu, scheme));
    } else {
      auto d = soft_label_detail(r.dist(), scheme, cfg);
      if (d.params) {
        alpha = csv::fixed(d.params->alpha);
        beta = csv::fixed(d.params->beta);
        degenerate = d.params->degenerate ? "1" : "0";
      }
      clipped = d.clipped ? "1" : "0";
      clamped[i] = d.clamped;
      label = std::move(d.label);
    }
    for (std::size_t k = 0; k < label->size(); ++k) f.push_back(csv::fixed((*label)[k]));
    f.insert(f.end(), {alpha, beta, degenerate, clipped});
    rows[i] = csv::join(f) + "\n";
  });

  std::vector<std::string> header{"id"};
  for (const auto& n : scheme.names()) header.push_back("p_" + n);
  header.insert(header.end(), {"alpha", "beta", "degenerate", "clipped"});
  std::string payload = csv::join(header) + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (clamped[i]) ctx.warn("record '" + records[i].id + "': mean outside the level centers was clamped");
    payload += rows[i];
  }
  ctx.emit(a.out, payload);
  ctx.info("discretized " + std::to_string(records.size()) + " records");
}

// ---- recover ----------------------------------------------------------------

struct RecoverArgs {
  std::string input;
  std::string out;
};

// Labels printed at 6 decimals sum to 1 only up to rounding.
constexpr double kPrintedSumTolerance = 1e-5;

void do_recover(const Context& ctx, const RecoverArgs& a) {
  const auto scheme = ctx.global.scheme();
  std::ifstream in(a.input);
  if (!in) throw ParseError("cannot open input file '" + a.input + "'");
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError(a.input + ": missing CSV header");
  const auto header = csv::split_line(line);
  const std::size_t n = scheme.size();
  if (header.size() < n + 1 || header[0] != "id")
    throw ParseError(a.input + ": header must start with id and one p_<level> column per level");
  for (std::size_t k = 0; k < n; ++k) {
    if (header[k + 1] != "p_" + scheme.names()[k])
      throw ParseError(a.input + ": column " + std::to_string(k + 2) + " should be 'p_" + scheme.names()[k] +
                       "', got '" + header[k + 1] + "'");
  }
  std::string payload = "id,mu_rec,sigma_rec\n";
  std::size_t row = 0;
  while (csv::next_line(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    try {
      if (f.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                         row);
      std::vector<double> p(n);
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        p[k] = csv::parse_real(f[k + 1], row, header[k + 1]);
        if (!(p[k] >= 0.0)) throw ParseError("negative probability in " + header[k + 1], row);
        sum += p[k];
      }
      std::optional<SoftLabel> label;
      if (std::abs(sum - 1.0) <= kPrintedSumTolerance) {
        for (auto& v : p) v /= sum;
        label = SoftLabel(std::move(p));
      } else {
        label = SoftLabel::unnormalized(std::move(p));
      }
      const auto d = recover(*label, scheme);
      payload += f[0] + "," + csv::fixed(d.mu()) + "," + csv::fixed(d.sigma()) + "\n";
    } catch (const ParseError& e) {
      throw ParseError(a.input + ": " + e.what());
    } catch (const DomainError& e) {
      throw ParseError(a.input + ": row " + std::to_string(row) + ": " + e.what());
    }
  }
  ctx.emit(a.out, payload);
}

// ---- precision --------------------------------------------------------------

struct PrecisionArgs {
  InputArgs in;
  std::string method = "soft";
  std::optional<std::string> clip_policy;
  std::string json;
};

void do_precision(Context& ctx, const PrecisionArgs& a) {
  if (a.clip_policy) ctx.global.discretize.clip_policy = parse_clip_policy(*a.clip_policy);
  const auto records = load_input(a.in);
  const auto report = precision_report(records, parse_label_method(a.method), ctx.global.scheme(),
                                       ctx.global.discretize, ctx.threads);
  if (report.n_interpolated) ctx.info(std::to_string(report.n_interpolated) + " records used interpolation");
  if (report.js_excluded) ctx.warn(std::to_string(report.js_excluded) + " records excluded from JS (zero variance)");
  ctx.emit(a.json, ctx.dump(ordered_json::parse(to_json(report))));
}

// ---- eval-loss --------------------------------------------------------------

struct EvalLossArgs {
  InputArgs in;
  std::string logits;
  std::string pairs;
  std::optional<double> gamma;
  std::string json;
};

std::unordered_map<std::string, LevelLogits> read_logits(const std::string& path, std::size_t levels) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file '" + path + "'");
  std::string line;
  if (!csv::next_line(in, line)) throw ParseError(path + ": missing CSV header");
  const auto header = csv::split_line(line);
  if (header.size() != levels + 1 || header[0] != "id")
    throw ParseError(path + ": header must be id followed by " + std::to_string(levels) + " logit columns");
  std::unordered_map<std::string, LevelLogits> out;
  std::size_t row = 0;
  while (csv::next_line(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    try {
      if (f.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                         row);
      std::vector<double> v(levels);
      for (std::size_t k = 0; k < levels; ++k) v[k] = csv::parse_real(f[k + 1], row, header[k + 1]);
      if (!out.emplace(f[0], LevelLogits(std::move(v))).second) throw ParseError("duplicate id '" + f[0] + "'", row);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file '" + path + "'");
  std::string line;
  if (!csv::next_line(in, line) || csv::split_line(line) != std::vector<std::string>{"id_a", "id_b"})
    throw ParseError(path + ": header must be 'id_a,id_b'");
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t row = 0;
  while (csv::next_line(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 2) throw ParseError(path + ": " + ParseError("expected 2 fields", row).what());
    out.emplace_back(f[0], f[1]);
  }
  return out;
}

void do_eval_loss(Context& ctx, const EvalLossArgs& a) {
  if (a.gamma) ctx.global.loss.gamma = *a.gamma;
  const auto scheme = ctx.global.scheme();
  const auto records = load_input(a.in);
  const auto logits = read_logits(a.logits, scheme.size());

  std::unordered_map<std::string, std::size_t> index;
  std::vector<LabelItem> items;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = logits.find(records[i].id);
    if (it == logits.end()) throw ParseError(a.logits + ": no logits for record '" + records[i].id + "'");
    index.emplace(records[i].id, i);
    items.push_back({soft_label(records[i].dist(), scheme, ctx.global.discretize), it->second});
  }

  std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
  if (!a.pairs.empty()) {
    for (const auto& [ia, ib] : read_pairs(a.pairs)) {
      const auto fa = index.find(ia);
      const auto fb = index.find(ib);
      if (fa == index.end() || fb == index.end())
        throw ParseError(a.pairs + ": pair (" + ia + ", " + ib + ") names an unknown record");
      if (records[fa->second].dataset != records[fb->second].dataset)
        throw ParseError(a.pairs + ": pair (" + ia + ", " + ib + ") crosses datasets");
      pair_idx.emplace_back(fa->second, fb->second);
    }
  } else {
    for (std::size_t i = 0; i < records.size(); ++i)
      for (std::size_t j = i + 1; j < records.size(); ++j)
        if (records[i].dataset == records[j].dataset) pair_idx.emplace_back(i, j);
  }
  std::vector<PairItem> pairs;
  pairs.reserve(pair_idx.size());
  for (const auto& [i, j] : pair_idx)
    pairs.push_back({records[i].dist(), records[j].dist(), items[i].logits, items[j].logits});

  const auto report = combined_loss(items, pairs, scheme, ctx.global.loss);
  for (const auto& w : report.warnings) ctx.warn(w);
  ordered_json j;
  j["fidelity"] = report.fidelity;
  j["kl"] = report.kl;
  j["ce"] = report.ce;
  j["total"] = report.total;
  ctx.emit(a.json, ctx.dump(j));
}

// ---- distance ---------------------------------------------------------------

struct DistanceArgs {
  std::string p;
  std::string q;
  std::string metric;
};

void do_distance(const Context& ctx, const DistanceArgs& a) {
  const auto p = parse_dist(a.p, "--p");
  const auto q = parse_dist(a.q, "--q");
  double value = 0.0;
  if (a.metric == "kl") value = gaussian_kl(p, q);
  else if (a.metric == "js") value = gaussian_js(p, q);
  else value = gaussian_wasserstein(p, q);
  ctx.emit("", shortest(value) + "\n");
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data_dir;
  std::string out;
  std::string history;
};

void do_train(Context& ctx, const TrainArgs& a) {
  const auto c = FlatConfig::load(a.config);
  c.require_known({"label_mode", "use_fidelity", "gamma", "learning_rate", "epochs", "batch_size",
                   "pairs_per_batch", "seed", "validation_fraction", "history_js", "epsilon_log",
                   "small_variance_threshold", "clip_policy"});
  TrainConfig cfg;
  cfg.label_mode = parse_label_mode(c.get_string("label_mode", std::string(to_string(cfg.label_mode))));
  cfg.use_fidelity = c.get_bool("use_fidelity", cfg.use_fidelity);
  cfg.gamma = c.get_double("gamma", ctx.global.loss.gamma);
  cfg.learning_rate = c.get_double("learning_rate", cfg.learning_rate);
  cfg.epochs = c.get_uint("epochs", cfg.epochs);
  cfg.batch_size = c.get_uint("batch_size", cfg.batch_size);
  cfg.pairs_per_batch = c.get_uint("pairs_per_batch", cfg.pairs_per_batch);
  cfg.seed = c.get_uint("seed", cfg.seed);
  cfg.validation_fraction = c.get_double("validation_fraction", cfg.validation_fraction);
  cfg.history_js = c.get_bool("history_js", cfg.history_js);
  cfg.threads = ctx.threads;
  ctx.global.loss.gamma = cfg.gamma;
  ctx.global.loss.epsilon_log = c.get_double("epsilon_log", ctx.global.loss.epsilon_log);
  ctx.global.discretize.small_variance_threshold =
      c.get_double("small_variance_threshold", ctx.global.discretize.small_variance_threshold);
  if (auto v = c.get("clip_policy")) ctx.global.discretize.clip_policy = parse_clip_policy(*v);

  const auto scheme = ctx.global.scheme();
  const auto datasets = load_feature_datasets(a.data_dir);
  ctx.info("training on " + std::to_string(datasets.size()) + " datasets");
  const auto result = train(datasets, cfg, scheme, ctx.global.loss, ctx.global.discretize);
  ctx.emit(a.out, head_to_json(result.head, scheme));
  if (!a.history.empty()) {
    std::ostringstream h;
    write_history(h, result.history);
    ctx.emit(a.history, h.str());
  }
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string head;
  std::string data_dir;
  std::string json;
};

void do_evaluate(const Context& ctx, const EvaluateArgs& a) {
  const auto text = read_file(a.head);
  const auto head = head_from_json(text);
  std::optional<LevelScheme> scheme;
  try {
    const auto j = nlohmann::json::parse(text);
    scheme.emplace(j.at("level_names").get<std::vector<std::string>>(), j.at("centers").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(a.head + ": " + e.what());
  }
  if (scheme->size() != head.levels()) throw ParseError(a.head + ": scheme does not match the head");

  const auto datasets = load_feature_datasets(a.data_dir);
  ordered_json j;
  ordered_json per = ordered_json::object();
  double plcc_sum = 0.0, srcc_sum = 0.0;
  for (const auto& ds : datasets) {
    const auto m = evaluate(head, ds.records, *scheme);
    ordered_json d;
    d["plcc"] = m.plcc;
    d["srcc"] = m.srcc;
    if (m.mean_js) d["js"] = *m.mean_js;
    d["js_excluded"] = m.js_excluded;
    d["n"] = m.n;
    per[ds.tag] = d;
    plcc_sum += m.plcc;
    srcc_sum += m.srcc;
    if (m.js_excluded) ctx.warn(ds.tag + ": " + std::to_string(m.js_excluded) + " records excluded from JS");
  }
  j["datasets"] = per;
  j["mean_plcc"] = plcc_sum / static_cast<double>(datasets.size());
  j["mean_srcc"] = srcc_sum / static_cast<double>(datasets.size());
  ctx.emit(a.json, ctx.dump(j));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-label tools for quality score distributions", "softscore"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "softscore 1.0.0");

  Common common;
  common.threads = default_threads();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Sample a synthetic annotated corpus");
  c_sim->add_option("--config", sim.config, "Corpus config (flat key/value)")->required();
  c_sim->add_option("--out", sim.out, "Output CSV (default: standard output)");
  c_sim->add_flag("--clamp", sim.clamp, "Clamp individual ratings to [1, 5]");

  DiscretizeArgs disc;
  auto* c_disc = app.add_subcommand("discretize", "Convert score distributions to level labels");
  add_input(c_disc, disc.in);
  c_disc->add_option("--mode", disc.mode, "Label kind")->check(CLI::IsMember({"soft", "onehot"}));
  c_disc->add_option("--clip-policy", disc.clip_policy, "Negative-mass handling")
      ->check(CLI::IsMember({"clip_renormalize", "clip_only"}));
  c_disc->add_option("--out", disc.out, "Output CSV (default: standard output)");

  RecoverArgs rec;
  auto* c_rec = app.add_subcommand("recover", "Recover mean and std from level labels");
  c_rec->add_option("--input", rec.input, "Labels CSV written by discretize")->required();
  c_rec->add_option("--out", rec.out, "Output CSV (default: standard output)");

  PrecisionArgs prec;
  auto* c_prec = app.add_subcommand("precision", "Round-trip precision report");
  add_input(c_prec, prec.in);
  c_prec->add_option("--method", prec.method, "Label kind")->check(CLI::IsMember({"soft", "onehot"}));
  c_prec->add_option("--clip-policy", prec.clip_policy, "Negative-mass handling")
      ->check(CLI::IsMember({"clip_renormalize", "clip_only"}));
  c_prec->add_option("--json", prec.json, "Report file (default: standard output)");

  EvalLossArgs el;
  auto* c_el = app.add_subcommand("eval-loss", "Evaluate the training objective on fixed logits");
  add_input(c_el, el.in);
  c_el->add_option("--logits", el.logits, "Logits CSV: id followed by one column per level")->required();
  c_el->add_option("--pairs", el.pairs, "Pairs CSV with header id_a,id_b (default: all within-dataset pairs)");
  c_el->add_option("--gamma", el.gamma, "Weight of the label term")->check(CLI::NonNegativeNumber);
  c_el->add_option("--json", el.json, "Output file (default: standard output)");

  DistanceArgs dist;
  auto* c_dist = app.add_subcommand("distance", "Distance between two Gaussians");
  c_dist->add_option("--p", dist.p, "First distribution as MU,SIGMA")->required();
  c_dist->add_option("--q", dist.q, "Second distribution as MU,SIGMA")->required();
  c_dist->add_option("--metric", dist.metric, "kl, js or w2")->required()->check(CLI::IsMember({"kl", "js", "w2"}));

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a linear level head on feature datasets");
  c_tr->add_option("--config", tr.config, "Training config (flat key/value)")->required();
  c_tr->add_option("--data-dir", tr.data_dir, "Directory of feature CSVs, one per dataset")->required();
  c_tr->add_option("--out", tr.out, "Head JSON (default: standard output)");
  c_tr->add_option("--history", tr.history, "Per-epoch history CSV");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score a trained head on feature datasets");
  c_ev->add_option("--head", ev.head, "Head JSON written by train")->required();
  c_ev->add_option("--data-dir", ev.data_dir, "Directory of feature CSVs, one per dataset")->required();
  c_ev->add_option("--json", ev.json, "Output file (default: standard output)");

  for (auto* cmd : {c_sim, c_disc, c_rec, c_prec, c_el, c_dist, c_tr, c_ev}) add_common(cmd, common);

  std::vector<const char*> argv{"softscore"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    Context ctx(common, out, err);
    if (*c_sim) do_simulate(ctx, sim);
    else if (*c_disc) do_discretize(ctx, disc);
    else if (*c_rec) do_recover(ctx, rec);
    else if (*c_prec) do_precision(ctx, prec);
    else if (*c_el) do_eval_loss(ctx, el);
    else if (*c_dist) do_distance(ctx, dist);
    else if (*c_tr) do_train(ctx, tr);
    else if (*c_ev) do_evaluate(ctx, ev);
    return kOk;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const UndefinedCorrelationError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const UndefinedDivergenceError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const DegenerateLabelError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace softscore::cli
