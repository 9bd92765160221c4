#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

using namespace softscore;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path tmp_dir() {
  const char* env = std::getenv("SOFTSCORE_TEST_TMP");
  const fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "softscore_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string p(const std::string& name) { return (tmp_dir() / name).string(); }

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("distance") {
  auto r = run({"distance", "--p", "3,0.5", "--q", "3.5,0.5", "--metric", "w2"});
  CHECK(r.code == 0);
  CHECK(r.out == "0.5\n");
  r = run({"distance", "--p", "0,1", "--q", "0,2", "--metric", "kl"});
  CHECK(std::stod(r.out) == doctest::Approx(std::log(2.0) + 0.125 - 0.5).epsilon(1e-15));
  r = run({"distance", "--p", "3,0.5", "--q", "3.5,0.5", "--metric", "js"});
  CHECK(std::abs(std::stod(r.out) - 0.111421482184736180) < 1e-12);

  CHECK(run({"distance", "--p", "3", "--q", "3.5,0.5", "--metric", "w2"}).code == 1);
  CHECK(run({"distance", "--p", "3,-1", "--q", "3.5,0.5", "--metric", "w2"}).code == 1);
  CHECK(run({"distance", "--p", "3,0.5", "--q", "3.5,0.5", "--metric", "tv"}).code == 1);
  r = run({"distance", "--p", "3,0", "--q", "3.5,0.5", "--metric", "js"});
  CHECK(r.code == 3);
  CHECK(r.out.empty());
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"precision"}).code == 1);
  CHECK(run({"precision", "--input", "x.csv", "--method", "median"}).code == 1);
  const auto h = run({"--help"});
  CHECK(h.code == 0);
  for (const char* sub : {"simulate", "discretize", "recover", "precision", "eval-loss", "distance", "train",
                          "evaluate"})
    CHECK(h.out.find(sub) != std::string::npos);
}

TEST_CASE("subcommand help lists documented flags") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"simulate", {"--config", "--out", "--clamp"}},
      {"discretize", {"--input", "--scheme", "--scheme-file", "--mode", "--out", "--clip-policy", "--min-score",
                      "--max-score", "--pseudo-sigma-ratio"}},
      {"recover", {"--input", "--out"}},
      {"precision", {"--input", "--method", "--clip-policy", "--json"}},
      {"eval-loss", {"--input", "--logits", "--pairs", "--gamma", "--json"}},
      {"distance", {"--p", "--q", "--metric"}},
      {"train", {"--config", "--data-dir", "--out", "--history"}},
      {"evaluate", {"--head", "--data-dir", "--json"}},
  };
  for (const auto& [sub, list] : flags) {
    const auto r = run({sub, "--help"});
    CHECK(r.code == 0);
    for (const auto& f : list) {
      INFO(sub << " " << f);
      CHECK(r.out.find(f) != std::string::npos);
    }
    CHECK(r.out.find("--threads") != std::string::npos);
  }
}

TEST_CASE("simulate, discretize, recover and precision pipeline") {
  write(p("corpus.toml"), "n_records = 200\nmu_lo = 1.2\nmu_hi = 4.8\nseed = 4\ndataset_tag = \"koniq\"\nclamp = true\n");
  REQUIRE(run({"simulate", "--config", p("corpus.toml"), "--out", p("raw.csv")}).code == 0);
  const auto raw = slurp(p("raw.csv"));
  CHECK(raw.rfind("id,mos,std\nkoniq_000,", 0) == 0);
  CHECK(count_lines(raw) == 201);

  const std::vector<std::string> range{"--min-score", "1", "--max-score", "5"};
  auto args = std::vector<std::string>{"discretize", "--input", p("raw.csv"), "--out", p("labels.csv")};
  args.insert(args.end(), range.begin(), range.end());
  REQUIRE(run(args).code == 0);
  const auto labels = slurp(p("labels.csv"));
  CHECK(labels.rfind("id,p_bad,p_poor,p_fair,p_good,p_excellent,alpha,beta,degenerate,clipped\n", 0) == 0);
  CHECK(count_lines(labels) == 201);

  const auto rec = run({"recover", "--input", p("labels.csv")});
  REQUIRE(rec.code == 0);
  CHECK(rec.out.rfind("id,mu_rec,sigma_rec\nkoniq_000,", 0) == 0);
  CHECK(count_lines(rec.out) == 201);

  args = {"precision", "--input", p("raw.csv"), "--method", "soft", "--json", p("report.json")};
  args.insert(args.end(), range.begin(), range.end());
  REQUIRE(run(args).code == 0);
  const auto j = nlohmann::json::parse(slurp(p("report.json")));
  for (const char* key : {"method", "l1", "rmse", "plcc", "srcc", "js", "wdist", "mean_alpha", "mean_beta",
                          "clip_rate", "n_records", "n_interpolated", "js_excluded", "clip_policy",
                          "wasserstein_order", "js_log_base"})
    CHECK(j.contains(key));
  CHECK(j["n_records"] == 200);
  CHECK(j["plcc"].get<double>() > 0.99);

  args = {"precision", "--input", p("raw.csv"), "--method", "onehot", "--clip-policy", "clip_only"};
  args.insert(args.end(), range.begin(), range.end());
  const auto oh = run(args);
  REQUIRE(oh.code == 0);
  const auto jo = nlohmann::json::parse(oh.out);
  CHECK(jo["method"] == "onehot");
  CHECK_FALSE(jo.contains("js"));
  CHECK(jo["clip_policy"] == "clip_only");
}

TEST_CASE("discretize modes and schemes") {
  write(p("small.csv"), "id,mos,std\na,3.5,0.1\nb,3.2,0.5\nc,3.0,0.5\n");
  const std::vector<std::string> range{"--min-score", "1", "--max-score", "5"};
  auto args = std::vector<std::string>{"discretize", "--input", p("small.csv")};
  args.insert(args.end(), range.begin(), range.end());
  auto r = run(args);
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header, a, b, c;
  std::getline(lines, header);
  std::getline(lines, a);
  std::getline(lines, b);
  std::getline(lines, c);
  CHECK(a == "a,0.000000,0.000000,0.500000,0.500000,0.000000,,,0,0");
  CHECK(b == "b,0.000000,0.078953,0.648692,0.269857,0.002499,1.011038,-0.002207,0,1");
  CHECK(c.find(",1.000000,0.000000,1,0") != std::string::npos);

  args.insert(args.end(), {"--mode", "onehot"});
  r = run(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("a,0.000000,0.000000,0.000000,1.000000,0.000000,,,0,0") != std::string::npos);

  write(p("scheme3.toml"), "names = \"low,mid,high\"\ncenters = \"1,3,5\"\n");
  args = {"discretize", "--input", p("small.csv"), "--scheme-file", p("scheme3.toml")};
  args.insert(args.end(), range.begin(), range.end());
  r = run(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("id,p_low,p_mid,p_high,alpha,beta,degenerate,clipped\n", 0) == 0);

  // Files without std get a pseudo sigma.
  write(p("nostd.csv"), "id,mos\na,10\nb,50\nc,90\n");
  r = run({"discretize", "--input", p("nostd.csv"), "--min-score", "0", "--max-score", "100"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 4);
}

TEST_CASE("data errors exit 2 and name the problem") {
  auto r = run({"precision", "--input", p("does_not_exist.csv"), "--method", "soft"});
  CHECK(r.code == 2);
  CHECK(r.err.find("does_not_exist.csv") != std::string::npos);

  write(p("bad.csv"), "id,mos,std\na,3.0,0.5\nb,abc,0.5\n");
  r = run({"precision", "--input", p("bad.csv")});
  CHECK(r.code == 2);
  CHECK(r.err.find("row 2") != std::string::npos);

  write(p("outside.csv"), "id,mos,std\na,3.0,0.5\nb,7.0,0.5\n");
  r = run({"discretize", "--input", p("outside.csv"), "--min-score", "1", "--max-score", "5"});
  CHECK(r.code == 2);

  r = run({"discretize", "--input", p("outside.csv"), "--min-score", "1"});
  CHECK(r.code == 1);

  write(p("bad.toml"), "n_records = 10\nmystery = 1\n");
  r = run({"simulate", "--config", p("bad.toml")});
  CHECK(r.code == 2);
  CHECK(r.err.find("mystery") != std::string::npos);
}

TEST_CASE("eval-loss") {
  write(p("el_records.csv"), "id,dataset,mu,sigma\na,k,3.000000,0.500000\nb,k,4.000000,0.600000\nc,s,2.000000,0.700000\n");
  write(p("el_logits.csv"), "id,l0,l1,l2,l3,l4\na,0,0,0,0,0\nb,0,0,0,0,1\nc,1,0,0,0,0\n");
  auto r = run({"eval-loss", "--input", p("el_records.csv"), "--logits", p("el_logits.csv")});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.size() == 4);
  CHECK(j["ce"] == 0.0);
  CHECK(j["total"].get<double>() ==
        doctest::Approx(j["fidelity"].get<double>() + 0.05 * j["kl"].get<double>()).epsilon(1e-15));

  write(p("el_pairs.csv"), "id_a,id_b\na,c\n");
  r = run({"eval-loss", "--input", p("el_records.csv"), "--logits", p("el_logits.csv"), "--pairs", p("el_pairs.csv")});
  CHECK(r.code == 2);

  write(p("el_pairs1.csv"), "id_a,id_b\n");
  r = run({"eval-loss", "--input", p("el_records.csv"), "--logits", p("el_logits.csv"), "--pairs",
           p("el_pairs1.csv"), "--gamma", "1"});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const auto j1 = nlohmann::json::parse(r.out);
  CHECK(j1["fidelity"] == 0.0);
  CHECK(j1["total"] == j1["kl"]);

  write(p("el_short.csv"), "id,l0,l1,l2,l3,l4\na,0,0,0,0,0\n");
  CHECK(run({"eval-loss", "--input", p("el_records.csv"), "--logits", p("el_short.csv")}).code == 2);
}

TEST_CASE("train and evaluate") {
  fs::create_directories(p("feat"));
  write(p("fa.toml"), "kind = \"features\"\ndataset_tag = \"a\"\nn_records = 150\nseed = 1\n");
  write(p("fb.toml"),
        "kind = \"features\"\ndataset_tag = \"b\"\nn_records = 150\nseed = 2\nlatent_lo = 2.5\nnoise_shift = 1.5\n");
  REQUIRE(run({"simulate", "--config", p("fa.toml"), "--out", p("feat/a.csv")}).code == 0);
  REQUIRE(run({"simulate", "--config", p("fb.toml"), "--out", p("feat/b.csv")}).code == 0);
  CHECK(slurp(p("feat/a.csv")).rfind("id,mu,sigma,f0,f1,f2\n", 0) == 0);

  write(p("train.toml"), "label_mode = \"soft_kl\"\nuse_fidelity = true\nepochs = 20\nseed = 9\n");
  auto r = run({"train", "--config", p("train.toml"), "--data-dir", p("feat"), "--out", p("head.json"), "--history",
                p("hist.csv")});
  REQUIRE(r.code == 0);
  const auto hist = slurp(p("hist.csv"));
  CHECK(hist.rfind("epoch,label_loss,fidelity_loss,total_loss,val_plcc,val_srcc,val_js\n1,", 0) == 0);
  CHECK(count_lines(hist) == 21);
  const auto head = nlohmann::json::parse(slurp(p("head.json")));
  CHECK(head["weights"].size() == 15);

  r = run({"evaluate", "--head", p("head.json"), "--data-dir", p("feat")});
  REQUIRE(r.code == 0);
  const auto ev = nlohmann::json::parse(r.out);
  CHECK(ev["datasets"].contains("a"));
  CHECK(ev["datasets"].contains("b"));
  CHECK(ev["mean_srcc"].get<double>() > 0.5);

  write(p("train_bad.toml"), "learning_rate = -1\n");
  CHECK(run({"train", "--config", p("train_bad.toml"), "--data-dir", p("feat")}).code == 2);
  CHECK(run({"train", "--config", p("train.toml"), "--data-dir", p("no_such_dir")}).code == 2);
}

TEST_CASE("settings file and GlobalConfig round trip") {
  cli::GlobalConfig g;
  g.level_names = {"low", "mid", "high"};
  g.level_centers = {0.0, 0.5, 1.0};
  g.discretize.clip_policy = ClipPolicy::clip_only;
  g.discretize.small_variance_threshold = 0.01;
  g.loss.gamma = 0.1;
  g.verbosity = 1;
  g.json_indent = -1;
  const auto text = g.to_flat().serialize();
  const auto back = cli::GlobalConfig::from_flat(FlatConfig::parse(text));
  CHECK(back == g);
  CHECK(back.to_flat().serialize() == text);
  CHECK(cli::GlobalConfig::from_flat(FlatConfig::parse(cli::GlobalConfig{}.to_flat().serialize())) ==
        cli::GlobalConfig{});
  CHECK_THROWS_AS(cli::GlobalConfig::from_flat(FlatConfig::parse("colour = 1\n")), ParseError);

  write(p("settings.toml"), "json_indent = -1\nclip_policy = \"clip_only\"\n");
  write(p("one.csv"), "id,mos,std\na,3.2,0.5\nb,4.1,0.6\n");
  const auto r = run({"precision", "--input", p("one.csv"), "--min-score", "1", "--max-score", "5", "--settings",
                      p("settings.toml")});
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 1);
  CHECK(r.out.find("\"clip_policy\":\"clip_only\"") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  write(p("det.toml"), "n_records = 300\nseed = 11\nmu_lo = 1.2\nmu_hi = 4.8\nclamp = true\n");
  const auto sim1 = run({"simulate", "--config", p("det.toml")});
  const auto sim4 = run({"simulate", "--config", p("det.toml"), "--threads", "4"});
  CHECK(sim1.out == sim4.out);
  write(p("det.csv"), sim1.out);

  const std::vector<std::string> range{"--min-score", "1", "--max-score", "5"};
  for (const std::vector<std::string>& base :
       {std::vector<std::string>{"discretize", "--input", p("det.csv")},
        std::vector<std::string>{"precision", "--input", p("det.csv")},
        std::vector<std::string>{"precision", "--input", p("det.csv"), "--method", "onehot"}}) {
    auto a = base;
    a.insert(a.end(), range.begin(), range.end());
    auto b = a;
    b.insert(b.end(), {"--threads", "4"});
    const auto ra = run(a), ra2 = run(a), rb = run(b);
    CHECK(ra.code == 0);
    CHECK(ra.out == ra2.out);
    CHECK(ra.out == rb.out);
  }
}
